#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "bitweave/encoding.hpp"

using namespace bitweave;

namespace {

// Reference encoder, deliberately structured differently from the library:
// each mode's coordinate bits sit in a FIFO (low bit first) and the plan
// walk consumes from the front.
Pos64 oracle_encode(const std::vector<Index>& coords, const EncodingPlan& plan,
                    const BitBudget& budget) {
  std::vector<std::deque<int>> fifo(budget.per_mode.size());
  for (std::size_t n = 0; n < fifo.size(); ++n)
    for (int k = 0; k < budget.per_mode[n]; ++k) fifo[n].push_back((coords[n] >> k) & 1);
  Pos64 p = 0;
  for (std::size_t t = 0; t < plan.picks.size(); ++t) {
    std::deque<int>& q = fifo[plan.picks[t]];
    if (q.front()) p |= Pos64{1} << t;
    q.pop_front();
  }
  return p;
}

// All distinct plans for a budget, as multiset permutations of the sorted
// canonical pick sequence.
std::vector<EncodingPlan> all_plans(const BitBudget& budget) {
  std::vector<std::uint8_t> picks;
  for (std::size_t n = 0; n < budget.per_mode.size(); ++n)
    picks.insert(picks.end(), budget.per_mode[n], static_cast<std::uint8_t>(n));
  std::sort(picks.begin(), picks.end());
  std::vector<EncodingPlan> out;
  do {
    out.push_back(EncodingPlan{picks});
  } while (std::next_permutation(picks.begin(), picks.end()));
  return out;
}

std::vector<std::vector<Index>> all_coords(const std::vector<Index>& dims) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> c(dims.size(), 0);
  while (true) {
    out.push_back(c);
    std::size_t n = 0;
    while (n < dims.size() && ++c[n] == dims[n]) c[n++] = 0;
    if (n == dims.size()) break;
  }
  return out;
}

}  // namespace

TEST_CASE("bit budget is ceil(log2) with unit modes costing nothing") {
  CHECK(bit_budget({4, 8, 2}).per_mode == std::vector<int>{2, 3, 1});
  CHECK(bit_budget({4, 8, 2}).total() == 6);
  CHECK(bit_budget({1, 1, 1}).per_mode == std::vector<int>{0, 0, 0});
  CHECK(bit_budget({3, 5, 6}).per_mode == std::vector<int>{2, 3, 3});
  CHECK(bit_budget({Index{1} << 20}).per_mode == std::vector<int>{20});
  CHECK(bit_budget({(Index{1} << 20) + 1}).per_mode == std::vector<int>{21});
  CHECK_THROWS_AS(bit_budget({4, 0, 2}), DomainError);
}

TEST_CASE("expert default plan interleaves shortest mode first") {
  EncodingPlan plan = alto_default_plan(std::vector<Index>{4, 8, 2});
  CHECK(plan.picks == std::vector<std::uint8_t>{2, 0, 1, 0, 1, 1});
  CHECK(format_plan(plan) == "3,1,2,1,2,2");

  // Mode 1's two bits occupy the second and fourth linear bits.
  BitBudget budget = bit_budget({4, 8, 2});
  Pos64 all_ones = encode64({3, 7, 1}, plan, budget);
  Pos64 mode0_only = encode64({3, 0, 0}, plan, budget);
  CHECK(all_ones == 0b111111);
  CHECK(mode0_only == 0b001010);

  // Ties in mode length fall to the lower mode index.
  EncodingPlan tied = alto_default_plan(std::vector<Index>{8, 8});
  CHECK(tied.picks == std::vector<std::uint8_t>{0, 1, 0, 1, 0, 1});

  // The budget-only overload agrees with power-of-two dims.
  CHECK(alto_default_plan(bit_budget({4, 8, 2})) == plan);
  CHECK(alto_default_plan(bit_budget({3, 5, 6})) ==
        alto_default_plan(std::vector<Index>{4, 8, 8}));
}

TEST_CASE("hand-worked anchor: (3,5,1) maps to 47 under the default plan") {
  std::vector<Index> dims{4, 8, 2};
  BitBudget budget = bit_budget(dims);
  EncodingPlan plan = alto_default_plan(dims);
  CHECK(encode64({3, 5, 1}, plan, budget) == 47);
  CHECK(decode64(47, plan, budget) == std::vector<Index>{3, 5, 1});
}

TEST_CASE("encode matches the FIFO oracle on every plan and coordinate") {
  std::vector<Index> dims{4, 8, 2};
  BitBudget budget = bit_budget(dims);
  auto plans = all_plans(budget);
  auto coords = all_coords(dims);
  REQUIRE(plans.size() == 60);
  for (const EncodingPlan& plan : plans)
    for (const auto& c : coords) CHECK(encode64(c, plan, budget) == oracle_encode(c, plan, budget));
}

TEST_CASE("every plan is a bijection onto the position range") {
  for (std::vector<Index> dims :
       {std::vector<Index>{4, 8, 2}, std::vector<Index>{2, 2, 2, 2}, std::vector<Index>{16, 4}}) {
    BitBudget budget = bit_budget(dims);
    auto coords = all_coords(dims);
    for (const EncodingPlan& plan : all_plans(budget)) {
      std::set<Pos64> seen;
      for (const auto& c : coords) {
        Pos64 p = encode64(c, plan, budget);
        CHECK(p < (Pos64{1} << budget.total()));
        CHECK(seen.insert(p).second);
        CHECK(decode64(p, plan, budget) == c);
      }
      CHECK(seen.size() == coords.size());
    }
  }
}

TEST_CASE("twelve-bit budget covers the full position range exactly once") {
  std::vector<Index> dims{16, 16, 16};
  BitBudget budget = bit_budget(dims);
  REQUIRE(budget.total() == 12);
  EncodingPlan plan = alto_default_plan(dims);
  std::vector<bool> hit(std::size_t{1} << 12, false);
  for (const auto& c : all_coords(dims)) {
    Pos64 p = encode64(c, plan, budget);
    REQUIRE(p < hit.size());
    CHECK(!hit[p]);
    hit[p] = true;
  }
  CHECK(std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }));
}

TEST_CASE("non-power-of-two dims stay injective inside the padded range") {
  std::vector<Index> dims{3, 5, 6};
  BitBudget budget = bit_budget(dims);
  EncodingPlan plan = alto_default_plan(dims);
  std::set<Pos64> seen;
  for (const auto& c : all_coords(dims)) {
    Pos64 p = encode64(c, plan, budget);
    CHECK(seen.insert(p).second);
    CHECK(decode64(p, plan, budget) == c);
  }
  CHECK(seen.size() == 3u * 5u * 6u);
}

TEST_CASE("coordinates outside a mode's range are rejected") {
  std::vector<Index> dims{4, 8, 2};
  BitBudget budget = bit_budget(dims);
  EncodingPlan plan = alto_default_plan(dims);
  CHECK_THROWS_AS(encode64({4, 0, 0}, plan, budget), DomainError);
  CHECK_THROWS_AS(encode64({0, 8, 0}, plan, budget), DomainError);
  CHECK_THROWS_AS(encode64({0, 0}, plan, budget), DomainError);
  CHECK_THROWS_AS(decode64(Pos64{1} << 6, plan, budget), DomainError);
}

TEST_CASE("interleaving count matches brute-force plan enumeration") {
  BitBudget b231{{2, 3, 1}};
  CHECK(count_interleavings(b231).as_u64() == 60);
  CHECK(all_plans(b231).size() == 60);

  BitBudget b221{{2, 2, 1}};
  CHECK(count_interleavings(b221).as_u64() == all_plans(b221).size());

  BitBudget b1111{{1, 1, 1, 1}};
  CHECK(count_interleavings(b1111).as_u64() == 24);
  CHECK(all_plans(b1111).size() == 24);

  CHECK(count_interleavings(BitBudget{{0, 0, 0}}).as_u64() == 1);
  CHECK(count_interleavings(BitBudget{{5}}).as_u64() == 1);
}

TEST_CASE("interleaving count for four eight-bit modes") {
  BitBudget b{{8, 8, 8, 8}};
  BigUint c = count_interleavings(b);
  CHECK(c.to_string() == "99561092450391000");
  CHECK(c.fits_u64());
  CHECK(c.as_u64() == 99561092450391000ull);
  CHECK(c.as_double() == doctest::Approx(9.9561092450391e16).epsilon(1e-12));
}

TEST_CASE("counts beyond 64 bits format and convert correctly") {
  // 128 bits split over two modes: C(128,64) ~ 2.4e37.
  BitBudget b{{64, 64}};
  BigUint c = count_interleavings(b);
  CHECK_FALSE(c.fits_u64());
  CHECK_THROWS_AS(c.as_u64(), DomainError);
  CHECK(c.to_string() == "23951146041928082866135587776380551750");
  CHECK(c.as_double() == doctest::Approx(2.3951146041928083e37).epsilon(1e-12));
}

TEST_CASE("plan text form parses and prints round-trip") {
  EncodingPlan plan = parse_plan("3,1,2,1,2,2");
  CHECK(plan.picks == std::vector<std::uint8_t>{2, 0, 1, 0, 1, 1});
  CHECK(format_plan(plan) == "3,1,2,1,2,2");
  CHECK(parse_plan("1").picks == std::vector<std::uint8_t>{0});
  CHECK_THROWS_AS(parse_plan(""), ParseError);
  CHECK_THROWS_AS(parse_plan("0,1"), ParseError);
  CHECK_THROWS_AS(parse_plan("1,,2"), ParseError);
  CHECK_THROWS_AS(parse_plan("1, 2"), ParseError);
  CHECK_THROWS_AS(parse_plan("1,2,"), ParseError);
  CHECK_THROWS_AS(parse_plan("a"), ParseError);
}

TEST_CASE("plan validation counts picks per mode") {
  BitBudget budget = bit_budget({4, 8, 2});
  CHECK(plan_valid(parse_plan("3,1,2,1,2,2"), budget));
  CHECK_FALSE(plan_valid(parse_plan("1,1,2,1,2,2"), budget));   // mode 1 over budget
  CHECK_FALSE(plan_valid(parse_plan("3,1,2,1,2"), budget));     // too short
  CHECK_FALSE(plan_valid(parse_plan("3,1,2,1,2,4"), budget));   // mode id out of range
  CHECK_THROWS_AS(require_valid_plan(parse_plan("1,1,2,1,2,2"), budget), DomainError);
  CHECK_NOTHROW(require_valid_plan(parse_plan("3,1,2,1,2,2"), budget));
}

TEST_CASE("wide positions kick in past 64 bits and round-trip") {
  std::vector<Index> dims(5, Index{1} << 20);
  BitBudget budget = bit_budget(dims);
  REQUIRE(budget.total() == 100);
  CHECK(needs_wide_positions(budget));
  CHECK_FALSE(needs_wide_positions(bit_budget({4, 8, 2})));

  EncodingPlan plan = alto_default_plan(dims);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Index> c(5);
    for (auto& x : c) x = rng() & ((Index{1} << 20) - 1);
    Pos128 p = encode<Pos128>(c, plan, budget);
    CHECK(decode<Pos128>(p, plan, budget) == c);
    for (std::size_t n = 0; n < 5; ++n) {
      Pos128 mask = 0;
      for (std::size_t t = 0; t < plan.picks.size(); ++t)
        if (plan.picks[t] == n) mask |= Pos128{1} << t;
      CHECK(extract_bits<Pos128>(p, mask) == c[n]);
    }
  }
  CHECK_THROWS_AS(encode64({0, 0, 0, 0, 0}, plan, budget), DomainError);
}

TEST_CASE("linearize sorts by position and builds extraction masks") {
  auto t = SparseTensorCoo::from_entries(
      {4, 8, 2}, {{3, 0, 1}, {5, 2, 7}, {1, 1, 0}}, {2.0, -1.0, 0.5});
  EncodingPlan plan = alto_default_plan(t.dims);
  LinearizedTensor lt = linearize(t, plan);
  const auto& n64 = std::get<LinearizedTensorT<Pos64>>(lt);
  REQUIRE(n64.nnz() == 3);
  CHECK(std::is_sorted(n64.positions.begin(), n64.positions.end()));
  CHECK(linearized_nnz(lt) == 3);
  CHECK(linearized_storage_bytes(lt) == 3 * (8 + 8));

  BitBudget budget = bit_budget(t.dims);
  for (std::size_t i = 0; i < n64.nnz(); ++i) {
    std::vector<Index> c = decode64(n64.positions[i], plan, budget);
    for (std::size_t n = 0; n < 3; ++n)
      CHECK(extract_bits<Pos64>(n64.positions[i], n64.mode_masks[n]) == c[n]);
  }
  Pos64 p351 = encode64({3, 5, 1}, plan, budget);
  CHECK(std::count(n64.positions.begin(), n64.positions.end(), p351) == 1);
}

TEST_CASE("linearize refuses oversized budgets and empty tensors") {
  auto wide = SparseTensorCoo::from_entries({Index{1} << 50, Index{1} << 50, Index{1} << 50},
                                            {{0}, {0}, {0}}, {1.0});
  CHECK_THROWS_AS(linearize(wide, alto_default_plan(wide.dims)), DomainError);

  auto ok = SparseTensorCoo::from_entries({4, 8, 2}, {{0}, {0}, {0}}, {1.0});
  CHECK_THROWS_AS(linearize(ok, parse_plan("1,1,1,2,2,3")), DomainError);
}

TEST_CASE("wide linearization uses the 128-bit word") {
  std::vector<Index> dims(5, Index{1} << 20);
  auto t = SparseTensorCoo::from_entries(dims, {{1, 6}, {2, 7}, {3, 8}, {4, 9}, {5, 10}},
                                         {1.0, 2.0});
  LinearizedTensor lt = linearize(t, alto_default_plan(dims));
  CHECK(std::holds_alternative<LinearizedTensorT<Pos128>>(lt));
  CHECK(linearized_storage_bytes(lt) == 2 * (16 + 8));
}
