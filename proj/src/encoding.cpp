#include "bitweave/encoding.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace bitweave {

int BitBudget::total() const {
  int t = 0;
  for (int b : per_mode) t += b;
  return t;
}

BitBudget bit_budget(const std::vector<Index>& dims) {
  BitBudget b;
  b.per_mode.reserve(dims.size());
  for (Index d : dims) {
    if (d == 0) throw DomainError("zero-length mode");
    int bits = 0;
    for (Index span = d - 1; span != 0; span >>= 1) ++bits;   // ceil(log2 d)
    b.per_mode.push_back(bits);
  }
  return b;
}

bool plan_valid(const EncodingPlan& plan, const BitBudget& budget) {
  std::vector<int> counts(budget.per_mode.size(), 0);
  for (std::uint8_t m : plan.picks) {
    if (m >= counts.size()) return false;
    ++counts[m];
  }
  for (std::size_t n = 0; n < counts.size(); ++n)
    if (counts[n] != budget.per_mode[n]) return false;
  return true;
}

void require_valid_plan(const EncodingPlan& plan, const BitBudget& budget) {
  if (plan_valid(plan, budget)) return;
  std::vector<int> counts(budget.per_mode.size(), 0);
  for (std::uint8_t m : plan.picks)
    if (m < counts.size()) ++counts[m];
  for (std::size_t n = 0; n < counts.size(); ++n) {
    if (counts[n] != budget.per_mode[n])
      throw DomainError("invalid plan: mode " + std::to_string(n + 1) + " picked " +
                        std::to_string(counts[n]) + " times, budget is " +
                        std::to_string(budget.per_mode[n]));
  }
  throw DomainError("invalid plan: mode id out of range");
}

std::string format_plan(const EncodingPlan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.picks.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(plan.picks[i] + 1);
  }
  return out;
}

EncodingPlan parse_plan(const std::string& text) {
  EncodingPlan plan;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    unsigned v = 0;
    auto b = tok.data();
    auto e = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || v < 1 || v > 256)
      throw ParseError("bad plan token '" + tok + "' (expected one-based mode id)");
    plan.picks.push_back(static_cast<std::uint8_t>(v - 1));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return plan;
}

namespace {

EncodingPlan round_robin_plan(const BitBudget& budget, const std::vector<std::size_t>& order) {
  EncodingPlan plan;
  plan.picks.reserve(budget.total());
  std::vector<int> left = budget.per_mode;
  while (static_cast<int>(plan.picks.size()) < budget.total()) {
    for (std::size_t n : order) {
      if (left[n] > 0) {
        plan.picks.push_back(static_cast<std::uint8_t>(n));
        --left[n];
      }
    }
  }
  return plan;
}

}  // namespace

EncodingPlan alto_default_plan(const std::vector<Index>& dims) {
  BitBudget budget = bit_budget(dims);
  std::vector<std::size_t> order(dims.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dims[a] < dims[b]; });
  return round_robin_plan(budget, order);
}

EncodingPlan alto_default_plan(const BitBudget& budget) {
  std::vector<Index> dims;
  dims.reserve(budget.per_mode.size());
  for (int b : budget.per_mode) dims.push_back(Index{1} << b);
  return alto_default_plan(dims);
}

BigUint::BigUint(std::uint64_t v) {
  while (v != 0) {
    limbs_.push_back(static_cast<std::uint32_t>(v % 1000000000u));
    v /= 1000000000u;
  }
  if (limbs_.empty()) limbs_.push_back(0);
}

void BigUint::trim() {
  while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
}

void BigUint::mul_small(std::uint32_t k) {
  std::uint64_t carry = 0;
  for (auto& limb : limbs_) {
    std::uint64_t cur = static_cast<std::uint64_t>(limb) * k + carry;
    limb = static_cast<std::uint32_t>(cur % 1000000000u);
    carry = cur / 1000000000u;
  }
  while (carry != 0) {
    limbs_.push_back(static_cast<std::uint32_t>(carry % 1000000000u));
    carry /= 1000000000u;
  }
}

void BigUint::div_small_exact(std::uint32_t k) {
  std::uint64_t rem = 0;
  for (std::size_t i = limbs_.size(); i-- > 0;) {
    std::uint64_t cur = rem * 1000000000u + limbs_[i];
    limbs_[i] = static_cast<std::uint32_t>(cur / k);
    rem = cur % k;
  }
  if (rem != 0) throw DomainError("BigUint: division is not exact");
  trim();
}

bool BigUint::fits_u64() const {
  // three base-1e9 limbs reach 1e27 > 2^64; more never fit
  if (limbs_.size() > 3) return false;
  unsigned __int128 acc = 0;
  for (std::size_t i = limbs_.size(); i-- > 0;) acc = acc * 1000000000u + limbs_[i];
  return acc <= static_cast<unsigned __int128>(UINT64_MAX);
}

std::uint64_t BigUint::as_u64() const {
  if (!fits_u64()) throw DomainError("BigUint does not fit in 64 bits");
  std::uint64_t acc = 0;
  for (std::size_t i = limbs_.size(); i-- > 0;) acc = acc * 1000000000u + limbs_[i];
  return acc;
}

double BigUint::as_double() const {
  double acc = 0.0;
  for (std::size_t i = limbs_.size(); i-- > 0;) acc = acc * 1e9 + limbs_[i];
  return acc;
}

std::string BigUint::to_string() const {
  std::string out = std::to_string(limbs_.back());
  for (std::size_t i = limbs_.size() - 1; i-- > 0;) {
    std::string part = std::to_string(limbs_[i]);
    out += std::string(9 - part.size(), '0') + part;
  }
  return out;
}

BigUint count_interleavings(const BitBudget& budget) {
  const int total = budget.total();
  if (total > 4096) throw DomainError("bit budget too large for exact counting");
  BigUint result(1);
  for (int k = 2; k <= total; ++k) result.mul_small(static_cast<std::uint32_t>(k));
  for (int ln : budget.per_mode)
    for (int k = 2; k <= ln; ++k) result.div_small_exact(static_cast<std::uint32_t>(k));
  return result;
}

namespace {

template <typename PosT>
void check_width(const BitBudget& budget) {
  if (budget.total() > static_cast<int>(sizeof(PosT) * 8))
    throw DomainError("bit budget exceeds position word width");
}

}  // namespace

template <typename PosT>
PosT encode(const std::vector<Index>& coords, const EncodingPlan& plan, const BitBudget& budget) {
  check_width<PosT>(budget);
  if (coords.size() != budget.per_mode.size())
    throw DomainError("coordinate count does not match budget");
  for (std::size_t n = 0; n < coords.size(); ++n) {
    if (budget.per_mode[n] < 64 && coords[n] >= (Index{1} << budget.per_mode[n]))
      throw DomainError("coordinate out of range for mode " + std::to_string(n + 1));
  }
  PosT p = 0;
  std::vector<int> taken(budget.per_mode.size(), 0);
  for (std::size_t t = 0; t < plan.picks.size(); ++t) {
    const std::uint8_t n = plan.picks[t];
    const int k = taken[n]++;
    if ((coords[n] >> k) & 1) p |= PosT{1} << t;
  }
  return p;
}

template <typename PosT>
std::vector<Index> decode(PosT position, const EncodingPlan& plan, const BitBudget& budget) {
  check_width<PosT>(budget);
  const int total = budget.total();
  if (total < static_cast<int>(sizeof(PosT) * 8) && (position >> total) != 0)
    throw DomainError("position exceeds the encoded bit budget");
  std::vector<Index> coords(budget.per_mode.size(), 0);
  std::vector<int> taken(budget.per_mode.size(), 0);
  for (std::size_t t = 0; t < plan.picks.size(); ++t) {
    const std::uint8_t n = plan.picks[t];
    const int k = taken[n]++;
    if ((position >> t) & 1) coords[n] |= Index{1} << k;
  }
  return coords;
}

template Pos64 encode<Pos64>(const std::vector<Index>&, const EncodingPlan&, const BitBudget&);
template Pos128 encode<Pos128>(const std::vector<Index>&, const EncodingPlan&, const BitBudget&);
template std::vector<Index> decode<Pos64>(Pos64, const EncodingPlan&, const BitBudget&);
template std::vector<Index> decode<Pos128>(Pos128, const EncodingPlan&, const BitBudget&);

Pos64 encode64(const std::vector<Index>& coords, const EncodingPlan& plan,
               const BitBudget& budget) {
  return encode<Pos64>(coords, plan, budget);
}

std::vector<Index> decode64(Pos64 position, const EncodingPlan& plan, const BitBudget& budget) {
  return decode<Pos64>(position, plan, budget);
}

bool needs_wide_positions(const BitBudget& budget) { return budget.total() > 64; }

namespace {

template <typename PosT>
LinearizedTensorT<PosT> linearize_as(const SparseTensorCoo& t, const EncodingPlan& plan,
                                     const BitBudget& budget) {
  LinearizedTensorT<PosT> lt;
  lt.dims = t.dims;
  lt.budget = budget;
  lt.plan = plan;

  lt.mode_masks.assign(t.order(), PosT{0});
  for (std::size_t j = 0; j < plan.picks.size(); ++j)
    lt.mode_masks[plan.picks[j]] |= PosT{1} << j;

  const std::size_t m = t.nnz();
  std::vector<PosT> pos(m);
  std::vector<Index> c(t.order());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t n = 0; n < t.order(); ++n) c[n] = t.coords[n][i];
    pos[i] = encode<PosT>(c, plan, budget);
  }

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return pos[a] < pos[b]; });

  lt.positions.resize(m);
  lt.values.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    lt.positions[i] = pos[perm[i]];
    lt.values[i] = t.values[perm[i]];
  }
  return lt;
}

}  // namespace

LinearizedTensor linearize(const SparseTensorCoo& t, const EncodingPlan& plan) {
  BitBudget budget = bit_budget(t.dims);
  require_valid_plan(plan, budget);
  if (budget.total() > kMaxPositionBits)
    throw DomainError("tensor needs " + std::to_string(budget.total()) +
                      " index bits; the limit is " + std::to_string(kMaxPositionBits));
  if (t.nnz() == 0) throw DomainError("refusing to linearize an empty tensor");
  if (needs_wide_positions(budget)) return linearize_as<Pos128>(t, plan, budget);
  return linearize_as<Pos64>(t, plan, budget);
}

std::size_t linearized_nnz(const LinearizedTensor& lt) {
  return std::visit([](const auto& x) { return x.nnz(); }, lt);
}

std::size_t linearized_storage_bytes(const LinearizedTensor& lt) {
  return std::visit(
      [](const auto& x) {
        using PosT = typename std::decay_t<decltype(x)>::position_type;
        return x.nnz() * (sizeof(PosT) + sizeof(double));
      },
      lt);
}

}  // namespace bitweave
