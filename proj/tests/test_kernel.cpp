#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bitweave/kernel.hpp"

using namespace bitweave;

namespace {

double rel_frobenius(const std::vector<double>& got, const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

SparseTensorCoo random_tensor(const std::vector<Index>& dims, std::size_t entries,
                              std::mt19937_64& rng) {
  std::vector<std::vector<Index>> coords(dims.size());
  std::vector<double> values;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < entries; ++i) {
    for (std::size_t n = 0; n < dims.size(); ++n) coords[n].push_back(rng() % dims[n]);
    values.push_back(u(rng));
  }
  return SparseTensorCoo::from_entries(dims, std::move(coords), std::move(values));
}

EncodingPlan shuffled_plan(const BitBudget& budget, std::mt19937_64& rng) {
  EncodingPlan plan = alto_default_plan(budget);
  std::shuffle(plan.picks.begin(), plan.picks.end(), rng);
  return plan;
}

}  // namespace

TEST_CASE("linearized kernel matches the reference across shapes, plans, paths") {
  std::mt19937_64 rng(0xC0FFEE);
  const std::vector<std::vector<Index>> shapes = {
      {4, 8, 2}, {3, 5, 6}, {16, 16}, {8, 3, 5, 2}, {7}, {2, 2, 2, 2, 2, 2}};
  int combos = 0;
  for (const auto& dims : shapes) {
    SparseTensorCoo t = random_tensor(dims, 200, rng);
    FactorMatrices f = FactorMatrices::seeded_uniform(dims, 8, rng());
    BitBudget budget = bit_budget(dims);
    for (const EncodingPlan& plan : {alto_default_plan(dims), shuffled_plan(budget, rng)}) {
      LinearizedTensor lt = linearize(t, plan);
      for (std::size_t mode = 0; mode < dims.size(); ++mode) {
        std::vector<double> want = dense_mttkrp_oracle(t, f, mode);
        for (int threads : {1, 3}) {
          for (SyncPath sync : {SyncPath::Auto, SyncPath::Reduction, SyncPath::Atomic}) {
            KernelConfig cfg{threads, 8, sync};
            std::vector<double> got = mttkrp_linearized(lt, f, mode, cfg);
            CHECK(rel_frobenius(got, want) <= 1e-10);
            ++combos;
          }
        }
      }
    }
  }
  CHECK(combos >= 50);
}

TEST_CASE("reduction path is bitwise reproducible for a fixed thread count") {
  std::mt19937_64 rng(11);
  SparseTensorCoo t = random_tensor({12, 9, 7}, 500, rng);
  FactorMatrices f = FactorMatrices::seeded_uniform(t.dims, 16, 3);
  LinearizedTensor lt = linearize(t, alto_default_plan(t.dims));
  KernelConfig cfg{3, 8, SyncPath::Reduction};
  auto a = mttkrp_linearized(lt, f, 0, cfg);
  auto b = mttkrp_linearized(lt, f, 0, cfg);
  CHECK(a == b);

  KernelConfig serial{1, 8, SyncPath::Auto};
  auto c = mttkrp_linearized(lt, f, 0, serial);
  auto d = mttkrp_linearized(lt, f, 0, serial);
  CHECK(c == d);
}

TEST_CASE("thread count does not change the result beyond float tolerance") {
  std::mt19937_64 rng(22);
  SparseTensorCoo t = random_tensor({20, 20, 20}, 2000, rng);
  FactorMatrices f = FactorMatrices::seeded_uniform(t.dims, 8, 4);
  LinearizedTensor lt = linearize(t, alto_default_plan(t.dims));
  std::vector<double> base = mttkrp_linearized(lt, f, 1, KernelConfig{1, 8, SyncPath::Auto});
  for (int threads : {2, 3, 5, 8}) {
    auto got = mttkrp_linearized(lt, f, 1, KernelConfig{threads, 8, SyncPath::Auto});
    CHECK(rel_frobenius(got, base) <= 1e-10);
  }
}

TEST_CASE("both sync regimes of the auto policy agree with the reference") {
  std::mt19937_64 rng(33);
  // Heavy reuse: nnz/rows far above the threshold.
  SparseTensorCoo dense_rows = random_tensor({4, 64, 2}, 600, rng);
  // Sparse reuse: nnz/rows below the threshold.
  SparseTensorCoo sparse_rows = random_tensor({256, 8, 2}, 300, rng);
  for (const SparseTensorCoo& t : {dense_rows, sparse_rows}) {
    FactorMatrices f = FactorMatrices::seeded_uniform(t.dims, 4, 9);
    LinearizedTensor lt = linearize(t, alto_default_plan(t.dims));
    for (std::size_t mode = 0; mode < t.order(); ++mode) {
      auto want = dense_mttkrp_oracle(t, f, mode);
      auto got = mttkrp_linearized(lt, f, mode, KernelConfig{4, 8, SyncPath::Auto});
      CHECK(rel_frobenius(got, want) <= 1e-10);
    }
  }
}

TEST_CASE("wide-position tensors run through the same kernel") {
  std::vector<Index> dims(5, Index{1} << 13);
  REQUIRE(bit_budget(dims).total() == 65);
  std::mt19937_64 rng(44);
  SparseTensorCoo t = random_tensor(dims, 64, rng);
  FactorMatrices f = FactorMatrices::seeded_uniform(dims, 2, 5);
  LinearizedTensor lt = linearize(t, alto_default_plan(dims));
  REQUIRE(std::holds_alternative<LinearizedTensorT<Pos128>>(lt));
  for (std::size_t mode = 0; mode < dims.size(); ++mode) {
    auto want = dense_mttkrp_oracle(t, f, mode);
    auto got = mttkrp_linearized(lt, f, mode, KernelConfig{2, 8, SyncPath::Auto});
    CHECK(rel_frobenius(got, want) <= 1e-10);
  }
}

TEST_CASE("more threads than nonzeros still covers every entry") {
  auto t = SparseTensorCoo::from_entries({4, 4}, {{0, 3}, {1, 2}}, {1.0, 2.0});
  FactorMatrices f = FactorMatrices::seeded_uniform(t.dims, 3, 6);
  LinearizedTensor lt = linearize(t, alto_default_plan(t.dims));
  auto want = dense_mttkrp_oracle(t, f, 0);
  for (SyncPath sync : {SyncPath::Reduction, SyncPath::Atomic}) {
    auto got = mttkrp_linearized(lt, f, 0, KernelConfig{16, 8, sync});
    CHECK(rel_frobenius(got, want) <= 1e-10);
  }
}

TEST_CASE("kernel validates factor shapes and the mode id") {
  auto t = SparseTensorCoo::from_entries({4, 4}, {{0}, {1}}, {1.0});
  LinearizedTensor lt = linearize(t, alto_default_plan(t.dims));
  FactorMatrices f = FactorMatrices::seeded_uniform(t.dims, 3, 6);
  CHECK_THROWS_AS(mttkrp_linearized(lt, f, 2, {}), DomainError);
  f.mats.pop_back();
  CHECK_THROWS_AS(mttkrp_linearized(lt, f, 0, {}), DomainError);
}

TEST_CASE("thread resolution falls back to hardware concurrency") {
  CHECK(resolve_thread_count(3) == 3);
  CHECK(resolve_thread_count(0) >= 1);
  CHECK(resolve_thread_count(-2) >= 1);
}
