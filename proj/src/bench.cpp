#include "bitweave/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <utility>

namespace bitweave {

ClockFn steady_clock_fn() {
  return [] {
    auto now = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(now).count();
  };
}

void BenchConfig::validate() const {
  if (rank < 1) throw DomainError("rank must be at least 1");
  if (repeats < 1) throw DomainError("repeats must be at least 1");
  if (warmup < 0) throw DomainError("warmup must be non-negative");
  if (threads < 0) throw DomainError("threads must be non-negative");
  if (fiber_reuse_threshold < 1) throw DomainError("fiber reuse threshold must be at least 1");
  if (timeout_seconds < 0.0) throw DomainError("timeout must be non-negative");
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw DomainError("median of empty sample set");
  std::sort(samples.begin(), samples.end());
  std::size_t mid = samples.size() / 2;
  if (samples.size() % 2 == 1) return samples[mid];
  return 0.5 * (samples[mid - 1] + samples[mid]);
}

namespace {

// One kernel invocation bracketed by two clock samples. The caller enforces
// the deadline against the second sample so a scripted clock sees exactly two
// reads per (pass, mode) unit.
template <typename PosT>
double timed_unit(const LinearizedTensorT<PosT>& lt, const FactorMatrices& f, std::size_t mode,
                  const KernelConfig& kc, const ClockFn& clock, double start,
                  double timeout_seconds, BenchResult& partial, double& out_sum,
                  double& last_seen) {
  double t0 = clock();
  std::vector<double> out = mttkrp_linearized(lt, f, mode, kc);
  double t1 = clock();
  last_seen = t1;
  out_sum = 0.0;
  for (double v : out) out_sum += v;
  if (timeout_seconds > 0.0 && t1 - start > timeout_seconds) {
    partial.wall_s = t1 - start;
    throw BenchTimeoutError(std::move(partial), t1 - start);
  }
  return t1 - t0;
}

BenchResult finalize(std::vector<std::vector<double>>& samples, double checksum,
                     int repeats_done) {
  BenchResult r;
  r.checksum = checksum;
  r.repeats_done = repeats_done;
  r.mode_median_s.reserve(samples.size());
  for (auto& s : samples) r.mode_median_s.push_back(s.empty() ? 0.0 : median(s));
  r.total_s = 0.0;
  for (double m : r.mode_median_s) r.total_s += m;
  return r;
}

template <typename PosT>
BenchResult run_bench(const LinearizedTensorT<PosT>& lt, const BenchConfig& cfg,
                      const ClockFn& clock) {
  std::size_t order = lt.dims.size();
  FactorMatrices f = FactorMatrices::seeded_uniform(lt.dims, static_cast<Index>(cfg.rank),
                                                    cfg.seed);
  KernelConfig timed_kc = cfg.kernel();
  KernelConfig serial_kc{1, cfg.fiber_reuse_threshold, SyncPath::Reduction};

  std::vector<std::vector<double>> samples(order);
  double start = clock();
  double last_seen = start;
  double unused = 0.0;

  // Checksum pass: single-threaded so the accumulation order, and therefore
  // the float result, never depends on the thread count.
  double checksum = 0.0;
  {
    BenchResult partial = finalize(samples, 0.0, 0);
    for (std::size_t mode = 0; mode < order; ++mode) {
      double sum = 0.0;
      timed_unit(lt, f, mode, serial_kc, clock, start, cfg.timeout_seconds, partial, sum,
                 last_seen);
      checksum += sum;
    }
  }

  for (int w = 0; w < cfg.warmup; ++w) {
    BenchResult partial = finalize(samples, checksum, 0);
    for (std::size_t mode = 0; mode < order; ++mode)
      timed_unit(lt, f, mode, timed_kc, clock, start, cfg.timeout_seconds, partial, unused,
                 last_seen);
  }

  int repeats_done = 0;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    for (std::size_t mode = 0; mode < order; ++mode) {
      BenchResult partial = finalize(samples, checksum, repeats_done);
      double dt = timed_unit(lt, f, mode, timed_kc, clock, start, cfg.timeout_seconds, partial,
                             unused, last_seen);
      samples[mode].push_back(dt);
    }
    ++repeats_done;
  }
  BenchResult r = finalize(samples, checksum, repeats_done);
  r.wall_s = last_seen - start;
  return r;
}

}  // namespace

BenchResult benchmark(const LinearizedTensor& lt, const BenchConfig& cfg, ClockFn clock) {
  cfg.validate();
  if (!clock) clock = steady_clock_fn();
  return std::visit([&](const auto& t) { return run_bench(t, cfg, clock); }, lt);
}

BenchResult benchmark(const SparseTensorCoo& t, const EncodingPlan& plan, const BenchConfig& cfg,
                      ClockFn clock) {
  LinearizedTensor lt = linearize(t, plan);
  return benchmark(lt, cfg, std::move(clock));
}

}  // namespace bitweave
