#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "bitweave/kernel.hpp"

namespace bitweave {

/// Seconds from a monotonic source. Injectable so tests can script timings.
using ClockFn = std::function<double()>;

ClockFn steady_clock_fn();

struct BenchConfig {
  int rank = 16;
  int repeats = 10;
  int warmup = 1;
  int threads = 0;                 // 0 = hardware concurrency
  int fiber_reuse_threshold = 8;   // rho
  std::uint64_t seed = 0x5EED;
  double timeout_seconds = 0.0;    // 0 = unbounded

  void validate() const;
  KernelConfig kernel() const {
    return KernelConfig{threads, fiber_reuse_threshold, SyncPath::Auto};
  }
};

struct BenchResult {
  std::vector<double> mode_median_s;   // one median per mode
  double total_s = 0.0;                // sum of the per-mode medians
  double wall_s = 0.0;                 // whole-run wall time incl. checksum and warmup
  double checksum = 0.0;               // sum of kernel outputs, single-threaded pass
  int repeats_done = 0;
};

/// Thrown when the wall-clock cap is exceeded; carries whatever per-mode
/// samples were collected before the cutoff.
class BenchTimeoutError : public std::runtime_error {
 public:
  BenchTimeoutError(BenchResult partial, double elapsed)
      : std::runtime_error("benchmark exceeded its time budget"),
        partial_(std::move(partial)),
        elapsed_s(elapsed) {}

  const BenchResult& partial() const { return partial_; }
  double elapsed_s;

 private:
  BenchResult partial_;
};

/// Linearizes once (untimed), runs `warmup` untimed all-modes sweeps, then
/// times `repeats` sweeps; reports the per-mode median and their sum.
/// Factor matrices come from a seeded uniform generator, so the checksum is
/// reproducible run to run.
BenchResult benchmark(const SparseTensorCoo& t, const EncodingPlan& plan, const BenchConfig& cfg,
                      ClockFn clock = {});

/// Same sweep over an already linearized tensor.
BenchResult benchmark(const LinearizedTensor& lt, const BenchConfig& cfg, ClockFn clock = {});

double median(std::vector<double> samples);

}  // namespace bitweave
