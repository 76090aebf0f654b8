#pragma once

#include <vector>

#include "bitweave/encoding.hpp"
#include "bitweave/tensor.hpp"

namespace bitweave {

/// Output-conflict handling for the parallel kernel. Auto switches on the
/// expected fiber reuse nnz/I_n against the configured threshold.
enum class SyncPath { Auto, Reduction, Atomic };

struct KernelConfig {
  int threads = 0;                 // 0 = hardware concurrency
  int fiber_reuse_threshold = 8;   // rho: min nnz/I_n for the reduction path
  SyncPath sync = SyncPath::Auto;
};

/// Mode-n MTTKRP over a linearized tensor. Coordinates are recovered on the
/// fly from positions through the per-mode extraction masks; nonzeros are
/// partitioned contiguously across threads.
/// Returns the I_n x F output row-major.
std::vector<double> mttkrp_linearized(const LinearizedTensor& lt, const FactorMatrices& f,
                                      std::size_t mode, const KernelConfig& cfg = {});

template <typename PosT>
std::vector<double> mttkrp_linearized(const LinearizedTensorT<PosT>& lt, const FactorMatrices& f,
                                      std::size_t mode, const KernelConfig& cfg = {});

int resolve_thread_count(int requested);

}  // namespace bitweave
