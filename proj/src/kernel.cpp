#include "bitweave/kernel.hpp"

#include <atomic>
#include <thread>

namespace bitweave {

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

template <typename PosT>
void kernel_range(const LinearizedTensorT<PosT>& lt, const FactorMatrices& f, std::size_t mode,
                  std::size_t begin, std::size_t end, double* out) {
  const std::size_t order = lt.dims.size();
  const std::size_t F = f.rank;
  const PosT out_mask = lt.mode_masks[mode];
  std::vector<double> acc(F);
  for (std::size_t i = begin; i < end; ++i) {
    const PosT p = lt.positions[i];
    for (std::size_t r = 0; r < F; ++r) acc[r] = lt.values[i];
    for (std::size_t n = 0; n < order; ++n) {
      if (n == mode) continue;
      const Index row_id = extract_bits(p, lt.mode_masks[n]);
      const double* row = &f.mats[n][row_id * F];
      for (std::size_t r = 0; r < F; ++r) acc[r] *= row[r];
    }
    const Index out_row = extract_bits(p, out_mask);
    double* dst = &out[out_row * F];
    for (std::size_t r = 0; r < F; ++r) dst[r] += acc[r];
  }
}

template <typename PosT>
void kernel_range_atomic(const LinearizedTensorT<PosT>& lt, const FactorMatrices& f,
                         std::size_t mode, std::size_t begin, std::size_t end, double* out) {
  const std::size_t order = lt.dims.size();
  const std::size_t F = f.rank;
  const PosT out_mask = lt.mode_masks[mode];
  std::vector<double> acc(F);
  for (std::size_t i = begin; i < end; ++i) {
    const PosT p = lt.positions[i];
    for (std::size_t r = 0; r < F; ++r) acc[r] = lt.values[i];
    for (std::size_t n = 0; n < order; ++n) {
      if (n == mode) continue;
      const Index row_id = extract_bits(p, lt.mode_masks[n]);
      const double* row = &f.mats[n][row_id * F];
      for (std::size_t r = 0; r < F; ++r) acc[r] *= row[r];
    }
    const Index out_row = extract_bits(p, out_mask);
    double* dst = &out[out_row * F];
    for (std::size_t r = 0; r < F; ++r)
      std::atomic_ref<double>(dst[r]).fetch_add(acc[r], std::memory_order_relaxed);
  }
}

}  // namespace

template <typename PosT>
std::vector<double> mttkrp_linearized(const LinearizedTensorT<PosT>& lt, const FactorMatrices& f,
                                      std::size_t mode, const KernelConfig& cfg) {
  const std::size_t order = lt.dims.size();
  if (mode >= order) throw DomainError("mode out of range");
  if (f.mats.size() != order) throw DomainError("factor count does not match tensor order");
  const std::size_t F = f.rank;
  for (std::size_t n = 0; n < order; ++n)
    if (f.mats[n].size() != lt.dims[n] * F) throw DomainError("factor matrix shape mismatch");

  const std::size_t m = lt.nnz();
  const std::size_t rows = lt.dims[mode];
  std::vector<double> out(rows * F, 0.0);

  const int threads = resolve_thread_count(cfg.threads);
  if (threads == 1 || m < 2) {
    kernel_range(lt, f, mode, 0, m, out.data());
    return out;
  }

  SyncPath path = cfg.sync;
  if (path == SyncPath::Auto) {
    const double reuse = static_cast<double>(m) / static_cast<double>(rows);
    path = reuse >= cfg.fiber_reuse_threshold ? SyncPath::Reduction : SyncPath::Atomic;
  }

  auto chunk = [&](int t) -> std::pair<std::size_t, std::size_t> {
    const std::size_t lo = m * static_cast<std::size_t>(t) / threads;
    const std::size_t hi = m * static_cast<std::size_t>(t + 1) / threads;
    return {lo, hi};
  };

  if (path == SyncPath::Atomic) {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      auto [lo, hi] = chunk(t);
      pool.emplace_back([&, lo, hi] { kernel_range_atomic(lt, f, mode, lo, hi, out.data()); });
    }
    for (auto& th : pool) th.join();
    return out;
  }

  // Reduction path: thread-private output buffers, then a pairwise tree
  // reduction (buffer 0 doubles as the final output).
  std::vector<std::vector<double>> bufs(threads);
  {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      auto [lo, hi] = chunk(t);
      pool.emplace_back([&, t, lo, hi] {
        bufs[t].assign(rows * F, 0.0);
        kernel_range(lt, f, mode, lo, hi, bufs[t].data());
      });
    }
    for (auto& th : pool) th.join();
  }
  for (int stride = 1; stride < threads; stride *= 2) {
    std::vector<std::thread> pool;
    for (int t = 0; t + stride < threads; t += 2 * stride) {
      pool.emplace_back([&, t, stride] {
        double* dst = bufs[t].data();
        const double* src = bufs[t + stride].data();
        for (std::size_t i = 0; i < rows * F; ++i) dst[i] += src[i];
      });
    }
    for (auto& th : pool) th.join();
  }
  return bufs[0];
}

template std::vector<double> mttkrp_linearized<Pos64>(const LinearizedTensorT<Pos64>&,
                                                      const FactorMatrices&, std::size_t,
                                                      const KernelConfig&);
template std::vector<double> mttkrp_linearized<Pos128>(const LinearizedTensorT<Pos128>&,
                                                       const FactorMatrices&, std::size_t,
                                                       const KernelConfig&);

std::vector<double> mttkrp_linearized(const LinearizedTensor& lt, const FactorMatrices& f,
                                      std::size_t mode, const KernelConfig& cfg) {
  return std::visit([&](const auto& x) { return mttkrp_linearized(x, f, mode, cfg); }, lt);
}

}  // namespace bitweave
