#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#if defined(__BMI2__)
#include <immintrin.h>
#endif

#include "bitweave/tensor.hpp"

namespace bitweave {

using Pos64 = std::uint64_t;
using Pos128 = unsigned __int128;

/// Largest supported linear index width. Tensors needing more are rejected.
inline constexpr int kMaxPositionBits = 128;

/// Per-mode bit counts l(n) = ceil(log2 I_n), with l(n) = 0 for unit modes.
struct BitBudget {
  std::vector<int> per_mode;

  int n_modes() const { return static_cast<int>(per_mode.size()); }
  int total() const;   // l(p)
  bool operator==(const BitBudget&) const = default;
};

BitBudget bit_budget(const std::vector<Index>& dims);

/// An interleaving order: picks[t] is the zero-based mode whose next-lowest
/// unassigned coordinate bit lands on linear bit b^t. Within a mode, bit
/// order is preserved (k-th occurrence carries that mode's bit k).
/// The external text form ("3,1,2,1,2,2") uses one-based mode ids.
struct EncodingPlan {
  std::vector<std::uint8_t> picks;

  std::size_t length() const { return picks.size(); }
  bool operator==(const EncodingPlan&) const = default;
};

bool plan_valid(const EncodingPlan& plan, const BitBudget& budget);
void require_valid_plan(const EncodingPlan& plan, const BitBudget& budget);

std::string format_plan(const EncodingPlan& plan);
EncodingPlan parse_plan(const std::string& text);

/// The expert baseline interleaving: low bits first, round-robin over modes
/// ordered by increasing mode length (ties broken by lower mode index),
/// skipping modes whose bits are exhausted.
EncodingPlan alto_default_plan(const std::vector<Index>& dims);

/// Baseline plan when only the bit budget is known (remote or synthetic
/// environments); equivalent to alto_default_plan on dims 2^l(n).
EncodingPlan alto_default_plan(const BitBudget& budget);

/// Exact unsigned big integer, wide enough for interleaving counts of any
/// supported budget. Stored as base-1e9 limbs, little endian.
class BigUint {
 public:
  BigUint() : limbs_{0} {}
  explicit BigUint(std::uint64_t v);

  void mul_small(std::uint32_t k);
  void div_small_exact(std::uint32_t k);   // throws if the division has a remainder

  bool fits_u64() const;
  std::uint64_t as_u64() const;
  double as_double() const;
  std::string to_string() const;
  bool operator==(const BigUint&) const = default;

 private:
  std::vector<std::uint32_t> limbs_;   // base 1e9
  void trim();
};

/// Number of distinct interleavings of the budget: l(p)! / prod l(n)!.
BigUint count_interleavings(const BitBudget& budget);

/// Position-sorted linearized tensor: (position, value) pairs plus per-mode
/// extraction masks over the linear index bits.
template <typename PosT>
struct LinearizedTensorT {
  using position_type = PosT;

  std::vector<Index> dims;
  BitBudget budget;
  EncodingPlan plan;
  std::vector<PosT> positions;   // sorted ascending, bijective with coords
  std::vector<double> values;
  std::vector<PosT> mode_masks;  // mode_masks[n]: linear bits owned by mode n

  std::size_t nnz() const { return values.size(); }
};

using LinearizedTensor = std::variant<LinearizedTensorT<Pos64>, LinearizedTensorT<Pos128>>;

/// Scatters per-mode coordinate bits into a linear position per the plan.
template <typename PosT>
PosT encode(const std::vector<Index>& coords, const EncodingPlan& plan, const BitBudget& budget);

/// Inverse of encode.
template <typename PosT>
std::vector<Index> decode(PosT position, const EncodingPlan& plan, const BitBudget& budget);

/// Convenience instantiations used by callers that know l(p) <= 64.
Pos64 encode64(const std::vector<Index>& coords, const EncodingPlan& plan,
               const BitBudget& budget);
std::vector<Index> decode64(Pos64 position, const EncodingPlan& plan, const BitBudget& budget);

bool needs_wide_positions(const BitBudget& budget);

/// Encodes every entry, sorts by position (stable), and builds masks.
/// Picks the narrowest position word (64 or 128 bits) that fits l(p).
LinearizedTensor linearize(const SparseTensorCoo& t, const EncodingPlan& plan);

std::size_t linearized_nnz(const LinearizedTensor& lt);
/// Index bytes + value bytes actually stored for the nonzeros.
std::size_t linearized_storage_bytes(const LinearizedTensor& lt);

/// Extracts the bits of `p` selected by `mask`, packed toward bit zero.
template <typename PosT>
inline Index extract_bits(PosT p, PosT mask) {
#if defined(__BMI2__)
  if constexpr (sizeof(PosT) == 8) {
    return _pext_u64(static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(mask));
  }
#endif
  Index out = 0;
  int k = 0;
  while (mask != 0) {
    PosT low = mask & (~mask + 1);
    if (p & low) out |= Index{1} << k;
    ++k;
    mask &= mask - 1;
  }
  return out;
}

}  // namespace bitweave
