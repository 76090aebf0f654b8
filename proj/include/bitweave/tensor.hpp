#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitweave {

using Index = std::uint64_t;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sparse tensor in coordinate form. Coordinates are zero-based and
/// deduplicated (duplicate entries are summed at construction).
/// Immutable after construction; safe to share across threads.
struct SparseTensorCoo {
  std::vector<Index> dims;                  // mode lengths I_n
  std::vector<std::vector<Index>> coords;   // coords[mode][entry]
  std::vector<double> values;

  std::size_t order() const { return dims.size(); }
  std::size_t nnz() const { return values.size(); }
  double density() const;

  /// Builds a tensor from an entry list; sums duplicates, checks bounds.
  /// When `dims` is empty, mode lengths are inferred as max coordinate + 1.
  static SparseTensorCoo from_entries(std::vector<Index> dims,
                                      std::vector<std::vector<Index>> entry_coords,
                                      std::vector<double> entry_values);
};

/// Dense factor matrices, one I_n x F row-major matrix per mode.
struct FactorMatrices {
  Index rank = 0;
  std::vector<std::vector<double>> mats;   // mats[n][i*rank + f]

  static FactorMatrices ones(const std::vector<Index>& dims, Index rank);
  /// i.i.d. uniform[0,1) entries from a seeded generator.
  static FactorMatrices seeded_uniform(const std::vector<Index>& dims, Index rank,
                                       std::uint64_t seed);
};

/// Parses a FROSTT-style .tns text file: each non-comment line holds N
/// whitespace-separated one-based indices followed by one value. Lines
/// starting with '#' are skipped. Duplicates are summed. Mode lengths are
/// inferred per mode unless `dims_override` is non-empty.
SparseTensorCoo load_frostt(const std::string& path,
                            const std::vector<Index>& dims_override = {});

/// Same parser over an in-memory buffer (used by tests and tools).
SparseTensorCoo parse_frostt(const std::string& text,
                             const std::vector<Index>& dims_override = {},
                             const std::string& source_name = "<memory>");

/// Reference mode-n MTTKRP by direct triple loop over the coordinate list.
/// out[i_n*F + f] = sum over entries with coords[mode]==i_n of
///                  value * prod_{k != mode} mats[k][i_k*F + f].
/// Slow and simple; the correctness oracle for the linearized kernel.
std::vector<double> dense_mttkrp_oracle(const SparseTensorCoo& t,
                                        const FactorMatrices& f, std::size_t mode);

}  // namespace bitweave
