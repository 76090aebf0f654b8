#include "bitweave/tensor.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace bitweave {

double SparseTensorCoo::density() const {
  double cells = 1.0;
  for (Index d : dims) cells *= static_cast<double>(d);
  return cells > 0 ? static_cast<double>(nnz()) / cells : 0.0;
}

SparseTensorCoo SparseTensorCoo::from_entries(std::vector<Index> dims,
                                              std::vector<std::vector<Index>> entry_coords,
                                              std::vector<double> entry_values) {
  const std::size_t order = entry_coords.size();
  const std::size_t m = entry_values.size();
  for (const auto& c : entry_coords) {
    if (c.size() != m) throw DomainError("coordinate/value lists have mismatched lengths");
  }
  if (!dims.empty() && dims.size() != order)
    throw DomainError("dims order does not match coordinate order");

  if (dims.empty()) {
    dims.assign(order, 1);
    for (std::size_t n = 0; n < order; ++n)
      for (std::size_t i = 0; i < m; ++i) dims[n] = std::max(dims[n], entry_coords[n][i] + 1);
  } else {
    for (Index d : dims)
      if (d == 0) throw DomainError("zero-length mode");
    for (std::size_t n = 0; n < order; ++n)
      for (std::size_t i = 0; i < m; ++i)
        if (entry_coords[n][i] >= dims[n])
          throw DomainError("coordinate out of range for mode " + std::to_string(n + 1));
  }

  // Sort an index permutation lexicographically by coordinates, then merge
  // duplicates by summing their values.
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  auto lex_less = [&](std::size_t a, std::size_t b) {
    for (std::size_t n = 0; n < order; ++n) {
      if (entry_coords[n][a] != entry_coords[n][b]) return entry_coords[n][a] < entry_coords[n][b];
    }
    return false;
  };
  std::sort(perm.begin(), perm.end(), lex_less);

  SparseTensorCoo t;
  t.dims = std::move(dims);
  t.coords.assign(order, {});
  for (auto& c : t.coords) c.reserve(m);
  t.values.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t e = perm[i];
    bool same = i > 0;
    if (same) {
      const std::size_t prev = perm[i - 1];
      for (std::size_t n = 0; n < order && same; ++n)
        same = entry_coords[n][e] == entry_coords[n][prev];
    }
    if (same) {
      t.values.back() += entry_values[e];
    } else {
      for (std::size_t n = 0; n < order; ++n) t.coords[n].push_back(entry_coords[n][e]);
      t.values.push_back(entry_values[e]);
    }
  }
  return t;
}

FactorMatrices FactorMatrices::ones(const std::vector<Index>& dims, Index rank) {
  FactorMatrices f;
  f.rank = rank;
  f.mats.reserve(dims.size());
  for (Index d : dims) f.mats.emplace_back(d * rank, 1.0);
  return f;
}

FactorMatrices FactorMatrices::seeded_uniform(const std::vector<Index>& dims, Index rank,
                                              std::uint64_t seed) {
  FactorMatrices f;
  f.rank = rank;
  f.mats.reserve(dims.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index d : dims) {
    std::vector<double> m(d * rank);
    for (auto& v : m) v = u(rng);
    f.mats.push_back(std::move(m));
  }
  return f;
}

namespace {

bool blank_or_comment(const std::string& line) {
  for (char ch : line) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

}  // namespace

SparseTensorCoo parse_frostt(const std::string& text, const std::vector<Index>& dims_override,
                             const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t order = 0;
  std::vector<std::vector<Index>> coords;
  std::vector<double> values;

  auto fail = [&](const std::string& what) {
    throw ParseError(source_name + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;

    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.size() < 2) fail("expected N indices followed by a value");

    if (order == 0) {
      order = tokens.size() - 1;
      coords.assign(order, {});
    } else if (tokens.size() != order + 1) {
      fail("expected " + std::to_string(order + 1) + " fields, got " +
           std::to_string(tokens.size()));
    }

    for (std::size_t n = 0; n < order; ++n) {
      Index idx = 0;
      const auto& s = tokens[n];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
      if (ec != std::errc() || p != s.data() + s.size()) fail("bad index '" + s + "'");
      if (idx < 1)
        throw DomainError(source_name + ":" + std::to_string(line_no) +
                          ": index must be >= 1 (one-based)");
      coords[n].push_back(idx - 1);
    }
    try {
      std::size_t used = 0;
      double v = std::stod(tokens[order], &used);
      if (used != tokens[order].size()) fail("bad value '" + tokens[order] + "'");
      values.push_back(v);
    } catch (const std::logic_error&) {
      fail("bad value '" + tokens[order] + "'");
    }
  }

  if (values.empty()) throw DomainError(source_name + ": no tensor entries");
  return SparseTensorCoo::from_entries(dims_override, std::move(coords), std::move(values));
}

SparseTensorCoo load_frostt(const std::string& path, const std::vector<Index>& dims_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_frostt(buf.str(), dims_override, path);
}

std::vector<double> dense_mttkrp_oracle(const SparseTensorCoo& t, const FactorMatrices& f,
                                        std::size_t mode) {
  const std::size_t order = t.order();
  if (mode >= order) throw DomainError("mode out of range");
  if (f.mats.size() != order) throw DomainError("factor count does not match tensor order");
  const std::size_t F = f.rank;
  for (std::size_t n = 0; n < order; ++n)
    if (f.mats[n].size() != t.dims[n] * F) throw DomainError("factor matrix shape mismatch");

  std::vector<double> out(t.dims[mode] * F, 0.0);
  std::vector<double> acc(F);
  for (std::size_t i = 0; i < t.nnz(); ++i) {
    for (std::size_t r = 0; r < F; ++r) acc[r] = t.values[i];
    for (std::size_t n = 0; n < order; ++n) {
      if (n == mode) continue;
      const double* row = &f.mats[n][t.coords[n][i] * F];
      for (std::size_t r = 0; r < F; ++r) acc[r] *= row[r];
    }
    double* dst = &out[t.coords[mode][i] * F];
    for (std::size_t r = 0; r < F; ++r) dst[r] += acc[r];
  }
  return out;
}

}  // namespace bitweave
