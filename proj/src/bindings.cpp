#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "bitweave/agent.hpp"

namespace py = pybind11;
using namespace bitweave;

namespace {

BitBudget budget_of(const std::vector<Index>& dims) { return bit_budget(dims); }

EncodingPlan plan_for(const std::string& text, const BitBudget& budget) {
  const EncodingPlan plan = parse_plan(text);
  require_valid_plan(plan, budget);
  return plan;
}

std::vector<std::vector<double>> rows_of(const std::vector<double>& flat, Index n_rows,
                                         Index rank) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n_rows));
  for (Index i = 0; i < n_rows; ++i) {
    const auto* base = flat.data() + i * rank;
    rows[static_cast<std::size_t>(i)].assign(base, base + rank);
  }
  return rows;
}

SparseTensorCoo tensor_from_entries(const std::vector<Index>& dims,
                                    const std::vector<std::vector<Index>>& coords,
                                    const std::vector<double>& values) {
  if (coords.size() != values.size())
    throw DomainError("coords and values must have the same length");
  const std::size_t n_modes = dims.empty() ? (coords.empty() ? 0 : coords[0].size())
                                           : dims.size();
  std::vector<std::vector<Index>> by_mode(n_modes);
  for (const auto& c : coords) {
    if (c.size() != n_modes) throw DomainError("coordinate arity does not match the mode count");
    for (std::size_t n = 0; n < n_modes; ++n) by_mode[n].push_back(c[n]);
  }
  return SparseTensorCoo::from_entries(dims, std::move(by_mode), values);
}

std::vector<std::vector<double>> run_mttkrp(const SparseTensorCoo& t, const std::string& plan_text,
                                            std::size_t mode, Index rank, std::uint64_t seed,
                                            int threads) {
  const EncodingPlan plan = plan_for(plan_text, budget_of(t.dims));
  const LinearizedTensor lt = linearize(t, plan);
  const FactorMatrices f = FactorMatrices::seeded_uniform(t.dims, rank, seed);
  KernelConfig cfg;
  cfg.threads = threads;
  return rows_of(mttkrp_linearized(lt, f, mode, cfg), t.dims.at(mode), rank);
}

std::vector<std::vector<double>> run_oracle(const SparseTensorCoo& t, std::size_t mode, Index rank,
                                            std::uint64_t seed) {
  const FactorMatrices f = FactorMatrices::seeded_uniform(t.dims, rank, seed);
  return rows_of(dense_mttkrp_oracle(t, f, mode), t.dims.at(mode), rank);
}

py::dict run_benchmark(const SparseTensorCoo& t, const std::string& plan_text, int rank,
                       int repeats, int warmup, int threads, std::uint64_t seed) {
  BenchConfig cfg;
  cfg.rank = rank;
  cfg.repeats = repeats;
  cfg.warmup = warmup;
  cfg.threads = threads;
  cfg.seed = seed;
  const EncodingPlan plan =
      plan_text.empty() ? alto_default_plan(t.dims) : plan_for(plan_text, budget_of(t.dims));
  const BenchResult r = benchmark(t, plan, cfg);
  py::dict out;
  out["plan"] = format_plan(plan);
  out["mode_median_s"] = r.mode_median_s;
  out["total_s"] = r.total_s;
  out["wall_s"] = r.wall_s;
  out["checksum"] = r.checksum;
  out["repeats_done"] = r.repeats_done;
  return out;
}

py::dict run_train_synthetic(const std::vector<int>& budget_bits, const std::string& hidden_text,
                             int episodes, std::uint64_t seed, int hidden_scale,
                             const py::object& on_episode) {
  BitBudget budget;
  budget.per_mode = budget_bits;
  const EncodingPlan hidden = hidden_text.empty() ? alto_default_plan(budget)
                                                  : plan_for(hidden_text, budget);
  Environment env(std::make_unique<SyntheticScorer>(budget, hidden));

  Hyperparameters hp;
  hp.max_episodes = episodes;
  hp.seed = seed;
  hp.hidden_scale = hidden_scale;
  Agent agent(env, hp);

  std::function<void(const EpisodeStats&)> callback;
  if (!on_episode.is_none()) {
    callback = [&on_episode](const EpisodeStats& s) {
      py::dict rec;
      rec["episode"] = s.episode;
      rec["epsilon"] = s.epsilon;
      rec["plan"] = s.plan;
      rec["reward"] = s.terminal_reward;
      rec["best_plan"] = s.best_plan;
      rec["best_reward"] = s.best_reward;
      rec["gate_open"] = s.gate_open;
      on_episode(rec);
    };
  }
  const TrainResult r = agent.run(callback);

  py::dict out;
  out["best_plan"] = r.best_plan;
  out["best_speedup"] = r.best_reward;
  out["best_episode"] = r.best_episode;
  out["episodes_run"] = r.episodes_run;
  out["gate_opened"] = r.gate_opened;
  out["real_evals"] = r.real_evals;
  out["cache_hits"] = r.cache_hits;
  out["imagined"] = r.imagined;
  out["hidden_plan"] = format_plan(hidden);
  return out;
}

py::object plan_count_int(const std::vector<Index>& dims) {
  const std::string digits = count_interleavings(budget_of(dims)).to_string();
  return py::module_::import("builtins").attr("int")(digits);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bit-interleaved sparse tensor encodings: linearization, MTTKRP, and plan learning";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  py::class_<SparseTensorCoo>(m, "Tensor", "Sparse tensor in coordinate form")
      .def_static(
          "load",
          [](const std::string& path, const std::vector<Index>& dims) {
            return load_frostt(path, dims);
          },
          py::arg("path"), py::arg("dims") = std::vector<Index>{},
          "Reads a FROSTT-style .tns file (one-based indices, '#' comments)")
      .def_static("from_entries", &tensor_from_entries, py::arg("dims"), py::arg("coords"),
                  py::arg("values"),
                  "Builds a tensor from zero-based coordinate tuples; duplicates are summed")
      .def_property_readonly("dims", [](const SparseTensorCoo& t) { return t.dims; })
      .def_property_readonly("nnz", [](const SparseTensorCoo& t) { return t.nnz(); })
      .def("__repr__", [](const SparseTensorCoo& t) {
        std::string s = "Tensor(dims=[";
        for (std::size_t i = 0; i < t.dims.size(); ++i) {
          if (i) s += ", ";
          s += std::to_string(t.dims[i]);
        }
        s += "], nnz=" + std::to_string(t.nnz()) + ")";
        return s;
      });

  m.def(
      "bit_budget",
      [](const std::vector<Index>& dims) { return budget_of(dims).per_mode; }, py::arg("dims"),
      "Bits each mode needs: ceil(log2(extent)), 0 for unit modes");
  m.def(
      "alto_plan", [](const std::vector<Index>& dims) { return format_plan(alto_default_plan(dims)); },
      py::arg("dims"), "The expert default interleaving as a one-based plan string");
  m.def("plan_count", &plan_count_int, py::arg("dims"),
        "Number of distinct interleavings of the dims' bit budget (exact)");
  m.def(
      "encode",
      [](const std::vector<Index>& dims, const std::string& plan_text,
         const std::vector<Index>& coords) {
        const BitBudget budget = budget_of(dims);
        return encode64(coords, plan_for(plan_text, budget), budget);
      },
      py::arg("dims"), py::arg("plan"), py::arg("coords"),
      "Linear position of a zero-based coordinate tuple under a plan (budgets up to 64 bits)");
  m.def(
      "decode",
      [](const std::vector<Index>& dims, const std::string& plan_text, Pos64 position) {
        const BitBudget budget = budget_of(dims);
        return decode64(position, plan_for(plan_text, budget), budget);
      },
      py::arg("dims"), py::arg("plan"), py::arg("position"),
      "Inverse of encode: recovers the zero-based coordinates of a position");
  m.def("mttkrp", &run_mttkrp, py::arg("tensor"), py::arg("plan"), py::arg("mode"),
        py::arg("rank") = 8, py::arg("seed") = 1, py::arg("threads") = 0,
        "Mode-n MTTKRP over the linearized tensor with seeded uniform factors; "
        "returns the output matrix as nested lists");
  m.def("mttkrp_oracle", &run_oracle, py::arg("tensor"), py::arg("mode"), py::arg("rank") = 8,
        py::arg("seed") = 1,
        "Reference MTTKRP by direct iteration over the coordinate list (same seeded factors)");
  m.def("benchmark", &run_benchmark, py::arg("tensor"), py::arg("plan") = std::string(),
        py::arg("rank") = 16, py::arg("repeats") = 10, py::arg("warmup") = 1,
        py::arg("threads") = 0, py::arg("seed") = 0x5EED,
        "Times MTTKRP sweeps over all modes; empty plan means the expert default");
  m.def("train_synthetic", &run_train_synthetic, py::arg("budget"),
        py::arg("hidden") = std::string(), py::arg("episodes") = 60, py::arg("seed") = 1,
        py::arg("hidden_scale") = 4, py::arg("on_episode") = py::none(),
        "Trains the plan learner against a hidden-plan oracle; returns the summary dict");
}
