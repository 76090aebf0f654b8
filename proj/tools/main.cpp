#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bitweave/agent.hpp"
#include "bitweave/transport.hpp"
#include "json.hpp"

namespace {

using namespace bitweave;
using nlohmann::json;

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

struct BenchFlags {
  int rank = 16;
  int repeats = 10;
  int warmup = 1;
  int threads = 0;
  std::uint64_t seed = 0x5EED;

  BenchConfig config() const {
    BenchConfig cfg;
    cfg.rank = rank;
    cfg.repeats = repeats;
    cfg.warmup = warmup;
    cfg.threads = threads;
    cfg.seed = seed;
    return cfg;
  }
};

void add_bench_flags(CLI::App* cmd, BenchFlags& flags) {
  cmd->add_option("--rank", flags.rank, "Factor matrix rank")->capture_default_str();
  cmd->add_option("--repeats", flags.repeats, "Timed sweeps per mode")->capture_default_str();
  cmd->add_option("--warmup", flags.warmup, "Untimed sweeps per mode")->capture_default_str();
  cmd->add_option("--threads", flags.threads, "Worker threads; 0 uses the hardware count")
      ->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Seed for factor matrices and exploration")
      ->capture_default_str();
}

std::string format_dims(const std::vector<Index>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) out += 'x';
    out += std::to_string(dims[i]);
  }
  return out;
}

std::string format_bits(const BitBudget& budget) {
  std::string out;
  for (int i = 0; i < budget.n_modes(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(budget.per_mode[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void cmd_inspect(const std::string& path) {
  const SparseTensorCoo t = load_frostt(path);
  const BitBudget budget = bit_budget(t.dims);
  double cells = 1.0;
  for (const Index d : t.dims) cells *= static_cast<double>(d);

  std::cout << "tensor " << path << "\n";
  std::cout << "dims " << format_dims(t.dims) << "\n";
  std::cout << "nnz " << t.nnz() << "\n";
  std::ostringstream density;
  density.precision(6);
  density << (static_cast<double>(t.nnz()) / cells);
  std::cout << "density " << density.str() << "\n";
  std::cout << "bits " << format_bits(budget) << "\n";
  std::cout << "total_bits " << budget.total() << "\n";
  std::cout << "plans " << count_interleavings(budget).to_string() << "\n";
}

void print_bench(const std::string& label, const EncodingPlan& plan, const BenchResult& r) {
  std::cout << label << " " << format_plan(plan) << "\n";
  std::cout << "mode_medians_s ";
  for (std::size_t i = 0; i < r.mode_median_s.size(); ++i) {
    if (i > 0) std::cout << ',';
    std::cout << format_double(r.mode_median_s[i]);
  }
  std::cout << "\n";
  std::cout << "total_s " << format_double(r.total_s) << "\n";
  std::cout << "wall_s " << format_double(r.wall_s) << "\n";
  std::cout << "checksum " << format_double(r.checksum) << "\n";
  std::cout << "repeats " << r.repeats_done << "\n";
}

void cmd_bench(const std::string& path, const std::string& plan_text, bool use_alto,
               const std::string& compare_text, const BenchFlags& flags) {
  const SparseTensorCoo t = load_frostt(path);
  if (plan_text.empty() && !use_alto)
    throw DomainError("bench needs --plan or --alto to pick an interleaving");

  const EncodingPlan plan = plan_text.empty() ? alto_default_plan(t.dims) : parse_plan(plan_text);
  require_valid_plan(plan, bit_budget(t.dims));

  const BenchConfig cfg = flags.config();
  const BenchResult first = benchmark(t, plan, cfg);
  print_bench("plan", plan, first);

  if (!compare_text.empty()) {
    const EncodingPlan other = parse_plan(compare_text);
    require_valid_plan(other, bit_budget(t.dims));
    const BenchResult second = benchmark(t, other, cfg);
    print_bench("compare", other, second);
    std::cout << "speedup " << format_double(second.total_s / std::max(first.total_s, 1e-12))
              << "\n";
  }
}

void cmd_eval(const std::string& path, const std::string& plan_text, const BenchFlags& flags) {
  const SparseTensorCoo t = load_frostt(path);
  const BitBudget budget = bit_budget(t.dims);
  const EncodingPlan candidate = parse_plan(plan_text);
  require_valid_plan(candidate, budget);
  const EncodingPlan baseline = alto_default_plan(t.dims);

  const BenchConfig cfg = flags.config();
  const BenchResult base = benchmark(t, baseline, cfg);
  const BenchResult cand = benchmark(t, candidate, cfg);
  const double speedup = base.total_s / std::max(cand.total_s, 1e-12);

  std::cout << "tensor,plan,total_s,speedup\n";
  std::cout << path << ",\"" << format_plan(candidate) << "\"," << format_double(cand.total_s)
            << "," << format_double(speedup) << "\n";
  std::cout << path << ",\"" << format_plan(baseline) << "\"," << format_double(base.total_s)
            << ",1\n";

  const std::size_t cand_bytes = linearized_storage_bytes(linearize(t, candidate));
  const std::size_t base_bytes = linearized_storage_bytes(linearize(t, baseline));
  std::cout << "storage,candidate_bytes=" << cand_bytes << ",baseline_bytes=" << base_bytes
            << ",equal=" << (cand_bytes == base_bytes ? "true" : "false") << "\n";
}

void cmd_serve(const std::string& path, const std::string& host, int port,
               const BenchFlags& flags) {
  const SparseTensorCoo t = load_frostt(path);
  const BenchConfig cfg = flags.config();
  Environment env(std::make_unique<BenchmarkScorer>(t, cfg));

  WireConfig wire;
  wire.rank = flags.rank;
  wire.repeats = flags.repeats;
  wire.warmup = flags.warmup;
  wire.threads = flags.threads;
  wire.seed = flags.seed;

  EvalServer server(env, path, t.dims, wire, host, port);
  std::cout << "listening " << host << ":" << server.port() << std::endl;
  server.run();
  std::cout << "shutdown" << std::endl;
}

std::pair<std::string, int> split_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon + 1 >= endpoint.size())
    throw DomainError("endpoint must look like host:port");
  int port = 0;
  try {
    port = std::stoi(endpoint.substr(colon + 1));
  } catch (const std::exception&) {
    throw DomainError("endpoint port is not a number");
  }
  return {endpoint.substr(0, colon), port};
}

BitBudget parse_budget(const std::string& text) {
  BitBudget budget;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      budget.per_mode.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw DomainError("budget must be a comma-separated list of bit counts");
    }
    if (budget.per_mode.back() < 0) throw DomainError("bit counts must be non-negative");
  }
  if (budget.per_mode.empty() || budget.total() <= 0)
    throw DomainError("budget must contain at least one bit");
  return budget;
}

const char* kind_name(RewardKind k) {
  switch (k) {
    case RewardKind::Real: return "real";
    case RewardKind::Cached: return "cached";
    case RewardKind::Imagined: return "imagined";
  }
  return "unknown";
}

struct TrainFlags {
  std::string path;
  std::string endpoint;
  std::string synthetic;
  std::string hidden;
  std::string checkpoint;
  std::string log_path;
  std::string csv_path;
  int episodes = 5000;
  int hidden_scale = 4;
  double max_hours = 0.0;
  BenchFlags bench;
};

EncodingPlan random_plan(const BitBudget& budget, std::mt19937_64& rng) {
  PlanState s = initial_state(budget);
  while (!s.terminal()) {
    const auto acts = valid_actions(s);
    std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
    s = transition(s, acts[pick(rng)]);
  }
  return terminal_plan(s);
}

void cmd_train(const TrainFlags& flags) {
  const int sources = (!flags.path.empty() ? 1 : 0) + (!flags.endpoint.empty() ? 1 : 0) +
                      (!flags.synthetic.empty() ? 1 : 0);
  if (sources != 1)
    throw DomainError("train needs exactly one of: a tensor path, --endpoint, or --synthetic");

  std::unique_ptr<Environment> env;
  if (!flags.path.empty()) {
    const SparseTensorCoo t = load_frostt(flags.path);
    env = std::make_unique<Environment>(
        std::make_unique<BenchmarkScorer>(t, flags.bench.config()));
  } else if (!flags.endpoint.empty()) {
    const auto [host, port] = split_endpoint(flags.endpoint);
    env = std::make_unique<Environment>(std::make_unique<RemoteScorer>(host, port));
  } else {
    const BitBudget budget = parse_budget(flags.synthetic);
    EncodingPlan hidden;
    if (!flags.hidden.empty()) {
      hidden = parse_plan(flags.hidden);
      require_valid_plan(hidden, budget);
    } else {
      std::mt19937_64 rng(flags.bench.seed ^ 0xD1CE5EEDULL);
      hidden = random_plan(budget, rng);
    }
    std::cerr << "hidden " << format_plan(hidden) << "\n";
    env = std::make_unique<Environment>(std::make_unique<SyntheticScorer>(budget, hidden));
  }

  Hyperparameters hp;
  hp.max_episodes = flags.episodes;
  hp.hidden_scale = flags.hidden_scale;
  hp.seed = flags.bench.seed;
  hp.max_hours = flags.max_hours;

  Agent agent(*env, hp);

  const std::string cache_path = flags.checkpoint.empty() ? "" : flags.checkpoint + ".cache";
  if (!flags.checkpoint.empty()) {
    if (std::ifstream probe(flags.checkpoint); probe.good()) {
      agent.load_file(flags.checkpoint);
      agent.set_episode_budget(std::max(flags.episodes, agent.episodes_done()));
      agent.set_wall_cap(flags.max_hours);
      if (std::ifstream cache_probe(cache_path); cache_probe.good())
        env->load_cache(cache_path);
      std::cerr << "resumed episode " << agent.episodes_done() << "\n";
    }
  }

  std::ofstream log_out, csv_out;
  if (!flags.log_path.empty()) {
    log_out.open(flags.log_path, std::ios::trunc);
    if (!log_out) throw DomainError(flags.log_path + ": cannot open for writing");
  }
  if (!flags.csv_path.empty()) {
    csv_out.open(flags.csv_path, std::ios::trunc);
    if (!csv_out) throw DomainError(flags.csv_path + ": cannot open for writing");
    csv_out << "episode,epsilon,lr,beta,reward,kind,best_reward,gate_open,loss\n";
  }

  const auto on_episode = [&](const EpisodeStats& s) {
    if (log_out.is_open()) {
      const json rec{{"episode", s.episode},
                     {"epsilon", s.epsilon},
                     {"lr", s.lr},
                     {"beta", s.beta},
                     {"plan", s.plan},
                     {"reward", s.terminal_reward},
                     {"kind", kind_name(s.kind)},
                     {"loss", s.last_loss},
                     {"best_plan", s.best_plan},
                     {"best_reward", s.best_reward},
                     {"gate_open", s.gate_open},
                     {"model_accuracy", s.model_accuracy},
                     {"margin", s.margin},
                     {"real_evals", s.real_evals},
                     {"cache_hits", s.cache_hits},
                     {"imagined", s.imagined}};
      log_out << rec.dump() << "\n";
    }
    if (csv_out.is_open()) {
      csv_out << s.episode << ',' << s.epsilon << ',' << s.lr << ',' << s.beta << ','
              << s.terminal_reward << ',' << kind_name(s.kind) << ',' << s.best_reward << ','
              << (s.gate_open ? 1 : 0) << ',' << s.last_loss << "\n";
    }
  };

  const TrainResult result = agent.run(on_episode);

  if (!flags.checkpoint.empty()) {
    agent.save_file(flags.checkpoint);
    env->save_cache(cache_path);
  }

  const json out{{"best_plan", result.best_plan},
                 {"best_speedup", result.best_reward},
                 {"best_seconds", result.best_seconds},
                 {"best_episode", result.best_episode},
                 {"episodes_run", result.episodes_run},
                 {"episodes_done", agent.episodes_done()},
                 {"truncated", result.truncated},
                 {"gate_opened", result.gate_opened},
                 {"real_evals", result.real_evals},
                 {"cache_hits", result.cache_hits},
                 {"imagined", result.imagined},
                 {"baseline_seconds", env->baseline_seconds()}};
  std::cout << out.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-interleaved sparse tensor encoding toolkit"};
  app.require_subcommand(1);
  app.failure_message(
      [](const CLI::App*, const CLI::Error& e) { return "error: " + one_line(e.what()) + "\n"; });

  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect", "Describe a tensor file and its plan space");
  inspect->add_option("path", inspect_path, "FROSTT-style .tns file")->required();

  std::string bench_path, bench_plan, bench_compare;
  bool bench_alto = false;
  BenchFlags bench_flags;
  CLI::App* bench = app.add_subcommand("bench", "Time one interleaving on a tensor");
  bench->add_option("path", bench_path, "FROSTT-style .tns file")->required();
  bench->add_option("--plan", bench_plan, "Interleaving, one-based modes, e.g. 3,1,2,1,2,2");
  bench->add_flag("--alto", bench_alto, "Use the expert default interleaving");
  bench->add_option("--compare", bench_compare, "Second plan; prints speedup = its time / the first plan's time");
  add_bench_flags(bench, bench_flags);

  std::string eval_path, eval_plan;
  BenchFlags eval_flags;
  CLI::App* eval = app.add_subcommand("eval", "Compare a learned plan against the expert default");
  eval->add_option("path", eval_path, "FROSTT-style .tns file")->required();
  eval->add_option("--plan", eval_plan, "Learned interleaving to evaluate")->required();
  add_bench_flags(eval, eval_flags);

  std::string serve_path, serve_host = "127.0.0.1";
  int serve_port = 7173;
  BenchFlags serve_flags;
  CLI::App* serve = app.add_subcommand("serve", "Serve plan evaluations for remote training");
  serve->add_option("path", serve_path, "FROSTT-style .tns file")->required();
  serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_port, "Port; 0 picks one")->capture_default_str();
  add_bench_flags(serve, serve_flags);

  TrainFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "Learn an interleaving for a tensor");
  train->add_option("path", train_flags.path, "FROSTT-style .tns file (local benchmarking)");
  train->add_option("--endpoint", train_flags.endpoint, "host:port of a serving instance");
  train->add_option("--synthetic", train_flags.synthetic,
                    "Bit budget, e.g. 2,3,1: train against a hidden-plan oracle");
  train->add_option("--hidden", train_flags.hidden, "Oracle plan for --synthetic (default: random)");
  train->add_option("--episodes", train_flags.episodes, "Episode budget")->capture_default_str();
  train->add_option("--hidden-scale", train_flags.hidden_scale, "Dense width multiplier")
      ->capture_default_str();
  train->add_option("--max-hours", train_flags.max_hours, "Wall-clock cap; 0 disables")
      ->capture_default_str();
  train->add_option("--checkpoint", train_flags.checkpoint,
                    "State file; loaded when present, saved on exit");
  train->add_option("--log", train_flags.log_path, "Per-episode records, one JSON document per line");
  train->add_option("--csv", train_flags.csv_path, "Per-episode plot data as CSV");
  add_bench_flags(train, train_flags.bench);

  try {
    app.parse(argc, argv);
    if (inspect->parsed()) cmd_inspect(inspect_path);
    if (bench->parsed()) cmd_bench(bench_path, bench_plan, bench_alto, bench_compare, bench_flags);
    if (eval->parsed()) cmd_eval(eval_path, eval_plan, eval_flags);
    if (serve->parsed()) cmd_serve(serve_path, serve_host, serve_port, serve_flags);
    if (train->parsed()) cmd_train(train_flags);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
