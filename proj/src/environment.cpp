#include "bitweave/environment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bitweave {

namespace {

constexpr double kMinSeconds = 1e-12;   // guards ratios when timings underflow

}  // namespace

BenchmarkScorer::BenchmarkScorer(SparseTensorCoo tensor, BenchConfig cfg, double timeout_factor,
                                 ClockFn clock)
    : tensor_(std::move(tensor)),
      cfg_(cfg),
      clock_(std::move(clock)),
      budget_(bit_budget(tensor_.dims)),
      baseline_plan_(alto_default_plan(tensor_.dims)),
      timeout_factor_(timeout_factor) {
  cfg_.validate();
  if (timeout_factor_ < 0.0) throw DomainError("timeout factor must be non-negative");
  BenchConfig base_cfg = cfg_;
  base_cfg.timeout_seconds = 0.0;   // the baseline defines the budget, it gets no cap
  BenchResult base = benchmark(tensor_, baseline_plan_, base_cfg, clock_);
  baseline_s_ = std::max(base.total_s, kMinSeconds);
  baseline_wall_s_ = std::max(base.wall_s, baseline_s_);
}

EvalRecord BenchmarkScorer::score(const EncodingPlan& plan) {
  require_valid_plan(plan, budget_);
  BenchConfig run_cfg = cfg_;
  if (timeout_factor_ > 0.0) run_cfg.timeout_seconds = timeout_factor_ * baseline_wall_s_;
  EvalRecord rec;
  try {
    BenchResult r = benchmark(tensor_, plan, run_cfg, clock_);
    rec.seconds = std::max(r.total_s, kMinSeconds);
    rec.speedup = baseline_s_ / rec.seconds;
  } catch (const BenchTimeoutError& e) {
    rec.seconds = e.elapsed_s;
    rec.timed_out = true;
  }
  return rec;
}

SyntheticScorer::SyntheticScorer(BitBudget budget, EncodingPlan hidden)
    : budget_(std::move(budget)),
      hidden_(std::move(hidden)),
      baseline_plan_(alto_default_plan(budget_)) {
  require_valid_plan(hidden_, budget_);
}

int SyntheticScorer::matches(const EncodingPlan& a, const EncodingPlan& b) {
  int m = 0;
  const std::size_t len = std::min(a.picks.size(), b.picks.size());
  for (std::size_t t = 0; t < len; ++t)
    if (a.picks[t] == b.picks[t]) ++m;
  return m;
}

EvalRecord SyntheticScorer::score(const EncodingPlan& plan) {
  require_valid_plan(plan, budget_);
  EvalRecord rec;
  rec.speedup = std::exp(static_cast<double>(matches(plan, hidden_)) / budget_.total());
  rec.seconds = 1.0 / rec.speedup;
  return rec;
}

Environment::Environment(std::unique_ptr<PlanScorer> scorer) : scorer_(std::move(scorer)) {
  if (!scorer_) throw DomainError("environment needs a scorer");
}

double Environment::floor_locked(double elapsed_seconds) const {
  if (worst_real_speedup_ > 0.0) return worst_real_speedup_;
  // Nothing measured yet: bound the reward by the ratio at the cutoff point.
  const double base = std::max(scorer_->baseline_seconds(), kMinSeconds);
  if (elapsed_seconds > 0.0) return base / elapsed_seconds;
  return 0.1;
}

EvalRecord Environment::evaluate(const EncodingPlan& plan) {
  std::lock_guard<std::mutex> lock(mu_);
  require_valid_plan(plan, scorer_->budget());
  const std::string key = format_plan(plan);
  if (auto it = cache_.find(key); it != cache_.end()) {
    ++counters_.cache_hits;
    EvalRecord rec = it->second;
    rec.cached = true;
    return rec;
  }

  EvalRecord rec = scorer_->score(plan);
  ++counters_.real_evals;
  if (rec.timed_out) {
    ++counters_.timeouts;
    rec.speedup = floor_locked(rec.seconds);
  } else {
    worst_real_speedup_ = worst_real_speedup_ > 0.0
                              ? std::min(worst_real_speedup_, rec.speedup)
                              : rec.speedup;
  }
  rec.cached = false;
  cache_[key] = rec;
  return rec;
}

std::optional<EvalRecord> Environment::lookup(const EncodingPlan& plan) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(format_plan(plan));
  if (it == cache_.end()) return std::nullopt;
  EvalRecord rec = it->second;
  rec.cached = true;
  return rec;
}

double Environment::floor_reward() const {
  std::lock_guard<std::mutex> lock(mu_);
  return floor_locked(0.0);
}

EnvCounters Environment::counters() const {
  std::lock_guard<std::mutex> lock(mu_);
  return counters_;
}

void Environment::save_cache(const std::string& path) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out.precision(17);
  for (const auto& [key, rec] : cache_) out << key << ';' << rec.speedup << ';' << rec.seconds
                                            << '\n';
}

std::size_t Environment::load_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::lock_guard<std::mutex> lock(mu_);
  std::string line;
  std::size_t line_no = 0;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string plan_text, speedup_text, seconds_text;
    if (!std::getline(ls, plan_text, ';') || !std::getline(ls, speedup_text, ';') ||
        !std::getline(ls, seconds_text))
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected plan;speedup;seconds");
    EncodingPlan plan = parse_plan(plan_text);
    require_valid_plan(plan, scorer_->budget());
    EvalRecord rec;
    try {
      rec.speedup = std::stod(speedup_text);
      rec.seconds = std::stod(seconds_text);
    } catch (const std::logic_error&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric field");
    }
    if (!(rec.speedup > 0.0))
      throw ParseError(path + ":" + std::to_string(line_no) + ": speedup must be positive");
    cache_[format_plan(plan)] = rec;
    worst_real_speedup_ = worst_real_speedup_ > 0.0 ? std::min(worst_real_speedup_, rec.speedup)
                                                    : rec.speedup;
    ++loaded;
  }
  return loaded;
}

}  // namespace bitweave
