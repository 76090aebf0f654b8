#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <map>

#include "bitweave/bench.hpp"
#include "bitweave/mdp.hpp"

namespace bitweave {

/// One evaluation of a terminal plan, measured or replayed from the cache.
struct EvalRecord {
  double speedup = 0.0;
  double seconds = 0.0;   // candidate total seconds (synthetic scorers fake this)
  bool cached = false;
  bool timed_out = false;
};

/// Assigns a speedup to a terminal plan. Implementations own their notion of
/// a baseline; the contract is speedup = baseline_seconds / candidate seconds.
class PlanScorer {
 public:
  virtual ~PlanScorer() = default;
  virtual const BitBudget& budget() const = 0;
  virtual double baseline_seconds() const = 0;
  /// The exact plan the baseline figure was measured with.
  virtual const EncodingPlan& baseline_plan() const = 0;
  /// A timed-out run returns timed_out=true with speedup unset; the
  /// environment substitutes its floor.
  virtual EvalRecord score(const EncodingPlan& plan) = 0;
};

/// Times candidate plans on a real tensor against the expert default plan,
/// which is benchmarked once at construction. Candidates run under a wall
/// cap of `timeout_factor` times the baseline.
class BenchmarkScorer : public PlanScorer {
 public:
  BenchmarkScorer(SparseTensorCoo tensor, BenchConfig cfg, double timeout_factor = 5.0,
                  ClockFn clock = {});

  const BitBudget& budget() const override { return budget_; }
  double baseline_seconds() const override { return baseline_s_; }
  const EncodingPlan& baseline_plan() const override { return baseline_plan_; }
  EvalRecord score(const EncodingPlan& plan) override;

  const SparseTensorCoo& tensor() const { return tensor_; }
  const BenchConfig& config() const { return cfg_; }

 private:
  SparseTensorCoo tensor_;
  BenchConfig cfg_;
  ClockFn clock_;
  BitBudget budget_;
  EncodingPlan baseline_plan_;
  double timeout_factor_;
  double baseline_s_ = 0.0;        // sum of per-mode medians: the reward denominator
  double baseline_wall_s_ = 0.0;   // whole-run duration: what the timeout cap scales
};

/// Deterministic stand-in for hardware timing: speedup rises with the number
/// of positions where the plan agrees with a hidden target plan, reaching e
/// at a perfect match. Used for desk-scale agent validation.
class SyntheticScorer : public PlanScorer {
 public:
  SyntheticScorer(BitBudget budget, EncodingPlan hidden);

  const BitBudget& budget() const override { return budget_; }
  double baseline_seconds() const override { return 1.0; }
  const EncodingPlan& baseline_plan() const override { return baseline_plan_; }
  EvalRecord score(const EncodingPlan& plan) override;

  const EncodingPlan& hidden() const { return hidden_; }
  static int matches(const EncodingPlan& a, const EncodingPlan& b);

 private:
  BitBudget budget_;
  EncodingPlan hidden_;
  EncodingPlan baseline_plan_;
};

struct EnvCounters {
  std::size_t real_evals = 0;   // scorer invocations, including timeouts
  std::size_t cache_hits = 0;
  std::size_t timeouts = 0;
};

/// Serialized evaluation front end: consults the reward cache first, floors
/// timed-out runs at the worst speedup measured so far, and tracks counters.
/// Thread-safe; evaluations are strictly one at a time.
class Environment {
 public:
  explicit Environment(std::unique_ptr<PlanScorer> scorer);

  const BitBudget& budget() const { return scorer_->budget(); }
  double baseline_seconds() const { return scorer_->baseline_seconds(); }
  const EncodingPlan& baseline_plan() const { return scorer_->baseline_plan(); }

  EvalRecord evaluate(const EncodingPlan& plan);
  std::optional<EvalRecord> lookup(const EncodingPlan& plan) const;

  /// Worst real speedup observed so far; the reward for timed-out plans.
  double floor_reward() const;

  EnvCounters counters() const;

  /// Line-oriented "plan;speedup;seconds" records for warm restarts.
  void save_cache(const std::string& path) const;
  std::size_t load_cache(const std::string& path);

  PlanScorer& scorer() { return *scorer_; }

 private:
  double floor_locked(double elapsed_seconds) const;

  mutable std::mutex mu_;
  std::unique_ptr<PlanScorer> scorer_;
  std::map<std::string, EvalRecord> cache_;
  EnvCounters counters_;
  double worst_real_speedup_ = 0.0;   // 0 = none observed yet
};

}  // namespace bitweave
