#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bitweave/environment.hpp"
#include "bitweave/nn.hpp"
#include "bitweave/replay.hpp"

namespace bitweave {

/// Training knobs. Defaults are the reference configuration; schedules are
/// linear in the episode index and clamp at their floors.
struct Hyperparameters {
  double gamma = 0.99;
  std::size_t replay_capacity = 1'000'000;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  double decay_fraction = 0.5;       // share of max_episodes the eps/lr ramps cover
  int target_sync_every = 100;       // episodes between hard target-net refreshes
  int max_episodes = 5000;

  double per_alpha = 0.6;            // priority exponent
  double per_beta_start = 0.4;       // importance-weight anneal, reaches 1 at the end
  double per_beta_end = 1.0;
  double priority_eps = 1e-6;

  int hidden_scale = 4;              // dense width multiplier for both networks
  std::uint64_t seed = 1;
  double max_hours = 0.0;            // wall-clock training cap; 0 means none

  // Reward-model gate: the agent starts predicting instead of measuring once
  // the model is accurate on the most recent real evaluations.
  double model_accuracy_threshold = 0.90;
  double model_rel_err_tol = 0.10;   // per-sample pass bar, on the speedup scale
  int model_holdout = 10;            // most recent real evals, excluded from training
  int model_min_train = 5;           // training examples required before gating is judged
  double margin_quantile = 0.95;     // of held-out relative errors
  double model_weight_decay = 1e-3;
  double model_lr = 3e-3;
  int model_initial_epochs = 600;    // first fit, once enough data exists
  int model_refresh_epochs = 60;     // warm-start fit after each new real eval

  void validate() const;
};

enum class RewardKind : std::uint8_t { Real, Cached, Imagined };

/// One line of the training log.
struct EpisodeStats {
  int episode = 0;
  double epsilon = 0.0;
  double lr = 0.0;
  double beta = 0.0;
  std::string plan;
  double terminal_reward = 0.0;
  RewardKind kind = RewardKind::Real;
  double last_loss = 0.0;
  std::string best_plan;
  double best_reward = 0.0;
  bool gate_open = false;
  double model_accuracy = 0.0;
  double margin = 0.0;
  std::size_t real_evals = 0;    // cumulative, including this episode
  std::size_t cache_hits = 0;
  std::size_t imagined = 0;
};

struct TrainResult {
  std::string best_plan;
  double best_reward = 0.0;
  double best_seconds = 0.0;
  int best_episode = -1;
  int episodes_run = 0;          // episodes executed by this call
  bool truncated = false;        // wall cap hit before max_episodes
  bool gate_opened = false;
  std::size_t real_evals = 0;
  std::size_t cache_hits = 0;
  std::size_t imagined = 0;
};

struct TrainStepResult {
  double loss = 0.0;
  bool applied = false;          // false: replay still cold, or the step was rejected
  std::string note;              // diagnostic for skips and rejections
};

/// Uniform credit: every one of the `length` steps receives
/// log(terminal_reward) / length, so the episode sum recovers the log.
std::vector<double> shape_rewards(double terminal_reward, int length);

/// Double-DQN plan learner over one environment: masked epsilon-greedy
/// rollouts, prioritized replay, and a reward-model gate that replaces
/// benchmark runs with predictions once the model has earned trust.
class Agent {
 public:
  Agent(Environment& env, Hyperparameters hp = {});

  const Hyperparameters& hyper() const { return hp_; }
  const BitBudget& budget() const { return env_.budget(); }
  int minibatch() const { return env_.budget().total(); }

  double epsilon_at(int episode) const;
  double lr_at(int episode) const;
  double beta_at(int episode) const;

  /// Masked epsilon-greedy draw; greedy ties break toward the lowest mode.
  int select_action(const PlanState& s, double epsilon);
  int greedy_action(const PlanState& s);

  /// Cache, then gate, then hardware: decides how a finished plan is scored.
  std::pair<double, RewardKind> resolve_terminal(const PlanState& terminal);

  /// Regression target for one stored step: shaped reward, plus the target
  /// net's value of the policy net's argmax when the successor is not final.
  double td_target(const Transition& t);

  /// One prioritized minibatch update; a no-op until the replay holds one.
  TrainStepResult train_step(int episode);
  /// Weighted double-DQN regression pass on an explicit batch.
  TrainStepResult train_on_batch(const std::vector<const Transition*>& batch,
                                 const std::vector<double>& weights, double lr,
                                 std::vector<double>* td_abs_out = nullptr);

  void sync_target();

  /// Reward-model bookkeeping; exposed so gate behavior is testable.
  void observe_real(const EncodingPlan& plan, double speedup);
  void refresh_model();
  bool gate_open() const { return gate_open_; }
  double model_accuracy() const { return model_accuracy_; }
  /// Prediction slack in reward units: quantile of held-out relative errors
  /// scaled by the best reward seen. Plans predicted above best - margin
  /// still get measured.
  double margin() const;
  double predict_reward(const PlanState& terminal);
  std::size_t model_samples() const { return dataset_.size(); }

  /// Runs episodes until max_episodes or the wall cap; resumes where a
  /// loaded checkpoint stopped. Episode 0 force-evaluates the expert plan.
  TrainResult run(const std::function<void(const EpisodeStats&)>& on_episode = {},
                  ClockFn clock = {});

  /// Raises the episode budget, e.g. to continue past a finished checkpoint.
  /// This stretches the annealing schedules, which are spans of the budget.
  void set_episode_budget(int max_episodes);

  /// Wall-clock cap for subsequent run() calls; 0 disables. Unlike the
  /// learning hyperparameters, the cap is per invocation, not checkpointed
  /// state a resume should inherit.
  void set_wall_cap(double hours);

  int episodes_done() const { return episodes_done_; }
  const std::string& best_plan() const { return best_plan_; }
  double best_reward() const { return best_reward_; }
  std::size_t imagined_count() const { return imagined_count_; }

  QNet& policy() { return policy_; }
  QNet& target() { return target_; }
  RewardNet& reward_model() { return reward_; }
  PrioritizedReplay& replay() { return replay_; }
  std::mt19937_64& rng() { return rng_; }

  void save(std::ostream& out) const;
  void load(std::istream& in);
  void save_file(const std::string& path) const;
  void load_file(const std::string& path);

 private:
  struct ModelSample {
    std::vector<std::uint8_t> prefix;
    double log_speedup = 0.0;
  };

  double schedule(double start, double end, double span_episodes, int episode) const;
  void fit_model(int epochs);
  void score_holdout();

  Environment& env_;
  Hyperparameters hp_;
  QNet policy_;
  QNet target_;
  RewardNet reward_;
  AdamOptimizer opt_;
  AdamOptimizer model_opt_;
  PrioritizedReplay replay_;
  std::mt19937_64 rng_;

  int episodes_done_ = 0;
  std::string best_plan_;
  double best_reward_ = 0.0;
  double best_seconds_ = 0.0;
  int best_episode_ = -1;
  std::size_t imagined_count_ = 0;

  std::vector<ModelSample> dataset_;
  std::set<std::string> seen_plans_;
  bool model_fitted_ = false;
  bool gate_open_ = false;
  double model_accuracy_ = 0.0;
  double rel_margin_ = 0.0;
};

}  // namespace bitweave
