#include "bitweave/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bitweave {

namespace {

constexpr char kMagic[] = "BWAGENT1";

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u8(std::ostream& out, std::uint8_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_bytes(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("agent checkpoint truncated");
  return v;
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("agent checkpoint truncated");
  return v;
}

std::uint8_t read_u8(std::istream& in) {
  std::uint8_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("agent checkpoint truncated");
  return v;
}

std::string read_bytes(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw ParseError("agent checkpoint truncated");
  return s;
}

/// Nearest-rank upper quantile of an unsorted sample.
double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DomainError("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::min(std::max<std::size_t>(rank, 1), xs.size());
  return xs[rank - 1];
}

NetConfig net_config(const BitBudget& budget, int hidden_scale, std::uint64_t seed) {
  NetConfig cfg;
  cfg.n_modes = budget.n_modes();
  cfg.n_bits = budget.total();
  cfg.hidden_scale = hidden_scale;
  cfg.seed = seed;
  return cfg;
}

Hyperparameters validated(Hyperparameters hp) {
  hp.validate();
  return hp;
}

}  // namespace

void Hyperparameters::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in [0, 1]");
  if (replay_capacity == 0) throw DomainError("replay capacity must be positive");
  if (!(lr_start > 0.0) || !(lr_end > 0.0) || lr_end > lr_start)
    throw DomainError("learning rate must decay from a positive start to a positive floor");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
      !(epsilon_end >= 0.0 && epsilon_end <= 1.0) || epsilon_end > epsilon_start)
    throw DomainError("epsilon must decay within [0, 1]");
  if (!(decay_fraction > 0.0 && decay_fraction <= 1.0))
    throw DomainError("decay fraction must lie in (0, 1]");
  if (target_sync_every <= 0) throw DomainError("target sync period must be positive");
  if (max_episodes <= 0) throw DomainError("max episodes must be positive");
  if (!(per_alpha >= 0.0)) throw DomainError("priority exponent must be non-negative");
  if (!(per_beta_start >= 0.0) || per_beta_end < per_beta_start || per_beta_end > 1.0)
    throw DomainError("importance-weight anneal must rise toward at most 1");
  if (!(priority_eps > 0.0)) throw DomainError("priority epsilon must be positive");
  if (hidden_scale <= 0) throw DomainError("hidden scale must be positive");
  if (max_hours < 0.0) throw DomainError("wall cap must be non-negative");
  if (!(model_accuracy_threshold > 0.0 && model_accuracy_threshold <= 1.0))
    throw DomainError("model accuracy threshold must lie in (0, 1]");
  if (!(model_rel_err_tol > 0.0)) throw DomainError("model error tolerance must be positive");
  if (model_holdout <= 0) throw DomainError("model holdout must be positive");
  if (model_min_train <= 0) throw DomainError("model training minimum must be positive");
  if (!(margin_quantile > 0.0 && margin_quantile <= 1.0))
    throw DomainError("margin quantile must lie in (0, 1]");
  if (model_weight_decay < 0.0) throw DomainError("weight decay must be non-negative");
  if (!(model_lr > 0.0)) throw DomainError("model learning rate must be positive");
  if (model_initial_epochs <= 0 || model_refresh_epochs <= 0)
    throw DomainError("model epoch counts must be positive");
}

std::vector<double> shape_rewards(double terminal_reward, int length) {
  if (length <= 0) throw DomainError("shaping needs a positive episode length");
  if (!(terminal_reward > 0.0) || !std::isfinite(terminal_reward))
    throw DomainError("shaping needs a finite positive terminal reward");
  const double credit = std::log(terminal_reward) / static_cast<double>(length);
  return std::vector<double>(static_cast<std::size_t>(length), credit);
}

Agent::Agent(Environment& env, Hyperparameters hp)
    : env_(env),
      hp_(validated(std::move(hp))),
      policy_(net_config(env.budget(), hp_.hidden_scale, hp_.seed * 0x9E3779B97F4A7C15ULL + 1)),
      target_(net_config(env.budget(), hp_.hidden_scale, hp_.seed * 0x9E3779B97F4A7C15ULL + 1)),
      reward_(net_config(env.budget(), hp_.hidden_scale, hp_.seed * 0x9E3779B97F4A7C15ULL + 2)),
      replay_(hp_.replay_capacity, hp_.per_alpha, hp_.priority_eps),
      rng_(hp_.seed) {
  target_.copy_params_from(policy_);
  opt_.attach(policy_.blocks());
  model_opt_.attach(reward_.blocks());
}

double Agent::schedule(double start, double end, double span_episodes, int episode) const {
  if (span_episodes <= 0.0 || static_cast<double>(episode) >= span_episodes) return end;
  const double f = static_cast<double>(episode) / span_episodes;
  return start + (end - start) * f;
}

double Agent::epsilon_at(int episode) const {
  return schedule(hp_.epsilon_start, hp_.epsilon_end, hp_.decay_fraction * hp_.max_episodes,
                  episode);
}

double Agent::lr_at(int episode) const {
  return schedule(hp_.lr_start, hp_.lr_end, hp_.decay_fraction * hp_.max_episodes, episode);
}

double Agent::beta_at(int episode) const {
  return schedule(hp_.per_beta_start, hp_.per_beta_end, static_cast<double>(hp_.max_episodes),
                  episode);
}

int Agent::select_action(const PlanState& s, double epsilon) {
  const std::vector<int> acts = valid_actions(s);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng_) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
    return acts[pick(rng_)];
  }
  return greedy_action(s);
}

int Agent::greedy_action(const PlanState& s) {
  const std::vector<int> acts = valid_actions(s);
  const std::vector<double> q = policy_.forward(state_matrix(s));
  int best = acts.front();
  double best_q = q[static_cast<std::size_t>(best)];
  for (const int a : acts) {
    if (q[static_cast<std::size_t>(a)] > best_q) {
      best = a;
      best_q = q[static_cast<std::size_t>(a)];
    }
  }
  return best;
}

double Agent::predict_reward(const PlanState& terminal) {
  return std::exp(reward_.forward(state_matrix(terminal)));
}

double Agent::margin() const { return rel_margin_ * best_reward_; }

std::pair<double, RewardKind> Agent::resolve_terminal(const PlanState& terminal) {
  if (!terminal.terminal()) throw std::logic_error("resolve_terminal needs a finished plan");
  const EncodingPlan plan = terminal_plan(terminal);
  if (auto hit = env_.lookup(plan)) return {hit->speedup, RewardKind::Cached};
  if (gate_open_) {
    const double predicted = predict_reward(terminal);
    if (predicted < best_reward_ - margin()) {
      ++imagined_count_;
      return {predicted, RewardKind::Imagined};
    }
  }
  const EvalRecord rec = env_.evaluate(plan);
  observe_real(plan, rec.speedup);
  return {rec.speedup, RewardKind::Real};
}

void Agent::observe_real(const EncodingPlan& plan, double speedup) {
  if (!(speedup > 0.0) || !std::isfinite(speedup))
    throw DomainError("real rewards must be finite and positive");
  const std::string key = format_plan(plan);
  if (!seen_plans_.insert(key).second) return;
  dataset_.push_back({plan.picks, std::log(speedup)});
  refresh_model();
}

void Agent::fit_model(int epochs) {
  const std::size_t holdout = static_cast<std::size_t>(hp_.model_holdout);
  const std::size_t train_n = dataset_.size() - holdout;
  std::vector<std::vector<double>> feats(train_n);
  for (std::size_t i = 0; i < train_n; ++i)
    feats[i] = state_matrix(state_from_prefix(env_.budget(), dataset_[i].prefix));

  const auto blocks = reward_.blocks();
  for (int e = 0; e < epochs; ++e) {
    reward_.zero_grads();
    for (std::size_t i = 0; i < train_n; ++i) {
      const double pred = reward_.forward(feats[i]);
      reward_.backward(2.0 * (pred - dataset_[i].log_speedup) / static_cast<double>(train_n));
    }
    for (ParamBlock* b : blocks)
      for (std::size_t j = 0; j < b->w.size(); ++j) b->g[j] += hp_.model_weight_decay * b->w[j];
    model_opt_.step(hp_.model_lr);
  }
}

void Agent::score_holdout() {
  const std::size_t holdout = static_cast<std::size_t>(hp_.model_holdout);
  std::vector<double> rel_errs;
  rel_errs.reserve(holdout);
  std::size_t passed = 0;
  for (std::size_t i = dataset_.size() - holdout; i < dataset_.size(); ++i) {
    const double truth = std::exp(dataset_[i].log_speedup);
    const double pred =
        std::exp(reward_.forward(state_matrix(state_from_prefix(env_.budget(), dataset_[i].prefix))));
    const double rel = std::abs(pred - truth) / truth;
    rel_errs.push_back(rel);
    if (rel <= hp_.model_rel_err_tol) ++passed;
  }
  model_accuracy_ = static_cast<double>(passed) / static_cast<double>(holdout);
  rel_margin_ = quantile(rel_errs, hp_.margin_quantile);
  if (!gate_open_ && model_accuracy_ >= hp_.model_accuracy_threshold) gate_open_ = true;
}

void Agent::refresh_model() {
  const auto need = static_cast<std::size_t>(hp_.model_holdout + hp_.model_min_train);
  if (dataset_.size() < need) return;
  const int epochs = model_fitted_ ? hp_.model_refresh_epochs : hp_.model_initial_epochs;
  model_fitted_ = true;
  fit_model(epochs);
  score_holdout();
}

double Agent::td_target(const Transition& t) {
  if (t.terminal) return t.reward;
  PlanState next = state_from_prefix(env_.budget(), t.prefix);
  next = transition(next, t.action);
  const std::vector<int> acts = valid_actions(next);
  const std::vector<double> next_mat = state_matrix(next);
  const std::vector<double> q_policy = policy_.forward(next_mat);
  int chosen = acts.front();
  double chosen_q = q_policy[static_cast<std::size_t>(chosen)];
  for (const int a : acts) {
    if (q_policy[static_cast<std::size_t>(a)] > chosen_q) {
      chosen = a;
      chosen_q = q_policy[static_cast<std::size_t>(a)];
    }
  }
  const std::vector<double> q_target = target_.forward(next_mat);
  return t.reward + hp_.gamma * q_target[static_cast<std::size_t>(chosen)];
}

TrainStepResult Agent::train_on_batch(const std::vector<const Transition*>& batch,
                                      const std::vector<double>& weights, double lr,
                                      std::vector<double>* td_abs_out) {
  if (batch.empty() || batch.size() != weights.size())
    throw std::logic_error("batch and weight lists must match and be non-empty");
  const auto b = static_cast<double>(batch.size());

  // Targets first: the policy net's activation cache is reused per sample,
  // so the argmax pass on the successor must not interleave with backward.
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) targets[i] = td_target(*batch[i]);

  policy_.zero_grads();
  double loss = 0.0;
  std::vector<double> td_abs(batch.size(), 0.0);
  std::vector<double> dout(static_cast<std::size_t>(policy_.n_actions()), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    const std::vector<double> q =
        policy_.forward(state_matrix(state_from_prefix(env_.budget(), t.prefix)));
    const double delta = q[t.action] - targets[i];
    td_abs[i] = std::abs(delta);
    loss += weights[i] * delta * delta / b;
    std::fill(dout.begin(), dout.end(), 0.0);
    dout[t.action] = 2.0 * weights[i] * delta / b;
    policy_.backward(dout);
  }
  if (td_abs_out) *td_abs_out = std::move(td_abs);

  TrainStepResult res;
  res.loss = loss;
  if (!std::isfinite(loss)) {
    res.note = "loss is not finite; step rejected";
    return res;
  }
  res.applied = opt_.step(lr);
  if (!res.applied) res.note = opt_.last_error();
  return res;
}

TrainStepResult Agent::train_step(int episode) {
  const auto batch_size = static_cast<std::size_t>(minibatch());
  if (replay_.size() < batch_size) {
    TrainStepResult res;
    res.note = "replay below one minibatch";
    return res;
  }
  const auto samples = replay_.sample(batch_size, beta_at(episode), rng_);
  std::vector<const Transition*> batch(samples.size());
  std::vector<double> weights(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    batch[i] = samples[i].t;
    weights[i] = samples[i].weight;
  }
  std::vector<double> td_abs;
  TrainStepResult res = train_on_batch(batch, weights, lr_at(episode), &td_abs);
  if (std::isfinite(res.loss)) {
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (std::isfinite(td_abs[i])) replay_.update_priority(samples[i].index, td_abs[i]);
  }
  return res;
}

void Agent::sync_target() { target_.copy_params_from(policy_); }

void Agent::set_episode_budget(int max_episodes) {
  if (max_episodes <= 0 || max_episodes < episodes_done_)
    throw DomainError("episode budget must be positive and at least the episodes already run");
  hp_.max_episodes = max_episodes;
}

void Agent::set_wall_cap(double hours) {
  if (!(hours >= 0.0)) throw DomainError("wall cap must be non-negative");
  hp_.max_hours = hours;
}

TrainResult Agent::run(const std::function<void(const EpisodeStats&)>& on_episode, ClockFn clock) {
  if (!clock) clock = steady_clock_fn();
  const double start_wall = clock();
  const int length = minibatch();

  TrainResult result;
  result.best_plan = best_plan_;
  result.best_reward = best_reward_;
  result.best_seconds = best_seconds_;
  result.best_episode = best_episode_;

  while (episodes_done_ < hp_.max_episodes) {
    const int ep = episodes_done_;
    const double eps = epsilon_at(ep);

    const EncodingPlan* forced = nullptr;
    if (ep == 0) forced = &env_.baseline_plan();

    PlanState s = initial_state(env_.budget());
    std::vector<std::pair<std::vector<std::uint8_t>, std::uint8_t>> steps;
    steps.reserve(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
      const int a = forced ? static_cast<int>(forced->picks[static_cast<std::size_t>(t)])
                           : select_action(s, eps);
      steps.emplace_back(s.prefix, static_cast<std::uint8_t>(a));
      s = transition(s, a);
    }

    const auto [terminal_reward, kind] = resolve_terminal(s);
    const std::vector<double> credits = shape_rewards(terminal_reward, length);
    for (int t = 0; t < length; ++t) {
      Transition tr;
      tr.prefix = std::move(steps[static_cast<std::size_t>(t)].first);
      tr.action = steps[static_cast<std::size_t>(t)].second;
      tr.reward = credits[static_cast<std::size_t>(t)];
      tr.terminal = (t == length - 1);
      tr.imagined = (kind == RewardKind::Imagined);
      replay_.push(std::move(tr));
    }

    double last_loss = 0.0;
    for (int t = 0; t < length; ++t) {
      const TrainStepResult tr = train_step(ep);
      if (tr.applied) last_loss = tr.loss;
    }

    if (kind != RewardKind::Imagined && terminal_reward > best_reward_) {
      best_reward_ = terminal_reward;
      best_plan_ = format_plan(terminal_plan(s));
      best_episode_ = ep;
      if (auto rec = env_.lookup(terminal_plan(s))) best_seconds_ = rec->seconds;
    }

    ++episodes_done_;
    ++result.episodes_run;
    if (episodes_done_ % hp_.target_sync_every == 0) sync_target();

    if (on_episode) {
      EpisodeStats stats;
      stats.episode = ep;
      stats.epsilon = eps;
      stats.lr = lr_at(ep);
      stats.beta = beta_at(ep);
      stats.plan = format_plan(terminal_plan(s));
      stats.terminal_reward = terminal_reward;
      stats.kind = kind;
      stats.last_loss = last_loss;
      stats.best_plan = best_plan_;
      stats.best_reward = best_reward_;
      stats.gate_open = gate_open_;
      stats.model_accuracy = model_accuracy_;
      stats.margin = margin();
      const EnvCounters counters = env_.counters();
      stats.real_evals = counters.real_evals;
      stats.cache_hits = counters.cache_hits;
      stats.imagined = imagined_count_;
      on_episode(stats);
    }

    if (hp_.max_hours > 0.0 && clock() - start_wall >= hp_.max_hours * 3600.0 &&
        episodes_done_ < hp_.max_episodes) {
      result.truncated = true;
      break;
    }
  }

  result.best_plan = best_plan_;
  result.best_reward = best_reward_;
  result.best_seconds = best_seconds_;
  result.best_episode = best_episode_;
  result.gate_opened = gate_open_;
  const EnvCounters counters = env_.counters();
  result.real_evals = counters.real_evals;
  result.cache_hits = counters.cache_hits;
  result.imagined = imagined_count_;
  return result;
}

void Agent::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic - 1);

  const BitBudget& budget = env_.budget();
  write_u64(out, static_cast<std::uint64_t>(budget.n_modes()));
  for (const int bits : budget.per_mode) write_u64(out, static_cast<std::uint64_t>(bits));

  write_f64(out, hp_.gamma);
  write_u64(out, hp_.replay_capacity);
  write_f64(out, hp_.lr_start);
  write_f64(out, hp_.lr_end);
  write_f64(out, hp_.epsilon_start);
  write_f64(out, hp_.epsilon_end);
  write_f64(out, hp_.decay_fraction);
  write_u64(out, static_cast<std::uint64_t>(hp_.target_sync_every));
  write_u64(out, static_cast<std::uint64_t>(hp_.max_episodes));
  write_f64(out, hp_.per_alpha);
  write_f64(out, hp_.per_beta_start);
  write_f64(out, hp_.per_beta_end);
  write_f64(out, hp_.priority_eps);
  write_u64(out, static_cast<std::uint64_t>(hp_.hidden_scale));
  write_u64(out, hp_.seed);
  write_f64(out, hp_.max_hours);
  write_f64(out, hp_.model_accuracy_threshold);
  write_f64(out, hp_.model_rel_err_tol);
  write_u64(out, static_cast<std::uint64_t>(hp_.model_holdout));
  write_u64(out, static_cast<std::uint64_t>(hp_.model_min_train));
  write_f64(out, hp_.margin_quantile);
  write_f64(out, hp_.model_weight_decay);
  write_f64(out, hp_.model_lr);
  write_u64(out, static_cast<std::uint64_t>(hp_.model_initial_epochs));
  write_u64(out, static_cast<std::uint64_t>(hp_.model_refresh_epochs));

  write_u64(out, static_cast<std::uint64_t>(episodes_done_));
  write_u64(out, imagined_count_);
  write_bytes(out, best_plan_);
  write_f64(out, best_reward_);
  write_f64(out, best_seconds_);
  write_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(best_episode_)));
  write_u8(out, gate_open_ ? 1 : 0);
  write_u8(out, model_fitted_ ? 1 : 0);
  write_f64(out, model_accuracy_);
  write_f64(out, rel_margin_);

  policy_.save(out);
  target_.save(out);
  reward_.save(out);
  opt_.save(out);
  model_opt_.save(out);

  std::ostringstream rng_text;
  rng_text << rng_;
  write_bytes(out, rng_text.str());

  write_u64(out, dataset_.size());
  for (const ModelSample& s : dataset_) {
    write_bytes(out, std::string(s.prefix.begin(), s.prefix.end()));
    write_f64(out, s.log_speedup);
  }

  replay_.save(out);

  if (!out) throw ParseError("agent checkpoint write failed");
}

void Agent::load(std::istream& in) {
  char magic[sizeof kMagic - 1];
  in.read(magic, sizeof magic);
  if (!in || std::string(magic, sizeof magic) != kMagic)
    throw ParseError("not an agent checkpoint");

  const BitBudget& budget = env_.budget();
  const auto n_modes = read_u64(in);
  if (n_modes != static_cast<std::uint64_t>(budget.n_modes()))
    throw ParseError("checkpoint mode count does not match the environment");
  for (const int bits : budget.per_mode)
    if (read_u64(in) != static_cast<std::uint64_t>(bits))
      throw ParseError("checkpoint bit budget does not match the environment");

  Hyperparameters hp;
  hp.gamma = read_f64(in);
  hp.replay_capacity = read_u64(in);
  hp.lr_start = read_f64(in);
  hp.lr_end = read_f64(in);
  hp.epsilon_start = read_f64(in);
  hp.epsilon_end = read_f64(in);
  hp.decay_fraction = read_f64(in);
  hp.target_sync_every = static_cast<int>(read_u64(in));
  hp.max_episodes = static_cast<int>(read_u64(in));
  hp.per_alpha = read_f64(in);
  hp.per_beta_start = read_f64(in);
  hp.per_beta_end = read_f64(in);
  hp.priority_eps = read_f64(in);
  hp.hidden_scale = static_cast<int>(read_u64(in));
  hp.seed = read_u64(in);
  hp.max_hours = read_f64(in);
  hp.model_accuracy_threshold = read_f64(in);
  hp.model_rel_err_tol = read_f64(in);
  hp.model_holdout = static_cast<int>(read_u64(in));
  hp.model_min_train = static_cast<int>(read_u64(in));
  hp.margin_quantile = read_f64(in);
  hp.model_weight_decay = read_f64(in);
  hp.model_lr = read_f64(in);
  hp.model_initial_epochs = static_cast<int>(read_u64(in));
  hp.model_refresh_epochs = static_cast<int>(read_u64(in));
  hp.validate();
  if (hp.hidden_scale != hp_.hidden_scale)
    throw ParseError("checkpoint hidden scale does not match this agent");
  hp_ = hp;

  episodes_done_ = static_cast<int>(read_u64(in));
  imagined_count_ = read_u64(in);
  best_plan_ = read_bytes(in);
  best_reward_ = read_f64(in);
  best_seconds_ = read_f64(in);
  best_episode_ = static_cast<int>(static_cast<std::int64_t>(read_u64(in)));
  gate_open_ = read_u8(in) != 0;
  model_fitted_ = read_u8(in) != 0;
  model_accuracy_ = read_f64(in);
  rel_margin_ = read_f64(in);

  policy_.load(in);
  target_.load(in);
  reward_.load(in);
  opt_.load(in);
  model_opt_.load(in);

  std::istringstream rng_text(read_bytes(in));
  rng_text >> rng_;
  if (!rng_text) throw ParseError("agent checkpoint has a bad generator state");

  dataset_.clear();
  seen_plans_.clear();
  const std::uint64_t n_samples = read_u64(in);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    ModelSample s;
    const std::string prefix = read_bytes(in);
    s.prefix.assign(prefix.begin(), prefix.end());
    s.log_speedup = read_f64(in);
    seen_plans_.insert(format_plan(terminal_plan(state_from_prefix(env_.budget(), s.prefix))));
    dataset_.push_back(std::move(s));
  }

  replay_.load(in);
}

void Agent::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(path + ": cannot open for writing");
  save(out);
}

void Agent::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  load(in);
}

}  // namespace bitweave
