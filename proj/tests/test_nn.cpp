#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "bitweave/mdp.hpp"
#include "bitweave/nn.hpp"

using namespace bitweave;

namespace {

std::vector<double> random_state(int n_modes, int n_bits, std::mt19937_64& rng) {
  std::vector<double> s(static_cast<std::size_t>(n_modes) * n_bits, 0.0);
  for (double& v : s) v = (rng() & 1) ? 1.0 : 0.0;
  return s;
}

void zero_params(const std::vector<ParamBlock*>& blocks) {
  for (std::size_t i = 0; i < param_count(blocks); ++i) set_param(blocks, i, 0.0);
}

}  // namespace

TEST_CASE("zero weights give zero outputs of the right arity") {
  for (int n_modes : {3, 4}) {
    QNet net(NetConfig{n_modes, 6, 4, 1});
    zero_params(net.blocks());
    std::mt19937_64 rng(2);
    std::vector<double> q = net.forward(random_state(n_modes, 6, rng));
    REQUIRE(static_cast<int>(q.size()) == n_modes);
    for (double v : q) CHECK(v == 0.0);
  }
  RewardNet rm(NetConfig{3, 6, 4, 1});
  zero_params(rm.blocks());
  CHECK(rm.forward(std::vector<double>(18, 1.0)) == 0.0);
}

TEST_CASE("forward is deterministic and shape-checked") {
  QNet net(NetConfig{3, 6, 4, 7});
  std::mt19937_64 rng(3);
  std::vector<double> s = random_state(3, 6, rng);
  CHECK(net.forward(s) == net.forward(s));
  CHECK_THROWS_AS(net.forward(std::vector<double>(17, 0.0)), DomainError);

  QNet same(NetConfig{3, 6, 4, 7});
  QNet other(NetConfig{3, 6, 4, 8});
  CHECK(net.params_equal(same));
  CHECK_FALSE(net.params_equal(other));
}

TEST_CASE("hidden width follows the state-action size") {
  QNet narrow(NetConfig{3, 6, 4, 1});
  QNet wide(NetConfig{3, 8, 4, 1});
  // fc1 weight block: hidden x (32 * modes * bits).
  CHECK(narrow.blocks()[4]->w.size() == 72u * (32u * 18u));
  CHECK(wide.blocks()[4]->w.size() == 96u * (32u * 24u));
  CHECK(wide.blocks()[4]->w.size() > narrow.blocks()[4]->w.size());
  CHECK_THROWS_AS(QNet(NetConfig{0, 6, 4, 1}), DomainError);
}

TEST_CASE("first Adam step on a constant gradient moves by the learning rate") {
  ParamBlock p;
  p.name = "p";
  p.resize(1);
  p.w[0] = 5.0;
  AdamOptimizer opt;
  opt.attach({&p});

  p.g[0] = 1.0;
  REQUIRE(opt.step(0.25));
  CHECK(p.w[0] == doctest::Approx(5.0 - 0.25).epsilon(1e-6));

  // With no accumulated momentum, a zero gradient moves nothing.
  AdamOptimizer fresh;
  fresh.attach({&p});
  const double before = p.w[0];
  p.g[0] = 0.0;
  REQUIRE(fresh.step(0.25));
  CHECK(p.w[0] == before);
}

TEST_CASE("non-finite gradients reject the whole step") {
  ParamBlock p;
  p.name = "theta";
  p.resize(2);
  p.w = {1.0, 2.0};
  AdamOptimizer opt;
  opt.attach({&p});
  p.g = {0.5, std::nan("")};
  CHECK_FALSE(opt.step(0.1));
  CHECK(p.w == std::vector<double>{1.0, 2.0});
  CHECK(opt.steps() == 0);
  CHECK(opt.last_error().find("theta") != std::string::npos);

  p.g = {0.5, std::numeric_limits<double>::infinity()};
  CHECK_FALSE(opt.step(0.1));
  CHECK(opt.steps() == 0);
}

TEST_CASE("Adam drives a quadratic to its minimum") {
  ParamBlock p;
  p.name = "x";
  p.resize(1);
  p.w[0] = 10.0;
  AdamOptimizer opt;
  opt.attach({&p});
  for (int step = 0; step < 500; ++step) {
    p.g[0] = 2.0 * (p.w[0] - 3.0);
    REQUIRE(opt.step(0.1));
  }
  CHECK(std::abs(p.w[0] - 3.0) <= 1e-6);
}

TEST_CASE("action-value network passes finite-difference gradient checks") {
  NetConfig cfg{3, 6, 2, 12};
  QNet net(cfg);
  std::mt19937_64 rng(99);
  std::vector<double> state = random_state(3, 6, rng);
  std::vector<double> target = {0.3, -0.7, 1.1};

  auto loss = [&](bool with_grad) {
    if (with_grad) net.zero_grads();
    std::vector<double> q = net.forward(state);
    double l = 0.0;
    std::vector<double> dout(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      l += 0.5 * (q[i] - target[i]) * (q[i] - target[i]);
      dout[i] = q[i] - target[i];
    }
    if (with_grad) net.backward(dout);
    return l;
  };
  double worst = gradient_check(net.blocks(), loss, 100, rng);
  CHECK(worst <= 1e-4);
}

TEST_CASE("reward network passes finite-difference gradient checks") {
  NetConfig cfg{3, 6, 2, 21};
  RewardNet net(cfg);
  std::mt19937_64 rng(7);
  std::vector<double> state = random_state(3, 6, rng);

  auto loss = [&](bool with_grad) {
    if (with_grad) net.zero_grads();
    double pred = net.forward(state);
    double diff = pred - 0.42;
    if (with_grad) net.backward(diff);
    return 0.5 * diff * diff;
  };
  double worst = gradient_check(net.blocks(), loss, 100, rng);
  CHECK(worst <= 1e-4);
}

TEST_CASE("each layer passes a standalone gradient check") {
  std::mt19937_64 rng(4);

  Conv3x3Layer conv;
  conv.init("c", 2, 3, 4, 5, rng);
  std::vector<double> cin(2 * 4 * 5);
  for (double& v : cin) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  auto conv_loss = [&](bool with_grad) {
    if (with_grad) bitweave::zero_grads({&conv.weight, &conv.bias});
    std::vector<double> out(conv.out_size());
    conv.forward(cin.data(), out.data());
    double l = 0.0;
    for (double v : out) l += 0.5 * v * v;
    if (with_grad) conv.backward(out.data(), nullptr);
    return l;
  };
  CHECK(gradient_check({&conv.weight, &conv.bias}, conv_loss, 60, rng) <= 1e-4);

  DenseLayer fc;
  fc.init("d", 7, 4, rng);
  std::vector<double> din(7);
  for (double& v : din) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  auto fc_loss = [&](bool with_grad) {
    if (with_grad) bitweave::zero_grads({&fc.weight, &fc.bias});
    std::vector<double> out(4);
    fc.forward(din.data(), out.data());
    double l = 0.0;
    for (double v : out) l += 0.5 * v * v;
    if (with_grad) fc.backward(out.data(), nullptr);
    return l;
  };
  CHECK(gradient_check({&fc.weight, &fc.bias}, fc_loss, 40, rng) <= 1e-4);
}

TEST_CASE("checkpoints round-trip bitwise") {
  NetConfig cfg{3, 6, 4, 31};
  QNet net(cfg);
  std::ostringstream saved;
  net.save(saved);

  QNet other(NetConfig{3, 6, 4, 32});
  REQUIRE_FALSE(net.params_equal(other));
  std::istringstream in(saved.str());
  other.load(in);
  CHECK(net.params_equal(other));

  // Mismatched shapes are refused.
  QNet wrong(NetConfig{3, 8, 4, 31});
  std::istringstream in2(saved.str());
  CHECK_THROWS_AS(wrong.load(in2), ParseError);
  std::istringstream truncated(saved.str().substr(0, 40));
  CHECK_THROWS_AS(other.load(truncated), ParseError);
}

TEST_CASE("optimizer state restores for exact training resumption") {
  NetConfig cfg{2, 4, 2, 5};
  RewardNet net(cfg);
  AdamOptimizer opt;
  opt.attach(net.blocks());
  std::vector<double> state(8, 1.0);

  auto train_one = [&](RewardNet& n, AdamOptimizer& o) {
    n.zero_grads();
    double pred = n.forward(state);
    n.backward(pred - 2.0);
    REQUIRE(o.step(0.01));
  };
  for (int i = 0; i < 10; ++i) train_one(net, opt);

  std::ostringstream saved;
  net.save(saved);
  opt.save(saved);

  RewardNet resumed(cfg);
  AdamOptimizer opt2;
  opt2.attach(resumed.blocks());
  std::istringstream in(saved.str());
  resumed.load(in);
  opt2.load(in);
  CHECK(opt2.steps() == 10);

  for (int i = 0; i < 5; ++i) {
    train_one(net, opt);
    train_one(resumed, opt2);
  }
  auto a = net.blocks();
  auto b = resumed.blocks();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k]->w == b[k]->w);
}

TEST_CASE("reward network fits a linear synthetic target") {
  BitBudget budget{{2, 3, 1}};
  NetConfig cfg{3, 6, 4, 17};
  RewardNet net(cfg);
  AdamOptimizer opt;
  opt.attach(net.blocks());

  std::mt19937_64 rng(55);
  std::vector<double> coeffs(net.state_size());
  for (double& c : coeffs) c = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);

  std::vector<EncodingPlan> plans = enumerate_terminal_plans(budget);
  std::shuffle(plans.begin(), plans.end(), rng);
  plans.resize(50);
  std::vector<std::vector<double>> states;
  std::vector<double> targets;
  for (const EncodingPlan& p : plans) {
    states.push_back(state_matrix(state_from_prefix(budget, p.picks)));
    double t = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) t += coeffs[i] * states.back()[i];
    targets.push_back(t);
  }

  // Mild L2 pull toward small weights; without it an overparameterized ReLU
  // net interpolates the 40 train points but misses the linear structure.
  const double decay = 1e-3;
  const std::size_t train_n = 40;
  for (int epoch = 0; epoch < 4000; ++epoch) {
    const double lr = epoch < 2000 ? 3e-3 : 5e-4;
    net.zero_grads();
    for (std::size_t i = 0; i < train_n; ++i) {
      double pred = net.forward(states[i]);
      net.backward((pred - targets[i]) / static_cast<double>(train_n));
    }
    for (ParamBlock* b : net.blocks())
      for (std::size_t i = 0; i < b->w.size(); ++i) b->g[i] += decay * b->w[i];
    REQUIRE(opt.step(lr));
  }

  double rel_sum = 0.0;
  for (std::size_t i = train_n; i < states.size(); ++i) {
    double pred = net.forward(states[i]);
    rel_sum += std::abs(std::exp(pred) - std::exp(targets[i])) / std::exp(targets[i]);
  }
  CHECK(rel_sum / 10.0 <= 0.10);
}
