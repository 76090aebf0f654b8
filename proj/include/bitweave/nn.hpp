#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace bitweave {

/// Named flat parameter buffer with its gradient accumulator.
struct ParamBlock {
  std::string name;
  std::vector<double> w;
  std::vector<double> g;

  void resize(std::size_t n) {
    w.assign(n, 0.0);
    g.assign(n, 0.0);
  }
};

/// Global-index access across a block list, for checkpoints and
/// finite-difference probes.
std::size_t param_count(const std::vector<ParamBlock*>& blocks);
double get_param(const std::vector<ParamBlock*>& blocks, std::size_t idx);
void set_param(const std::vector<ParamBlock*>& blocks, std::size_t idx, double v);
double get_grad(const std::vector<ParamBlock*>& blocks, std::size_t idx);
void zero_grads(const std::vector<ParamBlock*>& blocks);

/// Adam over a fixed block list. A step with any non-finite gradient is
/// rejected whole: parameters, moments, and the step counter stay untouched.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void attach(std::vector<ParamBlock*> blocks);
  bool step(double lr);
  std::uint64_t steps() const { return t_; }
  const std::string& last_error() const { return last_error_; }

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<ParamBlock*> blocks_;
  std::vector<std::vector<double>> m_, v_;
  std::string last_error_;
};

/// 3x3 convolution, stride 1, zero padding to the same spatial size.
/// Buffers are channel-major row-major: [channel][y][x].
struct Conv3x3Layer {
  int in_ch = 0, out_ch = 0, height = 0, width = 0;
  ParamBlock weight;   // [out][in][3][3]
  ParamBlock bias;     // [out]
  std::vector<double> in_cache;

  void init(const std::string& name, int in_channels, int out_channels, int h, int w,
            std::mt19937_64& rng);
  std::size_t out_size() const { return static_cast<std::size_t>(out_ch) * height * width; }
  void forward(const double* in, double* out);
  void backward(const double* dout, double* din);   // din may be null at the input layer
};

struct DenseLayer {
  int in_dim = 0, out_dim = 0;
  ParamBlock weight;   // out x in, row-major
  ParamBlock bias;
  std::vector<double> in_cache;

  void init(const std::string& name, int in, int out, std::mt19937_64& rng);
  void forward(const double* in, double* out);
  void backward(const double* dout, double* din);
};

struct ReluLayer {
  std::vector<double> in_cache;

  void forward(const double* in, double* out, std::size_t n);
  void backward(const double* dout, double* din, std::size_t n) const;
};

struct NetConfig {
  int n_modes = 0;
  int n_bits = 0;
  int hidden_scale = 4;   // hidden width = hidden_scale * n_modes * n_bits
  std::uint64_t seed = 1;
};

/// Action-value network over the one-channel state image: two 3x3
/// convolutions (16 then 32 maps), one hidden dense layer, and a linear
/// output of one value per mode.
class QNet {
 public:
  explicit QNet(const NetConfig& cfg);

  int n_actions() const { return cfg_.n_modes; }
  std::size_t state_size() const;
  const NetConfig& config() const { return cfg_; }

  /// Single-sample forward; caches activations for a following backward.
  std::vector<double> forward(const std::vector<double>& state);
  /// Accumulates parameter gradients from dL/d(output).
  void backward(const std::vector<double>& dout);

  std::vector<ParamBlock*> blocks();
  std::vector<const ParamBlock*> blocks() const;
  void zero_grads();
  void copy_params_from(const QNet& other);
  bool params_equal(const QNet& other) const;

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  NetConfig cfg_;
  Conv3x3Layer conv1_, conv2_;
  ReluLayer relu1_, relu2_, relu3_;
  DenseLayer fc1_, fc2_;
  std::vector<double> a1_, a2_, a3_, a4_, a5_;   // activation scratch
};

/// Scalar regressor over the flattened terminal state: two hidden dense
/// layers, linear output (it predicts the log of the speedup).
class RewardNet {
 public:
  explicit RewardNet(const NetConfig& cfg);

  std::size_t state_size() const;
  const NetConfig& config() const { return cfg_; }

  double forward(const std::vector<double>& state);
  void backward(double dout);

  std::vector<ParamBlock*> blocks();
  std::vector<const ParamBlock*> blocks() const;
  void zero_grads();

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  NetConfig cfg_;
  DenseLayer fc1_, fc2_, fc3_;
  ReluLayer relu1_, relu2_;
  std::vector<double> a1_, a2_, a3_, a4_;
};

/// Serialization helpers shared by the networks (shape-checked, bitwise).
void save_blocks(std::ostream& out, const std::vector<const ParamBlock*>& blocks);
void load_blocks(std::istream& in, const std::vector<ParamBlock*>& blocks);

/// Max relative error between analytic gradients and central finite
/// differences of `loss` over `probes` randomly chosen parameters.
/// `loss` must leave gradients for the probed parameters in place, i.e. it
/// runs zero_grads + forward + backward itself.
double gradient_check(const std::vector<ParamBlock*>& blocks,
                      const std::function<double(bool with_grad)>& loss, int probes,
                      std::mt19937_64& rng, double h = 1e-5);

}  // namespace bitweave
