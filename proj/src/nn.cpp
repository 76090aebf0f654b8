#include "bitweave/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "bitweave/tensor.hpp"

namespace bitweave {

std::size_t param_count(const std::vector<ParamBlock*>& blocks) {
  std::size_t n = 0;
  for (const ParamBlock* b : blocks) n += b->w.size();
  return n;
}

namespace {

std::pair<ParamBlock*, std::size_t> locate(const std::vector<ParamBlock*>& blocks,
                                           std::size_t idx) {
  for (ParamBlock* b : blocks) {
    if (idx < b->w.size()) return {b, idx};
    idx -= b->w.size();
  }
  throw std::logic_error("parameter index out of range");
}

// He-style uniform: +-sqrt(6 / fan_in).
void he_init(ParamBlock& block, std::size_t fan_in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& w : block.w) w = u(rng);
}

}  // namespace

double get_param(const std::vector<ParamBlock*>& blocks, std::size_t idx) {
  auto [b, i] = locate(blocks, idx);
  return b->w[i];
}

void set_param(const std::vector<ParamBlock*>& blocks, std::size_t idx, double v) {
  auto [b, i] = locate(blocks, idx);
  b->w[i] = v;
}

double get_grad(const std::vector<ParamBlock*>& blocks, std::size_t idx) {
  auto [b, i] = locate(blocks, idx);
  return b->g[i];
}

void zero_grads(const std::vector<ParamBlock*>& blocks) {
  for (ParamBlock* b : blocks) std::fill(b->g.begin(), b->g.end(), 0.0);
}

AdamOptimizer::AdamOptimizer(double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::attach(std::vector<ParamBlock*> blocks) {
  blocks_ = std::move(blocks);
  m_.clear();
  v_.clear();
  for (ParamBlock* b : blocks_) {
    m_.emplace_back(b->w.size(), 0.0);
    v_.emplace_back(b->w.size(), 0.0);
  }
  t_ = 0;
}

bool AdamOptimizer::step(double lr) {
  for (const ParamBlock* b : blocks_) {
    for (double g : b->g) {
      if (!std::isfinite(g)) {
        last_error_ = "non-finite gradient in block '" + b->name + "', step rejected";
        return false;
      }
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    ParamBlock& b = *blocks_[k];
    for (std::size_t i = 0; i < b.w.size(); ++i) {
      const double g = b.g[i];
      m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
      v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
      const double mhat = m_[k][i] / bc1;
      const double vhat = v_[k][i] / bc2;
      b.w[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
  last_error_.clear();
  return true;
}

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("checkpoint truncated");
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  write_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::vector<double>& v, std::size_t expect) {
  const std::uint64_t n = read_u64(in);
  if (n != expect) throw ParseError("checkpoint shape mismatch");
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw ParseError("checkpoint truncated");
}

void write_tag(std::ostream& out, const std::string& tag) {
  write_u64(out, tag.size());
  out.write(tag.data(), static_cast<std::streamsize>(tag.size()));
}

void expect_tag(std::istream& in, const std::string& tag) {
  const std::uint64_t n = read_u64(in);
  std::string got(n, '\0');
  in.read(got.data(), static_cast<std::streamsize>(n));
  if (!in || got != tag) throw ParseError("checkpoint tag mismatch: expected '" + tag + "'");
}

}  // namespace

void AdamOptimizer::save(std::ostream& out) const {
  write_tag(out, "adam");
  write_u64(out, t_);
  write_u64(out, m_.size());
  for (std::size_t k = 0; k < m_.size(); ++k) {
    write_doubles(out, m_[k]);
    write_doubles(out, v_[k]);
  }
}

void AdamOptimizer::load(std::istream& in) {
  expect_tag(in, "adam");
  t_ = read_u64(in);
  const std::uint64_t n = read_u64(in);
  if (n != m_.size()) throw ParseError("optimizer block count mismatch");
  for (std::size_t k = 0; k < m_.size(); ++k) {
    read_doubles(in, m_[k], m_[k].size());
    read_doubles(in, v_[k], v_[k].size());
  }
}

void save_blocks(std::ostream& out, const std::vector<const ParamBlock*>& blocks) {
  write_tag(out, "blocks");
  write_u64(out, blocks.size());
  for (const ParamBlock* b : blocks) {
    write_tag(out, b->name);
    write_doubles(out, b->w);
  }
}

void load_blocks(std::istream& in, const std::vector<ParamBlock*>& blocks) {
  expect_tag(in, "blocks");
  const std::uint64_t n = read_u64(in);
  if (n != blocks.size()) throw ParseError("checkpoint block count mismatch");
  for (ParamBlock* b : blocks) {
    expect_tag(in, b->name);
    read_doubles(in, b->w, b->w.size());
  }
}

void Conv3x3Layer::init(const std::string& name, int in_channels, int out_channels, int h, int w,
                        std::mt19937_64& rng) {
  in_ch = in_channels;
  out_ch = out_channels;
  height = h;
  width = w;
  weight.name = name + ".w";
  bias.name = name + ".b";
  weight.resize(static_cast<std::size_t>(out_ch) * in_ch * 9);
  bias.resize(static_cast<std::size_t>(out_ch));
  he_init(weight, static_cast<std::size_t>(in_ch) * 9, rng);
}

void Conv3x3Layer::forward(const double* in, double* out) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  in_cache.assign(in, in + static_cast<std::size_t>(in_ch) * plane);
  for (int o = 0; o < out_ch; ++o) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double acc = bias.w[o];
        for (int i = 0; i < in_ch; ++i) {
          const double* wk = &weight.w[(static_cast<std::size_t>(o) * in_ch + i) * 9];
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= height) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = x + dx;
              if (xx < 0 || xx >= width) continue;
              acc += wk[(dy + 1) * 3 + (dx + 1)] * in[i * plane + yy * width + xx];
            }
          }
        }
        out[o * plane + y * width + x] = acc;
      }
    }
  }
}

void Conv3x3Layer::backward(const double* dout, double* din) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  if (din) std::fill(din, din + static_cast<std::size_t>(in_ch) * plane, 0.0);
  for (int o = 0; o < out_ch; ++o) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double d = dout[o * plane + y * width + x];
        bias.g[o] += d;
        for (int i = 0; i < in_ch; ++i) {
          const std::size_t wbase = (static_cast<std::size_t>(o) * in_ch + i) * 9;
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= height) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = x + dx;
              if (xx < 0 || xx >= width) continue;
              const std::size_t in_idx = i * plane + yy * width + xx;
              weight.g[wbase + (dy + 1) * 3 + (dx + 1)] += d * in_cache[in_idx];
              if (din) din[in_idx] += d * weight.w[wbase + (dy + 1) * 3 + (dx + 1)];
            }
          }
        }
      }
    }
  }
}

void DenseLayer::init(const std::string& name, int in, int out, std::mt19937_64& rng) {
  in_dim = in;
  out_dim = out;
  weight.name = name + ".w";
  bias.name = name + ".b";
  weight.resize(static_cast<std::size_t>(out_dim) * in_dim);
  bias.resize(static_cast<std::size_t>(out_dim));
  he_init(weight, static_cast<std::size_t>(in_dim), rng);
}

void DenseLayer::forward(const double* in, double* out) {
  in_cache.assign(in, in + in_dim);
  for (int o = 0; o < out_dim; ++o) {
    const double* row = &weight.w[static_cast<std::size_t>(o) * in_dim];
    double acc = bias.w[o];
    for (int i = 0; i < in_dim; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void DenseLayer::backward(const double* dout, double* din) {
  if (din) std::fill(din, din + in_dim, 0.0);
  for (int o = 0; o < out_dim; ++o) {
    const double d = dout[o];
    bias.g[o] += d;
    const std::size_t base = static_cast<std::size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) {
      weight.g[base + i] += d * in_cache[i];
      if (din) din[i] += d * weight.w[base + i];
    }
  }
}

void ReluLayer::forward(const double* in, double* out, std::size_t n) {
  in_cache.assign(in, in + n);
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void ReluLayer::backward(const double* dout, double* din, std::size_t n) const {
  for (std::size_t i = 0; i < n; ++i) din[i] = in_cache[i] > 0.0 ? dout[i] : 0.0;
}

QNet::QNet(const NetConfig& cfg) : cfg_(cfg) {
  if (cfg_.n_modes < 1 || cfg_.n_bits < 1 || cfg_.hidden_scale < 1)
    throw DomainError("network needs positive mode count, bit count, and hidden scale");
  std::mt19937_64 rng(cfg_.seed);
  const int h = cfg_.n_modes;
  const int w = cfg_.n_bits;
  const int hidden = cfg_.hidden_scale * h * w;
  conv1_.init("conv1", 1, 16, h, w, rng);
  conv2_.init("conv2", 16, 32, h, w, rng);
  fc1_.init("fc1", 32 * h * w, hidden, rng);
  fc2_.init("fc2", hidden, cfg_.n_modes, rng);
  a1_.resize(conv1_.out_size());
  a2_.resize(conv1_.out_size());
  a3_.resize(conv2_.out_size());
  a4_.resize(conv2_.out_size());
  a5_.resize(static_cast<std::size_t>(hidden));
}

std::size_t QNet::state_size() const {
  return static_cast<std::size_t>(cfg_.n_modes) * cfg_.n_bits;
}

std::vector<double> QNet::forward(const std::vector<double>& state) {
  if (state.size() != state_size()) throw DomainError("state size mismatch");
  std::vector<double> out(static_cast<std::size_t>(cfg_.n_modes));
  std::vector<double> hidden(a5_.size());
  conv1_.forward(state.data(), a1_.data());
  relu1_.forward(a1_.data(), a2_.data(), a2_.size());
  conv2_.forward(a2_.data(), a3_.data());
  relu2_.forward(a3_.data(), a4_.data(), a4_.size());
  fc1_.forward(a4_.data(), a5_.data());
  relu3_.forward(a5_.data(), hidden.data(), hidden.size());
  fc2_.forward(hidden.data(), out.data());
  return out;
}

void QNet::backward(const std::vector<double>& dout) {
  if (dout.size() != static_cast<std::size_t>(cfg_.n_modes))
    throw DomainError("output gradient size mismatch");
  std::vector<double> d_hidden(a5_.size());
  std::vector<double> d_pre_hidden(a5_.size());
  std::vector<double> d_a4(a4_.size());
  std::vector<double> d_a3(a3_.size());
  std::vector<double> d_a2(a2_.size());
  std::vector<double> d_a1(a1_.size());
  fc2_.backward(dout.data(), d_hidden.data());
  relu3_.backward(d_hidden.data(), d_pre_hidden.data(), d_pre_hidden.size());
  fc1_.backward(d_pre_hidden.data(), d_a4.data());
  relu2_.backward(d_a4.data(), d_a3.data(), d_a3.size());
  conv2_.backward(d_a3.data(), d_a2.data());
  relu1_.backward(d_a2.data(), d_a1.data(), d_a1.size());
  conv1_.backward(d_a1.data(), nullptr);
}

std::vector<ParamBlock*> QNet::blocks() {
  return {&conv1_.weight, &conv1_.bias, &conv2_.weight, &conv2_.bias,
          &fc1_.weight,   &fc1_.bias,   &fc2_.weight,   &fc2_.bias};
}

std::vector<const ParamBlock*> QNet::blocks() const {
  return {&conv1_.weight, &conv1_.bias, &conv2_.weight, &conv2_.bias,
          &fc1_.weight,   &fc1_.bias,   &fc2_.weight,   &fc2_.bias};
}

void QNet::zero_grads() { bitweave::zero_grads(blocks()); }

void QNet::copy_params_from(const QNet& other) {
  auto dst = blocks();
  auto src = other.blocks();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k]->w = src[k]->w;
}

bool QNet::params_equal(const QNet& other) const {
  auto a = blocks();
  auto b = other.blocks();
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k]->w != b[k]->w) return false;
  return true;
}

void QNet::save(std::ostream& out) const { save_blocks(out, blocks()); }
void QNet::load(std::istream& in) { load_blocks(in, blocks()); }

RewardNet::RewardNet(const NetConfig& cfg) : cfg_(cfg) {
  if (cfg_.n_modes < 1 || cfg_.n_bits < 1 || cfg_.hidden_scale < 1)
    throw DomainError("network needs positive mode count, bit count, and hidden scale");
  std::mt19937_64 rng(cfg_.seed);
  const int in = cfg_.n_modes * cfg_.n_bits;
  const int hidden = cfg_.hidden_scale * in;
  fc1_.init("rm1", in, hidden, rng);
  fc2_.init("rm2", hidden, hidden, rng);
  fc3_.init("rm3", hidden, 1, rng);
  a1_.resize(static_cast<std::size_t>(hidden));
  a2_.resize(static_cast<std::size_t>(hidden));
  a3_.resize(static_cast<std::size_t>(hidden));
  a4_.resize(static_cast<std::size_t>(hidden));
}

std::size_t RewardNet::state_size() const {
  return static_cast<std::size_t>(cfg_.n_modes) * cfg_.n_bits;
}

double RewardNet::forward(const std::vector<double>& state) {
  if (state.size() != state_size()) throw DomainError("state size mismatch");
  double out = 0.0;
  fc1_.forward(state.data(), a1_.data());
  relu1_.forward(a1_.data(), a2_.data(), a2_.size());
  fc2_.forward(a2_.data(), a3_.data());
  relu2_.forward(a3_.data(), a4_.data(), a4_.size());
  fc3_.forward(a4_.data(), &out);
  return out;
}

void RewardNet::backward(double dout) {
  std::vector<double> d_a4(a4_.size());
  std::vector<double> d_a3(a3_.size());
  std::vector<double> d_a2(a2_.size());
  fc3_.backward(&dout, d_a4.data());
  relu2_.backward(d_a4.data(), d_a3.data(), d_a3.size());
  fc2_.backward(d_a3.data(), d_a2.data());
  std::vector<double> d_a1(a1_.size());
  relu1_.backward(d_a2.data(), d_a1.data(), d_a1.size());
  fc1_.backward(d_a1.data(), nullptr);
}

std::vector<ParamBlock*> RewardNet::blocks() {
  return {&fc1_.weight, &fc1_.bias, &fc2_.weight, &fc2_.bias, &fc3_.weight, &fc3_.bias};
}

std::vector<const ParamBlock*> RewardNet::blocks() const {
  return {&fc1_.weight, &fc1_.bias, &fc2_.weight, &fc2_.bias, &fc3_.weight, &fc3_.bias};
}

void RewardNet::zero_grads() { bitweave::zero_grads(blocks()); }

void RewardNet::save(std::ostream& out) const { save_blocks(out, blocks()); }
void RewardNet::load(std::istream& in) { load_blocks(in, blocks()); }

double gradient_check(const std::vector<ParamBlock*>& blocks,
                      const std::function<double(bool with_grad)>& loss, int probes,
                      std::mt19937_64& rng, double h) {
  loss(true);   // leaves analytic gradients in place
  const std::size_t n = param_count(blocks);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const std::size_t idx = rng() % n;
    const double analytic = get_grad(blocks, idx);
    const double saved = get_param(blocks, idx);
    set_param(blocks, idx, saved + h);
    const double up = loss(false);
    set_param(blocks, idx, saved - h);
    const double down = loss(false);
    set_param(blocks, idx, saved);
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace bitweave
