#include "bitweave/replay.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace {

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("replay stream truncated");
  return v;
}

}  // namespace

namespace bitweave {

SumTree::SumTree(std::size_t leaves) : leaves_(leaves) {
  if (leaves == 0) throw std::logic_error("sum tree needs at least one leaf");
  base_ = 1;
  while (base_ < leaves) base_ <<= 1;
  nodes_.assign(2 * base_, 0.0);
}

double SumTree::get(std::size_t leaf) const {
  if (leaf >= leaves_) throw std::out_of_range("sum tree leaf out of range");
  return nodes_[base_ + leaf];
}

void SumTree::set(std::size_t leaf, double priority) {
  if (leaf >= leaves_) throw std::out_of_range("sum tree leaf out of range");
  if (!(priority >= 0.0) || !std::isfinite(priority))
    throw std::logic_error("sum tree priority must be finite and non-negative");
  std::size_t i = base_ + leaf;
  nodes_[i] = priority;
  for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

std::size_t SumTree::find(double mass) const {
  std::size_t i = 1;
  while (i < base_) {
    const double left = nodes_[2 * i];
    if (mass < left) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  std::size_t leaf = i - base_;
  // Rounding can land on a zero-priority slot at a segment edge; step back
  // to the nearest populated leaf.
  while (leaf > 0 && nodes_[base_ + leaf] == 0.0) --leaf;
  return std::min(leaf, leaves_ - 1);
}

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, double alpha, double priority_eps)
    : capacity_(capacity), alpha_(alpha), priority_eps_(priority_eps), tree_(capacity) {
  if (capacity == 0) throw std::logic_error("replay capacity must be positive");
  store_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

void PrioritizedReplay::push(Transition t) {
  if (next_ >= store_.size()) {
    store_.push_back(std::move(t));
  } else {
    store_[next_] = std::move(t);
  }
  tree_.set(next_, std::pow(max_priority_, alpha_));
  next_ = (next_ + 1) % capacity_;
  if (next_ == 0) full_ = true;
}

std::vector<PrioritizedReplay::Sample> PrioritizedReplay::sample(std::size_t n, double beta,
                                                                 std::mt19937_64& rng) const {
  const std::size_t count = size();
  if (count == 0 || n == 0) throw std::logic_error("replay sample from empty buffer");
  const double total = tree_.total();
  if (!(total > 0.0)) throw std::logic_error("replay priorities sum to zero");

  std::vector<Sample> out(n);
  const double segment = total / static_cast<double>(n);
  double max_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_real_distribution<double> dist(segment * static_cast<double>(i),
                                                segment * static_cast<double>(i + 1));
    const std::size_t idx = tree_.find(std::min(dist(rng), std::nexttoward(total, 0.0)));
    const double p = tree_.get(idx) / total;
    out[i].index = idx;
    out[i].t = &store_[idx];
    out[i].weight = std::pow(static_cast<double>(count) * p, -beta);
    max_w = std::max(max_w, out[i].weight);
  }
  if (max_w > 0.0) {
    for (auto& s : out) s.weight /= max_w;
  }
  return out;
}

void PrioritizedReplay::update_priority(std::size_t index, double td_abs) {
  if (index >= size()) throw std::out_of_range("replay priority index out of range");
  if (!std::isfinite(td_abs) || td_abs < 0.0)
    throw std::logic_error("replay priority must be finite and non-negative");
  const double raw = td_abs + priority_eps_;
  max_priority_ = std::max(max_priority_, raw);
  tree_.set(index, std::pow(raw, alpha_));
}

void PrioritizedReplay::save(std::ostream& out) const {
  put<std::uint64_t>(out, capacity_);
  put(out, alpha_);
  put(out, priority_eps_);
  put<std::uint64_t>(out, next_);
  put<std::uint8_t>(out, full_ ? 1 : 0);
  put(out, max_priority_);
  put<std::uint64_t>(out, size());
  for (std::size_t i = 0; i < size(); ++i) {
    const Transition& t = store_[i];
    put<std::uint64_t>(out, t.prefix.size());
    out.write(reinterpret_cast<const char*>(t.prefix.data()),
              static_cast<std::streamsize>(t.prefix.size()));
    put(out, t.action);
    put(out, t.reward);
    put<std::uint8_t>(out, t.terminal ? 1 : 0);
    put<std::uint8_t>(out, t.imagined ? 1 : 0);
    put(out, tree_.get(i));
  }
}

void PrioritizedReplay::load(std::istream& in) {
  const auto capacity = get<std::uint64_t>(in);
  if (capacity == 0) throw std::runtime_error("replay stream has zero capacity");
  capacity_ = capacity;
  alpha_ = get<double>(in);
  priority_eps_ = get<double>(in);
  const auto next = get<std::uint64_t>(in);
  const bool full = get<std::uint8_t>(in) != 0;
  const double max_priority = get<double>(in);
  const auto count = get<std::uint64_t>(in);
  if (count > capacity_ || next >= capacity_ || (full && count != capacity_) ||
      (!full && next != count))
    throw std::runtime_error("replay stream is inconsistent");

  store_.assign(count, Transition{});
  tree_ = SumTree(capacity_);
  for (std::uint64_t i = 0; i < count; ++i) {
    Transition& t = store_[i];
    const auto len = get<std::uint64_t>(in);
    t.prefix.resize(len);
    in.read(reinterpret_cast<char*>(t.prefix.data()), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("replay stream truncated");
    t.action = get<std::uint8_t>(in);
    t.reward = get<double>(in);
    t.terminal = get<std::uint8_t>(in) != 0;
    t.imagined = get<std::uint8_t>(in) != 0;
    tree_.set(i, get<double>(in));
  }
  next_ = next;
  full_ = full;
  max_priority_ = max_priority;
}

}  // namespace bitweave
