#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace bitweave {

/// Binary sum tree over a fixed number of leaves; supports O(log n) priority
/// updates and sampling a leaf by cumulative mass.
class SumTree {
 public:
  explicit SumTree(std::size_t leaves);

  std::size_t leaves() const { return leaves_; }
  double total() const { return nodes_[1]; }
  double get(std::size_t leaf) const;
  void set(std::size_t leaf, double priority);
  /// Leaf whose cumulative priority range contains `mass` in [0, total).
  std::size_t find(double mass) const;

 private:
  std::size_t leaves_;
  std::size_t base_;               // first leaf slot, a power of two
  std::vector<double> nodes_;
};

/// One agent step, stored compactly: the state is the pick prefix and the
/// successor is prefix + action. Rewards arrive already shaped.
struct Transition {
  std::vector<std::uint8_t> prefix;
  std::uint8_t action = 0;
  double reward = 0.0;
  bool terminal = false;
  bool imagined = false;
};

/// Proportional prioritized ring buffer: sampling probability follows
/// priority^alpha, importance weights anneal with beta, and fresh
/// transitions enter at the running maximum priority so they are seen.
class PrioritizedReplay {
 public:
  PrioritizedReplay(std::size_t capacity, double alpha = 0.6, double priority_eps = 1e-6);

  std::size_t size() const { return full_ ? capacity_ : next_; }
  std::size_t capacity() const { return capacity_; }

  void push(Transition t);

  struct Sample {
    std::size_t index = 0;
    double weight = 1.0;   // importance weight, normalized to max 1 in batch
    const Transition* t = nullptr;
  };
  /// Stratified proportional draw of n transitions (with replacement).
  std::vector<Sample> sample(std::size_t n, double beta, std::mt19937_64& rng) const;

  void update_priority(std::size_t index, double td_abs);
  double priority(std::size_t index) const { return tree_.get(index); }

  const Transition& at(std::size_t index) const { return store_[index]; }

  /// Bitwise state roundtrip: ring contents, cursor, and raw priorities.
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::size_t capacity_;
  double alpha_, priority_eps_;
  std::vector<Transition> store_;
  std::size_t next_ = 0;
  bool full_ = false;
  SumTree tree_;
  double max_priority_ = 1.0;   // of raw |td|+eps, before the alpha exponent
};

}  // namespace bitweave
