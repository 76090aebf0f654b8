#include "bitweave/mdp.hpp"

#include <stdexcept>
#include <string>

namespace bitweave {

namespace {

std::vector<int> picks_left(const PlanState& s) {
  std::vector<int> left = s.budget.per_mode;
  for (std::uint8_t m : s.prefix) --left[m];
  return left;
}

}  // namespace

PlanState initial_state(const BitBudget& budget) {
  if (budget.per_mode.empty()) throw std::logic_error("empty bit budget");
  return PlanState{budget, {}};
}

std::vector<int> valid_actions(const PlanState& s) {
  if (s.terminal()) throw std::logic_error("valid_actions on a terminal state");
  std::vector<int> left = picks_left(s);
  std::vector<int> out;
  for (std::size_t n = 0; n < left.size(); ++n)
    if (left[n] > 0) out.push_back(static_cast<int>(n));
  return out;
}

bool action_valid(const PlanState& s, int mode) {
  if (s.terminal() || mode < 0 || mode >= s.budget.n_modes()) return false;
  return picks_left(s)[mode] > 0;
}

PlanState transition(const PlanState& s, int mode) {
  if (!action_valid(s, mode))
    throw std::logic_error("transition with invalid action " + std::to_string(mode + 1));
  PlanState next = s;
  next.prefix.push_back(static_cast<std::uint8_t>(mode));
  return next;
}

EncodingPlan terminal_plan(const PlanState& s) {
  if (!s.terminal()) throw std::logic_error("terminal_plan on a non-terminal state");
  return EncodingPlan{s.prefix};
}

PlanState state_from_prefix(const BitBudget& budget, std::vector<std::uint8_t> prefix) {
  std::vector<int> left = budget.per_mode;
  for (std::uint8_t m : prefix) {
    if (m >= left.size() || left[m] == 0)
      throw std::logic_error("stored prefix violates the bit budget");
    --left[m];
  }
  return PlanState{budget, std::move(prefix)};
}

std::vector<double> state_matrix(const PlanState& s) {
  const std::size_t rows = s.budget.per_mode.size();
  const std::size_t cols = static_cast<std::size_t>(s.budget.total());
  std::vector<double> m(rows * cols, 0.0);
  for (std::size_t t = 0; t < s.prefix.size(); ++t) m[s.prefix[t] * cols + t] = 1.0;
  return m;
}

BigUint state_space_size(const BitBudget& budget) { return count_interleavings(budget); }

namespace {

void enumerate_rec(PlanState& s, std::vector<EncodingPlan>& out, std::size_t limit) {
  if (s.terminal()) {
    if (out.size() >= limit) throw DomainError("terminal plan enumeration exceeded its limit");
    out.push_back(terminal_plan(s));
    return;
  }
  for (int a : valid_actions(s)) {
    s.prefix.push_back(static_cast<std::uint8_t>(a));
    enumerate_rec(s, out, limit);
    s.prefix.pop_back();
  }
}

}  // namespace

std::vector<EncodingPlan> enumerate_terminal_plans(const BitBudget& budget, std::size_t limit) {
  std::vector<EncodingPlan> out;
  PlanState s = initial_state(budget);
  enumerate_rec(s, out, limit);
  return out;
}

}  // namespace bitweave
