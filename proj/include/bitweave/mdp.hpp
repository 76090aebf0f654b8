#pragma once

#include <cstddef>
#include <vector>

#include "bitweave/encoding.hpp"

namespace bitweave {

/// Partially built interleaving: one mode pick per assigned linear bit.
/// The matrix view has one row per mode and one column per linear bit; after
/// t steps columns 0..t-1 each hold exactly one hot cell and the rest none.
struct PlanState {
  BitBudget budget;
  std::vector<std::uint8_t> prefix;

  int filled() const { return static_cast<int>(prefix.size()); }
  bool terminal() const { return filled() == budget.total(); }
  bool operator==(const PlanState&) const = default;
};

PlanState initial_state(const BitBudget& budget);

/// Modes whose bit budget is not yet exhausted, ascending.
/// Calling this on a terminal state is a caller bug.
std::vector<int> valid_actions(const PlanState& s);
bool action_valid(const PlanState& s, int mode);

/// Appends the pick for the next linear bit. Invalid actions are contract
/// violations: masking upstream must prevent them.
PlanState transition(const PlanState& s, int mode);

EncodingPlan terminal_plan(const PlanState& s);

/// Rebuilds a state from a stored prefix, validating it against the budget.
PlanState state_from_prefix(const BitBudget& budget, std::vector<std::uint8_t> prefix);

/// Row-major n_modes x total-bits one-hot rendering (the network input).
std::vector<double> state_matrix(const PlanState& s);

/// Number of reachable terminal states; same closed form as the plan count.
BigUint state_space_size(const BitBudget& budget);

/// Depth-first enumeration of every terminal plan reachable under masking.
/// Throws once more than `limit` plans are found.
std::vector<EncodingPlan> enumerate_terminal_plans(const BitBudget& budget,
                                                   std::size_t limit = 1u << 20);

}  // namespace bitweave
