#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roboevolve {

enum class ActionKind : std::uint8_t {
  Pick,
  Place,
  Push,
  StackOn,
  Wipe,
  Sweep,
  Fold,
  Zip,
  Open,
  Close,
  TurnKnob,
  ToggleSwitch,
  TurnLever,
};

inline constexpr std::size_t kActionKindCount = 13;

inline constexpr std::array<ActionKind, kActionKindCount> kAllActionKinds = {
    ActionKind::Pick,     ActionKind::Place,        ActionKind::Push,     ActionKind::StackOn,
    ActionKind::Wipe,     ActionKind::Sweep,        ActionKind::Fold,     ActionKind::Zip,
    ActionKind::Open,     ActionKind::Close,        ActionKind::TurnKnob, ActionKind::ToggleSwitch,
    ActionKind::TurnLever};

std::string_view to_string(ActionKind k);
std::optional<ActionKind> action_kind_from_string(std::string_view s);

// Number of arguments in the kind's signature, e.g. sweep(objs, tool, region) -> 3.
std::size_t arity(ActionKind k);

// Argument slot that names the object the action is aimed at. A wrong-target
// outcome substitutes this slot (place and stack_on aim at their destination).
std::size_t target_slot(ActionKind k);

struct AtomicAction {
  ActionKind kind = ActionKind::Pick;
  std::vector<std::string> args;

  // Every atomic action carries the same unit execution cost.
  static constexpr int cost = 1;

  // The manipulated object; always the first argument.
  const std::string& subject() const { return args.front(); }

  std::string clause() const;  // "<kind>(<arg>,<arg>)"
  auto operator<=>(const AtomicAction&) const = default;
};

AtomicAction make_action(ActionKind kind, std::vector<std::string> args);  // checks arity

// Parses one clause produced by AtomicAction::clause().
std::optional<AtomicAction> parse_clause(std::string_view clause);

struct Plan {
  std::vector<AtomicAction> actions;

  // Canonical goal: clauses joined by ';' in execution order.
  std::string goal_text() const;
  int difficulty() const;
  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  auto operator<=>(const Plan&) const = default;
};

std::optional<Plan> parse_goal_text(std::string_view text);

// Sum of unit action costs; throws Error(EmptyPlan) for an empty plan.
int difficulty_of(const Plan& plan);

}  // namespace roboevolve
