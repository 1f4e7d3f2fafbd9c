#include "roboevolve/action.hpp"

#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

constexpr std::array<std::string_view, kActionKindCount> kKindNames = {
    "pick", "place", "push",  "stack_on",  "wipe",          "sweep",     "fold",
    "zip",  "open",  "close", "turn_knob", "toggle_switch", "turn_lever"};

constexpr std::array<std::size_t, kActionKindCount> kArity = {1, 2, 2, 2, 2, 3, 1, 2, 1, 1, 2, 2, 2};
constexpr std::array<std::size_t, kActionKindCount> kTargetSlot = {0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0};

}  // namespace

std::string_view to_string(ActionKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<ActionKind> action_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<ActionKind>(i);
  return std::nullopt;
}

std::size_t arity(ActionKind k) { return kArity[static_cast<std::size_t>(k)]; }
std::size_t target_slot(ActionKind k) { return kTargetSlot[static_cast<std::size_t>(k)]; }

AtomicAction make_action(ActionKind kind, std::vector<std::string> args) {
  if (args.size() != arity(kind))
    throw Error(ErrorCode::SchemaViolation, std::string(to_string(kind)) + " expects " +
                                                std::to_string(arity(kind)) + " arguments");
  return AtomicAction{kind, std::move(args)};
}

std::string AtomicAction::clause() const {
  std::string out(to_string(kind));
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ',';
    out += args[i];
  }
  out += ')';
  return out;
}

std::optional<AtomicAction> parse_clause(std::string_view clause) {
  auto open = clause.find('(');
  if (open == std::string_view::npos || clause.empty() || clause.back() != ')') return std::nullopt;
  auto kind = action_kind_from_string(clause.substr(0, open));
  if (!kind) return std::nullopt;
  std::vector<std::string> args;
  std::string_view body = clause.substr(open + 1, clause.size() - open - 2);
  while (true) {
    auto comma = body.find(',');
    args.emplace_back(body.substr(0, comma));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  if (args.size() != arity(*kind)) return std::nullopt;
  for (const auto& a : args)
    if (a.empty()) return std::nullopt;
  return AtomicAction{*kind, std::move(args)};
}

std::string Plan::goal_text() const {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ';';
    out += actions[i].clause();
  }
  return out;
}

int Plan::difficulty() const {
  int d = 0;
  for (const auto& a : actions) d += a.cost;
  return d;
}

std::optional<Plan> parse_goal_text(std::string_view text) {
  Plan p;
  if (text.empty()) return p;
  while (true) {
    auto semi = text.find(';');
    auto a = parse_clause(text.substr(0, semi));
    if (!a) return std::nullopt;
    p.actions.push_back(std::move(*a));
    if (semi == std::string_view::npos) break;
    text.remove_prefix(semi + 1);
  }
  return p;
}

int difficulty_of(const Plan& plan) {
  if (plan.empty()) throw Error(ErrorCode::EmptyPlan, "difficulty of an empty plan");
  return plan.difficulty();
}

}  // namespace roboevolve
