#include "roboevolve/loop.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

using u64 = std::uint64_t;

u64 key(int v) { return static_cast<u64>(static_cast<std::int64_t>(v)); }

// Stable across platforms, unlike std::hash.
u64 fnv1a(std::string_view s) {
  u64 h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string kind_signature(const Plan& plan) {
  std::string sig;
  for (const auto& a : plan.actions) {
    if (!sig.empty()) sig += ';';
    sig += to_string(a.kind);
  }
  return sig;
}

using TaskGroups = std::map<std::string, std::vector<const TaskEntry*>>;

TaskGroups group_by_signature(const std::vector<TaskEntry>& tasks) {
  TaskGroups g;
  for (const auto& t : tasks) g[kind_signature(t.plan)].push_back(&t);
  return g;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Stratified draw without replacement: every pass visits each signature once
// in a seeded order; within a signature tasks cycle through seeded permutations.
const TaskEntry& draw_task(const TaskGroups& groups, u64 seed, int cycle, int iter) {
  const std::size_t s = groups.size();
  const std::size_t pass = static_cast<std::size_t>(iter) / s;
  std::vector<std::size_t> order(s);
  for (std::size_t i = 0; i < s; ++i) order[i] = i;
  Rng pass_rng = Rng::substream(seed, StreamTag::SimTask, {key(cycle), pass});
  shuffle(order, pass_rng);
  auto it = groups.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(order[static_cast<std::size_t>(iter) % s]));
  const auto& members = it->second;
  const std::size_t n = members.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng task_rng = Rng::substream(seed, StreamTag::SimTask, {key(cycle), fnv1a(it->first), pass / n});
  shuffle(perm, task_rng);
  return *members[perm[pass % n]];
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + where + k + "'");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("bad value for '") + name + "': " + e.what());
  }
}

nlohmann::json optim_to_json(const OptimConfig& o) {
  return {{"lr", o.lr},
          {"epochs", o.epochs},
          {"group_size", o.group_size},
          {"clip_eps", o.clip_eps},
          {"beta", o.beta},
          {"normalize_advantages", o.normalize_advantages},
          {"use_min_surrogate", o.use_min_surrogate}};
}

OptimConfig optim_from_json(const nlohmann::json& j, OptimConfig o, const std::string& where) {
  check_keys(j, {"lr", "epochs", "group_size", "clip_eps", "beta", "normalize_advantages", "use_min_surrogate"},
             where);
  read(j, "lr", o.lr);
  read(j, "epochs", o.epochs);
  read(j, "group_size", o.group_size);
  read(j, "clip_eps", o.clip_eps);
  read(j, "beta", o.beta);
  read(j, "normalize_advantages", o.normalize_advantages);
  read(j, "use_min_surrogate", o.use_min_surrogate);
  return o;
}

nlohmann::json level_eval_to_json(const std::vector<LevelEval>& evals) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : evals)
    out.push_back({{"level", e.level},
                   {"episodes", e.episodes},
                   {"success", e.success},
                   {"i_sem", e.i_sem},
                   {"s_f", e.s_f},
                   {"seg", e.seg},
                   {"s_e", e.s_e},
                   {"total", e.total}});
  return out;
}

double level_success(const std::vector<LevelEval>& evals, int level) {
  for (const auto& e : evals)
    if (e.level == level) return e.success;
  return 0.0;
}

// Mean vanish probability over the actions of the given plans.
double mean_vanish(const SimulatorParams& p, const std::vector<const Plan*>& plans) {
  double s = 0.0;
  std::size_t n = 0;
  for (const Plan* plan : plans)
    for (const auto& a : plan->actions) {
      s += p.probabilities(a.kind)[static_cast<std::size_t>(OutcomeMode::Vanish)];
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

}  // namespace

std::string_view to_string(LoopMode m) {
  switch (m) {
    case LoopMode::Full: return "full";
    case LoopMode::DaytimeOnly: return "daytime-only";
    case LoopMode::NighttimeOnly: return "nighttime-only";
    case LoopMode::Sequential: return "sequential";
  }
  return "?";
}

std::optional<LoopMode> loop_mode_from_string(std::string_view s) {
  for (auto m : {LoopMode::Full, LoopMode::DaytimeOnly, LoopMode::NighttimeOnly, LoopMode::Sequential}) {
    if (s == to_string(m)) return m;
    std::string underscored(to_string(m));
    std::replace(underscored.begin(), underscored.end(), '-', '_');
    if (s == underscored) return m;
  }
  if (s == "sequential_D_plus_N" || s == "D+N") return LoopMode::Sequential;
  return std::nullopt;
}

void LoopConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::ConfigInvalid, m); };
  if (phases < 0) bad("phases must be >= 0");
  if (max_difficulty < 1) bad("max_difficulty must be >= 1");
  if (sim_iterations < 0 || planner_iterations < 0) bad("iteration counts must be >= 0");
  if (interleave_chunks < 1) bad("interleave_chunks must be >= 1");
  if (!(eta >= 0.0)) bad("eta must be >= 0");
  if (candidate_budget < 2) bad("candidate_budget must be >= 2");
  if (planner_group_size < 2) bad("planner_group_size must be >= 2");
  if (!(planner_temperature > 0.0)) bad("planner_temperature must be positive");
  sim_optim.validate();
  planner_optim.validate();
  if (night_epochs < 0) bad("night epochs must be >= 0");
  if (!(night_sim_lr >= 0.0) || !(night_planner_lr >= 0.0)) bad("night learning rates must be >= 0");
  CurriculumConfig cc = curriculum;
  cc.num_bins = max_difficulty;
  cc.validate();
  if (bootstrap_episodes < 0 || probe_episodes < 0 || eval_episodes < 0) bad("episode counts must be >= 0");
  if (!(saturation_threshold >= 0.0 && saturation_threshold <= 1.0)) bad("saturation_threshold must lie in [0,1]");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) bad("holdout_fraction must lie in [0,1)");
}

LoopConfig default_loop_config() {
  LoopConfig c;
  c.sim_optim.lr = 0.08;
  c.planner_optim.lr = 0.05;
  return c;
}

nlohmann::json loop_config_to_json(const LoopConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"seed", c.seed},
          {"phases", c.phases},
          {"max_difficulty", c.max_difficulty},
          {"sim_iterations", c.sim_iterations},
          {"planner_iterations", c.planner_iterations},
          {"interleave_chunks", c.interleave_chunks},
          {"selective_simulation", c.selective_simulation},
          {"eta", c.eta},
          {"candidate_budget", c.candidate_budget},
          {"planner_group_size", c.planner_group_size},
          {"planner_temperature", c.planner_temperature},
          {"sim_optim", optim_to_json(c.sim_optim)},
          {"planner_optim", optim_to_json(c.planner_optim)},
          {"night", {{"epochs", c.night_epochs}, {"sim_lr", c.night_sim_lr}, {"planner_lr", c.night_planner_lr}}},
          {"reward",
           {{"semantic", c.reward.semantic},
            {"frame", c.reward.frame},
            {"segment", c.reward.segment},
            {"episode", c.reward.episode},
            {"double_normalize_segments", c.reward.double_normalize_segments}}},
          {"curriculum",
           {{"lambda", c.curriculum.lambda}, {"window", c.curriculum.window}, {"lookback", c.curriculum.lookback}}},
          {"bootstrap_episodes", c.bootstrap_episodes},
          {"probe_episodes", c.probe_episodes},
          {"saturation_threshold", c.saturation_threshold},
          {"holdout_fraction", c.holdout_fraction},
          {"eval_episodes", c.eval_episodes}};
}

LoopConfig loop_config_from_json(const nlohmann::json& j) {
  LoopConfig c = default_loop_config();
  check_keys(j,
             {"mode", "seed", "phases", "max_difficulty", "sim_iterations", "planner_iterations",
              "interleave_chunks", "selective_simulation", "eta", "candidate_budget", "planner_group_size",
              "planner_temperature", "sim_optim", "planner_optim", "night", "reward", "curriculum",
              "bootstrap_episodes", "probe_episodes", "saturation_threshold", "holdout_fraction", "eval_episodes"},
             "");
  if (j.contains("mode")) {
    auto m = loop_mode_from_string(j.at("mode").get<std::string>());
    if (!m) throw Error(ErrorCode::ConfigInvalid, "unknown mode '" + j.at("mode").get<std::string>() + "'");
    c.mode = *m;
  }
  read(j, "seed", c.seed);
  read(j, "phases", c.phases);
  read(j, "max_difficulty", c.max_difficulty);
  read(j, "sim_iterations", c.sim_iterations);
  read(j, "planner_iterations", c.planner_iterations);
  read(j, "interleave_chunks", c.interleave_chunks);
  read(j, "selective_simulation", c.selective_simulation);
  read(j, "eta", c.eta);
  read(j, "candidate_budget", c.candidate_budget);
  read(j, "planner_group_size", c.planner_group_size);
  read(j, "planner_temperature", c.planner_temperature);
  if (j.contains("sim_optim")) c.sim_optim = optim_from_json(j.at("sim_optim"), c.sim_optim, "sim_optim.");
  if (j.contains("planner_optim"))
    c.planner_optim = optim_from_json(j.at("planner_optim"), c.planner_optim, "planner_optim.");
  if (j.contains("night")) {
    const auto& n = j.at("night");
    check_keys(n, {"epochs", "sim_lr", "planner_lr"}, "night.");
    read(n, "epochs", c.night_epochs);
    read(n, "sim_lr", c.night_sim_lr);
    read(n, "planner_lr", c.night_planner_lr);
  }
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    check_keys(r, {"semantic", "frame", "segment", "episode", "double_normalize_segments"}, "reward.");
    read(r, "semantic", c.reward.semantic);
    read(r, "frame", c.reward.frame);
    read(r, "segment", c.reward.segment);
    read(r, "episode", c.reward.episode);
    read(r, "double_normalize_segments", c.reward.double_normalize_segments);
  }
  if (j.contains("curriculum")) {
    const auto& r = j.at("curriculum");
    check_keys(r, {"lambda", "window", "lookback"}, "curriculum.");
    read(r, "lambda", c.curriculum.lambda);
    read(r, "window", c.curriculum.window);
    read(r, "lookback", c.curriculum.lookback);
  }
  read(j, "bootstrap_episodes", c.bootstrap_episodes);
  read(j, "probe_episodes", c.probe_episodes);
  read(j, "saturation_threshold", c.saturation_threshold);
  read(j, "holdout_fraction", c.holdout_fraction);
  read(j, "eval_episodes", c.eval_episodes);
  c.validate();
  return c;
}

nlohmann::json report_to_json(const EvolutionReport& r) {
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : r.phases) {
    nlohmann::json j = {{"name", p.name},
                        {"daytime", p.daytime},
                        {"cycle", p.cycle},
                        {"bin", p.bin},
                        {"experiences", p.experiences},
                        {"planner_sim_calls", p.planner_sim_calls},
                        {"eval", level_eval_to_json(p.eval)},
                        {"curriculum", p.curriculum}};
    if (p.night) {
      j["night"] = {{"video_pairs", p.night->video_pairs},     {"planner_pairs", p.night->planner_pairs},
                    {"vanish_before", p.night->vanish_before}, {"vanish_after", p.night->vanish_after},
                    {"sim_loss", p.night->sim_loss},           {"planner_loss", p.night->planner_loss}};
      const auto& nb = p.night->margins_before;
      const auto& na = p.night->margins_after;
      const std::size_t nv = p.night->video_pairs;
      std::size_t up_sim = 0, up_plan = 0;
      double min_delta = 0.0;
      for (std::size_t i = 0; i < nb.size() && i < na.size(); ++i) {
        const double d = na[i] - nb[i];
        if (d > 0.0) ++(i < nv ? up_sim : up_plan);
        min_delta = i == 0 ? d : std::min(min_delta, d);
      }
      j["night"]["video_margins_increased"] = up_sim;
      j["night"]["planner_margins_increased"] = up_plan;
      j["night"]["min_margin_delta"] = min_delta;
    }
    phases.push_back(std::move(j));
  }
  return {{"config", loop_config_to_json(r.config)},
          {"initial_eval", level_eval_to_json(r.initial_eval)},
          {"phases", std::move(phases)},
          {"final_eval", level_eval_to_json(r.final_eval)},
          {"phase_difficulties", r.phase_difficulties},
          {"peak_level1_success", r.peak_level1_success},
          {"final_level1_success", r.final_level1_success}};
}

TaskSplit split_tasks(const TaskRepository& repo, double holdout_fraction, u64 seed) {
  TaskSplit split;
  for (const auto& [bin, tasks] : repo.bins) {
    // Stratify by action-kind signature so every signature keeps training tasks.
    std::map<std::string, std::vector<TaskEntry>> groups;
    for (const auto& t : tasks) groups[kind_signature(t.plan)].push_back(t);
    const std::size_t target =
        static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(tasks.size())));
    std::map<std::string, std::size_t> quota;
    std::vector<std::pair<double, std::string>> remainders;
    std::size_t assigned = 0;
    for (const auto& [sig, members] : groups) {
      const double exact = holdout_fraction * static_cast<double>(members.size());
      const std::size_t q = std::min(static_cast<std::size_t>(exact), members.size() - 1);
      quota[sig] = q;
      assigned += q;
      if (q + 1 < members.size()) remainders.emplace_back(exact - static_cast<double>(q), sig);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [_, sig] : remainders) {
      if (assigned >= target) break;
      ++quota[sig];
      ++assigned;
    }
    auto& h = split.heldout[bin];
    auto& t = split.train[bin];
    for (auto& [sig, members] : groups) {
      Rng rng = Rng::substream(seed, StreamTag::Split, {key(bin), fnv1a(sig)});
      for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
      const std::size_t q = quota[sig];
      h.insert(h.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q));
      t.insert(t.end(), members.begin() + static_cast<std::ptrdiff_t>(q), members.end());
    }
    std::sort(h.begin(), h.end());
    std::sort(t.begin(), t.end());
  }
  return split;
}

Evolution::Evolution(LoopConfig config, const std::vector<Scene>& scenes, const TaskRepository& repo)
    : curriculum([&] {
        CurriculumConfig cc = config.curriculum;
        cc.num_bins = config.max_difficulty;
        return cc;
      }()),
      config_(std::move(config)) {
  config_.validate();
  config_.curriculum.num_bins = config_.max_difficulty;
  planner.temperature = config_.planner_temperature;
  for (const auto& s : scenes) init_states_.emplace(s.scene_id, initial_state(s));
  TaskRepository kept;
  for (const auto& [bin, tasks] : repo.bins) {
    if (bin < 1 || bin > config_.max_difficulty) continue;
    for (const auto& t : tasks) {
      if (!init_states_.count(t.scene_id))
        throw Error(ErrorCode::UnknownObject, "task refers to unknown scene '" + t.scene_id + "'");
      kept.bins[bin].push_back(t);
    }
  }
  split_ = split_tasks(kept, config_.holdout_fraction, config_.seed);
}

const WorldState& Evolution::initial_state_of(const std::string& scene_id) const {
  auto it = init_states_.find(scene_id);
  if (it == init_states_.end()) throw Error(ErrorCode::UnknownObject, "unknown scene '" + scene_id + "'");
  return it->second;
}

Trajectory Evolution::rollout(const SimulatorParams& params, const TaskEntry& task, Rng& rng) const {
  return sample_trajectory(params, task.plan, initial_state_of(task.scene_id), rng);
}

void Evolution::bootstrap() {
  for (int bin = 1; bin <= config_.max_difficulty; ++bin) {
    auto it = split_.train.find(bin);
    if (it == split_.train.end() || it->second.empty()) continue;
    for (int e = 0; e < config_.bootstrap_episodes; ++e) {
      Rng rng = Rng::substream(config_.seed, StreamTag::Bootstrap, {key(bin), key(e)});
      const TaskEntry& task = it->second[rng.below(it->second.size())];
      curriculum.record_outcome(bin, total_reward(task.plan, rollout(sim, task, rng)).perfect());
    }
  }
  curriculum.checkpoint();
}

void Evolution::probe_and_checkpoint(int bin) {
  auto it = split_.train.find(bin);
  if (it != split_.train.end() && !it->second.empty()) {
    for (int e = 0; e < config_.probe_episodes; ++e) {
      Rng rng = Rng::substream(config_.seed, StreamTag::Probe, {key(bin), key(e)});
      const TaskEntry& task = it->second[rng.below(it->second.size())];
      curriculum.record_outcome(bin, total_reward(task.plan, rollout(sim, task, rng)).perfect());
    }
  }
  curriculum.checkpoint();
}

int Evolution::saturated_bin() const {
  int d = 1;
  for (int b = 1; b <= config_.max_difficulty; ++b)
    if (curriculum.count(b) > 0 && curriculum.success_rate(b) >= config_.saturation_threshold) d = b;
  return d;
}

std::size_t Evolution::daytime_simulator(int cycle, int bin, int first_iteration, int iterations, bool learn,
                                         std::vector<Experience>& out) {
  auto it = split_.train.find(bin);
  if (it == split_.train.end() || it->second.empty())
    throw Error(ErrorCode::UnknownBin, "no training tasks in bin " + std::to_string(bin));
  const TaskGroups groups = group_by_signature(it->second);
  const std::size_t k = static_cast<std::size_t>(config_.sim_optim.group_size);
  const std::string phase = "day" + std::to_string(cycle) + "-sim";
  std::size_t added = 0;
  for (int iter = first_iteration; iter < first_iteration + iterations; ++iter) {
    const TaskEntry& task = draw_task(groups, config_.seed, cycle, iter);

    Experience e;
    e.scene_id = task.scene_id;
    e.bin = bin;
    e.phase = 2 * cycle - 1;
    e.iteration = iter;
    e.task = task.plan;
    std::vector<double> rewards, successes, i_sem, s_f, seg, s_e;
    for (std::size_t r = 0; r < k; ++r) {
      Rng rng = Rng::substream(config_.seed, StreamTag::SimRollout, {key(cycle), key(iter), r});
      e.trajectories.push_back(rollout(sim, task, rng));
      const RewardBreakdown full = total_reward(task.plan, e.trajectories.back());
      const double shaped = config_.reward.all_enabled()
                                ? full.total
                                : total_reward(task.plan, e.trajectories.back(), config_.reward).total;
      e.breakdowns.push_back(full);
      rewards.push_back(shaped);
      successes.push_back(full.perfect() ? 1.0 : 0.0);
      i_sem.push_back(full.i_sem);
      s_f.push_back(full.s_f);
      seg.push_back(full.seg);
      s_e.push_back(full.s_e);
      curriculum.record_outcome(bin, full.perfect());
    }

    MetricsRow row;
    row.phase = phase;
    row.iteration = iter;
    row.bin = bin;
    if (learn) {
      const auto adv = grpo_advantages(rewards, config_.sim_optim.normalize_advantages);
      std::vector<const Trajectory*> ptrs;
      std::vector<double> old_lp;
      for (const auto& t : e.trajectories) {
        ptrs.push_back(&t);
        old_lp.push_back(trajectory_logprob(sim, t));
      }
      const LogProbFn fn = simulator_logprob_fn(ptrs);
      double j = 0.0;
      for (int epoch = 0; epoch < config_.sim_optim.epochs; ++epoch) {
        auto res = grpo_objective_and_grad(sim.values(), fn, old_lp, adv, config_.sim_optim.clip_eps,
                                           config_.sim_optim.use_min_surrogate);
        ascend(sim.values(), res.grad, config_.sim_optim.lr);
        j = res.value;
      }
      row.objective = j;
    }
    row.reward_mean = mean(rewards);
    row.success_rate = mean(successes);
    row.i_sem_mean = mean(i_sem);
    row.s_f_rate = mean(s_f);
    row.seg_mean = mean(seg);
    row.s_e_rate = mean(s_e);
    metrics_.push_back(std::move(row));

    if (on_experience) on_experience(e);
    // Simulator DPO scores rollouts from their plans and modes alone.
    for (auto& t : e.trajectories) {
      t.frames.clear();
      t.segments.clear();
    }
    out.push_back(std::move(e));
    ++added;
  }
  return added;
}

std::size_t Evolution::daytime_planner(int cycle, int first_iteration, int iterations, bool learn,
                                       std::vector<Experience>& out, std::size_t& sim_calls) {
  const int d = saturated_bin();
  std::vector<std::pair<int, const TaskEntry*>> tasks;
  for (int b = d + 1; b <= 2 * d && b <= config_.max_difficulty; ++b)
    if (auto it = split_.train.find(b); it != split_.train.end())
      for (const auto& t : it->second) tasks.emplace_back(b, &t);
  if (tasks.empty()) return 0;

  const std::size_t k = static_cast<std::size_t>(config_.planner_group_size);
  const std::string phase = "day" + std::to_string(cycle) + "-plan";
  std::size_t added = 0;
  for (int iter = first_iteration; iter < first_iteration + iterations; ++iter) {
    Rng task_rng = Rng::substream(config_.seed, StreamTag::PlanTask, {key(cycle), key(iter)});
    const auto& [bin, task] = tasks[task_rng.below(tasks.size())];
    const WorldState& init = initial_state_of(task->scene_id);
    PlannerContext ctx = planning_context(task->scene_id, init, task->plan);
    ctx.min_difficulty = d + 1;
    ctx.max_difficulty = 2 * d;
    const CandidateSet set = build_candidate_set(ctx, config_.candidate_budget);
    Rng sample_rng = Rng::substream(config_.seed, StreamTag::PlanSample, {key(cycle), key(iter)});
    auto samples = sample_plans(planner, set, k, sample_rng);
    const VoteResult vote = consensus_vote(samples);

    Experience e;
    e.scene_id = task->scene_id;
    e.bin = bin;
    e.phase = 2 * cycle - 1;
    e.iteration = iter;
    e.task = task->plan;
    std::vector<double> rewards;
    if (config_.selective_simulation) {
      Rng rng = Rng::substream(config_.seed, StreamTag::PlanSim, {key(cycle), key(iter)});
      e.trajectories.push_back(segmentwise_simulate(sim, vote.consensus, d, init, rng));
      ++sim_calls;
      e.breakdowns.push_back(total_reward(task->plan, e.trajectories.back()));
      const double r_sim = total_reward(task->plan, e.trajectories.back(), config_.reward).total;
      for (const auto& s : samples) rewards.push_back(planner_reward(s.plan, vote.consensus, r_sim, config_.eta));
    } else {
      // Every sample is rolled out; the consensus gate still applies.
      for (std::size_t i = 0; i < samples.size(); ++i) {
        Rng rng = Rng::substream(config_.seed, StreamTag::PlanSim, {key(cycle), key(iter), i});
        Trajectory t = segmentwise_simulate(sim, samples[i].plan, d, init, rng);
        ++sim_calls;
        const double r_sim = total_reward(task->plan, t, config_.reward).total;
        rewards.push_back(planner_reward(samples[i].plan, vote.consensus, r_sim, config_.eta));
        if (samples[i].plan == vote.consensus && e.trajectories.empty()) {
          e.breakdowns.push_back(total_reward(task->plan, t));
          e.trajectories.push_back(std::move(t));
        }
      }
    }

    MetricsRow row;
    row.phase = phase;
    row.iteration = iter;
    row.bin = bin;
    if (learn) {
      const auto adv = grpo_advantages(rewards, config_.planner_optim.normalize_advantages);
      std::vector<std::pair<const CandidateSet*, std::size_t>> choices;
      std::vector<double> old_lp;
      for (const auto& s : samples) {
        choices.emplace_back(&set, s.index);
        old_lp.push_back(s.logprob);
      }
      const LogProbFn fn = planner_logprob_fn(choices, planner.temperature);
      double j = 0.0;
      for (int epoch = 0; epoch < config_.planner_optim.epochs; ++epoch) {
        auto res = grpo_objective_and_grad(planner.values(), fn, old_lp, adv, config_.planner_optim.clip_eps,
                                           config_.planner_optim.use_min_surrogate);
        ascend(planner.values(), res.grad, config_.planner_optim.lr);
        j = res.value;
      }
      row.objective = j;
    }
    const RewardBreakdown& b = e.breakdowns.front();
    row.reward_mean = mean(rewards);
    row.success_rate = b.perfect() ? 1.0 : 0.0;
    row.i_sem_mean = b.i_sem;
    row.s_f_rate = b.s_f;
    row.seg_mean = b.seg;
    row.s_e_rate = b.s_e;
    metrics_.push_back(std::move(row));

    e.plan_samples = std::move(samples);
    e.vote = vote;
    if (on_experience) on_experience(e);
    out.push_back(std::move(e));
    ++added;
  }
  return added;
}

NightStats Evolution::nighttime(int cycle, int bin, std::span<const Experience> experiences) {
  NightStats stats;
  const std::string phase = "night" + std::to_string(cycle);
  const auto video = mine_video_pairs(experiences);
  std::vector<PreferencePair> plan_pairs = build_planning_pairs(experiences, config_.seed);
  for (auto&& extra : {build_understanding_pairs(experiences), build_transition_pairs(experiences)})
    plan_pairs.insert(plan_pairs.end(), extra.begin(), extra.end());
  if (on_pair) {
    for (const auto& p : video) on_pair(p);
    for (const auto& p : plan_pairs) on_pair(p);
  }
  stats.video_pairs = video.size();
  stats.planner_pairs = plan_pairs.size();

  std::vector<const Plan*> mined_plans;
  for (const auto& p : video) mined_plans.push_back(&p.win_traj->plan);
  if (mined_plans.empty())
    for (const auto& e : experiences) mined_plans.push_back(&e.task);
  stats.vanish_before = mean_vanish(sim, mined_plans);

  // Simulator pairs.
  const SimulatorParams sim_ref = sim;
  std::vector<PairLogRatioFn> sim_fns;
  std::vector<double> sim_refs;
  for (const auto& p : video) {
    sim_fns.push_back(simulator_pair_fn(*p.win_traj, *p.lose_traj));
    sim_refs.push_back(sim_fns.back()(sim_ref.values(), {}));
  }
  // Planner pairs, each scored over its own candidate set.
  const PlannerParams planner_ref = planner;
  std::vector<CandidateSet> sets;
  sets.reserve(plan_pairs.size());
  std::vector<PairLogRatioFn> plan_fns;
  std::vector<double> plan_refs;
  for (const auto& p : plan_pairs) {
    const Plan extra[] = {p.winner, p.loser};
    sets.push_back(build_candidate_set(*p.context, config_.candidate_budget, extra));
    const CandidateSet& s = sets.back();
    const std::size_t w = *s.index_of(p.winner), l = *s.index_of(p.loser);
    plan_fns.push_back(planner_pair_fn(s, w, l, planner.temperature));
    plan_refs.push_back(plan_fns.back()(planner_ref.values(), {}));
  }

  auto margins = [&](std::vector<double>& out) {
    out.clear();
    for (std::size_t i = 0; i < sim_fns.size(); ++i)
      out.push_back(dpo_loss_and_grad(sim.values(), sim_fns[i], sim_refs[i],
                                      config_.sim_optim.beta)
                        .margin);
    for (std::size_t i = 0; i < plan_fns.size(); ++i)
      out.push_back(dpo_loss_and_grad(planner.values(), plan_fns[i], plan_refs[i],
                                      config_.planner_optim.beta)
                        .margin);
  };
  margins(stats.margins_before);

  if (video.empty() && plan_pairs.empty()) {
    stats.vanish_after = stats.vanish_before;
    return stats;
  }

  for (int epoch = 0; epoch < config_.night_epochs; ++epoch) {
    double sim_loss = 0.0, plan_loss = 0.0;
    if (!sim_fns.empty()) {
      std::vector<double> grad(kSimulatorParamCount, 0.0);
      for (std::size_t i = 0; i < sim_fns.size(); ++i) {
        auto r = dpo_loss_and_grad(sim.values(), sim_fns[i], sim_refs[i],
                                   config_.sim_optim.beta);
        sim_loss += r.loss;
        for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += r.grad[d];
      }
      const double inv = 1.0 / static_cast<double>(sim_fns.size());
      for (double& g : grad) g *= inv;
      descend(sim.values(), grad, config_.night_sim_lr);
      sim_loss *= inv;
    }
    if (!plan_fns.empty()) {
      std::vector<double> grad(kPlanFeatureCount, 0.0);
      for (std::size_t i = 0; i < plan_fns.size(); ++i) {
        auto r = dpo_loss_and_grad(planner.values(), plan_fns[i], plan_refs[i],
                                   config_.planner_optim.beta);
        plan_loss += r.loss;
        for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += r.grad[d];
      }
      const double inv = 1.0 / static_cast<double>(plan_fns.size());
      for (double& g : grad) g *= inv;
      descend(planner.values(), grad, config_.night_planner_lr);
      plan_loss *= inv;
    }
    stats.sim_loss = sim_loss;
    stats.planner_loss = plan_loss;
    MetricsRow row;
    row.phase = phase;
    row.iteration = epoch;
    row.bin = bin;
    row.dpo_loss = sim_loss + plan_loss;
    metrics_.push_back(std::move(row));
  }
  margins(stats.margins_after);
  stats.vanish_after = mean_vanish(sim, mined_plans);
  return stats;
}

std::vector<LevelEval> Evolution::evaluate(const SimulatorParams& params, const std::vector<int>& levels,
                                           int episodes) const {
  std::vector<LevelEval> out;
  for (int level : levels) {
    LevelEval ev;
    ev.level = level;
    auto it = split_.heldout.find(level);
    if (it == split_.heldout.end() || it->second.empty()) {
      out.push_back(ev);
      continue;
    }
    const auto& tasks = it->second;
    for (int e = 0; e < episodes; ++e) {
      Rng rng = Rng::substream(config_.seed, StreamTag::Eval, {key(level), key(e)});
      const TaskEntry& task = tasks[rng.below(tasks.size())];
      const RewardBreakdown b = total_reward(task.plan, rollout(params, task, rng));
      ev.success += b.perfect() ? 1.0 : 0.0;
      ev.i_sem += b.i_sem;
      ev.s_f += b.s_f;
      ev.seg += b.seg;
      ev.s_e += b.s_e;
      ev.total += b.total;
    }
    ev.episodes = episodes;
    if (episodes > 0) {
      const double n = episodes;
      ev.success /= n;
      ev.i_sem /= n;
      ev.s_f /= n;
      ev.seg /= n;
      ev.s_e /= n;
      ev.total /= n;
    }
    out.push_back(ev);
  }
  return out;
}

EvolutionReport Evolution::run() {
  EvolutionReport report;
  report.config = config_;
  std::vector<int> levels;
  for (int l = 1; l <= config_.max_difficulty; ++l) levels.push_back(l);
  report.initial_eval = evaluate(sim, levels, config_.eval_episodes);
  double peak = level_success(report.initial_eval, 1);
  if (config_.phases == 0) {
    report.final_eval = report.initial_eval;
    report.peak_level1_success = report.final_level1_success = peak;
    return report;
  }

  bootstrap();
  const bool learn_day = config_.mode != LoopMode::NighttimeOnly;
  const bool learn_night = config_.mode != LoopMode::DaytimeOnly;
  std::vector<std::vector<Experience>> experiences(static_cast<std::size_t>(config_.phases) + 1);
  std::vector<int> day_bin(static_cast<std::size_t>(config_.phases) + 1, 1);

  auto finish_phase = [&](PhaseRecord rec) {
    probe_and_checkpoint(rec.bin);
    rec.eval = evaluate(sim, levels, config_.eval_episodes);
    peak = std::max(peak, level_success(rec.eval, 1));
    nlohmann::json cur = nlohmann::json::array();
    for (int b = 1; b <= config_.max_difficulty; ++b)
      cur.push_back({{"bin", b},
                     {"n", curriculum.count(b)},
                     {"S", curriculum.success_rate(b)},
                     {"P", curriculum.learning_progress(b)}});
    rec.curriculum = std::move(cur);
    report.phase_difficulties.push_back(rec.bin);
    const std::string name = rec.name;
    report.phases.push_back(std::move(rec));
    if (on_phase_end) on_phase_end(name);
  };

  auto day = [&](int c) {
    Rng pick = Rng::substream(config_.seed, StreamTag::Curriculum, {key(c)});
    int bin = curriculum.select_bin(pick);
    if (!split_.train.count(bin) || split_.train.at(bin).empty()) {
      for (const auto& [b, tasks] : split_.train)
        if (!tasks.empty()) {
          bin = b;
          break;
        }
    }
    day_bin[static_cast<std::size_t>(c)] = bin;
    PhaseRecord rec;
    rec.name = "day" + std::to_string(c);
    rec.daytime = true;
    rec.cycle = c;
    rec.bin = bin;
    auto& store = experiences[static_cast<std::size_t>(c)];
    const int chunks = config_.interleave_chunks;
    int sim_done = 0, plan_done = 0;
    for (int ch = 0; ch < chunks; ++ch) {
      const int sim_n = config_.sim_iterations * (ch + 1) / chunks - sim_done;
      const int plan_n = config_.planner_iterations * (ch + 1) / chunks - plan_done;
      rec.experiences += daytime_simulator(c, bin, sim_done, sim_n, learn_day, store);
      rec.experiences += daytime_planner(c, plan_done, plan_n, learn_day, store, rec.planner_sim_calls);
      sim_done += sim_n;
      plan_done += plan_n;
    }
    finish_phase(std::move(rec));
  };

  auto night = [&](int c) {
    PhaseRecord rec;
    rec.name = "night" + std::to_string(c);
    rec.daytime = false;
    rec.cycle = c;
    rec.bin = day_bin[static_cast<std::size_t>(c)];
    auto& store = experiences[static_cast<std::size_t>(c)];
    rec.experiences = store.size();
    if (learn_night) rec.night = nighttime(c, rec.bin, store);
    store.clear();
    store.shrink_to_fit();
    finish_phase(std::move(rec));
  };

  if (config_.mode == LoopMode::Sequential) {
    for (int c = 1; c <= config_.phases; ++c) day(c);
    for (int c = 1; c <= config_.phases; ++c) night(c);
  } else {
    for (int c = 1; c <= config_.phases; ++c) {
      day(c);
      night(c);
    }
  }

  report.final_eval = report.phases.back().eval;
  report.peak_level1_success = peak;
  report.final_level1_success = level_success(report.final_eval, 1);
  return report;
}

EvolutionReport run_evolution(const LoopConfig& config, const std::vector<Scene>& scenes,
                              const TaskRepository& repo, std::vector<MetricsRow>* metrics) {
  Evolution evo(config, scenes, repo);
  EvolutionReport r = evo.run();
  if (metrics) *metrics = evo.metrics();
  return r;
}

}  // namespace roboevolve
