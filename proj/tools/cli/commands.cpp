#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "roboevolve/error.hpp"
#include "roboevolve/loop.hpp"
#include "roboevolve/optim.hpp"
#include "roboevolve/scenegraph.hpp"
#include "roboevolve/store.hpp"

namespace fs = std::filesystem;

namespace roboevolve::cli {

namespace {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigInvalid:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << "error [json]: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// Minimal SVG line chart.
std::string svg_chart(const std::string& title, const std::string& ylabel,
                      const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series) {
  const double w = 640, h = 400, ml = 60, mr = 150, mt = 40, mb = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& [_, pts] : series)
    for (const auto& [x, y] : pts) {
      if (first) {
        x0 = x1 = x;
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n"
    << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << ml << "\" y=\"" << h - 15 << "\" font-family=\"sans-serif\" font-size=\"12\">x: "
    << fmt(x0, 0) << " .. " << fmt(x1, 0) << "</text>\n"
    << "<text x=\"10\" y=\"" << mt - 8 << "\" font-family=\"sans-serif\" font-size=\"12\">" << ylabel << " "
    << fmt(y0, 2) << " .. " << fmt(y1, 2) << "</text>\n";
  std::size_t i = 0;
  for (const auto& [name, pts] : series) {
    const char* c = colors[i % 6];
    s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) s << fmt(px(x), 2) << ',' << fmt(py(y), 2) << ' ';
    s << "\"/>\n";
    s << "<text x=\"" << w - mr + 10 << "\" y=\"" << mt + 16 * (i + 1) << "\" fill=\"" << c
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
    ++i;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

Workspace load_repository(const fs::path& dir) {
  const fs::path tasks = dir / "tasks.jsonl";
  if (!fs::exists(tasks)) throw Error(ErrorCode::Io, "no task repository at " + tasks.string() + " (run init first)");
  Workspace ws;
  ws.scenes = ingest_scenes(dir / "scenes").scenes;
  std::ifstream in(tasks);
  ws.repo = read_repository_jsonl(in);
  return ws;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("ROBOEVOLVE_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigInvalid, std::string("ROBOEVOLVE_SEED is not an unsigned integer: ") + v);
  }
}

double GradientReport::worst() const { return std::max({grpo_simulator, grpo_planner, dpo_simulator, dpo_planner}); }

GradientReport check_gradients(const GradientOptions& opt) {
  if (opt.points < 1) throw Error(ErrorCode::ConfigInvalid, "--points must be >= 1");
  if (!(opt.h > 0.0)) throw Error(ErrorCode::ConfigInvalid, "--h must be positive");
  GradientReport rep;
  Rng rng = Rng::substream(opt.seed, StreamTag::Test, {0x67726164});
  auto normal = [&](double scale) { return scale * (2.0 * rng.uniform() - 1.0); };

  for (int point = 0; point < opt.points; ++point) {
    // Simulator: a group of random rollouts (only plan kinds and modes matter for scoring).
    std::vector<Trajectory> trajs(4);
    for (auto& t : trajs) {
      const std::size_t n = 1 + rng.below(3);
      for (std::size_t i = 0; i < n; ++i) {
        AtomicAction a;
        a.kind = kAllActionKinds[rng.below(kActionKindCount)];
        a.args.assign(arity(a.kind), "x");
        t.plan.actions.push_back(a);
        t.modes.push_back(static_cast<OutcomeMode>(rng.below(kModeCount)));
      }
    }
    std::vector<double> sim(kSimulatorParamCount), sim_old(kSimulatorParamCount);
    for (std::size_t d = 0; d < sim.size(); ++d) {
      sim[d] = normal(2.0);
      sim_old[d] = sim[d] + normal(0.02);
    }
    std::vector<const Trajectory*> ptrs;
    for (const auto& t : trajs) ptrs.push_back(&t);
    const LogProbFn sim_fn = simulator_logprob_fn(ptrs);
    std::vector<double> old_lp, rewards;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      old_lp.push_back(sim_fn(sim_old, i, {}));
      rewards.push_back(3.0 * rng.uniform());
    }
    const auto adv = grpo_advantages(rewards);
    rep.grpo_simulator = std::max(
        rep.grpo_simulator, finite_diff_check(
                                [&](std::span<const double> x, std::span<double> g) {
                                  auto r = grpo_objective_and_grad(x, sim_fn, old_lp, adv, 0.2);
                                  std::copy(r.grad.begin(), r.grad.end(), g.begin());
                                  return r.value;
                                },
                                sim, opt.h));
    const PairLogRatioFn pair_fn = simulator_pair_fn(trajs[0], trajs[1]);
    const double ref = pair_fn(sim_old, {});
    rep.dpo_simulator = std::max(rep.dpo_simulator, finite_diff_check(
                                                        [&](std::span<const double> x, std::span<double> g) {
                                                          auto r = dpo_loss_and_grad(x, pair_fn, ref, 0.1);
                                                          std::copy(r.grad.begin(), r.grad.end(), g.begin());
                                                          return r.loss;
                                                        },
                                                        sim, opt.h));

    // Planner: random candidate features.
    CandidateSet set;
    const std::size_t n = 4 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      set.plans.emplace_back();
      PlanFeatures f;
      for (auto& v : f) v = normal(1.0);
      set.features.push_back(f);
    }
    std::vector<double> w(kPlanFeatureCount), w_old(kPlanFeatureCount);
    for (std::size_t d = 0; d < w.size(); ++d) {
      w[d] = normal(1.0);
      w_old[d] = w[d] + normal(0.02);
    }
    const double temp = 0.5 + rng.uniform();
    // A group of distinct samples; identical samples give an exactly zero gradient.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    std::vector<std::pair<const CandidateSet*, std::size_t>> choices;
    for (int k = 0; k < 4; ++k) choices.emplace_back(&set, idx[static_cast<std::size_t>(k)]);
    const LogProbFn plan_fn = planner_logprob_fn(choices, temp);
    std::vector<double> plan_old, plan_rewards;
    for (std::size_t i = 0; i < choices.size(); ++i) {
      plan_old.push_back(plan_fn(w_old, i, {}));
      plan_rewards.push_back(rng.uniform());
    }
    const auto plan_adv = grpo_advantages(plan_rewards);
    rep.grpo_planner = std::max(
        rep.grpo_planner, finite_diff_check(
                              [&](std::span<const double> x, std::span<double> g) {
                                auto r = grpo_objective_and_grad(x, plan_fn, plan_old, plan_adv, 0.2);
                                std::copy(r.grad.begin(), r.grad.end(), g.begin());
                                return r.value;
                              },
                              w, opt.h));
    const PairLogRatioFn plan_pair = planner_pair_fn(set, idx[0], idx[1], temp);
    const double pref = plan_pair(w_old, {});
    rep.dpo_planner = std::max(rep.dpo_planner, finite_diff_check(
                                                    [&](std::span<const double> x, std::span<double> g) {
                                                      auto r = dpo_loss_and_grad(x, plan_pair, pref, 0.1);
                                                      std::copy(r.grad.begin(), r.grad.end(), g.begin());
                                                      return r.loss;
                                                    },
                                                    w, opt.h));
  }
  return rep;
}

int cmd_init(const InitOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.max_difficulty < 1) throw Error(ErrorCode::ConfigInvalid, "--max-difficulty must be >= 1");
    if (opt.votes < 1) throw Error(ErrorCode::ConfigInvalid, "--votes must be >= 1");
    if (opt.votes < 3) err << "warning: --votes " << opt.votes << " gives little or no self-consistency filtering\n";
    const auto ingest = ingest_scenes(opt.scenes);
    for (const auto& w : ingest.warnings) err << "warning: " << w << '\n';

    VotingConfig vc;
    vc.m = opt.votes;
    TaskRepository repo;
    std::vector<Scene> voted;
    std::size_t skipped = 0;
    for (std::size_t si = 0; si < ingest.scenes.size(); ++si) {
      const Scene& truth = ingest.scenes[si];
      std::vector<Scene> parses;
      for (int v = 0; v < opt.votes; ++v) {
        Rng rng = Rng::substream(opt.seed, StreamTag::Parse, {si, static_cast<std::uint64_t>(v)});
        parses.push_back(parse_scene_noisy(truth, opt.drop_rate, opt.hallucinate_rate, rng));
      }
      Scene scene = vote_scene(parses, vc);
      if (const auto clash = unlinked_colocations(scene); !clash.empty()) {
        err << "warning: scene '" << scene.scene_id << "': " << clash.front().first << " and "
            << clash.front().second << " share a cell without a support relation (scene skipped)\n";
        ++skipped;
        continue;
      }
      try {
        repo.merge(instantiate_tasks(scene, opt.max_difficulty, opt.chain_budget));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnsatisfiableScene) throw;
        err << "warning: " << e.what() << " (scene skipped)\n";
        ++skipped;
        continue;
      }
      voted.push_back(std::move(scene));
    }
    fs::create_directories(opt.out / "scenes");
    for (const auto& s : voted)
      write_text_file(opt.out / "scenes" / (s.scene_id + ".json"), scene_to_json(s).dump(2) + "\n");
    std::ostringstream tasks;
    write_repository_jsonl(repo, tasks);
    write_text_file(opt.out / "tasks.jsonl", tasks.str());

    out << "scenes: " << voted.size() << " (skipped " << skipped << ")\n";
    for (const auto& [bin, entries] : repo.bins) out << "bin " << bin << ": " << entries.size() << " tasks\n";
    out << "action templates used: " << repo.template_ids.size() << " of " << kActionKindCount << '\n';
    return kExitOk;
  });
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    LoopConfig cfg = default_loop_config();
    if (opt.config) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_text_file(*opt.config));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, opt.config->string() + ": " + e.what());
      }
      cfg = loop_config_from_json(j);
    }
    if (opt.mode) {
      auto m = loop_mode_from_string(*opt.mode);
      if (!m) throw Error(ErrorCode::ConfigInvalid, "unknown --mode '" + *opt.mode + "'");
      cfg.mode = *m;
    }
    if (opt.seed) cfg.seed = *opt.seed;
    if (auto env = seed_from_env()) cfg.seed = *env;
    if (opt.phases) cfg.phases = *opt.phases;
    cfg.validate();

    const Workspace ws = load_repository(opt.repo);
    fs::create_directories(opt.out);
    nlohmann::json manifest = make_manifest(cfg);
    manifest["repo"] = fs::absolute(opt.repo).lexically_normal().string();
    write_text_file(opt.out / "manifest.json", manifest.dump(2) + "\n");

    Evolution evo(cfg, ws.scenes, ws.repo);
    std::optional<JsonlWriter> exp_sink, pair_sink;
    if (opt.write_experiences) {
      exp_sink.emplace(opt.out / "experiences.jsonl");
      pair_sink.emplace(opt.out / "pairs.jsonl");
      evo.on_experience = [&](const Experience& e) { exp_sink->append(experience_to_json(e)); };
      evo.on_pair = [&](const PreferencePair& p) { pair_sink->append(pair_to_json(p)); };
    }
    CheckpointStore ckpt(opt.out / "checkpoints");
    evo.on_phase_end = [&](const std::string& name) { ckpt.save(name, PolicySnapshot{evo.sim, evo.planner}); };
    const EvolutionReport report = evo.run();

    ckpt.save("final", PolicySnapshot{evo.sim, evo.planner});
    std::ostringstream csv;
    write_metrics_csv(csv, evo.metrics());
    write_text_file(opt.out / "metrics.csv", csv.str());
    write_text_file(opt.out / "report.json", report_to_json(report).dump(2) + "\n");

    out << "mode " << to_string(cfg.mode) << ", seed " << cfg.seed << ", phases " << cfg.phases << '\n';
    out << "phase difficulties:";
    for (int d : report.phase_difficulties) out << ' ' << d;
    out << '\n';
    for (const auto& e : report.final_eval)
      out << "level " << e.level << " success " << fmt(e.success) << " (" << e.episodes << " episodes)\n";
    out << "outputs written to " << opt.out.string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.episodes < 1) throw Error(ErrorCode::ConfigInvalid, "--episodes must be >= 1");
    for (int l : opt.levels)
      if (l < 1) throw Error(ErrorCode::ConfigInvalid, "levels must be >= 1");
    LoopConfig cfg = default_loop_config();
    fs::path repo_dir = opt.repo.value_or("repo");
    const fs::path manifest_path = opt.run / "manifest.json";
    if (fs::exists(manifest_path)) {
      const auto manifest = nlohmann::json::parse(read_text_file(manifest_path));
      cfg = loop_config_from_json(manifest.at("config"));
      if (!opt.repo && manifest.contains("repo")) repo_dir = manifest.at("repo").get<std::string>();
    }
    if (opt.seed) cfg.seed = *opt.seed;
    if (auto env = seed_from_env()) cfg.seed = *env;
    cfg.max_difficulty = std::max(cfg.max_difficulty, *std::max_element(opt.levels.begin(), opt.levels.end()));

    SimulatorParams params;
    if (opt.checkpoint == "builtin:uniform") {
      params = SimulatorParams::uniform();
    } else if (opt.checkpoint == "builtin:oracle") {
      params = SimulatorParams::oracle();
    } else {
      params = CheckpointStore(opt.run / "checkpoints").restore(opt.checkpoint).simulator;
    }
    const Workspace ws = load_repository(repo_dir);
    Evolution evo(cfg, ws.scenes, ws.repo);
    const auto evals = evo.evaluate(params, opt.levels, opt.episodes);

    nlohmann::json j = {{"checkpoint", opt.checkpoint}, {"seed", cfg.seed}, {"levels", nlohmann::json::array()}};
    out << "level  episodes  success  i_sem   s_f     seg     s_e     total\n";
    for (const auto& e : evals) {
      out << e.level << "      " << e.episodes << "       " << fmt(e.success) << "   " << fmt(e.i_sem) << "  "
          << fmt(e.s_f) << "  " << fmt(e.seg) << "  " << fmt(e.s_e) << "  " << fmt(e.total) << '\n';
      j["levels"].push_back({{"level", e.level},
                             {"episodes", e.episodes},
                             {"success", e.success},
                             {"i_sem", e.i_sem},
                             {"s_f", e.s_f},
                             {"seg", e.seg},
                             {"s_e", e.s_e},
                             {"total", e.total}});
    }
    std::string tag = opt.checkpoint;
    std::replace(tag.begin(), tag.end(), ':', '_');
    write_text_file(opt.run / ("eval-" + tag + ".json"), j.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto rows = read_metrics_csv(opt.run / "metrics.csv");
    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetricsRow*>> by_phase;
    for (const auto& r : rows) {
      if (!by_phase.count(r.phase)) order.push_back(r.phase);
      by_phase[r.phase].push_back(&r);
    }
    out << "phase         rows  bin  reward(first)  reward(last)  success(last50)  dpo_loss(last)\n";
    for (const auto& name : order) {
      const auto& rs = by_phase[name];
      auto avg = [&](std::size_t from, std::size_t to, auto field) {
        double s = 0;
        std::size_t n = 0;
        for (std::size_t i = from; i < to && i < rs.size(); ++i)
          if (auto v = rs[i]->*field) {
            s += *v;
            ++n;
          }
        return n ? fmt(s / static_cast<double>(n)) : std::string("-");
      };
      const std::size_t n = rs.size(), tail = n > 50 ? n - 50 : 0;
      char line[256];
      std::snprintf(line, sizeof line, "%-12s %5zu %4d  %13s  %12s  %15s  %14s\n", name.c_str(), n, rs.front()->bin,
                    avg(0, std::min<std::size_t>(50, n), &MetricsRow::reward_mean).c_str(),
                    avg(tail, n, &MetricsRow::reward_mean).c_str(), avg(tail, n, &MetricsRow::success_rate).c_str(),
                    avg(n - 1, n, &MetricsRow::dpo_loss).c_str());
      out << line;
    }
    std::optional<nlohmann::json> report;
    if (fs::exists(opt.run / "report.json")) {
      report = nlohmann::json::parse(read_text_file(opt.run / "report.json"));
      out << "phase difficulties: " << report->at("phase_difficulties").dump() << '\n';
      for (const auto& e : report->at("final_eval"))
        out << "final level " << e.at("level").get<int>() << " success " << fmt(e.at("success").get<double>())
            << '\n';
    }
    if (opt.plots) {
      std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> reward_series;
      for (const auto& name : order) {
        if (name.find("-sim") == std::string::npos) continue;
        std::vector<std::pair<double, double>> pts;
        for (const auto* r : by_phase[name])
          if (r->reward_mean) pts.emplace_back(r->iteration, *r->reward_mean);
        reward_series.emplace_back(name, std::move(pts));
      }
      fs::create_directories(opt.run / "plots");
      write_text_file(opt.run / "plots" / "reward.svg", svg_chart("Simulator reward per iteration", "reward", reward_series));
      if (report) {
        std::vector<std::pair<double, double>> trace;
        const auto diffs = report->at("phase_difficulties").get<std::vector<int>>();
        for (std::size_t i = 0; i < diffs.size(); ++i) trace.emplace_back(static_cast<double>(i + 1), diffs[i]);
        write_text_file(opt.run / "plots" / "curriculum.svg",
                        svg_chart("Curriculum difficulty per phase", "bin", {{"difficulty", trace}}));
      }
      out << "plots written to " << (opt.run / "plots").string() << '\n';
    }
    return kExitOk;
  });
}

int cmd_check_gradients(const GradientOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GradientReport r = check_gradients(opt);
    char buf[64];
    auto line = [&](const char* name, double v) {
      std::snprintf(buf, sizeof buf, "%.3e", v);
      out << name << " max relative error " << buf << (v <= opt.tolerance ? "  ok" : "  FAIL") << '\n';
    };
    line("grpo/simulator", r.grpo_simulator);
    line("grpo/planner  ", r.grpo_planner);
    line("dpo/simulator ", r.dpo_simulator);
    line("dpo/planner   ", r.dpo_planner);
    return r.worst() <= opt.tolerance ? kExitOk : kExitFailure;
  });
}

}  // namespace roboevolve::cli
