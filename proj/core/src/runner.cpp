#include "actx/runner.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include "json.hpp"

#include "actx/params_io.hpp"
#include "actx/rng.hpp"
#include "actx/task_io.hpp"
#include "actx/trajectory_log.hpp"

namespace actx {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Trajectory eval_rollout(const AugmentedEnv& aug, const PolicyParams& params, const RolloutOptions& options,
                        std::uint64_t seed) {
  std::optional<ExecutorTransportError> last;
  for (std::uint64_t attempt = 0; attempt < 4; ++attempt) {
    const std::uint64_t s = derive_seed(seed, {attempt});
    AugmentedEnv local = aug;
    local.stream = derive_seed(s, {tag(SeedDomain::kExecutor)});
    try {
      return rollout(local, params, options, s);
    } catch (const ExecutorTransportError& e) {
      last = e;
    }
  }
  throw *last;
}

}  // namespace

TaskSource training_tasks(const RunConfig& cfg) {
  return [seed = cfg.seed, d = cfg.difficulty](std::uint64_t it, std::uint64_t b) {
    return generate_task(derive_seed(seed, {tag(SeedDomain::kTask), it, b}), d);
  };
}

std::vector<TaskSpec> evaluation_tasks(const RunConfig& cfg, int episodes) {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  std::vector<TaskSpec> tasks;
  tasks.reserve(static_cast<std::size_t>(episodes));
  if (cfg.task_corpus) {
    const auto corpus = read_task_corpus(*cfg.task_corpus);
    if (corpus.empty()) throw std::invalid_argument("task corpus " + cfg.task_corpus->string() + " is empty");
    for (int e = 0; e < episodes; ++e) tasks.push_back(corpus[static_cast<std::size_t>(e) % corpus.size()]);
    return tasks;
  }
  for (int e = 0; e < episodes; ++e) {
    tasks.push_back(
        generate_task(derive_seed(cfg.seed, {tag(SeedDomain::kEvalTask), static_cast<std::uint64_t>(e)}),
                      cfg.difficulty));
  }
  return tasks;
}

TrainEnv make_train_env(const RunConfig& cfg) {
  return TrainEnv{cfg.skin, make_executor(cfg.executor), cfg.capacity, cfg.lengths};
}

PolicyParams initial_params(const RunConfig& cfg) {
  if (cfg.params_path) return load_params(*cfg.params_path);
  return PolicyParams::zeros(cfg.basis);
}

EvalRun evaluate(const RunConfig& cfg, const PolicyParams& params, Strategy strategy, int episodes) {
  const auto tasks = evaluation_tasks(cfg, episodes);
  const ExecutorPolicy executor = make_executor(cfg.executor);
  const RolloutOptions options{strategy, cfg.capacity};

  EvalRun run;
  run.trajectories.resize(tasks.size());
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t e) {
    const AugmentedEnv aug{Environment(tasks[e], cfg.skin), executor, 0};
    const std::uint64_t seed = derive_seed(cfg.seed, {tag(SeedDomain::kEvalTask), e, tag(SeedDomain::kTrajectory)});
    run.trajectories[e] = eval_rollout(aug, params, options, seed);
  });

  run.metrics.strategy = strategy;
  run.metrics.episodes = episodes;
  double tokens = 0.0;
  double turns = 0.0;
  for (const auto& t : run.trajectories) {
    run.metrics.successes += t.reward;
    run.reports.push_back(trajectory_report(t, strategy, cfg.skin, cfg.lengths));
    tokens += static_cast<double>(run.reports.back().total);
    turns += static_cast<double>(t.length());
  }
  const double n = static_cast<double>(episodes);
  run.metrics.success_rate = run.metrics.successes / n;
  run.metrics.mean_total_tokens = tokens / n;
  run.metrics.mean_turns = turns / n;
  return run;
}

std::string training_csv(const std::vector<TrainingRow>& curve) {
  std::string s = "iteration,mean_reward,objective,mean_kl,grad_norm,tokens_active,tokens_full_hypothetical\n";
  for (const auto& r : curve) {
    s += std::to_string(r.iteration) + ',' + fmt_double(r.mean_reward) + ',' + fmt_double(r.objective) + ',' +
         fmt_double(r.mean_kl) + ',' + fmt_double(r.grad_norm) + ',' + fmt_double(r.tokens_active) + ',' +
         fmt_double(r.tokens_full_hypothetical) + '\n';
  }
  return s;
}

std::string context_csv(const std::vector<Trajectory>& trajs, const std::vector<ContextReport>& reports) {
  std::string s = "task_id,strategy,turn,C_t,total\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& rep = reports[i];
    for (std::size_t t = 0; t < rep.per_turn.size(); ++t) {
      s += std::to_string(trajs[i].task_id) + ',' + std::string(to_string(rep.strategy)) + ',' +
           std::to_string(t + 1) + ',' + std::to_string(rep.per_turn[t]) + ',' + std::to_string(rep.total) + '\n';
    }
  }
  return s;
}

GradcheckReport gradcheck(const GradcheckOptions& options) {
  const Difficulty toy{2, 4, 4, 1, 15};
  const ExecutorPolicy executor = ScriptedOracle{2, 0.5, options.seed};
  const std::size_t capacity = 4;
  GrpoConfig cfg;
  cfg.group_size = 4;
  cfg.kl_beta = 0.05;
  cfg.clip_ratio = 0.2;
  // Keeps finite differences away from the kinks of min/clip.
  const double margin = 1e-3;

  GradcheckReport report;
  report.sweep.reserve(options.h_sweep.size());
  for (double h : options.h_sweep) report.sweep.push_back(GradcheckSweepPoint{h, 0.0, 0.0});

  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };

  int accepted = 0;
  for (std::uint64_t draw = 0; accepted < options.batches; ++draw) {
    if (draw > static_cast<std::uint64_t>(options.batches) * 50) throw std::runtime_error("gradcheck: no usable batch");
    Rng rng(derive_seed(options.seed, {tag(SeedDomain::kInit), draw}));
    const std::size_t dim = feature_dim(options.basis);
    PolicyParams old{options.basis, std::vector<double>(dim)};
    for (auto& w : old.weights) w = rng.uniform() * 2.0 - 1.0;
    PolicyParams params = old;
    PolicyParams ref = old;
    for (std::size_t k = 0; k < dim; ++k) {
      params.weights[k] += (rng.uniform() - 0.5) * 0.4;
      ref.weights[k] += (rng.uniform() - 0.5) * 0.6;
    }

    const TaskSpec task = generate_task(derive_seed(options.seed, {tag(SeedDomain::kTask), draw}), toy);
    const AugmentedEnv aug{Environment(task, Skin::kWeb), executor, 0};
    GroupBatch batch = rollout_group(aug, old, capacity, cfg.group_size, derive_seed(options.seed, {draw}));
    fill_advantages(batch, cfg.adv_epsilon);

    bool near_kink = false;
    for (const auto& traj : batch.trajectories) {
      for (const auto& step : traj.steps) {
        const double r = logprob(params, step.input, step.decision) - step.logprob;
        if (std::abs(r - std::log1p(cfg.clip_ratio)) < margin || std::abs(r - std::log1p(-cfg.clip_ratio)) < margin ||
            std::abs(r) > kMaxLogRatio - margin) {
          near_kink = true;
        }
      }
    }
    if (near_kink) {
      ++report.excluded_batches;
      continue;
    }
    ++accepted;

    const auto g = grpo_gradient(batch, params, ref, cfg);
    auto central = [&](std::size_t k, double h) {
      PolicyParams plus = params, minus = params;
      plus.weights[k] += h;
      minus.weights[k] -= h;
      return (grpo_objective(batch, plus, ref, cfg) - grpo_objective(batch, minus, ref, cfg)) / (2.0 * h);
    };
    for (std::size_t k = 0; k < dim; ++k) {
      report.max_rel_error = std::max(report.max_rel_error, rel(g[k], central(k, options.h)));
      ++report.components_checked;
      for (auto& pt : report.sweep) {
        const double fd = central(k, pt.h);
        pt.max_abs_error = std::max(pt.max_abs_error, std::abs(g[k] - fd));
        pt.max_rel_error = std::max(pt.max_rel_error, rel(g[k], fd));
      }
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

int cmd_train(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config);
    const PolicyParams params0 = initial_params(cfg);
    const TrainEnv env = make_train_env(cfg);

    TrajectoryLogWriter log(cfg.output.path(cfg.output.log));
    const auto observer = [&](int it, const std::vector<GroupBatch>& groups) {
      int index = 0;
      for (const auto& g : groups) {
        for (const auto& t : g.trajectories) {
          log.write(t, LogMeta{"train", it, index++, Strategy::kActive, cfg.skin}, cfg.lengths);
        }
      }
      log.flush();
    };
    const TrainResult result = train(cfg.grpo, training_tasks(cfg), params0, env, observer);
    log.close();
    save_params(cfg.output.path(cfg.output.params), result.params);
    write_file_atomic(cfg.output.path(cfg.output.curve), training_csv(result.curve));

    out << "trained " << cfg.grpo.iterations << " iterations\n";
    if (!result.curve.empty()) {
      const auto& last = result.curve.back();
      out << "final mean_reward=" << fmt_double(last.mean_reward) << " grad_norm=" << fmt_double(last.grad_norm)
          << "\n";
    }
    out << "params: " << cfg.output.path(cfg.output.params).string() << "\n";
    out << "curve:  " << cfg.output.path(cfg.output.curve).string() << "\n";
    out << "log:    " << cfg.output.path(cfg.output.log).string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << "\n";
    return 1;
  }
}

namespace {

nlohmann::json metrics_json(const EvalMetrics& m) {
  return {{"strategy", std::string(to_string(m.strategy))},
          {"episodes", m.episodes},
          {"successes", m.successes},
          {"success_rate", m.success_rate},
          {"mean_total_tokens", m.mean_total_tokens},
          {"mean_turns", m.mean_turns}};
}

}  // namespace

int cmd_eval(const std::filesystem::path& params_path, const std::filesystem::path& config, std::ostream& out,
             std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config);
    const PolicyParams params = load_params(params_path);
    if (params.basis != cfg.basis) throw std::invalid_argument("params basis does not match curator.basis");
    const EvalRun run = evaluate(cfg, params, cfg.strategy, cfg.eval_episodes);
    write_file_atomic(cfg.output.path(cfg.output.report), context_csv(run.trajectories, run.reports));
    {
      TrajectoryLogWriter log(cfg.output.path("eval_" + cfg.output.log));
      for (std::size_t i = 0; i < run.trajectories.size(); ++i) {
        log.write(run.trajectories[i], LogMeta{"eval", 0, static_cast<int>(i), cfg.strategy, cfg.skin}, cfg.lengths);
      }
      log.close();
    }
    out << metrics_json(run.metrics).dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << "\n";
    return 1;
  }
}

int cmd_compare(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config);
    const PolicyParams params = initial_params(cfg);
    std::vector<Trajectory> all_trajs;
    std::vector<ContextReport> all_reports;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %10s %8s %18s %12s\n", "strategy", "episodes", "SR", "mean_total_tokens",
                  "mean_turns");
    out << line;
    for (Strategy s : {Strategy::kNoMemory, Strategy::kFullContext, Strategy::kActive}) {
      EvalRun run = evaluate(cfg, params, s, cfg.eval_episodes);
      const auto& m = run.metrics;
      std::snprintf(line, sizeof line, "%-14s %10d %8.3f %18.1f %12.2f\n", std::string(to_string(s)).c_str(),
                    m.episodes, m.success_rate, m.mean_total_tokens, m.mean_turns);
      out << line;
      all_trajs.insert(all_trajs.end(), run.trajectories.begin(), run.trajectories.end());
      all_reports.insert(all_reports.end(), run.reports.begin(), run.reports.end());
    }
    write_file_atomic(cfg.output.path(cfg.output.report), context_csv(all_trajs, all_reports));
    return 0;
  } catch (const std::exception& e) {
    err << "compare-strategies: " << e.what() << "\n";
    return 1;
  }
}

int cmd_gradcheck(const std::filesystem::path& config, double tolerance, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config);
    GradcheckOptions opt;
    opt.seed = cfg.seed;
    opt.basis = cfg.basis;
    opt.tolerance = tolerance;
    const GradcheckReport rep = gradcheck(opt);
    out << "components checked: " << rep.components_checked << " (" << rep.excluded_batches
        << " batches resampled off clip edges)\n";
    out << "max relative error at h=" << fmt_double(opt.h) << ": " << fmt_double(rep.max_rel_error) << "\n";
    for (const auto& pt : rep.sweep) {
      out << "  h=" << fmt_double(pt.h) << "  max_abs_error=" << fmt_double(pt.max_abs_error)
          << "  max_rel_error=" << fmt_double(pt.max_rel_error) << "\n";
    }
    if (!rep.passed) {
      err << "gradcheck FAILED: max relative error " << fmt_double(rep.max_rel_error) << " exceeds tolerance "
          << fmt_double(tolerance) << "\n";
      return 2;
    }
    out << "gradcheck passed (tolerance " << fmt_double(tolerance) << ")\n";
    return 0;
  } catch (const std::exception& e) {
    err << "gradcheck: " << e.what() << "\n";
    return 1;
  }
}

int cmd_replay(const std::filesystem::path& log, std::ostream& out, std::ostream& err) {
  try {
    out << render_replay(read_log(log));
    return 0;
  } catch (const std::exception& e) {
    err << "replay: " << e.what() << "\n";
    return 1;
  }
}

int cmd_tasks(const std::filesystem::path& config, int count, const std::filesystem::path& dest, std::ostream& out,
              std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config);
    write_task_corpus(dest, evaluation_tasks(cfg, count));
    out << "wrote " << count << " tasks to " << dest.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "tasks: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace actx
