// leoho: train, evaluate and verify the handover agents from the command line.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leoho/config.hpp"
#include "leoho/error.hpp"
#include "leoho/experiments.hpp"
#include "leoho/validation.hpp"

namespace {

using namespace leoho;

struct CommonFlags {
  std::string config_path;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::vector<std::string> policies;
};

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig c;
  if (!f.config_path.empty()) {
    c = load_experiment_config(f.config_path);
  } else if (f.preset == "desk") {
    c = desk_preset();
  } else if (f.preset == "paper") {
    c = paper_preset();
  } else {
    throw ConfigError("unknown preset '" + f.preset + "' (expected desk or paper)");
  }
  if (f.seed) c.master_seed = *f.seed;
  if (!f.policies.empty()) {
    c.policies.clear();
    for (const auto& p : f.policies) c.policies.push_back(parse_policy_kind(p));
  }
  c.validate();
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

int cmd_train(const CommonFlags& f, std::optional<int> users, std::optional<int> capacity) {
  ExperimentConfig c = resolve_config(f);
  const int u = users.value_or(c.users_sweep.front());
  const int cap = capacity.value_or(c.capacity_sweep.front());
  const std::filesystem::path out = f.out;
  std::filesystem::create_directories(out);
  if (c.checkpoint_dir.is_relative()) c.checkpoint_dir = out / c.checkpoint_dir;
  std::filesystem::create_directories(c.checkpoint_dir);

  std::cerr << "training " << policy_name(PolicyKind::trained) << " users=" << u << " capacity=" << cap
            << " episodes=" << c.episodes << " slots=" << c.episode_slots() << "\n";
  CellTraining trained = train_cell(c, u, cap);
  const auto ckpt = checkpoint_path(c, PolicyKind::trained, u, cap);
  save_checkpoint(trained.network, ckpt);
  {
    std::ofstream log(out / "training_log.csv");
    write_training_log_csv(log, trained.result.log);
    std::ofstream w(out / "weights_log.csv");
    write_weights_log_csv(w, trained.result.log);
    if (!log || !w) throw InputError("cannot write training logs into " + out.string());
  }
  write_text(out / "resolved_config.json", to_json(c).dump(2) + "\n");
  const auto& last = trained.result.log.back();
  std::cout << "checkpoint " << ckpt.string() << "\n"
            << "final episode: mean_reward=" << last.mean_reward << " blocking=" << last.blocking_rate
            << " handover_rate=" << last.handover_rate << "\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& f) {
  const ExperimentConfig c = resolve_config(f);
  const std::filesystem::path out = f.out;
  const SweepResult r = run_sweep(c, out);
  write_text(out / "resolved_config.json", to_json(c).dump(2) + "\n");
  int failed = 0;
  for (const auto& row : r.rows) {
    if (row.status != "ok") {
      ++failed;
      std::cerr << row.policy << " users=" << row.users << " capacity=" << row.capacity << " seed=" << row.seed
                << ": " << row.status << "\n";
    }
  }
  std::cout << "wrote " << (out / "raw_results.csv").string() << " (" << r.rows.size() << " rows) and "
            << (out / "aggregate_results.csv").string() << " (" << r.aggregates.size() << " rows)\n";
  for (const auto& a : r.aggregates) {
    std::cout << "  " << a.policy << " U=" << a.users << " C=" << a.capacity
              << " throughput=" << a.throughput_bps.mean / 1e6 << " Mbps blocking=" << a.blocking_prob.mean
              << " handovers/user=" << a.handovers_per_user.mean << "\n";
  }
  if (failed > 0) {
    std::cerr << failed << " of " << r.rows.size() << " cells failed\n";
    return 1;
  }
  return 0;
}

int cmd_oracle_check(std::uint64_t seed, int instances) {
  const OracleCheckReport r = oracle_check(instances, seed);
  for (const auto& msg : r.failures) std::cerr << msg << "\n";
  std::cout << "oracle-check: " << r.instances << " instances, " << r.policy_runs << " policy runs, "
            << r.dominance_violations << " dominance violations (worst excess " << r.worst_excess << "), "
            << r.greedy_cases << " single-user cases, " << r.greedy_mismatches << " rate-greedy mismatches\n";
  return r.passed() ? 0 : 1;
}

int cmd_gradcheck(std::uint64_t seed, int instances) {
  const GradCheckSuiteReport r = gradcheck_suite(instances, seed);
  const bool ok = r.max_relative_error < 1e-4;
  std::cout << "gradcheck: " << r.instances << " networks, " << r.parameters_checked
            << " parameters, max relative error " << r.max_relative_error << (ok ? " (ok)" : " (FAILED)") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEO satellite handover lab: dueling double-DQN agent and baselines"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::optional<int> users;
  std::optional<int> capacity;
  int instances = 0;

  auto add_common = [&](CLI::App* sub, bool with_policy) {
    sub->add_option("--config", flags.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--preset", flags.preset, "built-in config when --config is absent: desk or paper");
    sub->add_option("--seed", flags.seed, "override the master seed");
    sub->add_option("--out", flags.out, "output directory");
    if (with_policy) sub->add_option("--policy", flags.policies, "restrict to these policies (repeatable)");
  };

  auto* train = app.add_subcommand("train", "train one dueling DDQN agent and write its checkpoint and logs");
  add_common(train, false);
  train->add_option("--users", users, "user count (default: first of the sweep)");
  train->add_option("--capacity", capacity, "satellite capacity (default: first of the sweep)");

  auto* evaluate = app.add_subcommand("evaluate", "run the policy x users x capacity x seed sweep");
  add_common(evaluate, true);

  std::uint64_t check_seed = 1;
  auto* oracle = app.add_subcommand("oracle-check", "compare every policy with the exhaustive optimum");
  oracle->add_option("--seed", check_seed, "suite seed");
  oracle->add_option("--instances", instances, "random tiny instances (default 50)");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the dueling network gradients");
  grad->add_option("--seed", check_seed, "suite seed");
  grad->add_option("--instances", instances, "random networks (default 20)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*train) return cmd_train(flags, users, capacity);
    if (*evaluate) return cmd_evaluate(flags);
    if (*oracle) return cmd_oracle_check(check_seed, instances > 0 ? instances : 50);
    if (*grad) return cmd_gradcheck(check_seed, instances > 0 ? instances : 20);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
