#include "leoho/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "leoho/error.hpp"

namespace leoho {

const char* const kRawCsvHeader =
    "policy,users,capacity,seed,throughput_bps,blocking_prob,handovers_per_user,episode_reward,status";
const char* const kAggregateCsvHeader =
    "policy,users,capacity,n,throughput_bps_mean,throughput_bps_std,blocking_prob_mean,blocking_prob_std,"
    "handovers_per_user_mean,handovers_per_user_std,episode_reward_mean,episode_reward_std";
const char* const kTrainingLogCsvHeader =
    "episode,mean_reward,loss,epsilon,alpha,beta,gamma,blocking_rate,handover_rate";
const char* const kWeightsLogCsvHeader = "episode,alpha,beta,gamma";

namespace {

constexpr std::uint64_t kRepetitionTag = 0x5eed;
constexpr std::uint64_t kTrainTag = 0x7a1;
constexpr std::uint64_t kSharedTag = 0x5a4ed;
constexpr std::uint64_t kRandomPolicyTag = 0x7a4d;

// Round-trip exact decimal form of a double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Status text never contains separators or line breaks.
std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  }
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw InputError("malformed number '" + s + "'");
  return v;
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  body(out);
  if (!out) throw InputError("write failed for " + path.string());
}

ResultRow failed_row(PolicyKind policy, int users, int capacity, std::uint64_t seed, const std::string& why) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ResultRow r;
  r.policy = policy_name(policy);
  r.users = users;
  r.capacity = capacity;
  r.seed = seed;
  r.throughput_bps = r.blocking_prob = r.handovers_per_user = r.episode_reward = nan;
  r.status = "error: " + sanitize(why);
  return r;
}

}  // namespace

int ExperimentConfig::episode_slots() const {
  return static_cast<int>(std::lround(episode_seconds / env.constellation.slot_seconds));
}

void ExperimentConfig::validate() const {
  if (users_sweep.empty() || capacity_sweep.empty()) throw ConfigError("user and capacity sweeps must be non-empty");
  for (int u : users_sweep) {
    if (u < 1) throw ConfigError("number_of_ues entries must be >= 1");
  }
  for (int c : capacity_sweep) {
    if (c < 1) throw ConfigError("satellite_capacity entries must be >= 1");
  }
  if (episodes < 1) throw ConfigError("number_of_episodes must be >= 1");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!(episode_seconds > 0.0) || episode_slots() < 1) throw ConfigError("episode_seconds must cover at least one slot");
  if (policies.empty()) throw ConfigError("policies must be non-empty");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  EnvironmentConfig e = env;
  e.users = users_sweep.front();
  e.capacity = capacity_sweep.front();
  e.episode_slots = episode_slots();
  e.validate();
  agent.validate();
  reward.targets.validate();
  if (baselines.window_slots < 1) throw ConfigError("baselines.window_slots must be >= 1");
}

ExperimentConfig paper_preset() {
  ExperimentConfig c;
  c.env.episode_slots = c.episode_slots();
  return c;
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.users_sweep = {4, 8};
  c.capacity_sweep = {1, 2};
  c.episodes = 50;
  c.repetitions = 3;
  c.episode_seconds = 120 * c.env.constellation.slot_seconds;
  c.env.episode_slots = c.episode_slots();
  return c;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

std::vector<std::uint64_t> repetition_seeds(const ExperimentConfig& config) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config.repetitions; ++i) {
    seeds.push_back(derive_seed(config.master_seed, {kRepetitionTag, static_cast<std::uint64_t>(i)}));
  }
  return seeds;
}

EnvironmentConfig cell_environment(const ExperimentConfig& config, int users, int capacity) {
  EnvironmentConfig e = config.env;
  e.users = users;
  e.capacity = capacity;
  e.episode_slots = config.episode_slots();
  e.validate();
  return e;
}

std::uint64_t training_seed(const ExperimentConfig& config, int users, int capacity) {
  return derive_seed(config.master_seed,
                     {kTrainTag, static_cast<std::uint64_t>(users), static_cast<std::uint64_t>(capacity)});
}

std::filesystem::path checkpoint_path(const ExperimentConfig& config, PolicyKind policy, int users, int capacity) {
  return config.checkpoint_dir /
         (policy_name(policy) + "_" + std::to_string(users) + "_" + std::to_string(capacity) + ".ckpt");
}

CellTraining train_cell(const ExperimentConfig& config, int users, int capacity) {
  Environment env(cell_environment(config, users, capacity));
  const std::uint64_t seed = training_seed(config, users, capacity);
  DuelingDdqnAgent agent(config.agent, observation_size(config.env.k_max), config.env.k_max, seed);
  TrainingOptions options;
  options.episodes = config.episodes;
  options.seed = seed;
  options.reward = config.reward;
  options.expert = config.baselines;
  std::filesystem::path ckpt = checkpoint_path(config, PolicyKind::trained, users, capacity);
  options.failure_checkpoint = ckpt.parent_path() / (ckpt.stem().string() + ".failed.ckpt");
  TrainingResult result = train(agent, env, options);
  return {std::move(result), agent.online()};
}

CellTraining train_shared(const ExperimentConfig& config) {
  const std::uint64_t seed = derive_seed(config.master_seed, {kTrainTag, kSharedTag});
  DuelingDdqnAgent agent(config.agent, observation_size(config.env.k_max), config.env.k_max, seed);
  const double cells = static_cast<double>(config.users_sweep.size() * config.capacity_sweep.size());
  if (agent.config().auto_k_decay) {
    agent.mutable_config().epsilon.k_decay =
        std::max(1.0, cells * config.episodes * config.episode_slots() / 3.0);
    agent.mutable_config().auto_k_decay = false;
  }
  TrainingOptions options;
  options.episodes = config.episodes;
  options.reward = config.reward;
  options.expert = config.baselines;
  options.failure_checkpoint = config.checkpoint_dir / (policy_name(PolicyKind::trained) + "_shared.failed.ckpt");
  CellTraining out;
  int offset = 0;
  for (int u : config.users_sweep) {
    for (int c : config.capacity_sweep) {
      Environment env(cell_environment(config, u, c));
      options.seed = derive_seed(seed, {static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(c)});
      TrainingResult r = train(agent, env, options);
      agent.mutable_config().warm_start = WarmStartPolicy::none;
      options.reward.initial = r.final_weights;
      for (auto& row : r.log) row.episode += offset;
      offset += config.episodes;
      out.result.log.insert(out.result.log.end(), r.log.begin(), r.log.end());
      out.result.final_weights = r.final_weights;
    }
  }
  out.network = agent.online();
  return out;
}

ResultRow evaluate_policy(const ExperimentConfig& config, Policy& policy, int users, int capacity,
                          std::uint64_t seed) {
  Environment env(cell_environment(config, users, capacity));
  const auto t0 = std::chrono::steady_clock::now();
  const EpisodeResult ep = run_episode(env, policy, seed, config.reward.initial);
  const auto t1 = std::chrono::steady_clock::now();
  ResultRow r;
  r.policy = policy_name(policy.kind());
  r.users = users;
  r.capacity = capacity;
  r.seed = seed;
  r.throughput_bps = ep.metrics.throughput_bps_mean;
  r.blocking_prob = ep.metrics.blocking_prob;
  r.handovers_per_user = ep.metrics.handovers_per_user;
  r.episode_reward = ep.episode_reward;
  r.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  return r;
}

ResultRow run_cell(const ExperimentConfig& config, PolicyKind policy, int users, int capacity, std::uint64_t seed) {
  if (policy == PolicyKind::trained) {
    const auto path = checkpoint_path(config, policy, users, capacity);
    if (!std::filesystem::exists(path)) throw ConfigError("missing checkpoint " + path.string());
    GreedyQPolicy p(load_checkpoint(path));
    if (p.network().input_dim() != observation_size(config.env.k_max) || p.network().actions() != config.env.k_max) {
      throw ConfigError("checkpoint " + path.string() + " does not match the configured observation size");
    }
    return evaluate_policy(config, p, users, capacity, seed);
  }
  auto p = make_baseline_policy(policy, config.baselines, derive_seed(seed, {kRandomPolicyTag}));
  return evaluate_policy(config, *p, users, capacity, seed);
}

std::vector<AggregateRow> aggregate(std::span<const ResultRow> rows) {
  using Key = std::tuple<std::string, int, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    Key k{r.policy, r.users, r.capacity};
    auto [it, fresh] = groups.try_emplace(k);
    if (fresh) order.push_back(k);
    it->second.push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& k : order) {
    const auto& g = groups.at(k);
    auto column = [&](double ResultRow::*m) {
      std::vector<double> v;
      for (const auto* r : g) v.push_back(r->*m);
      return mean_std(v);
    };
    AggregateRow a;
    a.policy = std::get<0>(k);
    a.users = std::get<1>(k);
    a.capacity = std::get<2>(k);
    a.n = static_cast<int>(g.size());
    a.throughput_bps = column(&ResultRow::throughput_bps);
    a.blocking_prob = column(&ResultRow::blocking_prob);
    a.handovers_per_user = column(&ResultRow::handovers_per_user);
    a.episode_reward = column(&ResultRow::episode_reward);
    out.push_back(a);
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& base, const std::filesystem::path& out_dir) {
  base.validate();
  ExperimentConfig config = base;
  if (config.checkpoint_dir.is_relative()) config.checkpoint_dir = out_dir / config.checkpoint_dir;
  std::filesystem::create_directories(out_dir);

  struct Cell {
    int users;
    int capacity;
  };
  std::vector<Cell> cells;
  for (int u : config.users_sweep) {
    for (int c : config.capacity_sweep) cells.push_back({u, c});
  }

  std::map<std::pair<int, int>, std::string> training_failures;
  const bool wants_trained =
      std::find(config.policies.begin(), config.policies.end(), PolicyKind::trained) != config.policies.end();
  if (wants_trained && config.train_missing) {
    std::filesystem::create_directories(config.checkpoint_dir);
    std::vector<Cell> todo;
    for (const auto& cell : cells) {
      if (!std::filesystem::exists(checkpoint_path(config, PolicyKind::trained, cell.users, cell.capacity))) {
        todo.push_back(cell);
      }
    }
    auto write_logs = [&](const std::string& stem, const TrainingResult& result) {
      const auto log_dir = out_dir / "training" / stem;
      std::filesystem::create_directories(log_dir);
      write_file(log_dir / "training_log.csv", [&](std::ostream& os) { write_training_log_csv(os, result.log); });
      write_file(log_dir / "weights_log.csv", [&](std::ostream& os) { write_weights_log_csv(os, result.log); });
    };
    if (config.shared_agent && !todo.empty()) {
      try {
        const CellTraining trained = train_shared(config);
        write_logs(policy_name(PolicyKind::trained) + "_shared", trained.result);
        for (const auto& cell : todo)
          save_checkpoint(trained.network, checkpoint_path(config, PolicyKind::trained, cell.users, cell.capacity));
      } catch (const std::exception& e) {
        for (const auto& cell : todo)
          training_failures[{cell.users, cell.capacity}] = std::string("training failed: ") + e.what();
      }
    } else {
      std::mutex mu;
      parallel_for(todo.size(), config.threads, [&](std::size_t i) {
        const Cell cell = todo[i];
        try {
          const CellTraining trained = train_cell(config, cell.users, cell.capacity);
          write_logs(policy_name(PolicyKind::trained) + "_" + std::to_string(cell.users) + "_" +
                         std::to_string(cell.capacity),
                     trained.result);
          save_checkpoint(trained.network, checkpoint_path(config, PolicyKind::trained, cell.users, cell.capacity));
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          training_failures[{cell.users, cell.capacity}] = std::string("training failed: ") + e.what();
        }
      });
    }
  }

  struct Task {
    PolicyKind policy;
    int users;
    int capacity;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  const auto seeds = repetition_seeds(config);
  for (auto policy : config.policies) {
    for (const auto& cell : cells) {
      for (auto seed : seeds) tasks.push_back({policy, cell.users, cell.capacity, seed});
    }
  }
  SweepResult result;
  result.rows.resize(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    if (t.policy == PolicyKind::trained) {
      auto it = training_failures.find({t.users, t.capacity});
      if (it != training_failures.end()) {
        result.rows[i] = failed_row(t.policy, t.users, t.capacity, t.seed, it->second);
        return;
      }
    }
    try {
      result.rows[i] = run_cell(config, t.policy, t.users, t.capacity, t.seed);
    } catch (const std::exception& e) {
      result.rows[i] = failed_row(t.policy, t.users, t.capacity, t.seed, e.what());
    }
  });
  result.aggregates = aggregate(result.rows);

  write_file(out_dir / "raw_results.csv", [&](std::ostream& os) { write_raw_csv(os, result.rows); });
  write_file(out_dir / "aggregate_results.csv",
             [&](std::ostream& os) { write_aggregate_csv(os, result.aggregates); });
  write_file(out_dir / "timing.csv", [&](std::ostream& os) { write_timing_csv(os, result.rows); });
  return result;
}

void write_raw_csv(std::ostream& os, std::span<const ResultRow> rows) {
  os << kRawCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.policy << ',' << r.users << ',' << r.capacity << ',' << r.seed << ',' << num(r.throughput_bps) << ','
       << num(r.blocking_prob) << ',' << num(r.handovers_per_user) << ',' << num(r.episode_reward) << ','
       << sanitize(r.status) << '\n';
  }
}

std::vector<ResultRow> read_raw_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRawCsvHeader) throw InputError("raw results: unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw InputError("raw results: expected 9 fields in '" + line + "'");
    ResultRow r;
    try {
      r.policy = f[0];
      r.users = std::stoi(f[1]);
      r.capacity = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      r.throughput_bps = parse_double(f[4]);
      r.blocking_prob = parse_double(f[5]);
      r.handovers_per_user = parse_double(f[6]);
      r.episode_reward = parse_double(f[7]);
    } catch (const std::logic_error& e) {
      throw InputError("raw results: malformed row '" + line + "'");
    }
    r.status = f[8];
    rows.push_back(r);
  }
  return rows;
}

void write_aggregate_csv(std::ostream& os, std::span<const AggregateRow> rows) {
  os << kAggregateCsvHeader << '\n';
  for (const auto& a : rows) {
    os << a.policy << ',' << a.users << ',' << a.capacity << ',' << a.n;
    for (const MeanStd* m : {&a.throughput_bps, &a.blocking_prob, &a.handovers_per_user, &a.episode_reward}) {
      os << ',' << num(m->mean) << ',' << num(m->std);
    }
    os << '\n';
  }
}

void write_timing_csv(std::ostream& os, std::span<const ResultRow> rows) {
  os << "policy,users,capacity,seed,wall_time_s\n";
  for (const auto& r : rows) {
    os << r.policy << ',' << r.users << ',' << r.capacity << ',' << r.seed << ',' << num(r.wall_time_s) << '\n';
  }
}

void write_training_log_csv(std::ostream& os, std::span<const TrainingLogRow> rows) {
  os << kTrainingLogCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.episode << ',' << num(r.mean_reward) << ',' << num(r.loss) << ',' << num(r.epsilon) << ','
       << num(r.alpha) << ',' << num(r.beta) << ',' << num(r.gamma) << ',' << num(r.blocking_rate) << ','
       << num(r.handover_rate) << '\n';
  }
}

void write_weights_log_csv(std::ostream& os, std::span<const TrainingLogRow> rows) {
  os << kWeightsLogCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.episode << ',' << num(r.alpha) << ',' << num(r.beta) << ',' << num(r.gamma) << '\n';
  }
}

}  // namespace leoho
