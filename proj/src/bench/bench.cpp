#include "prefopt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "prefopt/session_log.hpp"

namespace prefopt::bench {

StrategySelection selection_from_string(const std::string& name) {
  if (name == "preference") return StrategySelection::Preference;
  if (name == "random") return StrategySelection::Random;
  if (name == "both") return StrategySelection::Both;
  throw std::invalid_argument("strategy must be preference, random or both");
}

std::string to_string(StrategySelection selection) {
  switch (selection) {
    case StrategySelection::Preference:
      return "preference";
    case StrategySelection::Random:
      return "random";
    case StrategySelection::Both:
      return "both";
  }
  return "both";
}

void ExperimentSpec::validate() const {
  if (trials == 0) throw std::invalid_argument("trials must be at least 1");
  if (tolerances.empty()) throw std::invalid_argument("at least one tolerance is required");
  for (double t : tolerances) {
    if (!(t >= 0.0)) throw std::invalid_argument("tolerances must be non-negative");
  }
  oracles::lookup(oracle);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string transcript_name(const TrialResult& t) {
  return to_string(t.strategy) + "_tol" + format_double(t.tolerance) + "_seed" +
         std::to_string(t.seed);
}

}  // namespace

TrialResult run_trial(const oracles::ScalarTestFunction& function, Strategy strategy,
                      double tolerance, std::size_t budget, std::uint64_t seed,
                      const OptimizerConfig& config) {
  TrialResult result;
  result.strategy = strategy;
  result.tolerance = tolerance;
  result.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    oracles::ToleranceOracle oracle(function.evaluate, tolerance);
    Session session = run(function.domain, oracle, budget, config, seed, strategy);
    result.incumbents = session.incumbent_history();
    result.records = session.dataset().records();
    result.trace.reserve(result.incumbents.size());
    for (const auto& x : result.incumbents) result.trace.push_back(function.evaluate(x));
  } catch (const std::exception& e) {
    result.error = e.what();
    result.trace.clear();
    result.incumbents.clear();
    result.records.clear();
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::function<void(const TrialResult&)>& on_trial) {
  spec.validate();
  const auto function = oracles::lookup(spec.oracle);

  struct Task {
    Strategy strategy;
    double tolerance;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  std::vector<Strategy> strategies;
  if (spec.strategy != StrategySelection::Random) strategies.push_back(Strategy::Preference);
  if (spec.strategy != StrategySelection::Preference) strategies.push_back(Strategy::Random);
  for (Strategy s : strategies) {
    for (double tol : spec.tolerances) {
      for (std::size_t k = 0; k < spec.trials; ++k) tasks.push_back({s, tol, spec.seed + k});
    }
  }

  ExperimentResult result;
  result.trials.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      result.trials[i] = run_trial(function, t.strategy, t.tolerance, spec.budget, t.seed,
                                   spec.optimizer);
      if (on_trial) {
        std::lock_guard lock(report_mutex);
        on_trial(result.trials[i]);
      }
    }
  };
  const unsigned jobs = std::max(1u, spec.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& t : result.trials) {
    if (!t.ok()) ++result.failures;
  }
  result.summary = aggregate(result.trials);
  return result;
}

std::vector<SummaryRow> aggregate(const std::vector<TrialResult>& trials) {
  // Cells in first-appearance order.
  std::vector<std::pair<Strategy, double>> cells;
  std::map<std::pair<int, double>, std::vector<const TrialResult*>> members;
  for (const auto& t : trials) {
    if (!t.ok() || t.trace.empty()) continue;
    const auto key = std::make_pair(static_cast<int>(t.strategy), t.tolerance);
    auto& list = members[key];
    if (list.empty()) cells.emplace_back(t.strategy, t.tolerance);
    list.push_back(&t);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [strategy, tolerance] : cells) {
    const auto& list = members[{static_cast<int>(strategy), tolerance}];
    std::size_t length = list.front()->trace.size();
    for (const auto* t : list) length = std::min(length, t->trace.size());
    for (std::size_t it = 0; it < length; ++it) {
      std::vector<double> values;
      values.reserve(list.size());
      for (const auto* t : list) values.push_back(t->trace[it]);
      SummaryRow row;
      row.strategy = strategy;
      row.tolerance = tolerance;
      row.iteration = it + 1;
      row.trials = values.size();
      for (std::size_t p = 0; p < kPercentiles.size(); ++p) {
        row.values[p] = percentile(values, kPercentiles[p]);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialResult>& trials) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::size_t dims = 0;
  for (const auto& t : trials) {
    if (t.ok() && !t.incumbents.empty()) {
      dims = t.incumbents.front().size();
      break;
    }
  }
  out << "strategy,tolerance,seed,iteration,best_value";
  for (std::size_t d = 0; d < dims; ++d) out << ",x" << d;
  out << '\n';
  for (const auto& t : trials) {
    if (!t.ok()) continue;
    for (std::size_t it = 0; it < t.trace.size(); ++it) {
      out << to_string(t.strategy) << ',' << format_double(t.tolerance) << ',' << t.seed << ','
          << it + 1 << ',' << format_double(t.trace[it]);
      for (double v : t.incumbents[it]) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

std::vector<TrialResult> read_trials_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<TrialResult> trials;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 5) throw std::runtime_error("malformed trials row: " + line);
    const Strategy strategy = strategy_from_string(fields[0]);
    const double tolerance = std::stod(fields[1]);
    const std::uint64_t seed = std::stoull(fields[2]);
    const std::size_t iteration = std::stoul(fields[3]);
    if (iteration == 1 || trials.empty()) {
      TrialResult t;
      t.strategy = strategy;
      t.tolerance = tolerance;
      t.seed = seed;
      trials.push_back(std::move(t));
    }
    auto& t = trials.back();
    t.trace.push_back(std::stod(fields[4]));
    Point x;
    for (std::size_t k = 5; k < fields.size(); ++k) x.push_back(std::stod(fields[k]));
    t.incumbents.push_back(std::move(x));
  }
  return trials;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "strategy,tolerance,iteration,trials";
  for (double p : kPercentiles) out << ",p" << static_cast<int>(p);
  out << '\n';
  for (const auto& r : rows) {
    out << to_string(r.strategy) << ',' << format_double(r.tolerance) << ',' << r.iteration << ','
        << r.trials;
    for (double v : r.values) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

void write_final_csv(const std::filesystem::path& path, const ExperimentSpec& spec,
                     const std::vector<TrialResult>& trials) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const bool multiobjective = spec.oracle == "mo2d";
  const auto dims = oracles::lookup(spec.oracle).domain.dims();
  out << "strategy,tolerance,seed,final_value";
  for (std::size_t d = 0; d < dims; ++d) out << ",x" << d;
  if (multiobjective) out << ",f_underlying,distance_from_minimizer";
  out << '\n';
  const Point star = oracles::TwoBump::global_minimizer();
  for (const auto& t : trials) {
    if (!t.ok()) continue;
    const Point& x = t.final_incumbent();
    out << to_string(t.strategy) << ',' << format_double(t.tolerance) << ',' << t.seed << ','
        << format_double(t.final_value());
    for (double v : x) out << ',' << format_double(v);
    if (multiobjective) {
      out << ',' << format_double(oracles::TwoBump::value(x)) << ','
          << format_double(std::hypot(x[0] - star[0], x[1] - star[1]));
    }
    out << '\n';
  }
}

}  // namespace

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result) {
  std::filesystem::create_directories(spec.output);
  write_trials_csv(spec.output / "trials.csv", result.trials);
  write_summary_csv(spec.output / "summary.csv", result.summary);
  write_final_csv(spec.output / "final.csv", spec, result.trials);

  nlohmann::ordered_json j;
  j["oracle"] = spec.oracle;
  j["tolerances"] = spec.tolerances;
  j["trials"] = spec.trials;
  j["budget"] = spec.budget;
  j["seed"] = spec.seed;
  j["strategy"] = to_string(spec.strategy);
  j["beta"] = spec.optimizer.beta;
  j["sigma"] = spec.optimizer.sigma;
  j["fit"] = {{"steps", spec.optimizer.fit.steps},
              {"warm_steps", spec.optimizer.warm_fit_steps},
              {"samples_per_step", spec.optimizer.fit.samples_per_step},
              {"learning_rate", spec.optimizer.fit.learning_rate}};
  j["acquisition"] = {{"posterior_samples", spec.optimizer.acquisition.posterior_samples},
                      {"candidate_count", spec.optimizer.acquisition.candidate_count},
                      {"refine_top_k", spec.optimizer.acquisition.refine_top_k},
                      {"refine_steps", spec.optimizer.acquisition.refine_steps}};
  nlohmann::ordered_json failed = nlohmann::ordered_json::array();
  for (const auto& t : result.trials) {
    if (t.ok()) continue;
    failed.push_back({{"strategy", to_string(t.strategy)},
                      {"tolerance", t.tolerance},
                      {"seed", t.seed},
                      {"error", t.error}});
  }
  j["failed_trials"] = failed;
  std::ofstream(spec.output / "spec.json") << j.dump(2) << '\n';

  if (spec.write_transcripts) {
    const auto dir = spec.output / "transcripts";
    std::filesystem::create_directories(dir);
    for (const auto& t : result.trials) {
      if (!t.ok()) continue;
      const auto path = dir / (transcript_name(t) + ".jsonl");
      std::filesystem::remove(path);
      for (std::size_t m = 0; m < t.records.size(); ++m) {
        append_transcript(path, {m + 1, t.records[m].first, t.records[m].second,
                                 t.records[m].outcome, utc_timestamp()});
      }
      nlohmann::ordered_json summary;
      summary["mode"] = to_string(t.strategy);
      summary["budget"] = spec.budget;
      summary["incumbent"] = t.final_incumbent();
      summary["final_value"] = t.final_value();
      summary["wall_seconds"] = t.wall_seconds;
      summary["completion"] = "budget";
      std::ofstream(dir / (transcript_name(t) + ".summary.json")) << summary.dump(2) << '\n';
    }
  }
}

bool acceptable_failure_rate(const ExperimentResult& result) {
  if (result.trials.empty()) return true;
  return static_cast<double>(result.failures) <= 0.1 * static_cast<double>(result.trials.size());
}

}  // namespace prefopt::bench
