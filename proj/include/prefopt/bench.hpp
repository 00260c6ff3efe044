#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "prefopt/optimizer.hpp"
#include "prefopt/oracles.hpp"

namespace prefopt::bench {

enum class StrategySelection { Preference, Random, Both };

StrategySelection selection_from_string(const std::string& name);
std::string to_string(StrategySelection selection);

struct ExperimentSpec {
  std::string oracle = "shekel05";
  std::vector<double> tolerances{1e-5, 1e-3, 0.1, 1.0};
  std::size_t trials = 20;
  std::size_t budget = 60;
  std::uint64_t seed = 1;  // trial k runs with seed + k
  StrategySelection strategy = StrategySelection::Both;
  std::filesystem::path output;  // empty: nothing written
  unsigned jobs = 1;
  bool write_transcripts = false;
  OptimizerConfig optimizer;

  void validate() const;
};

struct TrialResult {
  Strategy strategy = Strategy::Preference;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> trace;         // f_test(incumbent) after each answered query
  std::vector<Point> incumbents;     // incumbent after each answered query
  std::vector<PreferenceRecord> records;
  double wall_seconds = 0.0;
  std::string error;                 // non-empty when the session failed

  bool ok() const { return error.empty(); }
  double final_value() const { return trace.back(); }
  const Point& final_incumbent() const { return incumbents.back(); }
};

inline constexpr std::array<double, 7> kPercentiles{10, 25, 40, 50, 60, 75, 90};

struct SummaryRow {
  Strategy strategy = Strategy::Preference;
  double tolerance = 0.0;
  std::size_t iteration = 0;  // 1-based answered-query count
  std::array<double, kPercentiles.size()> values{};
  std::size_t trials = 0;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;  // ordered by strategy, tolerance, seed
  std::vector<SummaryRow> summary;
  std::size_t failures = 0;
};

/// Linear interpolation between order statistics (p in [0, 100]).
double percentile(std::vector<double> values, double p);

/// One session against the tolerance oracle.
TrialResult run_trial(const oracles::ScalarTestFunction& function, Strategy strategy,
                      double tolerance, std::size_t budget, std::uint64_t seed,
                      const OptimizerConfig& config);

/// All strategies x tolerances x trials, in a worker pool. Failed sessions are
/// kept with their error and left out of the summary.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::function<void(const TrialResult&)>& on_trial = {});

/// Per (strategy, tolerance, iteration) percentiles of the best-so-far value.
std::vector<SummaryRow> aggregate(const std::vector<TrialResult>& trials);

/// Writes trials.csv, summary.csv, final.csv and spec.json into spec.output.
void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result);

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialResult>& trials);
std::vector<TrialResult> read_trials_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

/// Whole-experiment pass criterion: at most 10% of sessions failed.
bool acceptable_failure_rate(const ExperimentResult& result);

}  // namespace prefopt::bench
