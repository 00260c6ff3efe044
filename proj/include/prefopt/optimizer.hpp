#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prefopt/acquisition.hpp"
#include "prefopt/core.hpp"
#include "prefopt/likelihood.hpp"
#include "prefopt/vinfer.hpp"

namespace prefopt {

enum class Strategy { Preference, Random };
enum class Phase { Initializing, Running, Finished };
enum class CompletionReason { None, Budget, UserStop };

std::string to_string(Strategy strategy);
std::string to_string(Phase phase);
std::string to_string(CompletionReason reason);
Strategy strategy_from_string(const std::string& name);
CompletionReason completion_from_string(const std::string& name);

struct OptimizerConfig {
  // Fixed model hyperparameters.
  double beta = 1.1;
  double sigma = 0.1;
  FitConfig fit;  // fit.seed is ignored; seeds derive from the session seed
  AcquisitionConfig acquisition;
  // Step budget for refits that start from the previous posterior.
  std::size_t warm_fit_steps = 1500;
  // Fits are retried with fresh noise this many times before giving up.
  std::size_t fit_attempts = 3;

  TieModelParams tie_params() const { return {beta, sigma}; }
  KernelHyperParams kernel_bounds(const Domain& domain) const {
    return KernelHyperParams::for_domain(domain, sigma);
  }
};

/// Answers "how does the incumbent compare with the challenger?". Returning
/// nullopt asks to stop; that is honoured only after initialization.
class PreferenceProvider {
 public:
  virtual ~PreferenceProvider() = default;
  virtual std::optional<PreferenceOutcome> compare(const Point& incumbent,
                                                   const Point& challenger) = 0;
};

class FunctionProvider final : public PreferenceProvider {
 public:
  using Callback = std::function<std::optional<PreferenceOutcome>(const Point&, const Point&)>;
  explicit FunctionProvider(Callback callback) : callback_(std::move(callback)) {}
  std::optional<PreferenceOutcome> compare(const Point& incumbent,
                                           const Point& challenger) override {
    return callback_(incumbent, challenger);
  }

 private:
  Callback callback_;
};

struct PendingQuery {
  Point incumbent;
  Point challenger;
};

/// Everything that defines where a session stands.
struct SessionState {
  Domain domain;
  Strategy mode = Strategy::Preference;
  std::size_t budget = 0;
  std::size_t iteration = 0;  // loop queries answered, excludes the initial ladder
  Phase phase = Phase::Initializing;
  CompletionReason completion = CompletionReason::None;
  PreferenceDataset dataset;
  Point incumbent;
  std::optional<VariationalState> vstate;
};

bool operator==(const SessionState& a, const SessionState& b);

/// Thrown when a replayed transcript disagrees with the deterministic session.
class ReplayMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The sequential loop as a resumable state machine: initialization ladder
/// over a 2D+1 Latin hypercube, then `budget` incumbent-versus-challenger
/// queries. Every random choice is derived from the session seed and the
/// query position, so answering the same outcomes reproduces the session.
class Session {
 public:
  Session(Domain domain, Strategy mode, std::size_t budget, OptimizerConfig config,
          std::uint64_t seed);

  const SessionState& state() const { return state_; }
  const OptimizerConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  Phase phase() const { return state_.phase; }
  std::size_t iteration() const { return state_.iteration; }
  const Point& incumbent() const { return state_.incumbent; }
  const PreferenceDataset& dataset() const { return state_.dataset; }
  /// Queries answered so far, ladder included.
  std::size_t answered() const { return state_.dataset.num_records(); }
  /// 2D + budget.
  std::size_t total_queries() const;

  /// The open query. Present unless the session is finished.
  const std::optional<PendingQuery>& pending() const { return pending_; }

  /// Records the outcome of the pending query (first = incumbent), updates
  /// the incumbent on '<' and prepares the next query. Model fitting happens
  /// here. Throws std::logic_error if nothing is pending.
  void answer(PreferenceOutcome outcome);

  /// Stops early. Rejected (std::logic_error) during initialization.
  void finish(CompletionReason reason = CompletionReason::UserStop);

  /// Recomputes the pending query after a failed proposal (e.g. a diverged
  /// fit). No-op when a query is already pending or the session is finished.
  void ensure_pending();

  /// Asks the provider about the pending query and applies the answer.
  /// Returns false once the session is finished.
  bool step(PreferenceProvider& provider);

  /// Incumbent after each answered query.
  const std::vector<Point>& incumbent_history() const { return incumbent_history_; }
  /// Points of the initial design in ladder order.
  const std::vector<Point>& design() const { return design_; }

  /// Rebuilds a session by re-answering recorded comparisons, checking that
  /// each recorded pair equals the pair the session proposes.
  static Session replay(Domain domain, Strategy mode, std::size_t budget,
                        OptimizerConfig config, std::uint64_t seed,
                        const std::vector<PreferenceRecord>& records);

 private:
  void prepare_next();
  Point propose_challenger();

  SessionState state_;
  OptimizerConfig config_;
  std::uint64_t seed_;
  RandomStream root_;
  std::vector<Point> design_;
  std::size_t ladder_next_ = 1;
  std::optional<PendingQuery> pending_;
  std::vector<Point> incumbent_history_;
};

/// Initial design plus a sequential ladder: the incumbent starts at the first
/// design point and meets every later one. Produces 2D records.
std::pair<PreferenceDataset, Point> init_user_prefs(const Domain& domain,
                                                    PreferenceProvider& provider,
                                                    RandomStream& rng);

/// Runs a whole session against a provider.
Session run(const Domain& domain, PreferenceProvider& provider, std::size_t budget,
            const OptimizerConfig& config, std::uint64_t seed,
            Strategy mode = Strategy::Preference);

/// Same ladder and update rule with uniformly random challengers.
Session random_search_run(const Domain& domain, PreferenceProvider& provider, std::size_t budget,
                          std::uint64_t seed);

}  // namespace prefopt
