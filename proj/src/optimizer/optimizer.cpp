#include "prefopt/optimizer.hpp"

#include <sstream>
#include <stdexcept>

namespace prefopt {

std::string to_string(Strategy strategy) {
  return strategy == Strategy::Preference ? "preference" : "random";
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Initializing:
      return "initializing";
    case Phase::Running:
      return "running";
    case Phase::Finished:
      return "finished";
  }
  return "unknown";
}

std::string to_string(CompletionReason reason) {
  switch (reason) {
    case CompletionReason::None:
      return "none";
    case CompletionReason::Budget:
      return "budget";
    case CompletionReason::UserStop:
      return "user-stop";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "preference") return Strategy::Preference;
  if (name == "random") return Strategy::Random;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

CompletionReason completion_from_string(const std::string& name) {
  if (name == "none") return CompletionReason::None;
  if (name == "budget") return CompletionReason::Budget;
  if (name == "user-stop") return CompletionReason::UserStop;
  throw std::invalid_argument("unknown completion reason '" + name + "'");
}

namespace {

bool same_records(const PreferenceDataset& a, const PreferenceDataset& b) {
  if (a.num_records() != b.num_records() || a.num_points() != b.num_points()) return false;
  for (std::size_t m = 0; m < a.num_records(); ++m) {
    const auto& ra = a.records()[m];
    const auto& rb = b.records()[m];
    if (ra.first != rb.first || ra.second != rb.second || ra.outcome != rb.outcome) return false;
  }
  return a.unique_points() == b.unique_points() && a.index_pairs() == b.index_pairs();
}

bool same_vstate(const std::optional<VariationalState>& a,
                 const std::optional<VariationalState>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->f_means == b->f_means && a->f_logscales == b->f_logscales &&
         a->gamma_means == b->gamma_means && a->gamma_logscales == b->gamma_logscales &&
         a->step_count == b->step_count;
}

}  // namespace

bool operator==(const SessionState& a, const SessionState& b) {
  return a.domain.lower() == b.domain.lower() && a.domain.upper() == b.domain.upper() &&
         a.mode == b.mode && a.budget == b.budget && a.iteration == b.iteration &&
         a.phase == b.phase && a.completion == b.completion && a.incumbent == b.incumbent &&
         same_records(a.dataset, b.dataset) && same_vstate(a.vstate, b.vstate);
}

Session::Session(Domain domain, Strategy mode, std::size_t budget, OptimizerConfig config,
                 std::uint64_t seed)
    : state_{std::move(domain), mode, budget, 0, Phase::Initializing, CompletionReason::None,
             PreferenceDataset(0), {}, std::nullopt},
      config_(std::move(config)),
      seed_(seed),
      root_(seed) {
  config_.acquisition.validate();
  config_.fit.validate();
  state_.dataset = PreferenceDataset(state_.domain.dims());
  RandomStream design_rng = root_.fork("design");
  design_ = latin_hypercube(state_.domain, initial_design_size(state_.domain.dims()), design_rng);
  state_.incumbent = design_.front();
  pending_ = PendingQuery{state_.incumbent, design_[1]};
}

std::size_t Session::total_queries() const {
  return 2 * state_.domain.dims() + state_.budget;
}

void Session::answer(PreferenceOutcome outcome) {
  if (!pending_) throw std::logic_error("no pending query to answer");
  PendingQuery query = std::move(*pending_);
  pending_.reset();
  state_.dataset.add({query.incumbent, query.challenger, outcome});
  if (outcome == PreferenceOutcome::FirstLess) state_.incumbent = query.challenger;
  incumbent_history_.push_back(state_.incumbent);

  if (state_.phase == Phase::Initializing) {
    ++ladder_next_;
    if (ladder_next_ < design_.size()) {
      pending_ = PendingQuery{state_.incumbent, design_[ladder_next_]};
      return;
    }
    state_.phase = Phase::Running;
  } else {
    ++state_.iteration;
  }
  if (state_.iteration >= state_.budget) {
    state_.phase = Phase::Finished;
    state_.completion = CompletionReason::Budget;
    return;
  }
  prepare_next();
}

void Session::prepare_next() {
  Point challenger = propose_challenger();
  pending_ = PendingQuery{state_.incumbent, std::move(challenger)};
}

Point Session::propose_challenger() {
  const std::uint64_t position = state_.iteration;
  if (state_.mode == Strategy::Random) {
    RandomStream rng = root_.fork("random").fork(position);
    return state_.domain.uniform_point(rng);
  }

  const auto& dataset = state_.dataset;
  const KernelHyperParams bounds = config_.kernel_bounds(state_.domain);
  const PreferenceModel model(dataset, bounds, config_.tie_params());
  const bool warm = state_.vstate.has_value();
  const VariationalState init = warm ? state_.vstate->extended(dataset.num_points())
                                     : VariationalState::initial(dataset.num_points(),
                                                                 state_.domain.dims());
  FitConfig fit_config = config_.fit;
  if (warm) fit_config.steps = config_.warm_fit_steps;

  std::optional<VariationalState> fitted;
  std::string last_error;
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, config_.fit_attempts);
       ++attempt) {
    fit_config.seed = root_.fork("fit").fork(position).fork(attempt).next_u64();
    try {
      fitted = fit(model, init, fit_config);
      break;
    } catch (const DivergenceError& e) {
      last_error = e.what();
    }
  }
  if (!fitted) throw DivergenceError(last_error);
  state_.vstate = std::move(fitted);

  const auto incumbent_index = dataset.find(state_.incumbent);
  RandomStream acquire_rng = root_.fork("acquire").fork(position);
  return maximize_acquisition(state_.domain, dataset, *state_.vstate, bounds, *incumbent_index,
                              config_.acquisition, acquire_rng)
      .x;
}

void Session::finish(CompletionReason reason) {
  if (state_.phase == Phase::Finished) return;
  if (state_.phase == Phase::Initializing) {
    throw std::logic_error("cannot finish during the initial ladder");
  }
  state_.phase = Phase::Finished;
  state_.completion = reason;
  pending_.reset();
}

void Session::ensure_pending() {
  if (state_.phase != Phase::Finished && !pending_) prepare_next();
}

bool Session::step(PreferenceProvider& provider) {
  if (state_.phase == Phase::Finished) return false;
  ensure_pending();
  const auto outcome = provider.compare(pending_->incumbent, pending_->challenger);
  if (!outcome) {
    if (state_.phase == Phase::Initializing) {
      throw std::runtime_error("preference provider stopped during initialization");
    }
    finish(CompletionReason::UserStop);
    return false;
  }
  answer(*outcome);
  return state_.phase != Phase::Finished;
}

Session Session::replay(Domain domain, Strategy mode, std::size_t budget, OptimizerConfig config,
                        std::uint64_t seed, const std::vector<PreferenceRecord>& records) {
  Session session(std::move(domain), mode, budget, std::move(config), seed);
  for (std::size_t m = 0; m < records.size(); ++m) {
    const auto& pending = session.pending();
    if (!pending) {
      throw ReplayMismatch("transcript has more records than the session accepts");
    }
    if (pending->incumbent != records[m].first || pending->challenger != records[m].second) {
      std::ostringstream msg;
      msg << "transcript record " << m + 1 << " does not match the replayed query";
      throw ReplayMismatch(msg.str());
    }
    session.answer(records[m].outcome);
  }
  return session;
}

std::pair<PreferenceDataset, Point> init_user_prefs(const Domain& domain,
                                                    PreferenceProvider& provider,
                                                    RandomStream& rng) {
  const auto design = latin_hypercube(domain, initial_design_size(domain.dims()), rng);
  PreferenceDataset dataset(domain.dims());
  Point incumbent = design.front();
  for (std::size_t k = 1; k < design.size(); ++k) {
    const auto outcome = provider.compare(incumbent, design[k]);
    if (!outcome) throw std::runtime_error("preference provider stopped during initialization");
    dataset.add({incumbent, design[k], *outcome});
    if (*outcome == PreferenceOutcome::FirstLess) incumbent = design[k];
  }
  return {std::move(dataset), std::move(incumbent)};
}

Session run(const Domain& domain, PreferenceProvider& provider, std::size_t budget,
            const OptimizerConfig& config, std::uint64_t seed, Strategy mode) {
  Session session(domain, mode, budget, config, seed);
  while (session.step(provider)) {
  }
  return session;
}

Session random_search_run(const Domain& domain, PreferenceProvider& provider, std::size_t budget,
                          std::uint64_t seed) {
  return run(domain, provider, budget, OptimizerConfig{}, seed, Strategy::Random);
}

}  // namespace prefopt
