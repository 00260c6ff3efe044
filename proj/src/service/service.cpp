#include "prefopt/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "prefopt/session_log.hpp"

namespace prefopt::service {

namespace {

Response error(int status, const std::string& message) { return {status, json{{"error", message}}}; }

json optimizer_to_json(const OptimizerConfig& c) {
  return {{"beta", c.beta},
          {"sigma", c.sigma},
          {"fit_steps", c.fit.steps},
          {"warm_fit_steps", c.warm_fit_steps},
          {"samples_per_step", c.fit.samples_per_step},
          {"learning_rate", c.fit.learning_rate},
          {"posterior_samples", c.acquisition.posterior_samples},
          {"candidate_count", c.acquisition.candidate_count},
          {"refine_top_k", c.acquisition.refine_top_k},
          {"refine_steps", c.acquisition.refine_steps}};
}

OptimizerConfig optimizer_from_json(const json& j, OptimizerConfig c) {
  c.beta = j.value("beta", c.beta);
  c.sigma = j.value("sigma", c.sigma);
  c.fit.steps = j.value("fit_steps", c.fit.steps);
  c.warm_fit_steps = j.value("warm_fit_steps", c.warm_fit_steps);
  c.fit.samples_per_step = j.value("samples_per_step", c.fit.samples_per_step);
  c.fit.learning_rate = j.value("learning_rate", c.fit.learning_rate);
  c.acquisition.posterior_samples = j.value("posterior_samples", c.acquisition.posterior_samples);
  c.acquisition.candidate_count = j.value("candidate_count", c.acquisition.candidate_count);
  c.acquisition.refine_top_k = j.value("refine_top_k", c.acquisition.refine_top_k);
  c.acquisition.refine_steps = j.value("refine_steps", c.acquisition.refine_steps);
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string image_url(const std::string& session, const std::string& which,
                      const std::string& side) {
  return "/images/" + session + "/" + which + "/" + side;
}

}  // namespace

PreferenceOutcome verdict_to_outcome(const std::string& verdict, bool incumbent_on_left) {
  if (verdict == "tie") return PreferenceOutcome::Equivalent;
  if (verdict != "left" && verdict != "right") {
    throw std::invalid_argument("verdict must be left, right or tie");
  }
  const bool chose_left = verdict == "left";
  const bool chose_incumbent = chose_left == incumbent_on_left;
  return chose_incumbent ? PreferenceOutcome::FirstGreater : PreferenceOutcome::FirstLess;
}

bool SessionResource::incumbent_on_left(std::size_t query) const {
  if (!randomize_slots) return false;
  return (RandomStream(seed).fork("slots").fork(query).next_u64() & 1U) != 0;
}

SessionService::SessionService(ServiceConfig config)
    : config_(std::move(config)), id_stream_(config_.seed ^ std::random_device{}()) {
  config_.render.validate();
  std::filesystem::create_directories(config_.data_dir / "sessions");
  std::filesystem::create_directories(config_.data_dir / "plans");
}

SessionService::~SessionService() = default;

std::filesystem::path SessionService::session_dir(const std::string& id) const {
  return config_.data_dir / "sessions" / id;
}

std::filesystem::path SessionService::plan_path(const std::string& id) const {
  return config_.data_dir / "plans" / (id + ".json");
}

std::string SessionService::new_id() {
  std::lock_guard lock(id_mutex_);
  while (true) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(id_stream_.next_u64()));
    std::string id(buf);
    if (!std::filesystem::exists(session_dir(id)) && !std::filesystem::exists(plan_path(id))) {
      return id;
    }
  }
}

std::vector<std::uint8_t> SessionService::render_png(const Point& x) {
  {
    std::lock_guard lock(cache_mutex_);
    auto it = image_cache_.find(x);
    if (it != image_cache_.end()) return it->second;
  }
  auto png = fractal::encode_png(
      fractal::render(fractal::ColoringParams::from_vector(x), config_.render));
  std::lock_guard lock(cache_mutex_);
  if (image_cache_.size() > 512) image_cache_.clear();
  image_cache_.emplace(x, png);
  return png;
}

std::shared_ptr<SessionResource> SessionService::new_session(Strategy strategy, bool blinded,
                                                             bool randomize_slots,
                                                             std::size_t budget,
                                                             const std::string& plan_id) {
  auto res = std::make_shared<SessionResource>();
  res->id = new_id();
  res->plan_id = plan_id;
  res->strategy = strategy;
  res->blinded = blinded;
  res->randomize_slots = randomize_slots;
  res->seed = mix64(config_.seed ^ mix64(std::stoull(res->id, nullptr, 16)));
  res->created = res->updated = utc_timestamp();
  res->session = std::make_unique<Session>(fractal::coloring_domain(), strategy, budget,
                                           config_.optimizer, res->seed);

  const auto dir = session_dir(res->id);
  std::filesystem::create_directories(dir);
  json header{{"id", res->id},
              {"plan_id", plan_id},
              {"strategy", to_string(strategy)},
              {"blinded", blinded},
              {"randomize_slots", randomize_slots},
              {"budget", budget},
              {"seed", res->seed},
              {"created", res->created},
              {"optimizer", optimizer_to_json(config_.optimizer)}};
  write_file_atomic(dir / "session.json", header.dump(2) + "\n");
  std::ofstream(dir / "transcript.jsonl", std::ios::app).close();

  std::lock_guard lock(registry_mutex_);
  sessions_[res->id] = res;
  return res;
}

std::shared_ptr<SessionResource> SessionService::load_session(const std::string& id) {
  const auto dir = session_dir(id);
  if (!std::filesystem::exists(dir / "session.json")) return nullptr;
  const json header = json::parse(read_file(dir / "session.json"));
  auto res = std::make_shared<SessionResource>();
  res->id = id;
  res->plan_id = header.value("plan_id", std::string{});
  res->strategy = strategy_from_string(header.at("strategy").get<std::string>());
  res->blinded = header.value("blinded", false);
  res->randomize_slots = header.value("randomize_slots", false);
  res->seed = header.at("seed").get<std::uint64_t>();
  res->created = header.value("created", std::string{});
  const OptimizerConfig optimizer =
      optimizer_from_json(header.value("optimizer", json::object()), config_.optimizer);

  std::vector<PreferenceRecord> records;
  std::string last_update = res->created;
  for (const auto& entry : read_transcript(dir / "transcript.jsonl")) {
    records.push_back(entry.record());
    last_update = entry.timestamp;
  }
  res->session = std::make_unique<Session>(Session::replay(fractal::coloring_domain(),
                                                           res->strategy,
                                                           header.at("budget").get<std::size_t>(),
                                                           optimizer, res->seed, records));
  res->updated = last_update;
  if (std::filesystem::exists(dir / "status.json")) {
    const json status = json::parse(read_file(dir / "status.json"));
    const auto reason = completion_from_string(status.at("completion").get<std::string>());
    if (res->session->phase() != Phase::Finished) res->session->finish(reason);
    res->updated = status.value("updated", res->updated);
  }
  return res;
}

std::shared_ptr<SessionResource> SessionService::find_session(const std::string& id) {
  if (!valid_id(id)) return nullptr;
  {
    std::lock_guard lock(registry_mutex_);
    auto it = sessions_.find(id);
    if (it != sessions_.end()) return it->second;
  }
  auto loaded = load_session(id);
  if (!loaded) return nullptr;
  std::lock_guard lock(registry_mutex_);
  auto [it, inserted] = sessions_.emplace(id, loaded);
  return it->second;
}

bool SessionService::strategy_revealed(const SessionResource& res) {
  if (!res.blinded) return true;
  if (res.plan_id.empty()) return false;
  std::lock_guard lock(plan_mutex_);
  const auto plan = load_plan(res.plan_id);
  return plan && !plan->final.verdict.empty();
}

json SessionService::pair_payload(const SessionResource& res) {
  const Session& s = *res.session;
  const std::size_t query = s.answered() + 1;
  const bool left_incumbent = res.incumbent_on_left(query);
  const auto& pending = *s.pending();
  const Point& left = left_incumbent ? pending.incumbent : pending.challenger;
  const Point& right = left_incumbent ? pending.challenger : pending.incumbent;
  const std::string q = std::to_string(query);
  json j{{"session", res.id},
         {"iteration", query},
         {"budget", s.state().budget},
         {"total_queries", s.total_queries()},
         {"phase", to_string(s.phase())},
         {"can_finish", s.phase() == Phase::Running},
         {"left", {{"image", image_url(res.id, q, "left")}, {"params", left}}},
         {"right", {{"image", image_url(res.id, q, "right")}, {"params", right}}}};
  return j;
}

json SessionService::summary_payload(const SessionResource& res) {
  const Session& s = *res.session;
  json j{{"session", res.id},
         {"phase", to_string(s.phase())},
         {"completion", to_string(s.state().completion)},
         {"answered", s.answered()},
         {"iteration", s.iteration()},
         {"budget", s.state().budget},
         {"incumbent",
          {{"params", s.incumbent()}, {"image", image_url(res.id, "best", "incumbent")}}}};
  if (strategy_revealed(res)) j["strategy"] = to_string(res.strategy);
  return j;
}

json SessionService::status_payload(const SessionResource& res) {
  const Session& s = *res.session;
  json j{{"session", res.id},
         {"phase", to_string(s.phase())},
         {"completion", to_string(s.state().completion)},
         {"answered", s.answered()},
         {"iteration", s.iteration()},
         {"budget", s.state().budget},
         {"total_queries", s.total_queries()},
         {"can_finish", s.phase() == Phase::Running},
         {"blinded", res.blinded},
         {"created", res.created},
         {"updated", res.updated}};
  if (!res.plan_id.empty()) j["plan"] = res.plan_id;
  if (strategy_revealed(res)) j["strategy"] = to_string(res.strategy);
  if (s.phase() == Phase::Finished) j["summary"] = summary_payload(res);
  return j;
}

Response SessionService::create_session(const json& request) {
  if (!request.is_object()) return error(400, "request body must be a JSON object");
  const auto budget_it = request.find("budget");
  if (budget_it == request.end() || !budget_it->is_number_integer() ||
      budget_it->get<long long>() < 1) {
    return error(400, "budget must be an integer >= 1");
  }
  const std::string mode = request.value("strategy", std::string("blinded"));
  bool blinded = false;
  Strategy strategy = Strategy::Preference;
  if (mode == "blinded") {
    blinded = true;
    std::lock_guard lock(id_mutex_);
    strategy = (id_stream_.next_u64() & 1U) ? Strategy::Random : Strategy::Preference;
  } else {
    try {
      strategy = strategy_from_string(mode);
    } catch (const std::invalid_argument&) {
      return error(400, "unknown strategy");
    }
  }
  const bool randomize_slots = request.value("randomize_slots", false);
  auto res = new_session(strategy, blinded, randomize_slots,
                         static_cast<std::size_t>(budget_it->get<long long>()), "");
  std::lock_guard lock(res->mutex);
  json body{{"id", res->id}, {"pair", pair_payload(*res)}};
  if (!blinded) body["strategy"] = to_string(strategy);
  return {201, body};
}

Response SessionService::get_session(const std::string& id) {
  auto res = find_session(id);
  if (!res) return error(404, "unknown session");
  std::lock_guard lock(res->mutex);
  return {200, status_payload(*res)};
}

Response SessionService::get_pair(const std::string& id) {
  auto res = find_session(id);
  if (!res) return error(404, "unknown session");
  std::lock_guard lock(res->mutex);
  Session& s = *res->session;
  if (s.phase() == Phase::Finished) {
    return {409, json{{"error", "session is finished"}, {"summary", summary_payload(*res)}}};
  }
  try {
    s.ensure_pending();
  } catch (const std::exception& e) {
    return error(503, std::string("model update failed, retry: ") + e.what());
  }
  return {200, pair_payload(*res)};
}

Response SessionService::submit_preference(const std::string& id, const json& request) {
  auto res = find_session(id);
  if (!res) return error(404, "unknown session");
  if (!request.is_object() || !request.contains("verdict") || !request["verdict"].is_string()) {
    return error(400, "body must contain verdict: left, right or tie");
  }
  std::lock_guard lock(res->mutex);
  Session& s = *res->session;
  if (s.phase() == Phase::Finished) {
    return {409, json{{"error", "session is finished"}, {"summary", summary_payload(*res)}}};
  }
  const std::size_t query = s.answered() + 1;
  if (request.contains("iteration")) {
    if (!request["iteration"].is_number_integer() ||
        request["iteration"].get<long long>() != static_cast<long long>(query)) {
      return error(409, "iteration already answered or not yet open");
    }
  }
  try {
    s.ensure_pending();
  } catch (const std::exception& e) {
    return error(503, std::string("model update failed, retry: ") + e.what());
  }
  PreferenceOutcome outcome;
  try {
    outcome = verdict_to_outcome(request["verdict"].get<std::string>(),
                                 res->incumbent_on_left(query));
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  }
  const auto& pending = *s.pending();
  TranscriptEntry entry{query, pending.incumbent, pending.challenger, outcome, utc_timestamp()};
  append_transcript(session_dir(res->id) / "transcript.jsonl", entry);
  res->updated = entry.timestamp;
  try {
    s.answer(outcome);
  } catch (const std::exception& e) {
    // The answer is recorded; the next query is recomputed on the next request.
    return error(503, std::string("answer recorded, model update failed: ") + e.what());
  }
  if (s.phase() == Phase::Finished) return {200, json{{"finished", true}, {"summary", summary_payload(*res)}}};
  return {200, json{{"finished", false}, {"pair", pair_payload(*res)}}};
}

Response SessionService::finish_session(const std::string& id) {
  auto res = find_session(id);
  if (!res) return error(404, "unknown session");
  std::lock_guard lock(res->mutex);
  Session& s = *res->session;
  if (s.phase() == Phase::Initializing) {
    return error(409, "cannot finish before the initial comparisons are complete");
  }
  if (s.phase() != Phase::Finished) {
    s.finish(CompletionReason::UserStop);
    res->updated = utc_timestamp();
    json status{{"completion", to_string(CompletionReason::UserStop)},
                {"answered", s.answered()},
                {"updated", res->updated}};
    write_file_atomic(session_dir(res->id) / "status.json", status.dump(2) + "\n");
  }
  return {200, summary_payload(*res)};
}

Response SessionService::gallery(const std::string& id) {
  auto res = find_session(id);
  if (!res) return error(404, "unknown session");
  std::lock_guard lock(res->mutex);
  RandomStream rng = RandomStream(res->seed).fork("gallery");
  const Domain domain = fractal::coloring_domain();
  json images = json::array();
  for (std::size_t k = 0; k < config_.gallery_size; ++k) {
    const Point x = domain.uniform_point(rng);
    images.push_back({{"image", image_url(res->id, "gallery", std::to_string(k))}, {"params", x}});
  }
  return {200, json{{"session", res->id}, {"images", images}}};
}

std::optional<std::vector<std::uint8_t>> SessionService::image(const std::string& session_id,
                                                               const std::string& which,
                                                               const std::string& side) {
  auto res = find_session(session_id);
  if (!res) return std::nullopt;
  Point x;
  {
    std::lock_guard lock(res->mutex);
    const Session& s = *res->session;
    if (which == "best") {
      if (side != "incumbent") return std::nullopt;
      x = s.incumbent();
    } else if (which == "gallery") {
      std::size_t k = 0;
      try {
        k = std::stoul(side);
      } catch (const std::exception&) {
        return std::nullopt;
      }
      if (k >= config_.gallery_size) return std::nullopt;
      RandomStream rng = RandomStream(res->seed).fork("gallery");
      const Domain domain = fractal::coloring_domain();
      for (std::size_t i = 0; i <= k; ++i) x = domain.uniform_point(rng);
    } else {
      if (side != "left" && side != "right") return std::nullopt;
      std::size_t query = 0;
      try {
        query = std::stoul(which);
      } catch (const std::exception&) {
        return std::nullopt;
      }
      if (query == 0) return std::nullopt;
      Point incumbent, challenger;
      if (query <= s.answered()) {
        const auto& rec = s.dataset().records()[query - 1];
        incumbent = rec.first;
        challenger = rec.second;
      } else if (query == s.answered() + 1 && s.pending()) {
        incumbent = s.pending()->incumbent;
        challenger = s.pending()->challenger;
      } else {
        return std::nullopt;
      }
      const bool left_incumbent = res->incumbent_on_left(query);
      x = (side == "left") == left_incumbent ? incumbent : challenger;
    }
  }
  return render_png(x);
}

std::optional<StudyPlan> SessionService::load_plan(const std::string& id) {
  if (!valid_id(id)) return std::nullopt;
  const auto path = plan_path(id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  const json j = json::parse(read_file(path));
  StudyPlan plan;
  plan.id = id;
  plan.budget = j.at("budget").get<std::size_t>();
  plan.sessions_per_strategy = j.at("sessions_per_strategy").get<std::size_t>();
  plan.blinded = j.at("blinded").get<bool>();
  plan.incumbent_swap = j.at("slot_swap").get<bool>();
  plan.sessions = j.at("sessions").get<std::vector<std::string>>();
  plan.created = j.value("created", std::string{});
  if (j.contains("final")) {
    const auto& f = j["final"];
    plan.final.left_session = f.value("left_session", std::string{});
    plan.final.right_session = f.value("right_session", std::string{});
    plan.final.verdict = f.value("verdict", std::string{});
    plan.final.recorded = f.value("recorded", std::string{});
  }
  return plan;
}

void SessionService::save_plan(const StudyPlan& plan) {
  json j{{"id", plan.id},
         {"budget", plan.budget},
         {"sessions_per_strategy", plan.sessions_per_strategy},
         {"blinded", plan.blinded},
         {"slot_swap", plan.incumbent_swap},
         {"sessions", plan.sessions},
         {"created", plan.created}};
  if (!plan.final.left_session.empty()) {
    j["final"] = {{"left_session", plan.final.left_session},
                  {"right_session", plan.final.right_session},
                  {"verdict", plan.final.verdict},
                  {"recorded", plan.final.recorded}};
  }
  write_file_atomic(plan_path(plan.id), j.dump(2) + "\n");
}

Response SessionService::create_plan(const json& request) {
  if (!request.is_object()) return error(400, "request body must be a JSON object");
  const auto budget_it = request.find("budget");
  if (budget_it == request.end() || !budget_it->is_number_integer() ||
      budget_it->get<long long>() < 1) {
    return error(400, "budget must be an integer >= 1");
  }
  const auto count = request.value("sessions_per_strategy", 1LL);
  if (count < 1) return error(400, "sessions_per_strategy must be >= 1");

  StudyPlan plan;
  plan.id = new_id();
  plan.budget = static_cast<std::size_t>(budget_it->get<long long>());
  plan.sessions_per_strategy = static_cast<std::size_t>(count);
  plan.blinded = request.value("blinded", true);
  plan.created = utc_timestamp();
  const bool randomize_slots = request.value("randomize_slots", false);

  RandomStream rng(mix64(config_.seed ^ mix64(std::stoull(plan.id, nullptr, 16))));
  plan.incumbent_swap = (rng.next_u64() & 1U) != 0;
  std::vector<Strategy> order;
  for (std::size_t k = 0; k < plan.sessions_per_strategy; ++k) {
    order.push_back(Strategy::Preference);
    order.push_back(Strategy::Random);
  }
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  for (Strategy s : order) {
    plan.sessions.push_back(
        new_session(s, plan.blinded, randomize_slots, plan.budget, plan.id)->id);
  }
  {
    std::lock_guard lock(plan_mutex_);
    save_plan(plan);
  }
  return {201, json{{"id", plan.id}, {"sessions", plan.sessions}, {"budget", plan.budget}}};
}

Response SessionService::get_plan(const std::string& id) {
  std::optional<StudyPlan> plan;
  {
    std::lock_guard lock(plan_mutex_);
    plan = load_plan(id);
  }
  if (!plan) return error(404, "unknown plan");
  json sessions = json::array();
  for (const auto& sid : plan->sessions) {
    auto res = find_session(sid);
    if (!res) continue;
    std::lock_guard lock(res->mutex);
    sessions.push_back({{"id", sid}, {"phase", to_string(res->session->phase())}});
  }
  json j{{"id", plan->id}, {"budget", plan->budget}, {"sessions", sessions}};
  j["final_recorded"] = !plan->final.verdict.empty();
  return {200, j};
}

namespace {

struct Representative {
  std::string id;
  Strategy strategy;
  Point incumbent;
  std::size_t answered;
};

}  // namespace

Response SessionService::get_final(const std::string& id) {
  std::lock_guard plan_lock(plan_mutex_);
  auto plan = load_plan(id);
  if (!plan) return error(404, "unknown plan");

  // Representative per strategy: the finished session with the most answers.
  std::optional<Representative> best[2];
  for (const auto& sid : plan->sessions) {
    auto res = find_session(sid);
    if (!res) return error(500, "plan references a missing session");
    std::lock_guard lock(res->mutex);
    const Session& s = *res->session;
    if (s.phase() != Phase::Finished) return error(409, "not every session is finished");
    auto& slot = best[res->strategy == Strategy::Preference ? 0 : 1];
    if (!slot || s.answered() > slot->answered) {
      slot = Representative{sid, res->strategy, s.incumbent(), s.answered()};
    }
  }
  if (!best[0] || !best[1]) return error(500, "plan lacks a session for each strategy");

  if (plan->final.left_session.empty()) {
    const auto& first = plan->incumbent_swap ? *best[1] : *best[0];
    const auto& second = plan->incumbent_swap ? *best[0] : *best[1];
    plan->final.left_session = first.id;
    plan->final.right_session = second.id;
    save_plan(*plan);
  }
  auto side_payload = [&](const std::string& sid) {
    auto res = find_session(sid);
    std::lock_guard lock(res->mutex);
    return json{{"session", sid},
                {"image", image_url(sid, "best", "incumbent")},
                {"params", res->session->incumbent()}};
  };
  json j{{"plan", plan->id},
         {"left", side_payload(plan->final.left_session)},
         {"right", side_payload(plan->final.right_session)}};
  if (plan->final.verdict.empty()) {
    j["verdict"] = nullptr;
  } else {
    j["verdict"] = plan->final.verdict;
    j["recorded"] = plan->final.recorded;
    json reveal;
    for (const auto& [side, sid] : {std::pair{"left", plan->final.left_session},
                                    std::pair{"right", plan->final.right_session}}) {
      auto res = find_session(sid);
      reveal[side] = to_string(res->strategy);
    }
    if (plan->final.verdict == "tie") {
      reveal["preferred"] = "tie";
    } else {
      reveal["preferred"] = reveal[plan->final.verdict];
    }
    j["reveal"] = reveal;
  }
  return {200, j};
}

Response SessionService::post_final(const std::string& id, const json& request) {
  if (!request.is_object() || !request.contains("verdict") || !request["verdict"].is_string()) {
    return error(400, "body must contain verdict: left, right or tie");
  }
  const std::string verdict = request["verdict"].get<std::string>();
  if (verdict != "left" && verdict != "right" && verdict != "tie") {
    return error(400, "verdict must be left, right or tie");
  }
  // Establishes slots and checks completion.
  Response current = get_final(id);
  if (current.status != 200) return current;
  {
    std::lock_guard lock(plan_mutex_);
    auto plan = load_plan(id);
    if (!plan->final.verdict.empty()) {
      return {409, json{{"error", "final verdict already recorded"},
                        {"verdict", plan->final.verdict}}};
    }
    plan->final.verdict = verdict;
    plan->final.recorded = utc_timestamp();
    save_plan(*plan);
  }
  return get_final(id);
}

void SessionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& out, const Response& r) {
    out.status = r.status;
    out.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) -> std::optional<json> {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error&) {
      return std::nullopt;
    }
  };
  auto guarded = [send](auto&& fn) {
    return [send, fn](const httplib::Request& req, httplib::Response& out) {
      try {
        fn(req, out);
      } catch (const std::exception& e) {
        send(out, error(500, e.what()));
      }
    };
  };

  server.Post("/sessions", guarded([this, send, parse](const httplib::Request& req, httplib::Response& out) {
    const auto body = parse(req);
    send(out, body ? create_session(*body) : error(400, "malformed JSON"));
  }));
  server.Get(R"(/sessions/([0-9a-f]+))", guarded([this, send](const httplib::Request& req, httplib::Response& out) {
    send(out, get_session(req.matches[1]));
  }));
  server.Get(R"(/sessions/([0-9a-f]+)/pair)", guarded([this, send](const httplib::Request& req, httplib::Response& out) {
    send(out, get_pair(req.matches[1]));
  }));
  server.Post(R"(/sessions/([0-9a-f]+)/preference)", guarded([this, send, parse](const httplib::Request& req, httplib::Response& out) {
    const auto body = parse(req);
    send(out, body ? submit_preference(req.matches[1], *body) : error(400, "malformed JSON"));
  }));
  server.Post(R"(/sessions/([0-9a-f]+)/finish)", guarded([this, send](const httplib::Request& req, httplib::Response& out) {
    send(out, finish_session(req.matches[1]));
  }));
  server.Get(R"(/sessions/([0-9a-f]+)/gallery)", guarded([this, send](const httplib::Request& req, httplib::Response& out) {
    send(out, gallery(req.matches[1]));
  }));
  server.Post("/plans", guarded([this, send, parse](const httplib::Request& req, httplib::Response& out) {
    const auto body = parse(req);
    send(out, body ? create_plan(*body) : error(400, "malformed JSON"));
  }));
  server.Get(R"(/plans/([0-9a-f]+))", guarded([this, send](const httplib::Request& req, httplib::Response& out) {
    send(out, get_plan(req.matches[1]));
  }));
  server.Get(R"(/plans/([0-9a-f]+)/final)", guarded([this, send](const httplib::Request& req, httplib::Response& out) {
    send(out, get_final(req.matches[1]));
  }));
  server.Post(R"(/plans/([0-9a-f]+)/final)", guarded([this, send, parse](const httplib::Request& req, httplib::Response& out) {
    const auto body = parse(req);
    send(out, body ? post_final(req.matches[1], *body) : error(400, "malformed JSON"));
  }));
  server.Get(R"(/images/([0-9a-f]+)/([0-9a-z]+)/([0-9a-z]+))", guarded([this, send](const httplib::Request& req, httplib::Response& out) {
    const auto png = image(req.matches[1], req.matches[2], req.matches[3]);
    if (!png) {
      send(out, error(404, "unknown image"));
      return;
    }
    out.status = 200;
    out.set_content(reinterpret_cast<const char*>(png->data()), png->size(), "image/png");
  }));
  if (!config_.static_dir.empty()) server.set_mount_point("/", config_.static_dir.string());
}

}  // namespace prefopt::service
