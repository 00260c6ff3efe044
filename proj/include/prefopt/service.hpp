#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prefopt/fractal.hpp"
#include "prefopt/optimizer.hpp"

namespace httplib {
class Server;
}

namespace prefopt::service {

using nlohmann::json;

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  fractal::RenderSpec render;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  std::size_t gallery_size = 12;
  std::filesystem::path static_dir;  // optional browser bundle
};

/// A handler result: HTTP status plus JSON body.
struct Response {
  int status = 200;
  json body;
};

/// Which point sits in which slot of a comparison.
enum class Slot { Left, Right };

/// One human-facing optimization session over the coloring domain. Owned by
/// SessionService; callers hold the mutex while touching it.
struct SessionResource {
  std::string id;
  std::string plan_id;
  Strategy strategy = Strategy::Preference;
  bool blinded = false;
  bool randomize_slots = false;
  std::uint64_t seed = 0;
  std::string created;
  std::string updated;
  std::unique_ptr<Session> session;
  std::mutex mutex;

  /// True when the incumbent is shown on the left for the given 1-based query.
  bool incumbent_on_left(std::size_t query) const;
};

struct PlanFinal {
  std::string left_session;
  std::string right_session;
  std::string verdict;  // "left", "right", "tie"; empty until recorded
  std::string recorded;
};

struct StudyPlan {
  std::string id;
  std::size_t budget = 0;
  std::size_t sessions_per_strategy = 1;
  bool blinded = true;
  bool incumbent_swap = false;  // final pair slot order
  std::vector<std::string> sessions;
  PlanFinal final;
  std::string created;
};

/// The HTTP session service. Each handler is callable directly; mount()
/// wires them to routes:
///   POST /sessions                 GET  /sessions/{id}
///   GET  /sessions/{id}/pair       POST /sessions/{id}/preference
///   POST /sessions/{id}/finish     GET  /sessions/{id}/gallery
///   POST /plans                    GET  /plans/{id}
///   GET  /plans/{id}/final         POST /plans/{id}/final
///   GET  /images/{session}/{iteration|best|gallery}/{side|index}
/// State lives under data_dir: sessions/{id}/session.json (header),
/// transcript.jsonl (one line per answered query) and status.json (early
/// finish); plans/{id}.json. Sessions are rebuilt by transcript replay.
class SessionService {
 public:
  explicit SessionService(ServiceConfig config);
  ~SessionService();

  Response create_session(const json& request);
  Response get_session(const std::string& id);
  Response get_pair(const std::string& id);
  Response submit_preference(const std::string& id, const json& request);
  Response finish_session(const std::string& id);
  Response gallery(const std::string& id);

  Response create_plan(const json& request);
  Response get_plan(const std::string& id);
  Response get_final(const std::string& id);
  Response post_final(const std::string& id, const json& request);

  /// PNG bytes for an image path below /images, or nullopt if unknown.
  std::optional<std::vector<std::uint8_t>> image(const std::string& session_id,
                                                 const std::string& which,
                                                 const std::string& side);

  void mount(httplib::Server& server);

  const ServiceConfig& config() const { return config_; }

 private:
  std::shared_ptr<SessionResource> find_session(const std::string& id);
  std::shared_ptr<SessionResource> load_session(const std::string& id);
  std::shared_ptr<SessionResource> new_session(Strategy strategy, bool blinded,
                                               bool randomize_slots, std::size_t budget,
                                               const std::string& plan_id);
  std::optional<StudyPlan> load_plan(const std::string& id);
  void save_plan(const StudyPlan& plan);

  json pair_payload(const SessionResource& res);
  json summary_payload(const SessionResource& res);
  json status_payload(const SessionResource& res);
  bool strategy_revealed(const SessionResource& res);
  std::string new_id();
  std::vector<std::uint8_t> render_png(const Point& x);

  std::filesystem::path session_dir(const std::string& id) const;
  std::filesystem::path plan_path(const std::string& id) const;

  ServiceConfig config_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<SessionResource>> sessions_;
  std::mutex plan_mutex_;
  std::mutex id_mutex_;
  RandomStream id_stream_;
  std::mutex cache_mutex_;
  std::map<Point, std::vector<std::uint8_t>> image_cache_;
};

/// Maps a left/right/tie verdict onto the incumbent-first outcome.
PreferenceOutcome verdict_to_outcome(const std::string& verdict, bool incumbent_on_left);

}  // namespace prefopt::service
