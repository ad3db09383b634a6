#pragma once

#include "announcer/adapt.hpp"
#include "announcer/config.hpp"
#include "announcer/director.hpp"
#include "announcer/events.hpp"
#include "announcer/world.hpp"

#include <deque>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace announcer {

struct ShotStarted {
  std::int64_t event_id = 0;
  int index = 0;
  std::string spec;
};

/// Everything observable that happened during one simulation tick.
struct EngineTick {
  ShotLogRecord record;
  bool fetched = false;
  std::optional<Event> elected;    // fetch result, announced or not
  std::optional<Event> announced;
  std::optional<std::string> skipped;
  std::optional<ShotStarted> shot;
  std::vector<Prompt> prompts;
  bool config_changed = false;     // the global coefficient moved
};

/// The full pipeline on one thread: world, fetch/election, director, steering
/// and prompt scheduling. Feedback is applied between ticks by the owner.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  EngineTick tick();
  bool done() const;

  const WorldState& world() const { return world_; }
  const EngineConfig& config() const { return config_; }
  const QoEConfig& qoe() const { return config_.qoe; }
  const PreferenceStore& preferences() const { return config_.preferences; }
  const Director& director() const { return director_; }
  std::int64_t announcements() const { return announcements_; }
  const std::vector<EventKind>& announced_kinds() const { return kinds_; }

  /// Applies viewer feedback; the session becomes the one whose preferences steer planning.
  void apply(const FeedbackEvent& fb);

  /// Replaces the live QoE values after validation (throws ConfigError).
  void set_qoe(const QoEConfig& next);

 private:
  void refresh_director();

  EngineConfig config_;
  WorldState world_;
  Director director_;
  std::vector<double> history_;
  std::int64_t next_fetch_tick_ = 0;
  std::int64_t fetch_cycle_ = 0;
  std::int64_t next_event_id_ = 1;
  std::int64_t announcements_ = 0;
  std::vector<EventKind> kinds_;
  std::deque<EventKind> steering_window_;
  EmaState ema_;
  std::string active_session_ = "default";
  int shot_index_ = 0;
  std::optional<std::string> last_spec_;
};

struct RunSummary {
  std::int64_t ticks = 0;
  std::int64_t announcements = 0;
  std::int64_t fetches = 0;
  std::int64_t hits = 0;
};

/// Runs to completion, writing one shot log line per tick.
RunSummary run_headless(const EngineConfig& config, std::ostream& log);

}  // namespace announcer
