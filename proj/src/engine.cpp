#include "announcer/engine.hpp"

#include "announcer/errors.hpp"
#include "announcer/shotlog.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace announcer {

namespace {

PlanContext context_for(const EngineConfig& c) {
  PlanContext ctx;
  ctx.table = nullptr;  // bound to the engine's own copy after construction
  ctx.rules = c.rules;
  ctx.maps = c.psl;
  ctx.obstacles = c.world.obstacles;
  return ctx;
}

DirectorConfig director_config(const EngineConfig& c) {
  DirectorConfig d = c.director;
  d.shot_duration = c.qoe.shot_duration;
  d.transition_duration = c.qoe.transition_duration;
  return d;
}

std::int64_t ticks_of(double seconds, double rate) {
  return std::max<std::int64_t>(1, std::llround(seconds * rate));
}

}  // namespace

Engine::Engine(EngineConfig config)
    : config_(std::move(config)),
      world_(spawn_world(config_.world)),
      director_(director_config(config_), trace_for(config_), context_for(config_),
                derive_seed(config_.world.seed, 0xD1EC7000ULL)) {
  validate(config_);
  config_.events.f = config_.qoe.f;
  director_.context().table = &config_.table;
  director_.context().deltas = config_.preferences.deltas(active_session_);
  next_fetch_tick_ = ticks_of(config_.qoe.fetch_period, config_.world.tick_rate);
  ema_.pacing_period = config_.pacing_period;
}

bool Engine::done() const {
  return world_.tick >= std::llround(config_.duration_s * config_.world.tick_rate);
}

void Engine::refresh_director() {
  auto& d = director_.mutable_config();
  d.shot_duration = config_.qoe.shot_duration;
  d.transition_duration = config_.qoe.transition_duration;
  config_.events.f = config_.qoe.f;
  director_.context().deltas = config_.preferences.deltas(active_session_);
}

void Engine::apply(const FeedbackEvent& fb) {
  apply_feedback_in_place(config_.qoe, config_.preferences, fb, config_.table);
  active_session_ = fb.session;
  refresh_director();
}

void Engine::set_qoe(const QoEConfig& next) {
  validate(next);
  config_.qoe = next;
  refresh_director();
}

EngineTick Engine::tick() {
  EngineTick out;
  const double rate = config_.world.tick_rate;
  advance(world_, 1.0 / rate);
  const double now = world_.time;

  std::optional<Event> elected;
  if (world_.tick >= next_fetch_tick_) {
    out.fetched = true;
    for (const auto& a : world_.avatars) history_.push_back(importance(a.metrics, config_.events.weights));
    const std::size_t keep = config_.events.history_window;
    if (history_.size() > 2 * keep) history_.erase(history_.begin(), history_.end() - static_cast<std::ptrdiff_t>(keep));
    const ImportanceModel model = calibrate_model(history_, keep, {}, config_.events.sigma_floor);
    const ThresholdState state =
        ThresholdState::make(config_.qoe.f, static_cast<int>(world_.avatars.size()), model);

    FetchOptions options;
    options.global_coefficient = config_.qoe.global_coefficient;
    bool scripted_miss = false;
    if (!config_.hit_pattern.empty()) {
      const bool hit = config_.hit_pattern[static_cast<std::size_t>(fetch_cycle_) % config_.hit_pattern.size()];
      options.force_hit = hit;
      scripted_miss = !hit;
    }
    if (!scripted_miss) elected = fetch_events(world_, state, config_.events, now, options);
    if (elected) elected->id = next_event_id_++;
    out.elected = elected;
    spdlog::debug("fetch {} at t={:.2f}: cutoff {:.3f} (mu {:.3f}, sigma {:.3f}) -> {}", fetch_cycle_, now,
                  state.cutoff, model.mu, model.sigma, elected ? to_string(elected->kind) : "none");
    reset_windows(world_);
    ++fetch_cycle_;
    next_fetch_tick_ = world_.tick + ticks_of(config_.qoe.fetch_period, rate);
  }

  DirectorTick dt = director_.tick(world_, elected);
  out.record = std::move(dt.record);
  out.skipped = dt.skipped;
  if (dt.skipped) spdlog::info("t={:.2f}: event skipped ({})", now, *dt.skipped);

  if (dt.announced) {
    out.announced = dt.announced;
    ++announcements_;
    kinds_.push_back(dt.announced->kind);
    shot_index_ = 0;
    last_spec_.reset();
    spdlog::info("t={:.2f}: announcing event {} ({}, score {:.3f})", now, dt.announced->id,
                 to_string(dt.announced->kind), dt.announced->score);
    if (config_.steering.enabled) {
      steering_window_.push_back(dt.announced->kind);
      while (steering_window_.size() > config_.steering.window) steering_window_.pop_front();
      const std::vector<EventKind> window(steering_window_.begin(), steering_window_.end());
      const double next = steer_global_coefficient(window, config_.qoe.global_coefficient, config_.steering.params);
      if (next != config_.qoe.global_coefficient) {
        config_.qoe.global_coefficient = config_.qoe.bounds.coefficient.clamp(next);
        out.config_changed = true;
      }
    }
  }

  const auto& rec = out.record;
  if (rec.phase == CameraPhase::Hold && !rec.avatars.empty() && rec.spec && rec.event_id) {
    out.shot = ShotStarted{*rec.event_id, shot_index_++, *rec.spec};
    last_spec_ = rec.spec;
  }

  std::vector<EndedEvent> ended;
  if (dt.finished) ended.push_back(EndedEvent{dt.finished->id, now, last_spec_});
  out.prompts = ema_schedule(now, ema_, ended);
  return out;
}

RunSummary run_headless(const EngineConfig& config, std::ostream& log) {
  Engine engine(config);
  RunSummary summary;
  while (!engine.done()) {
    const EngineTick t = engine.tick();
    log << to_json_line(t.record) << '\n';
    ++summary.ticks;
    if (t.fetched) ++summary.fetches;
    if (t.elected) ++summary.hits;
  }
  summary.announcements = engine.announcements();
  return summary;
}

}  // namespace announcer
