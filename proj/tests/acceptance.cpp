// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
#include "announcer/adapt.hpp"
#include "announcer/composition.hpp"
#include "announcer/director.hpp"
#include "announcer/engine.hpp"
#include "announcer/events.hpp"
#include "announcer/gateway.hpp"
#include "announcer/protocol.hpp"
#include "announcer/psl.hpp"
#include "announcer/service.hpp"
#include "announcer/shotlog.hpp"

#include "scenes.hpp"
#include "steering_sim.hpp"
#include "wire_client.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

using namespace announcer;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few violations and the total count.
class Tally {
 public:
  void check(bool ok, const std::string& what) {
    if (ok) return;
    if (++failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return failures_ == 0; }
  Outcome outcome(std::string detail) const {
    if (ok()) return {true, std::move(detail)};
    return {false, fmt::format("{} violation(s): {}", failures_, notes_)};
  }

 private:
  int failures_ = 0;
  std::string notes_;
};

std::string headless_log(EngineConfig c) {
  std::ostringstream out;
  run_headless(c, out);
  return out.str();
}

std::vector<ShotLogRecord> records_of(const std::string& text) {
  std::istringstream in(text);
  return read_shot_log(in);
}

// 1. Threshold formula and the identity (1 - i)^N = f.
Outcome threshold_formula() {
  Tally t;
  const double i = dynamic_threshold(10, 0.5);
  t.check(std::abs(i - 0.0670) <= 0.002, fmt::format("i(10, 0.5) = {}", i));
  double worst = 0.0;
  for (int n = 1; n <= 1000; ++n) {
    for (int k = 1; k <= 10; ++k) {
      const double f = k / 10.0;
      worst = std::max(worst, std::abs(std::pow(1.0 - dynamic_threshold(n, f), n) - f));
    }
  }
  t.check(worst <= 1e-12, fmt::format("identity error {:.3g}", worst));
  return t.outcome(fmt::format("i(10, 0.5) = {:.6f}, max identity error {:.2g}", i, worst));
}

// 2. Monte Carlo hit rate.
Outcome threshold_monte_carlo() {
  const double rate = verify_threshold(10, 0.5, 100000);
  return {rate >= 0.48 && rate <= 0.52, fmt::format("hit rate {:.4f} over 1e5 fetches", rate)};
}

// 3. Enumeration and look-room filtering.
Outcome spec_enumeration() {
  Tally t;
  const auto specs = enumerate_specs();
  t.check(specs.size() == 288, fmt::format("{} specs", specs.size()));
  const auto report = filter_all(specs, RuleSet{});
  for (const auto& s : report.kept) {
    t.check(!(s.profile == Profile::Right && s.screen == Screen::Right), "Right/Right survived");
  }
  // A (profile, screen) predicate removes whole 12-spec angle/size strata, so
  // the published 153 (135 removed) cannot come from such a rule.
  t.check(report.removed % 12 == 0, "removal not stratified");
  t.check((288 - 153) % 12 != 0, "published count reachable");
  t.check(report.surviving + report.removed == 288, "counts do not add up");
  return t.outcome(fmt::format("288 specs, {} survive look room ({} removed; 153 unreachable by a profile/screen rule)",
                               report.surviving, report.removed));
}

// 4. Published composition rows and the High+MS exclusion.
Outcome composition_anchors() {
  Tally t;
  const auto table = CompositionTable::defaults();
  struct Row {
    const char* spec;
    double mos;
    Grade grade;
  };
  const Row rows[] = {
      {"Eye, LS, Right on s [Left]", 5.0, Grade::Good},
      {"Eye, MCU, 3/4 Right on s [Left]", 4.83, Grade::Good},
      {"Low, LS, Left on s [Right]", 4.67, Grade::Good},
      {"Eye, MS, Left on s [Right]", 4.67, Grade::Good},
      {"Eye, LS, 3/4 Right on s [Left]", 4.67, Grade::Good},
      {"High, ELS, 3/4 Back Left on s [Right]", 3.5, Grade::Good},
      {"High, MS, Back on s [Right]", 1.83, Grade::Bad},
      {"High, MS, Front on s [Right]", 1.83, Grade::Bad},
      {"High, MS, Back on s [Left]", 1.67, Grade::Bad},
  };
  for (const auto& r : rows) {
    const auto s = parse(r.spec);
    t.check(score(s, table) == r.mos, fmt::format("{} scored {}", r.spec, score(s, table)));
    t.check(classify(s, table) == r.grade, fmt::format("{} misclassified", r.spec));
  }
  int high_ms = 0;
  for (const auto& s : enumerate_specs()) {
    if (s.angle != Angle::High || s.size != Size::MS) continue;
    ++high_ms;
    t.check(classify(s, table) == Grade::Bad, composition_key(s) + " is Good");
  }
  return t.outcome(fmt::format("{} published rows exact, {} High+MS specs all Bad", std::size(rows), high_ms));
}

// 5. Solve invariants over every template and 100 random anchors.
Outcome geometry_suite() {
  Tally t;
  const SolveMapsd maps;
  const double w = 1920.0, h = 1080.0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(-100.0, 100.0), yaw(0.0, 2.0 * std::numbers::pi), height(1.2, 2.2);
  double worst_distance = 0.0, worst_angle = 0.0, worst_pixel = 0.0, worst_height = 0.0;
  const auto specs = enumerate_specs();
  for (int a = 0; a < 100; ++a) {
    const auto anchor = make_anchor<double>({pos(rng), pos(rng)}, yaw(rng), height(rng));
    for (const auto& s : specs) {
      const auto pose = solve(s, anchor, maps);
      const Eigen::Vector2d off = (pose.position - anchor.base_point).head<2>();
      const double d = maps.distance(s.size);
      worst_distance = std::max(worst_distance, std::abs(off.norm() - d) / d);
      worst_height = std::max(worst_height, std::abs(pose.position.z() - anchor.face_point.z() - maps.height(s.angle)));
      const double bearing = std::atan2(anchor.facing.x() * off.y() - anchor.facing.y() * off.x(), anchor.facing.dot(off));
      worst_angle = std::max(worst_angle, std::abs(std::remainder(bearing - profile_angle(s.profile), 2 * std::numbers::pi)));
      const auto px = project(pose, anchor.face_point, w, h);
      const double target = s.screen == Screen::Left ? w / 3 : s.screen == Screen::Right ? 2 * w / 3 : w / 2;
      worst_pixel = std::max(worst_pixel, px.visible ? std::abs(px.pixel.x() - target) : 1e9);
    }
  }
  t.check(worst_distance <= 1e-9, fmt::format("distance rel error {:.3g}", worst_distance));
  t.check(worst_height <= 1e-9, fmt::format("height error {:.3g}", worst_height));
  t.check(worst_angle <= 1e-6, fmt::format("profile angle error {:.3g}", worst_angle));
  t.check(worst_pixel <= 1.0, fmt::format("thirds error {:.3g} px", worst_pixel));
  return t.outcome(fmt::format("28800 poses: distance {:.1g} rel, height {:.1g} m, angle {:.1g} rad, thirds {:.1g} px",
                               worst_distance, worst_height, worst_angle, worst_pixel));
}

// 6. 180-degree and introduction rules over 1000 two-subject events.
Outcome cinematography_rules() {
  Tally t;
  std::mt19937_64 scene(6);
  const DirectorConfig config;
  int planned = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const WorldState world = testing::conversation(scene);
    const auto context = testing::default_context(*world.config);
    std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
    ShotPlan plan;
    try {
      plan = plan_shots(testing::two_subject_event(), world, context, rng, config);
    } catch (const std::exception& e) {
      t.check(false, fmt::format("event {} unplanned: {}", trial, e.what()));
      continue;
    }
    ++planned;
    const auto& first = plan.shots.front();
    t.check(first.spec.size == Size::LS || first.spec.size == Size::ELS, fmt::format("event {} opens {}", trial, format(first.spec)));
    for (int id : {0, 1}) {
      const auto px = project(first.pose, anchor_of(world.avatars[id]).face_point, config.viewport_width, config.viewport_height);
      t.check(px.visible, fmt::format("event {}: subject {} out of frame", trial, id));
    }
    const Eigen::Vector3d a = world.avatars[0].position, b = world.avatars[1].position;
    const int side = line_of_action_side<double>(first.pose.position, a, b);
    t.check(side != 0, fmt::format("event {}: opening on the axis", trial));
    for (const auto& shot : plan.shots) {
      t.check(line_of_action_side<double>(shot.pose.position, a, b) == side, fmt::format("event {} crosses the line", trial));
      t.check(classify(shot.spec, *context.table) == Grade::Good, fmt::format("event {} uses a Bad shot", trial));
      t.check(lookroom_filter(shot.spec), fmt::format("event {} breaks look room", trial));
    }
  }
  return t.outcome(fmt::format("{} plans, zero violations", planned));
}

// 7. Default timing and the frequency sweep.
Outcome timing_defaults() {
  Tally t;
  EngineConfig c;
  c.duration_s = 60.0;
  const auto records = records_of(headless_log(c));
  const auto runs = phase_runs(records);
  const double rate = c.world.tick_rate;
  int holds = 0, blends = 0;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const auto n = static_cast<double>(runs[k].count);
    if (runs[k].phase == CameraPhase::Hold && runs[k].spec) {
      t.check(std::abs(n - 5.0 * rate) <= 1.0, fmt::format("hold of {} ticks", n));
      ++holds;
    } else if (runs[k].phase == CameraPhase::Blend) {
      t.check(std::abs(n - 2.0 * rate) <= 1.0, fmt::format("blend of {} ticks", n));
      ++blends;
    }
  }
  t.check(holds > 0 && blends > 0, "no completed holds or blends");
  const double ratio = realized_ratio(records);

  const auto dir = std::filesystem::temp_directory_path() / "announcer_acceptance_sweep";
  std::filesystem::remove_all(dir);
  SweepSpec spec{SweepParam::Frequency, {3.0}, EngineConfig{}, dir.string()};
  const auto rows = sweep(spec);
  const auto announced = announcements_in(read_shot_log_file(rows.front().log_path));
  t.check(announced == 3, fmt::format("frequency 3 gave {} announcements", announced));
  return t.outcome(fmt::format("{} holds of 5 s, {} blends of 2 s, ratio {:.3f}; frequency sweep 3 -> {} announcements",
                               holds, blends, ratio, announced));
}

// 8. MAUE argmax over the knot grid.
Outcome maue_argmax() {
  Tally t;
  const auto table = MAUETable::defaults();
  const double comp = mean_good_mos(EngineConfig{});
  double best = -1.0, best_t = 0.0, best_r = 0.0;
  for (const auto& tk : table.transition_curve) {
    for (const auto& rk : table.repetition_curve) {
      const double s = maue_score(tk.x, rk.x, comp, table);
      if (s > best) {
        best = s;
        best_t = tk.x;
        best_r = rk.x;
      }
    }
  }
  t.check(best_t == 2.0 && best_r == 3.0, fmt::format("argmax at ({}, {})", best_t, best_r));
  const double five = maue_score(5.0, 3.0, comp, table), zero = maue_score(0.0, 3.0, comp, table);
  t.check(five < zero, "5 s not below 0 s");
  const double at_defaults = maue_estimate(QoEConfig{}, table, comp);
  t.check(at_defaults == best, "defaults not at the maximum");
  return t.outcome(fmt::format("argmax (2 s, 3/min) = {:.3f}; 5 s {:.3f} < 0 s {:.3f}", best, five, zero));
}

// 9. Byte-identical logs for a repeated seed.
Outcome determinism() {
  Tally t;
  EngineConfig a;
  a.world.seed = 42;
  EngineConfig b = a;
  b.world.seed = 43;
  const auto first = headless_log(a);
  const auto second = headless_log(a);
  const auto other = headless_log(b);
  t.check(first == second, "same seed differs");
  t.check(first != other, "different seeds agree");
  return t.outcome(fmt::format("seed 42 twice: {} identical bytes; seed 43 differs", first.size()));
}

// 10. Feedback invariants and closed-loop steering.
Outcome feedback_loop() {
  Tally t;
  const auto table = CompositionTable::defaults();
  const auto specs = enumerate_specs();
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> kind(0, 3), length(1, 50);
  std::uniform_int_distribution<std::size_t> pick(0, specs.size() - 1);
  for (int seq = 0; seq < 10000 && t.ok(); ++seq) {
    QoEConfig c;
    PreferenceStore p;
    const int n = length(rng);
    for (int k = 0; k < n; ++k) {
      const auto fk = static_cast<FeedbackKind>(kind(rng));
      ShotSpec s = specs[pick(rng)];
      s.subject = "npc_0";
      const double before = adjusted_score(s, table, p.deltas("v"));
      const double before_t = c.transition_duration;
      apply_feedback_in_place(c, p, FeedbackEvent{fk, 0.0, format(s), "v"}, table);
      const double after = adjusted_score(s, table, p.deltas("v"));
      t.check(fk != FeedbackKind::CompUp || after >= before, "CompUp lowered a score");
      t.check(fk != FeedbackKind::CompDown || after <= before, "CompDown raised a score");
      t.check(fk != FeedbackKind::SpeedUp || c.transition_duration <= before_t, "SpeedUp lengthened transitions");
      t.check(after >= 1.0 && after <= 5.0, "score out of [1, 5]");
      t.check(c.bounds.transition.contains(c.transition_duration) && c.bounds.fetch.contains(c.fetch_period) &&
                  c.bounds.f.contains(c.f) && c.bounds.shot.contains(c.shot_duration) &&
                  c.transition_duration <= c.shot_duration,
              "config out of bounds");
    }
  }
  double worst = 0.0;
  std::string shares;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double share = testing::steered_global_share(seed, 2000);
    worst = std::max(worst, std::abs(share - 0.5));
    shares += fmt::format("{}{:.3f}", shares.empty() ? "" : " ", share);
  }
  t.check(worst <= 0.1, fmt::format("global share off by {:.3f}", worst));
  return t.outcome(fmt::format("1e4 sequences bounded and monotone; steered global share {}", shares));
}

// 11. Protocol fuzzing and snapshot replay.
Outcome service_checks() {
  Tally t;
  std::int64_t frames = 0, reconnects = 0;
  {
    ServiceOptions options{.port = 0, .wait_clients = 0, .time_scale = 4.0};
    Service service(EngineConfig{}, options);
    const int port = service.start();
    std::thread loop([&] { service.run(); });

    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> byte(0, 255), mode(0, 9), small(0, 64);
    const std::vector<std::string> seeds{
        R"({"type":"feedback","kind":"SpeedUp"})", R"({"type":"feedback","kind":"SlowDown"})",
        R"({"type":"feedback","kind":"CompUp","context":"Eye, LS, Right on npc_3 [Left]"})",
        R"({"type":"set_config","f":0.5})", R"({"type":"set_config","transition_duration":1})"};
    // A reader thread drains replies so the server never blocks on us.
    std::unique_ptr<testing::WireClient> client;
    std::atomic<bool> draining{false};
    std::thread reader;
    auto reconnect = [&] {
      if (reader.joinable()) {
        draining = false;
        reader.join();
      }
      client = std::make_unique<testing::WireClient>(port);
      draining = true;
      reader = std::thread([c = client.get(), &draining] {
        while (draining) {
          if (!c->receive(std::chrono::milliseconds(20)) && c->closed()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
      });
    };
    reconnect();
    while (frames < 100000) {
      std::string payload;
      bool sent = true;
      switch (mode(rng)) {
        case 0: {  // raw noise, header included
          std::string raw(static_cast<std::size_t>(small(rng)) + 1, '\0');
          for (auto& ch : raw) ch = static_cast<char>(byte(rng));
          sent = client->send_raw(raw);
          break;
        }
        case 1:
        case 2:
        case 3: {  // mutated valid message
          payload = seeds[static_cast<std::size_t>(small(rng)) % seeds.size()];
          const int edits = small(rng) % 4;
          for (int e = 0; e < edits; ++e) payload[static_cast<std::size_t>(small(rng)) % payload.size()] = static_cast<char>(byte(rng));
          sent = client->send_raw(encode_frame(payload));
          break;
        }
        case 4:  // valid message
          sent = client->send_raw(encode_frame(seeds[static_cast<std::size_t>(small(rng)) % seeds.size()]));
          break;
        default: {  // random bytes in a well-formed frame
          payload.resize(static_cast<std::size_t>(small(rng)));
          for (auto& ch : payload) ch = static_cast<char>(byte(rng));
          sent = client->send_raw(encode_frame(payload));
          break;
        }
      }
      ++frames;
      // Noise can announce an oversized frame (the server hangs up) or swallow
      // later frames into a long payload, so start fresh now and then.
      if (!sent || client->closed() || frames % 1000 == 0) {
        reconnect();
        ++reconnects;
      }
    }
    draining = false;
    reader.join();
    client.reset();

    testing::WireClient probe(port);
    const auto snap = probe.receive_type("snapshot", std::chrono::milliseconds(3000));
    t.check(snap.has_value(), "service unresponsive after fuzzing");
    t.check(service.ticks() > 0, "simulation stalled");
    service.stop();
    loop.join();
  }

  // Replay: serve-mode snapshots equal the headless poses at the same time.
  int compared = 0;
  {
    ServiceOptions options{.port = 0, .wait_clients = 1, .time_scale = 0.0, .duration = 60.0, .outbox_limit = 1u << 20};
    Service service(EngineConfig{}, options);
    const int port = service.start();
    std::thread loop([&] { service.run(); });
    testing::WireClient client(port);
    std::vector<json> snapshots;
    while (auto msg = client.receive(std::chrono::milliseconds(5000))) {
      if ((*msg)["type"] == "snapshot") snapshots.push_back(std::move(*msg));
    }
    loop.join();

    Engine engine{EngineConfig{}};
    std::map<double, CameraPosed> poses;
    while (!engine.done()) {
      const auto tick = engine.tick();
      poses.emplace(tick.record.t, tick.record.pose);
    }
    for (const auto& m : snapshots) {
      const auto it = poses.find(m["t"].get<double>());
      if (it == poses.end()) {
        t.check(false, "snapshot time not in the headless run");
        continue;
      }
      const auto pos = m["camera"]["pos"].get<std::vector<double>>();
      const auto focus = m["camera"]["focus"].get<std::vector<double>>();
      t.check(Eigen::Vector3d(pos[0], pos[1], pos[2]) == it->second.position &&
                  Eigen::Vector3d(focus[0], focus[1], focus[2]) == it->second.focus,
              fmt::format("pose mismatch at t={}", m["t"].get<double>()));
      ++compared;
    }
    t.check(compared == 600, fmt::format("{} snapshots compared", compared));
  }
  return t.outcome(fmt::format("{} fuzz frames over {} connections survived; {} snapshots match the headless run",
                               frames, reconnects, compared));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  struct Criterion {
    int id;
    const char* title;
    double limit_s;  // 0 = no stated limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "threshold formula", 1.0, threshold_formula},
      {2, "threshold Monte Carlo", 10.0, threshold_monte_carlo},
      {3, "spec enumeration", 0.0, spec_enumeration},
      {4, "composition anchors", 0.0, composition_anchors},
      {5, "geometry suite", 30.0, geometry_suite},
      {6, "cinematography rules", 0.0, cinematography_rules},
      {7, "timing and defaults", 0.0, timing_defaults},
      {8, "MAUE argmax", 0.0, maue_argmax},
      {9, "determinism", 20.0, determinism},
      {10, "feedback loop", 0.0, feedback_loop},
      {11, "service", 0.0, service_checks},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0.0 && elapsed > c.limit_s) {
      outcome.pass = false;
      outcome.detail += fmt::format("; exceeded {:g} s", c.limit_s);
    }
    failed += outcome.pass ? 0 : 1;
    std::cout << fmt::format("[{}] {:>2}. {}: {} ({:.2f} s)", outcome.pass ? "PASS" : "FAIL", c.id, c.title,
                             outcome.detail, elapsed)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failed),
                           criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
