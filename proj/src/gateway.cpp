#include "announcer/gateway.hpp"

#include "announcer/engine.hpp"
#include "announcer/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>

namespace announcer {

namespace {

// Frequency runs squeeze a full three-shot announcement into one fetch
// period while keeping the 2:5 transition-to-shot ratio.
constexpr double kCompressedShot = 0.2;
constexpr double kCompressedTransition = 0.08;

}  // namespace

std::optional<SweepParam> sweep_param_from_string(std::string_view text) {
  if (text == "transition" || text == "transition_duration") return SweepParam::Transition;
  if (text == "frequency" || text == "switch_frequency") return SweepParam::Frequency;
  return std::nullopt;
}

const char* to_string(SweepParam param) {
  return param == SweepParam::Transition ? "transition" : "frequency";
}

EngineConfig sweep_config(const EngineConfig& base, SweepParam param, double value) {
  EngineConfig c = base;
  c.steering.enabled = false;
  if (param == SweepParam::Transition) {
    if (!c.qoe.bounds.transition.contains(value) || value > c.qoe.shot_duration) {
      throw ConfigError("sweep.values", fmt::format("transition {} outside [{}, {}]", value,
                                                    c.qoe.bounds.transition.min,
                                                    std::min(c.qoe.bounds.transition.max, c.qoe.shot_duration)));
    }
    c.qoe.transition_duration = value;
    return c;
  }

  const double period = c.qoe.fetch_period;
  const auto cycles = static_cast<int>(std::floor(c.duration_s / period + 1e-9));
  const int k = static_cast<int>(std::lround(value));
  if (std::abs(value - k) > 1e-9 || k < 1 || k > cycles - 1) {
    throw ConfigError("sweep.values", fmt::format("frequency {} must be an integer in [1, {}]", value, cycles - 1));
  }
  // k hits spread over the first cycles - 1 fetches; the last fetch never hits
  // so the final announcement completes inside the run.
  c.hit_pattern.assign(static_cast<std::size_t>(cycles), false);
  for (int j = 0; j < k; ++j) c.hit_pattern[static_cast<std::size_t>(j * (cycles - 1) / k)] = true;
  c.qoe.shot_duration = c.qoe.bounds.shot.clamp(kCompressedShot * period);
  c.qoe.transition_duration = std::min(c.qoe.bounds.transition.clamp(kCompressedTransition * period),
                                       c.qoe.shot_duration);
  return c;
}

double mean_good_mos(const EngineConfig& config) {
  SampleConstraints constraints;
  constraints.rules = config.rules;
  constraints.sizes = {Size::MCU, Size::MS, Size::LS, Size::ELS};
  const auto pool = good_pool(config.table, constraints);
  if (pool.empty()) return 1.0;
  double total = 0.0;
  for (const auto& s : pool) total += score(s, config.table);
  return total / static_cast<double>(pool.size());
}

double realized_ratio(const std::vector<ShotLogRecord>& records) {
  const auto runs = phase_runs(records);
  double blend = 0.0, hold = 0.0;
  int blends = 0, holds = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    if (k + 1 == runs.size() && r.phase != CameraPhase::Patrol) continue;  // truncated by the run end
    if (r.phase == CameraPhase::Blend) {
      blend += static_cast<double>(r.count);
      ++blends;
    } else if (r.phase == CameraPhase::Hold && r.spec) {
      hold += static_cast<double>(r.count);
      ++holds;
    }
  }
  if (holds == 0) return std::numeric_limits<double>::quiet_NaN();
  if (blends == 0) return 0.0;
  return (blend / blends) / (hold / holds);
}

std::int64_t announcements_in(const std::vector<ShotLogRecord>& records) {
  std::set<std::int64_t> ids;
  for (const auto& r : records) {
    if (r.event_id) ids.insert(*r.event_id);
  }
  return static_cast<std::int64_t>(ids.size());
}

std::vector<SweepRow> sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw ConfigError("sweep.values", "at least one value is required");
  // Validate every value up front so a bad list fails before any run.
  std::vector<EngineConfig> configs;
  for (double v : spec.values) configs.push_back(sweep_config(spec.base, spec.param, v));

  std::filesystem::create_directories(spec.out_dir);
  const auto dir = std::filesystem::path(spec.out_dir);
  std::ofstream csv(dir / "summary.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
  csv << "value,announcements,ratio,maue\n";

  const double comp = mean_good_mos(spec.base);
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const double v = spec.values[k];
    SweepRow row;
    row.value = v;
    row.log_path = (dir / fmt::format("{}_{}.jsonl", to_string(spec.param), fmt::format("{:g}", v))).string();
    {
      std::ofstream log(row.log_path);
      if (!log) throw std::runtime_error("cannot write " + row.log_path);
      run_headless(configs[k], log);
    }
    const auto records = read_shot_log_file(row.log_path);
    row.announcements = announcements_in(records);
    row.ratio = realized_ratio(records);
    if (spec.param == SweepParam::Transition) {
      row.maue = maue_estimate(configs[k].qoe, spec.base.maue, comp, spec.base.maue_weights);
    } else {
      // Scored at the nominal transition: the compressed timing only makes
      // the desk-scale schedule fit.
      const double per_minute = v * 60.0 / spec.base.duration_s;
      row.maue = maue_score(spec.base.qoe.transition_duration, per_minute, comp, spec.base.maue,
                            spec.base.maue_weights);
    }
    csv << fmt::format("{:g},{},{:.6f},{:.6f}\n", row.value, row.announcements, row.ratio, row.maue);
    csv.flush();
    spdlog::info("sweep {}={:g}: {} announcements, ratio {:.3f}, maue {:.3f}", to_string(spec.param), v,
                 row.announcements, row.ratio, row.maue);
    rows.push_back(row);
  }
  return rows;
}

double verify_threshold(int online, double f, std::int64_t trials, std::uint64_t seed) {
  return empirical_hit_rate(online, f, trials, seed);
}

std::string storyboard_svg(const ShotLogRecord& hold, const StoryboardOptions& o) {
  const double w = o.width, h = o.height;
  std::optional<int> subject;
  if (hold.spec) {
    try {
      subject = subject_id(parse(*hold.spec).subject);
    } catch (const ParseError&) {
    }
  }

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:g}\" height=\"{1:g}\" viewBox=\"0 0 {0:g} {1:g}\">\n"
      "  <rect width=\"{0:g}\" height=\"{1:g}\" fill=\"#1f2630\"/>\n",
      w, h);
  // Avatars far from the camera first so near billboards overlap them.
  struct Billboard {
    int id;
    double depth, x, y, bw, bh;
  };
  std::vector<Billboard> boards;
  for (const auto& a : hold.avatars) {
    const auto anchor = make_anchor<double>(a.ground, a.yaw, a.height);
    const auto face = project<double>(hold.pose, anchor.face_point, w, h);
    const auto head = project<double>(hold.pose, Eigen::Vector3d(a.ground.x(), a.ground.y(), a.height), w, h);
    const auto foot = project<double>(hold.pose, Eigen::Vector3d(a.ground.x(), a.ground.y(), 0.0), w, h);
    if (face.depth <= 0.0 || head.depth <= 0.0 || foot.depth <= 0.0) continue;
    const double bh = foot.pixel.y() - head.pixel.y();
    if (!(bh > 0.0)) continue;
    const double bw = 0.28 * bh;
    const Billboard b{a.id, face.depth, face.pixel.x(), head.pixel.y(), bw, bh};
    if (b.x + bw / 2 < 0.0 || b.x - bw / 2 > w || b.y > h || b.y + bh < 0.0) continue;
    boards.push_back(b);
  }
  std::stable_sort(boards.begin(), boards.end(), [](const Billboard& l, const Billboard& r) { return l.depth > r.depth; });
  for (const auto& b : boards) {
    const bool is_subject = subject && *subject == b.id;
    svg += fmt::format(
        "  <rect class=\"{}\" data-id=\"{}\" x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
        "fill=\"{}\" fill-opacity=\"0.85\"/>\n",
        is_subject ? "avatar subject" : "avatar", b.id, b.x - b.bw / 2, b.y, b.bw, b.bh,
        is_subject ? "#f2b134" : "#6c8ebf");
  }
  for (int k = 1; k <= 2; ++k) {
    svg += fmt::format(
        "  <line class=\"third\" x1=\"{0:.3f}\" y1=\"0\" x2=\"{0:.3f}\" y2=\"{1:g}\" stroke=\"#ffffff\" "
        "stroke-opacity=\"0.5\"/>\n",
        w * k / 3.0, h);
    svg += fmt::format(
        "  <line class=\"third\" x1=\"0\" y1=\"{0:.3f}\" x2=\"{1:g}\" y2=\"{0:.3f}\" stroke=\"#ffffff\" "
        "stroke-opacity=\"0.5\"/>\n",
        h * k / 3.0, w);
  }
  const std::string caption = hold.spec ? *hold.spec : "Global view";
  std::string escaped;
  for (char c : caption) {
    if (c == '<') escaped += "&lt;";
    else if (c == '>') escaped += "&gt;";
    else if (c == '&') escaped += "&amp;";
    else escaped += c;
  }
  svg += fmt::format(
      "  <text x=\"24\" y=\"{:g}\" font-family=\"monospace\" font-size=\"32\" fill=\"#ffffff\">t={:.2f}  {}</text>\n",
      h - 24, hold.t, escaped);
  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> export_storyboard(const std::vector<ShotLogRecord>& records, const std::string& out_dir,
                                           const StoryboardOptions& options) {
  std::vector<std::string> written;
  std::size_t index = 0;
  for (const auto& r : records) {
    if (r.phase != CameraPhase::Hold || r.avatars.empty()) continue;
    if (written.empty()) std::filesystem::create_directories(out_dir);
    const auto path = (std::filesystem::path(out_dir) / fmt::format("hold_{:04d}.svg", ++index)).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << storyboard_svg(r, options);
    written.push_back(path);
  }
  return written;
}

std::string projection_golden(std::uint64_t seed, int cases, const StoryboardOptions& o) {
  using nlohmann::ordered_json;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ground(-60.0, 60.0), yaw(0.0, 2.0 * std::numbers::pi), height(1.4, 2.0),
      jitter(-6.0, 6.0);
  const auto specs = enumerate_specs();
  std::uniform_int_distribution<std::size_t> pick(0, specs.size() - 1);

  auto vec = [](const Eigen::Vector3d& v) { return ordered_json::array({v.x(), v.y(), v.z()}); };
  ordered_json doc;
  doc["width"] = o.width;
  doc["height"] = o.height;
  doc["cases"] = ordered_json::array();
  for (int k = 0; k < cases; ++k) {
    ShotSpec spec = specs[pick(rng)];
    spec.subject = "npc_0";
    const auto anchor = make_anchor<double>({ground(rng), ground(rng)}, yaw(rng), height(rng));
    const auto pose = solve(spec, anchor, o.maps);

    std::vector<Eigen::Vector3d> points{anchor.face_point, anchor.base_point};
    for (int j = 0; j < 4; ++j) points.push_back(anchor.base_point + Eigen::Vector3d(jitter(rng), jitter(rng), std::abs(jitter(rng))));
    points.push_back(2.0 * pose.position - pose.focus);  // behind the camera

    ordered_json c;
    c["spec"] = format(spec);
    c["camera"] = {{"pos", vec(pose.position)}, {"focus", vec(pose.focus)}, {"fov", pose.fov}};
    c["points"] = ordered_json::array();
    for (const auto& p : points) {
      const auto px = project<double>(pose, p, o.width, o.height);
      ordered_json entry;
      entry["world"] = vec(p);
      entry["depth"] = px.depth;
      entry["visible"] = px.visible;
      entry["pixel"] = px.depth > 0.0 ? ordered_json::array({px.pixel.x(), px.pixel.y()}) : ordered_json(nullptr);
      c["points"].push_back(std::move(entry));
    }
    doc["cases"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

}  // namespace announcer
