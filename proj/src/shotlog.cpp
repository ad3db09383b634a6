#include "announcer/shotlog.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace announcer {

using json = nlohmann::ordered_json;

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("shot log: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::optional<ModeKind> mode_from_string(std::string_view text) {
  for (auto m : {ModeKind::BirdsEye, ModeKind::FirstPerson, ModeKind::ThirdPerson}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

std::optional<CameraPhase> phase_from_string(std::string_view text) {
  for (auto p : {CameraPhase::Patrol, CameraPhase::Hold, CameraPhase::Blend}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

std::string to_json_line(const ShotLogRecord& r) {
  json j;
  j["t"] = r.t;
  j["mode"] = to_string(r.mode);
  j["phase"] = to_string(r.phase);
  j["event_id"] = r.event_id ? json(*r.event_id) : json(nullptr);
  j["spec"] = r.spec ? json(*r.spec) : json(nullptr);
  j["pos"] = vec3(r.pose.position);
  j["focus"] = vec3(r.pose.focus);
  j["fov"] = r.pose.fov;
  if (!r.avatars.empty()) {
    json avatars = json::array();
    for (const auto& a : r.avatars) {
      avatars.push_back({{"id", a.id}, {"x", a.ground.x()}, {"y", a.ground.y()}, {"yaw", a.yaw}, {"h", a.height}});
    }
    j["avatars"] = std::move(avatars);
  }
  return j.dump();
}

ShotLogRecord record_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("shot log: ") + e.what());
  }
  try {
    ShotLogRecord r;
    r.t = j.at("t").get<double>();
    const auto mode = mode_from_string(j.at("mode").get<std::string>());
    const auto phase = phase_from_string(j.at("phase").get<std::string>());
    if (!mode || !phase) throw std::runtime_error("shot log: unknown mode or phase");
    r.mode = *mode;
    r.phase = *phase;
    if (!j.at("event_id").is_null()) r.event_id = j["event_id"].get<std::int64_t>();
    if (!j.at("spec").is_null()) r.spec = j["spec"].get<std::string>();
    r.pose.position = vec3(j.at("pos"));
    r.pose.focus = vec3(j.at("focus"));
    r.pose.fov = j.at("fov").get<double>();
    if (j.contains("avatars")) {
      for (const auto& a : j["avatars"]) {
        r.avatars.push_back(AvatarGlyph{a.at("id").get<int>(), {a.at("x").get<double>(), a.at("y").get<double>()},
                                        a.at("yaw").get<double>(), a.at("h").get<double>()});
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("shot log: ") + e.what());
  }
}

std::vector<ShotLogRecord> read_shot_log(std::istream& in) {
  std::vector<ShotLogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

std::vector<ShotLogRecord> read_shot_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read shot log '" + path + "'");
  return read_shot_log(in);
}

std::vector<PhaseRun> phase_runs(const std::vector<ShotLogRecord>& records) {
  std::vector<PhaseRun> runs;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    // A new hold starts on the tick that carries the avatar roster.
    const bool fresh_hold = r.phase == CameraPhase::Hold && !r.avatars.empty();
    if (!runs.empty() && !fresh_hold) {
      auto& last = runs.back();
      if (last.phase == r.phase && last.spec == r.spec && last.event_id == r.event_id) {
        ++last.count;
        continue;
      }
    }
    runs.push_back(PhaseRun{r.phase, r.event_id, r.spec, k, 1});
  }
  return runs;
}

}  // namespace announcer
