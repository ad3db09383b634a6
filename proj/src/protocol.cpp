#include "announcer/protocol.hpp"

#include "announcer/errors.hpp"
#include "announcer/shotlog.hpp"

namespace announcer {

using nlohmann::json;

std::string encode_frame(std::string_view payload) {
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out.append(payload);
  return out;
}

void FrameDecoder::feed(const char* data, std::size_t size) {
  if (oversized_) return;
  buffer_.append(data, size);
}

std::optional<std::string> FrameDecoder::next() {
  if (oversized_ || buffer_.size() - offset_ < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data() + offset_);
  const std::size_t n = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) | (std::size_t{p[2]} << 8) | p[3];
  if (n > kMaxFrame) {
    oversized_ = true;
    buffer_.clear();
    offset_ = 0;
    return std::nullopt;
  }
  if (buffer_.size() - offset_ < 4 + n) return std::nullopt;
  std::string payload = buffer_.substr(offset_ + 4, n);
  offset_ += 4 + n;
  if (offset_ > 4096 && offset_ * 2 > buffer_.size()) {
    buffer_.erase(0, offset_);
    offset_ = 0;
  }
  return payload;
}

QoEConfig patched(QoEConfig config, const QoEPatch& patch) {
  if (patch.transition_duration) config.transition_duration = *patch.transition_duration;
  if (patch.shot_duration) config.shot_duration = *patch.shot_duration;
  if (patch.f) config.f = *patch.f;
  if (patch.fetch_period) config.fetch_period = *patch.fetch_period;
  if (patch.global_coefficient) config.global_coefficient = *patch.global_coefficient;
  validate(config);
  return config;
}

namespace {

double number_field(const json& msg, const char* key) {
  const auto& v = msg.at(key);
  if (!v.is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

Inbound decode_inbound(std::string_view payload, const std::string& session, double now) {
  json msg;
  try {
    msg = json::parse(payload);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!msg.is_object()) throw ProtocolError("message must be a JSON object");
  const auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) throw ProtocolError("missing string field 'type'");

  if (*type == "feedback") {
    for (const auto& item : msg.items()) {
      if (item.key() != "type" && item.key() != "kind" && item.key() != "context" && item.key() != "seq") {
        throw ProtocolError("unknown feedback field '" + item.key() + "'");
      }
    }
    const auto kind = msg.find("kind");
    if (kind == msg.end() || !kind->is_string()) throw ProtocolError("feedback needs a string 'kind'");
    const auto k = feedback_kind_from_string(kind->get<std::string>());
    if (!k) throw ProtocolError("unknown feedback kind '" + kind->get<std::string>() + "'");
    FeedbackEvent fb{*k, now, std::nullopt, session};
    if (const auto ctx = msg.find("context"); ctx != msg.end() && !ctx->is_null()) {
      if (!ctx->is_string()) throw ProtocolError("feedback 'context' must be a shot spec string");
      fb.context = ctx->get<std::string>();
    }
    if (*k == FeedbackKind::CompUp || *k == FeedbackKind::CompDown) {
      if (!fb.context) throw ProtocolError("composition feedback needs a 'context' shot spec");
      try {
        (void)parse(*fb.context);
      } catch (const ParseError& e) {
        throw ProtocolError(std::string("bad context: ") + e.what());
      }
    }
    return fb;
  }

  if (*type == "set_config") {
    QoEPatch patch;
    for (const auto& item : msg.items()) {
      const auto& key = item.key();
      if (key == "type" || key == "seq") continue;
      if (key == "transition_duration") patch.transition_duration = number_field(msg, "transition_duration");
      else if (key == "shot_duration") patch.shot_duration = number_field(msg, "shot_duration");
      else if (key == "f") patch.f = number_field(msg, "f");
      else if (key == "fetch_period") patch.fetch_period = number_field(msg, "fetch_period");
      else if (key == "global_coefficient") patch.global_coefficient = number_field(msg, "global_coefficient");
      else throw ProtocolError("unknown set_config field '" + key + "'");
    }
    return patch;
  }
  throw ProtocolError("unknown message type '" + type->dump() + "'");
}

json snapshot_message(const WorldState& world, const ShotLogRecord& record) {
  json avatars = json::array();
  for (const auto& a : world.avatars) {
    avatars.push_back({{"id", a.id},
                       {"pos", {a.position.x(), a.position.y(), a.position.z()}},
                       {"yaw", a.facing},
                       {"phase", to_string(kind_of(a.behavior))}});
  }
  const auto& p = record.pose;
  return {{"type", "snapshot"},
          {"t", record.t},
          {"avatars", std::move(avatars)},
          {"camera",
           {{"pos", {p.position.x(), p.position.y(), p.position.z()}},
            {"focus", {p.focus.x(), p.focus.y(), p.focus.z()}},
            {"fov", p.fov},
            {"mode", to_string(record.mode)},
            {"phase", to_string(record.phase)},
            {"spec", record.spec ? json(*record.spec) : json(nullptr)}}}};
}

json event_message(const Event& e) {
  json msg = {{"type", "event"}, {"id", e.id},       {"kind", to_string(e.kind)},
              {"subjects", e.subjects}, {"score", e.score}, {"t", e.timestamp}};
  if (e.region) msg["region"] = {{"x", e.region->center.x()}, {"y", e.region->center.y()}, {"r", e.region->radius}};
  return msg;
}

json shot_message(const ShotStarted& s) {
  return {{"type", "shot"}, {"event_id", s.event_id}, {"index", s.index}, {"spec", s.spec}};
}

json prompt_message(const Prompt& p) {
  json msg = {{"type", "prompt"}, {"kind", to_string(p.kind)}, {"t", p.t}};
  if (p.event_id) msg["event_id"] = *p.event_id;
  if (p.context) msg["context"] = *p.context;
  return msg;
}

json config_message(const QoEConfig& c) {
  auto pair = [](const Bounds& b) { return json::array({b.min, b.max}); };
  return {{"type", "config"},
          {"transition_duration", c.transition_duration},
          {"shot_duration", c.shot_duration},
          {"f", c.f},
          {"fetch_period", c.fetch_period},
          {"global_coefficient", c.global_coefficient},
          {"bounds",
           {{"transition", pair(c.bounds.transition)},
            {"shot", pair(c.bounds.shot)},
            {"f", pair(c.bounds.f)},
            {"fetch", pair(c.bounds.fetch)},
            {"coefficient", pair(c.bounds.coefficient)}}}};
}

json error_message(std::string_view what) { return {{"type", "error"}, {"message", std::string(what)}}; }

}  // namespace announcer
