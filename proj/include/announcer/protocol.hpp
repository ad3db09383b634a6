#pragma once

#include "announcer/adapt.hpp"
#include "announcer/engine.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace announcer {

/// Frames are a 4-byte big-endian payload length followed by UTF-8 JSON.
inline constexpr std::size_t kMaxFrame = 1u << 20;

std::string encode_frame(std::string_view payload);

/// Incremental frame splitter tolerant of arbitrary input.
class FrameDecoder {
 public:
  void feed(const char* data, std::size_t size);
  /// Next complete payload, if any.
  std::optional<std::string> next();
  /// Set once a header announced a payload above kMaxFrame; the stream cannot resync.
  bool oversized() const { return oversized_; }

 private:
  std::string buffer_;
  std::size_t offset_ = 0;
  bool oversized_ = false;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Partial QoE update carried by set_config.
struct QoEPatch {
  std::optional<double> transition_duration;
  std::optional<double> shot_duration;
  std::optional<double> f;
  std::optional<double> fetch_period;
  std::optional<double> global_coefficient;
};

/// Throws ConfigError when the patched values violate the config invariants.
QoEConfig patched(QoEConfig config, const QoEPatch& patch);

using Inbound = std::variant<FeedbackEvent, QoEPatch>;

/// Decodes one inbound payload ("feedback" or "set_config"). Throws
/// ProtocolError for anything else, including unknown tags and bad fields.
Inbound decode_inbound(std::string_view payload, const std::string& session, double now);

nlohmann::json snapshot_message(const WorldState& world, const ShotLogRecord& record);
nlohmann::json event_message(const Event& event);
nlohmann::json shot_message(const ShotStarted& shot);
nlohmann::json prompt_message(const Prompt& prompt);
nlohmann::json config_message(const QoEConfig& config);
nlohmann::json error_message(std::string_view what);

}  // namespace announcer
