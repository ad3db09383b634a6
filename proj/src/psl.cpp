#include "announcer/psl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace announcer {

ParseError::ParseError(std::size_t position, std::string token, std::vector<std::string> expected)
    : std::runtime_error([&] {
        std::string msg = "parse error at " + std::to_string(position) + " near '" + token + "', expected one of:";
        for (const auto& e : expected) msg += " " + e;
        return msg;
      }()),
      position_(position),
      token_(std::move(token)),
      expected_(std::move(expected)) {}

std::string_view to_string(Angle a) {
  switch (a) {
    case Angle::Low: return "Low";
    case Angle::Eye: return "Eye";
    case Angle::High: return "High";
  }
  return "?";
}

std::string_view to_string(Size s) {
  switch (s) {
    case Size::ECU: return "ECU";
    case Size::BCU: return "BCU";
    case Size::CU: return "CU";
    case Size::MCU: return "MCU";
    case Size::MS: return "MS";
    case Size::LS: return "LS";
    case Size::ELS: return "ELS";
  }
  return "?";
}

std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::Front: return "Front";
    case Profile::ThreeQuarterRight: return "3/4 Right";
    case Profile::Right: return "Right";
    case Profile::ThreeQuarterBackRight: return "3/4 Back Right";
    case Profile::Back: return "Back";
    case Profile::ThreeQuarterBackLeft: return "3/4 Back Left";
    case Profile::Left: return "Left";
    case Profile::ThreeQuarterLeft: return "3/4 Left";
  }
  return "?";
}

std::string_view to_string(Screen s) {
  switch (s) {
    case Screen::Left: return "Left";
    case Screen::Center: return "Center";
    case Screen::Right: return "Right";
  }
  return "?";
}

Profile mirrored(Profile p) {
  switch (p) {
    case Profile::ThreeQuarterRight: return Profile::ThreeQuarterLeft;
    case Profile::Right: return Profile::Left;
    case Profile::ThreeQuarterBackRight: return Profile::ThreeQuarterBackLeft;
    case Profile::ThreeQuarterBackLeft: return Profile::ThreeQuarterBackRight;
    case Profile::Left: return Profile::Right;
    case Profile::ThreeQuarterLeft: return Profile::ThreeQuarterRight;
    default: return p;
  }
}

Screen mirrored(Screen s) {
  if (s == Screen::Left) return Screen::Right;
  if (s == Screen::Right) return Screen::Left;
  return s;
}

namespace {

struct Token {
  enum Kind { Word, Comma, Open, Close, End } kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '/' || c == '-' || c == '.';
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == ',') {
      tokens.push_back({Token::Comma, ",", i++});
    } else if (c == '[') {
      tokens.push_back({Token::Open, "[", i++});
    } else if (c == ']') {
      tokens.push_back({Token::Close, "]", i++});
    } else if (is_word(c)) {
      const std::size_t start = i;
      while (i < text.size() && is_word(text[i])) ++i;
      tokens.push_back({Token::Word, std::string(text.substr(start, i - start)), start});
    } else {
      tokens.push_back({Token::Word, std::string(1, c), i++});
    }
  }
  tokens.push_back({Token::End, "<end>", text.size()});
  return tokens;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

template <typename Enum, std::size_t N>
std::vector<std::string> names(const std::array<Enum, N>& values) {
  std::vector<std::string> out;
  for (auto v : values) out.emplace_back(to_string(v));
  return out;
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<Enum, N>& values, std::string_view word) {
  const std::string w = lower(word);
  for (auto v : values) {
    std::string name = lower(to_string(v));
    name.erase(std::remove(name.begin(), name.end(), ' '), name.end());
    if (name == w) return v;
  }
  return std::nullopt;
}

std::optional<Profile> lookup_profile(std::string joined) {
  if (joined.rfind("34", 0) == 0) joined = "3/4" + joined.substr(2);
  if (joined == "3/4rightback") joined = "3/4backright";
  if (joined == "3/4leftback") joined = "3/4backleft";
  return lookup(kProfiles, joined);
}

bool valid_subject(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  ShotSpec run() {
    ShotSpec spec;
    spec.angle = keyword(kAngles);
    expect(Token::Comma, ",");
    spec.size = keyword(kSizes);
    expect(Token::Comma, ",");
    spec.profile = profile();
    const Token& subject = peek();
    if (subject.kind != Token::Word || !valid_subject(subject.text)) fail(subject, {"<subject>"});
    spec.subject = subject.text;
    ++at_;
    if (peek().kind == Token::Open) {
      ++at_;
      spec.screen = keyword(kScreens);
      expect(Token::Close, "]");
    } else {
      spec.screen = Screen::Center;
    }
    if (peek().kind != Token::End) fail(peek(), {"[", "<end>"});
    return spec;
  }

 private:
  const Token& peek() const { return tokens_[at_]; }

  [[noreturn]] void fail(const Token& t, std::vector<std::string> expected) const {
    throw ParseError(t.pos, t.text, std::move(expected));
  }

  void expect(Token::Kind kind, const char* text) {
    if (peek().kind != kind) fail(peek(), {text});
    ++at_;
  }

  template <typename Enum, std::size_t N>
  Enum keyword(const std::array<Enum, N>& values) {
    const Token& t = peek();
    if (t.kind == Token::Word) {
      if (auto v = lookup(values, t.text)) {
        ++at_;
        return *v;
      }
    }
    fail(t, names(values));
  }

  Profile profile() {
    const Token& first = peek();
    const std::size_t start = at_;
    std::string joined;
    std::string shown;
    std::optional<std::size_t> longest_valid;  // token index just past a valid prefix
    while (peek().kind == Token::Word && lower(peek().text) != "on") {
      joined += lower(peek().text);
      shown += (shown.empty() ? "" : " ") + peek().text;
      ++at_;
      if (lookup_profile(joined)) longest_valid = at_;
    }
    if (at_ == start) fail(first, names(kProfiles));
    const auto p = lookup_profile(joined);
    if (!p) {
      if (longest_valid) fail(tokens_[*longest_valid], {"on"});
      throw ParseError(first.pos, shown, names(kProfiles));
    }
    if (peek().kind != Token::Word) fail(peek(), {"on"});
    ++at_;  // "on"
    return *p;
  }

  std::vector<Token> tokens_;
  std::size_t at_ = 0;
};

std::string squeeze(std::string_view text) {
  std::string out = lower(text);
  out.erase(std::remove(out.begin(), out.end(), ' '), out.end());
  return out;
}

}  // namespace

std::optional<Angle> angle_from_string(std::string_view text) { return lookup(kAngles, squeeze(text)); }
std::optional<Size> size_from_string(std::string_view text) { return lookup(kSizes, squeeze(text)); }
std::optional<Profile> profile_from_string(std::string_view text) { return lookup_profile(squeeze(text)); }
std::optional<Screen> screen_from_string(std::string_view text) { return lookup(kScreens, squeeze(text)); }

ShotSpec parse(std::string_view text) { return Parser(text).run(); }

std::string format(const ShotSpec& spec) {
  std::string out;
  out.append(to_string(spec.angle)).append(", ");
  out.append(to_string(spec.size)).append(", ");
  out.append(to_string(spec.profile)).append(" on ").append(spec.subject);
  out.append(" [").append(to_string(spec.screen)).append("]");
  return out;
}

std::string composition_key(const ShotSpec& spec) {
  std::string out;
  out.append(to_string(spec.angle)).append(", ");
  out.append(to_string(spec.size)).append(", ");
  out.append(to_string(spec.profile));
  out.append(" [").append(to_string(spec.screen)).append("]");
  return out;
}

std::vector<ShotSpec> enumerate_specs() {
  std::vector<ShotSpec> specs;
  specs.reserve(288);
  for (auto angle : kAngles) {
    for (auto size : {Size::MCU, Size::MS, Size::LS, Size::ELS}) {
      for (auto profile : kProfiles) {
        for (auto screen : kScreens) specs.push_back(ShotSpec{angle, size, profile, screen, "subject"});
      }
    }
  }
  return specs;
}

std::string subject_name(int avatar_id) { return "npc_" + std::to_string(avatar_id); }

std::optional<int> subject_id(std::string_view name) {
  constexpr std::string_view prefix = "npc_";
  if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
  const auto digits = name.substr(prefix.size());
  int id = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || id < 0) return std::nullopt;
  return id;
}

void validate(const SolveMapsd& maps) {
  for (std::size_t k = 0; k < maps.size_distance.size(); ++k) {
    if (!(maps.size_distance[k] > 0.0) || (k > 0 && !(maps.size_distance[k] > maps.size_distance[k - 1]))) {
      throw ConfigError("psl.size_distance." + std::string(to_string(kSizes[k])),
                        "distances must be positive and strictly increasing from ECU to ELS");
    }
  }
  if (!(maps.fov > 0.0 && maps.fov < std::numbers::pi)) throw ConfigError("psl.fov", "must lie in (0, pi)");
  if (!(maps.aspect > 0.0)) throw ConfigError("psl.aspect", "must be positive");
}

}  // namespace announcer
