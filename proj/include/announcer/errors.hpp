#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace announcer {

/// Invalid configuration or scenario input. `field()` names the offending entry
/// using a dotted path such as "world.pois[2].x".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Shot-language syntax error with the byte offset of the offending token and
/// the set of tokens that would have been accepted there.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, std::string token, std::vector<std::string> expected);
  std::size_t position() const noexcept { return position_; }
  const std::string& token() const noexcept { return token_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string token_;
  std::vector<std::string> expected_;
};

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace announcer
