#pragma once

#include <stdexcept>
#include <string>

namespace theta_lab {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSymmetric : public Error { public: using Error::Error; };
class NotPositiveDefinite : public Error { public: using Error::Error; };
class RadiusOverflow : public Error { public: using Error::Error; };
class GridTooCoarse : public Error { public: using Error::Error; };
class DivisionUnderflow : public Error { public: using Error::Error; };
class BasePointError : public Error { public: using Error::Error; };
class SchemeDisagreement : public Error { public: using Error::Error; };
class Disconnected : public Error { public: using Error::Error; };
class ChartFailure : public Error { public: using Error::Error; };
class NonPositiveValue : public Error { public: using Error::Error; };

/// Configuration problems carry the offending field and, when known, the line.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message, int line = 0)
      : Error(format(field, message, line)), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& message, int line) {
    std::string out = "config error";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!field.empty()) out += " [" + field + "]";
    return out + ": " + message;
  }
  std::string field_;
  int line_;
};

}  // namespace theta_lab
