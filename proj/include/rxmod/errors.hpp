#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rxmod {

// Base class for all rxmod errors so callers can catch the whole family.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

class UnknownUnit : public Error {
 public:
  explicit UnknownUnit(const std::string& symbol)
      : Error("unknown unit: " + symbol), symbol_(symbol) {}
  const std::string& symbol() const { return symbol_; }

 private:
  std::string symbol_;
};

// Raised when a scenario omits parameters required to close the system.
// This is the expected signal for the omitted-parameter evaluation case,
// not a crash.
class UnderSpecified : public Error {
 public:
  explicit UnderSpecified(std::vector<std::string> missing)
      : Error(make_message(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  static std::string make_message(const std::vector<std::string>& names) {
    std::string msg = "underspecified system; missing:";
    for (const auto& n : names) msg += " " + n;
    return msg;
  }
  std::vector<std::string> missing_;
};

class UnboundSymbol : public Error {
 public:
  explicit UnboundSymbol(const std::string& name)
      : Error("unbound symbol: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class NonFiniteResult : public Error {
 public:
  explicit NonFiniteResult(const std::string& msg) : Error(msg) {}
};

class NewtonDivergence : public Error {
 public:
  NewtonDivergence(int step, const std::string& msg)
      : Error("newton divergence at step " + std::to_string(step) + ": " + msg),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

class StepLimitExceeded : public Error {
 public:
  explicit StepLimitExceeded(const std::string& msg) : Error(msg) {}
};

class NonFiniteState : public Error {
 public:
  explicit NonFiniteState(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace rxmod
