#pragma once

#include <stdexcept>
#include <string>

namespace auxiva {

/// Location of a numerical failure inside the (frame, bin, source) grid.
/// Unknown coordinates stay at -1.
struct BinContext {
  int t = -1;
  int f = -1;
  int k = -1;
  int m = -1;

  std::string describe() const;
};

inline std::string BinContext::describe() const {
  std::string out;
  auto add = [&out](const char* name, int v) {
    if (v < 0) return;
    if (!out.empty()) out += ", ";
    out += name;
    out += '=';
    out += std::to_string(v);
  };
  add("t", t);
  add("f", f);
  add("k", k);
  add("m", m);
  return out.empty() ? std::string("no context") : out;
}

/// Broken precondition (dimension mismatch, invalid parameter, bad input shape).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for numerical failures that carry a bin context.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, BinContext ctx)
      : std::runtime_error(what), ctx_(ctx) {}

  const BinContext& context() const noexcept { return ctx_; }
  void annotate(int t, int f, int k) noexcept {
    if (t >= 0) ctx_.t = t;
    if (f >= 0) ctx_.f = f;
    if (k >= 0 && ctx_.k < 0) ctx_.k = k;
  }

 private:
  BinContext ctx_;
};

/// Linear solve / inversion hit a pivot below the relative threshold.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A quadratic form or update factor that must be positive/nonzero was not.
class DegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace auxiva
