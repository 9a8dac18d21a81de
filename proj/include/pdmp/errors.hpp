#ifndef PDMP_ERRORS_HPP
#define PDMP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pdmp {

struct UnknownFamily : std::runtime_error {
  explicit UnknownFamily(const std::string& name)
      : std::runtime_error("unknown model family: " + name) {}
};

struct BadParams : std::runtime_error {
  explicit BadParams(const std::string& what) : std::runtime_error("bad parameters: " + what) {}
};

struct ValidationFailure : std::runtime_error {
  ValidationFailure(std::string assumption_, std::string witness_)
      : std::runtime_error("assumption " + assumption_ + " violated at " + witness_),
        assumption(std::move(assumption_)),
        witness(std::move(witness_)) {}
  std::string assumption;
  std::string witness;
};

struct Reducible : std::runtime_error {
  explicit Reducible(const std::string& what = "generator is reducible")
      : std::runtime_error(what) {}
};

struct NonPositive : std::runtime_error {
  explicit NonPositive(const std::string& what = "invariant measure has nonpositive entries")
      : std::runtime_error(what) {}
};

struct NotReversible : std::runtime_error {
  explicit NotReversible(const std::string& what = "rates are not reversible w.r.t. mu")
      : std::runtime_error(what) {}
};

struct StepFailure : std::runtime_error {
  explicit StepFailure(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteState : std::runtime_error {
  explicit NonFiniteState(const std::string& what = "non-finite state encountered")
      : std::runtime_error(what) {}
};

struct MaxJumpsExceeded : std::runtime_error {
  explicit MaxJumpsExceeded(std::size_t cap)
      : std::runtime_error("jump count exceeded cap " + std::to_string(cap)) {}
};

struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct GridMismatch : std::runtime_error {
  explicit GridMismatch(const std::string& what = "paths live on different grids")
      : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pdmp

#endif
