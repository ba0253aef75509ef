#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dks {

/// Failure classes. The CLI maps each one onto a process exit code.
enum class ErrorKind : std::uint8_t {
  config,      // malformed or inconsistent configuration
  domain,      // parameter outside its valid domain
  resolution,  // grid too coarse for the requested operation
  index,       // mode index out of range
  divergence,  // NaN/Inf produced by an integrator
  convergence, // stationarity not reached, multi-soliton state
  no_signal,   // fit failure, nothing above noise
  io,          // file missing, corrupted, or version/hash mismatch
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the integrators; carries the failing step and, for ensembles, trajectory.
class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t step, std::int64_t trajectory, const std::string& what)
      : Error(ErrorKind::divergence, what), step_(step), trajectory_(trajectory) {}
  std::int64_t step() const noexcept { return step_; }
  std::int64_t trajectory() const noexcept { return trajectory_; }

 private:
  std::int64_t step_;
  std::int64_t trajectory_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

int exit_code(ErrorKind kind) noexcept;

}  // namespace dks
