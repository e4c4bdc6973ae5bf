#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homsusp {

enum class ErrorCode {
  InvalidArgument,
  ShapeTouchesBoundary,
  MeshGenFailure,
  NoParticles,
  NonMatchingFaces,
  SingularViscosity,
  NonTraceFreeStrain,
  SolverDiverged,
  PicardStalled,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Iterative failure carrying the residual history that led to it.
class TracedError : public Error {
 public:
  TracedError(ErrorCode code, const std::string& what, std::vector<double> trace)
      : Error(code, what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace homsusp
