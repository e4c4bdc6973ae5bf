#include "homsusp/error.hpp"

namespace homsusp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeTouchesBoundary: return "ShapeTouchesBoundary";
    case ErrorCode::MeshGenFailure: return "MeshGenFailure";
    case ErrorCode::NoParticles: return "NoParticles";
    case ErrorCode::NonMatchingFaces: return "NonMatchingFaces";
    case ErrorCode::SingularViscosity: return "SingularViscosity";
    case ErrorCode::NonTraceFreeStrain: return "NonTraceFreeStrain";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::PicardStalled: return "PicardStalled";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace homsusp
