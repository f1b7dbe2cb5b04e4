#include "lelab/errors.hpp"

namespace lelab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidDomain: return "InvalidDomain";
    case ErrorKind::MeshTooFine: return "MeshTooFine";
    case ErrorKind::CenterOutsideDomain: return "CenterOutsideDomain";
    case ErrorKind::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::PositivityLost: return "PositivityLost";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::BallEscapesDomain: return "BallEscapesDomain";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::WeightDegenerate: return "WeightDegenerate";
    case ErrorKind::PointTooCloseToBoundary: return "PointTooCloseToBoundary";
    case ErrorKind::MultipleCriticalPoints: return "MultipleCriticalPoints";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::AnnulusEscapesDomain: return "AnnulusEscapesDomain";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ShootingFailed: return "ShootingFailed";
    case ErrorKind::OutsideDisk: return "OutsideDisk";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace lelab
