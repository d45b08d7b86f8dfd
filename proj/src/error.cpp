#include "floqscat/error.hpp"

namespace floqscat {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedSpec: return "MalformedSpec";
    case ErrorCode::IsolatedVertex: return "IsolatedVertex";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PotentialShapeMismatch: return "PotentialShapeMismatch";
    case ErrorCode::EigensolverFailure: return "EigensolverFailure";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::PeriodMeanNonzero: return "PeriodMeanNonzero";
    case ErrorCode::UnknownCondition: return "UnknownCondition";
    case ErrorCode::MissingWeight: return "MissingWeight";
    case ErrorCode::WeightVanishes: return "WeightVanishes";
    case ErrorCode::StepBudgetExceeded: return "StepBudgetExceeded";
    case ErrorCode::NonHermitianSample: return "NonHermitianSample";
    case ErrorCode::QuadratureBudgetExceeded: return "QuadratureBudgetExceeded";
    case ErrorCode::NonUnitaryInput: return "NonUnitaryInput";
    case ErrorCode::NotAnEigenpair: return "NotAnEigenpair";
    case ErrorCode::SpectrumHit: return "SpectrumHit";
    case ErrorCode::ResonantPeriod: return "ResonantPeriod";
    case ErrorCode::MeanNonzero: return "MeanNonzero";
    case ErrorCode::BoundaryContamination: return "BoundaryContamination";
    case ErrorCode::NonNormalizedInput: return "NonNormalizedInput";
    case ErrorCode::SolverStagnation: return "SolverStagnation";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace floqscat
