#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace floqscat {

enum class ErrorCode {
  InvalidArgument,
  MalformedSpec,
  IsolatedVertex,
  DimensionMismatch,
  PotentialShapeMismatch,
  EigensolverFailure,
  UnknownFamily,
  PeriodMeanNonzero,
  UnknownCondition,
  MissingWeight,
  WeightVanishes,
  StepBudgetExceeded,
  NonHermitianSample,
  QuadratureBudgetExceeded,
  NonUnitaryInput,
  NotAnEigenpair,
  SpectrumHit,
  ResonantPeriod,
  MeanNonzero,
  BoundaryContamination,
  NonNormalizedInput,
  SolverStagnation,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. The code identifies the failure class so callers
/// (and the CLI exit-status mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace floqscat
