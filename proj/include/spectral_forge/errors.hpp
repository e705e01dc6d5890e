#pragma once

#include <stdexcept>
#include <string>

namespace spectral_forge {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SPECTRAL_FORGE_ERROR(Name)                                            \
  struct Name : Error {                                                       \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}     \
  }

SPECTRAL_FORGE_ERROR(IncompatibleBase);
SPECTRAL_FORGE_ERROR(NonIntegerSpectrum);
SPECTRAL_FORGE_ERROR(InvalidExponent);
SPECTRAL_FORGE_ERROR(NoDecayBound);
SPECTRAL_FORGE_ERROR(GramIllConditioned);
SPECTRAL_FORGE_ERROR(PropertyViolation);
SPECTRAL_FORGE_ERROR(SeparationFailure);
SPECTRAL_FORGE_ERROR(ScheduleInfeasible);
SPECTRAL_FORGE_ERROR(SupportViolation);
SPECTRAL_FORGE_ERROR(NearSingular);
SPECTRAL_FORGE_ERROR(ConfigError);
SPECTRAL_FORGE_ERROR(DomainError);

#undef SPECTRAL_FORGE_ERROR

// Thrown when a solver hits its budget. `best` is the best objective reached.
struct BudgetExhausted : Error {
  double best;
  BudgetExhausted(const std::string& what, double best_value)
      : Error("BudgetExhausted: " + what), best(best_value) {}
};

struct StageConditionFailure : Error {
  std::string which;
  double measured;
  double required;
  StageConditionFailure(const std::string& which_, double measured_, double required_)
      : Error("StageConditionFailure: " + which_ + " measured " + std::to_string(measured_) +
              " required < " + std::to_string(required_)),
        which(which_), measured(measured_), required(required_) {}
};

inline void require_exponent(double p, double min_p = 1.0) {
  if (!(p >= min_p)) throw InvalidExponent("p = " + std::to_string(p));
}

}  // namespace spectral_forge
