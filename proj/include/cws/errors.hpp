#ifndef CWS_ERRORS_HPP
#define CWS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cws {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Measure construction / validation
struct NotAProbability : Error { using Error::Error; };
struct DiracAtZero : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct ZeroMass : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };

// Interaction / Cramér solver
struct DomainError : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct SingularHessian : Error { using Error::Error; };
struct DegenerateMeasure : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };

// Sampler
struct InitFailure : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };

// Analysis
struct InadmissibleMeasure : Error { using Error::Error; };
struct DegenerateFit : Error { using Error::Error; };
struct NumericInstability : Error { using Error::Error; };

// CLI / files
struct ConfigError : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct IOFailure : Error { using Error::Error; };

} // namespace cws

#endif
