#pragma once

#include <stdexcept>
#include <string>

namespace satokit {

// All library failures derive from Error and carry a stable machine-readable
// kind string next to the human message. The CLI maps kinds to exit codes.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

  private:
    std::string kind_;
};

#define SATOKIT_ERROR(NAME)                                                    \
    class NAME : public Error {                                               \
      public:                                                                  \
        explicit NAME(const std::string& msg) : Error(#NAME, msg) {}           \
    }

SATOKIT_ERROR(PrecisionUnderflow);
SATOKIT_ERROR(NonUnit);
SATOKIT_ERROR(NonTerminating);
SATOKIT_ERROR(DegreeNotNegative);
SATOKIT_ERROR(NotAdmissible);
SATOKIT_ERROR(InsufficientBasis);
SATOKIT_ERROR(NotQSCShape);
SATOKIT_ERROR(PairInconsistent);
SATOKIT_ERROR(ParityViolation);
SATOKIT_ERROR(ChiCancellationFailure);
SATOKIT_ERROR(NotPolynomialNoDeform);
SATOKIT_ERROR(NoRepeatedRoots);
SATOKIT_ERROR(CoincidentPoints);
SATOKIT_ERROR(OracleMismatch);
SATOKIT_ERROR(RootBranch);
SATOKIT_ERROR(GenusTooSmall);
SATOKIT_ERROR(DimensionMismatch);
SATOKIT_ERROR(BadInput);

#undef SATOKIT_ERROR

} // namespace satokit
