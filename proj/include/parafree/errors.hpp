#pragma once

#include <stdexcept>
#include <string>

namespace parafree {

// Every failure the library reports derives from Error so callers can catch
// one type at the boundary (the CLI maps them to exit codes).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PARAFREE_ERROR(Name)                          \
    class Name : public Error {                       \
    public:                                           \
        explicit Name(const std::string& what)        \
            : Error(std::string(#Name ": ") + what) {} \
    }

PARAFREE_ERROR(InvalidGrid);
PARAFREE_ERROR(RegionOutOfRange);
PARAFREE_ERROR(DegenerateDenominator);
PARAFREE_ERROR(NoConvergence);
PARAFREE_ERROR(IncompatibleData);
PARAFREE_ERROR(EllipticityViolated);
PARAFREE_ERROR(InvalidArgument);
PARAFREE_ERROR(InadmissibleRadii);
PARAFREE_ERROR(InsufficientRadii);
PARAFREE_ERROR(PoorFit);
PARAFREE_ERROR(NotConverged);
PARAFREE_ERROR(InsufficientPoints);
PARAFREE_ERROR(InconsistentDirections);
PARAFREE_ERROR(ConfigError);

#undef PARAFREE_ERROR

}  // namespace parafree
