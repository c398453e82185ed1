#ifndef FDDLM_ERRORS_HPP
#define FDDLM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fddlm
{

// A matrix (global or a local smoother patch) could not be factorized.
struct SingularMatrixError : std::runtime_error
{
  explicit SingularMatrixError(const std::string &what) : std::runtime_error(what) {}
};

// A point lies outside the domain covered by a mesh level.
struct OutOfDomainError : std::domain_error
{
  explicit OutOfDomainError(const std::string &what) : std::domain_error(what) {}
};

// A space pairing the discretization does not admit, e.g. piecewise-constant
// multipliers combined with the H1 coupling product.
struct UnsupportedPairingError : std::invalid_argument
{
  explicit UnsupportedPairingError(const std::string &what) : std::invalid_argument(what) {}
};

// A smoother cannot run on the given operator (zero diagonal, singular patch, ...).
struct SmootherError : std::runtime_error
{
  explicit SmootherError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace fddlm

#endif
