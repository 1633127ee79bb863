#include "kronopt/error.hpp"

namespace kronopt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::SingularFactor: return "SingularFactor";
    case ErrorKind::DimError: return "DimError";
    case ErrorKind::DivergentScale: return "DivergentScale";
    case ErrorKind::ZeroTrace: return "ZeroTrace";
    case ErrorKind::NonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorKind::NonPositiveScale: return "NonPositiveScale";
    case ErrorKind::SizeGuard: return "SizeGuard";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace kronopt
