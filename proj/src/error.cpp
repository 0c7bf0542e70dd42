#include "volrec/error.hpp"

namespace volrec {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::DegenerateCovariance: return "DegenerateCovariance";
        case ErrorKind::EstimationFailure: return "EstimationFailure";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::SamplerExhausted: return "SamplerExhausted";
        case ErrorKind::ConfigurationError: return "ConfigurationError";
        case ErrorKind::DegenerateErrors: return "DegenerateErrors";
        case ErrorKind::SingularProjection: return "SingularProjection";
        case ErrorKind::InfeasibleReconciliation: return "InfeasibleReconciliation";
        case ErrorKind::DegenerateVariance: return "DegenerateVariance";
        case ErrorKind::IngestError: return "IngestError";
    }
    return "Unknown";
}

}  // namespace volrec
