#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace volrec {

enum class ErrorKind {
    InvalidInput,
    DegenerateCovariance,
    EstimationFailure,
    NumericalFailure,
    SamplerExhausted,
    ConfigurationError,
    DegenerateErrors,
    SingularProjection,
    InfeasibleReconciliation,
    DegenerateVariance,
    IngestError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for everything the library throws. The kind is the
/// machine-readable part; what() carries the human context.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& m) : Error(ErrorKind::InvalidInput, m) {}
};
struct DegenerateCovariance : Error {
    explicit DegenerateCovariance(const std::string& m) : Error(ErrorKind::DegenerateCovariance, m) {}
};
struct NumericalFailure : Error {
    explicit NumericalFailure(const std::string& m) : Error(ErrorKind::NumericalFailure, m) {}
};
struct SamplerExhausted : Error {
    explicit SamplerExhausted(const std::string& m) : Error(ErrorKind::SamplerExhausted, m) {}
};
struct ConfigurationError : Error {
    explicit ConfigurationError(const std::string& m) : Error(ErrorKind::ConfigurationError, m) {}
};
struct DegenerateErrors : Error {
    explicit DegenerateErrors(const std::string& m) : Error(ErrorKind::DegenerateErrors, m) {}
};
struct SingularProjection : Error {
    explicit SingularProjection(const std::string& m) : Error(ErrorKind::SingularProjection, m) {}
};
struct InfeasibleReconciliation : Error {
    explicit InfeasibleReconciliation(const std::string& m)
        : Error(ErrorKind::InfeasibleReconciliation, m) {}
};
struct DegenerateVariance : Error {
    explicit DegenerateVariance(const std::string& m) : Error(ErrorKind::DegenerateVariance, m) {}
};

/// Estimation failures carry the stage ("marginal", "correlation", ...) and,
/// for per-asset stages, the asset index.
class EstimationFailure : public Error {
public:
    EstimationFailure(const std::string& message, std::string stage = {}, int asset = -1)
        : Error(ErrorKind::EstimationFailure, message), stage_(std::move(stage)), asset_(asset) {}

    const std::string& stage() const noexcept { return stage_; }
    int asset() const noexcept { return asset_; }

private:
    std::string stage_;
    int asset_;
};

/// Ingestion errors report the offending 1-based row (0 when not row-specific).
class IngestError : public Error {
public:
    IngestError(std::string reason, std::size_t row, const std::string& detail)
        : Error(ErrorKind::IngestError,
                reason + (row ? " at row " + std::to_string(row) : std::string()) +
                    (detail.empty() ? std::string() : ": " + detail)),
          reason_(std::move(reason)), row_(row) {}

    const std::string& reason() const noexcept { return reason_; }
    std::size_t row() const noexcept { return row_; }

private:
    std::string reason_;
    std::size_t row_;
};

}  // namespace volrec
