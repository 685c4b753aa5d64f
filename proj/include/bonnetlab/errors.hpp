#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bonnetlab {

// Base of the library's exception taxonomy. Every error carries a short
// machine-readable code (stable, SCREAMING_SNAKE) next to the human message;
// the CLI maps codes into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// fieldcore
struct StencilError : Error {
    explicit StencilError(const std::string& m) : Error("STENCIL", m) {}
};
struct CapacityError : Error {
    explicit CapacityError(const std::string& m) : Error("CAPACITY", m) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("DOMAIN", m) {}
};

// exprlang
struct SyntaxError : Error {
    SyntaxError(const std::string& m, std::size_t offset)
        : Error("SYNTAX", m + " (byte " + std::to_string(offset) + ")"), byte_offset(offset) {}
    std::size_t byte_offset;
};
struct UnknownIdentifier : Error {
    UnknownIdentifier(const std::string& name, std::size_t offset)
        : Error("UNKNOWN_IDENTIFIER",
                "unknown identifier '" + name + "' (byte " + std::to_string(offset) + ")"),
          identifier(name), byte_offset(offset) {}
    std::string identifier;
    std::size_t byte_offset;
};
struct EvalDomainError : Error {
    EvalDomainError(const std::string& m, std::size_t offset)
        : Error("EVAL_DOMAIN", m + " (expression byte " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

// framegeom / tensorlab / bonnet
struct InvariantError : Error {
    InvariantError(std::string code, const std::string& m) : Error(std::move(code), m) {}
    explicit InvariantError(const std::string& m) : Error("INVARIANT", m) {}
};
struct UmbilicError : Error {
    explicit UmbilicError(const std::string& m) : Error("UMBILIC", m) {}
};
struct MetricError : Error {
    explicit MetricError(const std::string& m) : Error("METRIC", m) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error("SHAPE", m) {}
};
struct VanishingT : Error {
    explicit VanishingT(const std::string& m) : Error("VANISHING_T", m) {}
};
struct DegenerateMetric : Error {
    explicit DegenerateMetric(const std::string& m) : Error("DEGENERATE_METRIC", m) {}
};
struct RatioError : Error {
    explicit RatioError(const std::string& m) : Error("RATIO", m) {}
};
struct PositivityError : Error {
    explicit PositivityError(const std::string& m) : Error("POSITIVITY", m) {}
};

// solver
struct IncompatibleGradient : Error {
    explicit IncompatibleGradient(const std::string& m) : Error("INCOMPATIBLE_GRADIENT", m) {}
};
struct NoProgress : Error {
    explicit NoProgress(const std::string& m) : Error("NO_PROGRESS", m) {}
};
struct InvariantBreach : Error {
    explicit InvariantBreach(const std::string& m) : Error("INVARIANT_BREACH", m) {}
};

// cli
struct ConfigError : Error {
    ConfigError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error("IO", m) {}
};

} // namespace bonnetlab
