#ifndef ROIAL_ERRORS_HPP
#define ROIAL_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace roial {

/// A numerical routine produced a non-finite value or a factorization failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration for the posterior mode did not reach tolerance.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double gradient_norm, int iterations)
        : NumericalError(what), gradient_norm_(gradient_norm), iterations_(iterations) {}

    [[nodiscard]] double gradient_norm() const { return gradient_norm_; }
    [[nodiscard]] int iterations() const { return iterations_; }

private:
    double gradient_norm_;
    int iterations_;
};

struct ConfigViolation {
    std::string path;
    std::string message;
};

/// Configuration failed to parse or validate. Carries every violation found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigViolation> violations);

    [[nodiscard]] const std::vector<ConfigViolation>& violations() const { return violations_; }

private:
    std::vector<ConfigViolation> violations_;
};

/// Session snapshot could not be loaded (version, checksum, config mismatch).
class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Feedback rejected by the session engine (bad label, preference on trial 1,
/// session already finished).
class FeedbackError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace roial

#endif  // ROIAL_ERRORS_HPP
