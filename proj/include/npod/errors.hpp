#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace npod {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A support point or coordinate fell outside the parameter box.
class BoundsError : public Error {
public:
    using Error::Error;
};

// Invalid model parameters, dose routes, or value-type invariants.
class DomainError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, std::vector<double> theta)
        : Error(what), theta_(std::move(theta)) {}
    const std::vector<double>& theta() const noexcept { return theta_; }

private:
    std::vector<double> theta_;
};

// sigma or omega evaluated to a non-positive standard deviation.
class NoiseModelError : public Error {
public:
    using Error::Error;
};

// Every support point gives zero likelihood for this subject.
class InfeasibleSubjectError : public Error {
public:
    InfeasibleSubjectError(const std::string& what, std::string subject_id)
        : Error(what), subject_id_(std::move(subject_id)) {}
    const std::string& subject_id() const noexcept { return subject_id_; }

private:
    std::string subject_id_;
};

// The weight optimizer ran out of iterations. Carries the best iterate seen.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best_weights, double kkt_residual)
        : Error(what), best_weights_(std::move(best_weights)), kkt_residual_(kkt_residual) {}
    const std::vector<double>& best_weights() const noexcept { return best_weights_; }
    double kkt_residual() const noexcept { return kkt_residual_; }

private:
    std::vector<double> best_weights_;
    double kkt_residual_;
};

// The Newton system of the weight optimizer is numerically singular.
class DegeneratePsiError : public Error {
public:
    using Error::Error;
};

// Malformed input file. line() is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& msg)
        : Error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Configuration that violates the strict schema (unknown key, wrong type).
class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace npod
