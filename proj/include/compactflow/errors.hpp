#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace compactflow {

// Base of every error raised by the library. Callers that only care about
// "something failed" can catch this; the subclasses carry the detail.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A derivative line is too short for the boundary closures.
class StencilSupportError : public Error {
public:
    using Error::Error;
};

// Raised when a grid (or a metric field) has a non-positive Jacobian.
class TangledMeshError : public Error {
public:
    TangledMeshError(const std::string& what, int i, int j, double jac)
        : Error(what + " at node (" + std::to_string(i) + ", " + std::to_string(j) +
                "), J = " + std::to_string(jac)),
          i_(i), j_(j), jac_(jac) {}
    int i() const { return i_; }
    int j() const { return j_; }
    double jacobian() const { return jac_; }

private:
    int i_, j_;
    double jac_;
};

class DegenerateCellError : public Error {
public:
    using Error::Error;
};

class CoincidentNodeError : public Error {
public:
    using Error::Error;
};

// Ellipticity (alpha1 > 0, alpha2 > 0, beta^2 <= 4 alpha1 alpha2) violated.
class CoefficientError : public Error {
public:
    CoefficientError(const std::string& what, int i, int j)
        : Error(what + " at node (" + std::to_string(i) + ", " + std::to_string(j) + ")"),
          i_(i), j_(j) {}
    int i() const { return i_; }
    int j() const { return j_; }

private:
    int i_, j_;
};

class InsufficientHistoryError : public Error {
public:
    InsufficientHistoryError(int required, int available)
        : Error("grid history holds " + std::to_string(available) + " snapshot(s), " +
                std::to_string(required) + " required"),
          required_(required) {}
    int required() const { return required_; }

private:
    int required_;
};

class SingularSystemError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

// Any iterative process that ran out of iterations. The residual trace is
// kept so a driver can print or log it.
class IterationError : public Error {
public:
    IterationError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace compactflow
