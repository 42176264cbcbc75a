#pragma once

#include <stdexcept>
#include <string>

namespace wgmfem {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Mesh violates a structural invariant (degenerate cell, bad incidence).
class MeshInvalid : public Error {
public:
    using Error::Error;
};

/// Malformed mesh or config file. The message carries line/cell context.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Cell geometry unusable by the bases (e.g. not star-shaped w.r.t. its centroid).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Requested feature beyond what is implemented (e.g. quadrature degree).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Diffusion tensor not symmetric positive definite at a sample point.
class CoefficientError : public Error {
public:
    using Error::Error;
};

/// Iterative solver ran out of iterations. Carries the best residual reached.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double best_residual)
        : Error(what), best_residual_(best_residual) {}
    [[nodiscard]] double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

/// Structurally singular saddle system; indicates an assembly defect.
class AssemblyError : public Error {
public:
    using Error::Error;
};

} // namespace wgmfem
