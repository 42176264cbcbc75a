#pragma once

// Manufactured solutions of  alpha q + grad u = 0,  div q = f  in Omega,
// u = -g on the boundary.

#include "wgmfem/error.hpp"
#include "wgmfem/forms.hpp"
#include "wgmfem/projection.hpp"
#include "wgmfem/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace wgmfem {

struct ManufacturedSolution {
    std::string name;
    CoefficientField alpha;
    SmoothScalarField u;  ///< with gradient
    SmoothVectorField q;  ///< with divergence
    SmoothScalarField f;  ///< div q
    SmoothScalarField g;  ///< -u
};

/// Scalar data: value, gradient and Hessian.
struct ScalarProfile {
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    std::function<Eigen::Matrix2d(const Point&)> hessian;
};

/// q = -alpha^{-1} grad u and f = div q, derived from the profile and alpha's derivatives.
inline ManufacturedSolution make_manufactured(std::string name, const ScalarProfile& u, const CoefficientField& alpha) {
    if (!alpha.derivatives) throw InvalidArgument("manufactured solution needs the derivatives of alpha");
    ManufacturedSolution m;
    m.name = std::move(name);
    m.alpha = alpha;
    m.u = {u.value, u.gradient, "C-infinity"};
    auto flux = [u, alpha](const Point& p) -> Point { return -alpha.value(p).inverse() * u.gradient(p); };
    auto div = [u, alpha](const Point& p) -> double {
        const Eigen::Matrix2d k = alpha.value(p).inverse();
        const auto d = alpha.derivatives(p);
        const Point gu = u.gradient(p);
        // div(K grad u) = sum_i ((d_i K) grad u)_i + tr(K H),  d_i K = -K (d_i alpha) K.
        double s = (k * u.hessian(p)).trace();
        for (int i = 0; i < 2; ++i) s += (-k * d[static_cast<std::size_t>(i)] * k * gu)(i);
        return -s;
    };
    m.q = {flux, div, "C-infinity"};
    m.f = {div, {}, "C-infinity"};
    m.g = {[u](const Point& p) { return -u.value(p); }, {}, "C-infinity"};
    return m;
}

inline ScalarProfile affine_profile() {
    return {[](const Point& p) { return p.x() + p.y(); }, [](const Point&) { return Point(1.0, 1.0); },
            [](const Point&) { return Eigen::Matrix2d::Zero().eval(); }};
}

inline ScalarProfile sinsin_profile() {
    constexpr double pi = std::numbers::pi;
    return {[](const Point& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); },
            [](const Point& p) {
                return Point(pi * std::cos(pi * p.x()) * std::sin(pi * p.y()), pi * std::sin(pi * p.x()) * std::cos(pi * p.y()));
            },
            [](const Point& p) {
                const double sx = std::sin(pi * p.x());
                const double cx = std::cos(pi * p.x());
                const double sy = std::sin(pi * p.y());
                const double cy = std::cos(pi * p.y());
                Eigen::Matrix2d h;
                h << -pi * pi * sx * sy, pi * pi * cx * cy, pi * pi * cx * cy, -pi * pi * sx * sy;
                return h;
            }};
}

/// u = x^2 y + cos(pi y).
inline ScalarProfile poly_cos_profile() {
    constexpr double pi = std::numbers::pi;
    return {[](const Point& p) { return p.x() * p.x() * p.y() + std::cos(pi * p.y()); },
            [](const Point& p) { return Point(2.0 * p.x() * p.y(), p.x() * p.x() - pi * std::sin(pi * p.y())); },
            [](const Point& p) {
                Eigen::Matrix2d h;
                h << 2.0 * p.y(), 2.0 * p.x(), 2.0 * p.x(), -pi * pi * std::cos(pi * p.y());
                return h;
            }};
}

inline ScalarProfile zero_profile() {
    return {[](const Point&) { return 0.0; }, [](const Point&) { return Point(0.0, 0.0); },
            [](const Point&) { return Eigen::Matrix2d::Zero().eval(); }};
}

inline CoefficientField coefficient_by_name(const std::string& name) {
    if (name == "identity") return CoefficientField::identity();
    if (name == "variable") return CoefficientField::variable();
    throw InvalidArgument("unknown alpha '" + name + "' (expected identity or variable)");
}

/// Built-in solutions: affine, sinsin, poly (x^2 y + cos(pi y)), zero.
inline ManufacturedSolution manufactured_by_name(const std::string& name, const std::string& alpha = "identity") {
    const CoefficientField a = coefficient_by_name(alpha);
    if (name == "affine") return make_manufactured(name, affine_profile(), a);
    if (name == "sinsin") return make_manufactured(name, sinsin_profile(), a);
    if (name == "poly") return make_manufactured(name, poly_cos_profile(), a);
    if (name == "zero") return make_manufactured(name, zero_profile(), a);
    throw InvalidArgument("unknown manufactured solution '" + name + "' (expected affine, sinsin, poly or zero)");
}

struct ConsistencyResidual {
    double constitutive = 0.0; ///< max |alpha q + grad u|
    double balance = 0.0;      ///< max |div q - f|, div q by finite differences
};

/// Samples the defining equations at the quadrature points of a mesh. The
/// divergence is taken by fourth-order central differences of q, so it is
/// independent of the analytic f.
inline ConsistencyResidual check_self_consistency(const ManufacturedSolution& m, const PolyMesh& mesh, int degree = 4) {
    ConsistencyResidual r;
    constexpr double step = 1e-3;
    auto d = [&](const Point& p, const Point& dir, int comp) {
        auto qc = [&](double t) { return m.q(p + t * dir)(comp); };
        return (-qc(2 * step) + 8.0 * qc(step) - 8.0 * qc(-step) + qc(-2 * step)) / (12.0 * step);
    };
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const QuadratureRule rule = cell_quadrature(mesh, c, degree);
        for (const auto& p : rule.points) {
            r.constitutive = std::max(r.constitutive, (m.alpha.value(p) * m.q(p) + m.u.gradient(p)).norm());
            const double div = d(p, Point::UnitX(), 0) + d(p, Point::UnitY(), 1);
            r.balance = std::max(r.balance, std::abs(div - m.f(p)));
        }
    }
    return r;
}

} // namespace wgmfem
