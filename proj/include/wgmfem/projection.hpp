#pragma once

// Local L2 projections of pointwise-evaluable fields:
//   Q_0  onto [P_k(T)]^2 per cell,
//   Q_b  of the normal component q.n_e onto P_k(e) per edge,
//   Q_h = {Q_0, Q_b(.) n_e},
//   QQ_h onto P_{k+1}(T) per cell.

#include "wgmfem/quadrature.hpp"
#include "wgmfem/space.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace wgmfem {

struct SmoothScalarField {
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient; ///< optional
    std::string smoothness = "C-infinity";

    [[nodiscard]] double operator()(const Point& p) const { return value(p); }
};

struct SmoothVectorField {
    std::function<Point(const Point&)> value;
    std::function<double(const Point&)> divergence; ///< optional
    std::string smoothness = "C-infinity";

    [[nodiscard]] Point operator()(const Point& p) const { return value(p); }
};

/// (f, phi_i)_T for every P_{k+1}(T) basis function, with a rule of the given exactness.
template <class F>
Eigen::VectorXd cell_moments(const Space& space, int c, F&& f, int degree) {
    const auto& basis = space.cell(c);
    const QuadratureRule rule = cell_quadrature(space.mesh(), c, degree);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(basis.num_scalar());
    for (std::size_t q = 0; q < rule.size(); ++q) m += rule.weights[q] * f(rule.points[q]) * basis.eval(rule.points[q]);
    return m;
}

/// <f, phi_l>_e for every P_k(e) basis function.
template <class F>
Eigen::VectorXd edge_moments(const Space& space, int e, F&& f, int degree) {
    const auto& basis = space.edge(e);
    const QuadratureRule rule = edge_quadrature(space.mesh(), e, degree);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(basis.size());
    for (std::size_t q = 0; q < rule.size(); ++q) m += rule.weights[q] * f(rule.points[q]) * basis.eval(rule.points[q]);
    return m;
}

namespace detail {

inline int resolve_degree(const Space& space, int degree) { return degree < 0 ? space.data_degree() : degree; }

} // namespace detail

/// Q_0 q on every cell; edge blocks of the result are zero.
inline FluxField project_Q0(const Space& space, const SmoothVectorField& q, int degree = -1) {
    degree = detail::resolve_degree(space, degree);
    FluxField out(space.dofs());
    parallel_for(space.mesh().num_cells(), [&](int c) {
        const auto& basis = space.cell(c);
        const int nk = basis.num_flux_scalar();
        const Eigen::VectorXd mx = cell_moments(space, c, [&](const Point& p) { return q(p).x(); }, degree).head(nk);
        const Eigen::VectorXd my = cell_moments(space, c, [&](const Point& p) { return q(p).y(); }, degree).head(nk);
        const Eigen::LLT<Eigen::MatrixXd> mass(basis.mass().topLeftCorner(nk, nk));
        auto block = out.interior(c);
        block.head(nk) = mass.solve(mx);
        block.tail(nk) = mass.solve(my);
    });
    return out;
}

/// Q_b(q . n_e) on every edge; interior blocks of the result are zero.
inline FluxField project_Qb(const Space& space, const SmoothVectorField& q, int degree = -1) {
    degree = detail::resolve_degree(space, degree);
    FluxField out(space.dofs());
    parallel_for(space.mesh().num_edges(), [&](int e) {
        const Point n = space.mesh().edges()[static_cast<std::size_t>(e)].normal;
        out.edge(e) = edge_moments(space, e, [&](const Point& p) { return q(p).dot(n); }, degree);
    });
    return out;
}

inline FluxField project_Qh(const Space& space, const SmoothVectorField& q, int degree = -1) {
    FluxField out = project_Q0(space, q, degree);
    out.coeffs += project_Qb(space, q, degree).coeffs;
    return out;
}

/// Cellwise L2 projection onto P_{k+1}(T).
inline ScalarField project_QQh(const Space& space, const SmoothScalarField& u, int degree = -1) {
    degree = detail::resolve_degree(space, degree);
    ScalarField out(space.dofs());
    parallel_for(space.mesh().num_cells(), [&](int c) {
        out.cell(c) = space.cell(c).mass_factor().solve(cell_moments(space, c, u.value, degree));
    });
    return out;
}

/// L2(T) projection of an arbitrary scalar function onto P_{k+1}(T), as coefficients.
template <class F>
Eigen::VectorXd project_cell(const Space& space, int c, F&& f, int degree = -1) {
    return space.cell(c).mass_factor().solve(cell_moments(space, c, std::forward<F>(f), detail::resolve_degree(space, degree)));
}

} // namespace wgmfem
