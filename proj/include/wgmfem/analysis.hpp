#pragma once

// Discrete norms, errors against manufactured solutions, convergence rates
// and residual checks of the algebraic identities the scheme satisfies.

#include "wgmfem/forms.hpp"
#include "wgmfem/manufactured.hpp"
#include "wgmfem/projection.hpp"
#include "wgmfem/solver.hpp"
#include "wgmfem/space.hpp"
#include "wgmfem/weakdiv.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace wgmfem {

/// Relative size of quadrature error accepted in identity residuals.
inline constexpr double kQuadratureTolerance = 1e-12;
/// Identity checks pass below this multiple of kQuadratureTolerance.
inline constexpr double kIdentityFactor = 50.0;

/// |||v||| = sqrt(a(v,v) + s(v,v)).
inline double triple_bar_norm(const SparseMatrix& a_s, const FluxField& v) {
    return std::sqrt(std::max(0.0, v.coeffs.dot(a_s * v.coeffs)));
}

inline double triple_bar_norm(const SaddleSystem& sys, const FluxField& v) { return triple_bar_norm(sys.A_s, v); }

/// Moments <[w]_e, phi_l>_e of the jump sum_{T ni e} sigma_{T,e} w|_T, i.e.
/// w|T1 - w|T2 with n_e pointing from T1 to T2, and w itself on the boundary.
/// In the orthonormal edge basis these are the coefficients of Q_b[w].
inline Eigen::VectorXd jump_moments(const Space& space, const ScalarField& w, int e) {
    const PolyMesh& mesh = space.mesh();
    const auto& edge = mesh.edges()[static_cast<std::size_t>(e)];
    const auto& eb = space.edge(e);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(eb.size());
    for (int c : edge.cells) {
        if (c < 0) continue;
        const double sigma = mesh.geometry(c).signs[mesh.local_index(c, e)];
        const auto& cb = space.cell(c);
        for (std::size_t q = 0; q < eb.quadrature().size(); ++q) {
            const double wv = cb.eval(eb.quadrature().points[q]).dot(w.cell(c));
            m += sigma * eb.quadrature().weights[q] * wv * eb.values().row(static_cast<Eigen::Index>(q)).transpose();
        }
    }
    return m;
}

/// sum_T ||grad w||_T^2.
inline double broken_gradient_sq(const Space& space, const ScalarField& w) {
    double s = 0.0;
    for (int c = 0; c < space.mesh().num_cells(); ++c) {
        const auto& b = space.cell(c);
        const Eigen::VectorXd gx = b.grad_x() * w.cell(c);
        const Eigen::VectorXd gy = b.grad_y() * w.cell(c);
        for (std::size_t q = 0; q < b.quadrature().size(); ++q) {
            const auto i = static_cast<Eigen::Index>(q);
            s += b.quadrature().weights[q] * (gx(i) * gx(i) + gy(i) * gy(i));
        }
    }
    return s;
}

/// ||w||_{1,h}^2 = sum_T ||grad w||_T^2 + sum_e h_e^{-1} ||Q_b [w]||_e^2.
inline double h1h_norm(const Space& space, const ScalarField& w) {
    double s = broken_gradient_sq(space, w);
    for (int e = 0; e < space.mesh().num_edges(); ++e) {
        s += jump_moments(space, w, e).squaredNorm() / space.mesh().edges()[static_cast<std::size_t>(e)].length;
    }
    return std::sqrt(s);
}

inline double l2_norm(const Space& space, const ScalarField& w) {
    double s = 0.0;
    for (int c = 0; c < space.mesh().num_cells(); ++c) s += w.cell(c).dot(space.cell(c).mass() * w.cell(c));
    return std::sqrt(s);
}

/// ||v_0|| over the domain.
inline double l2_norm_interior(const Space& space, const FluxField& v) {
    double s = 0.0;
    for (int c = 0; c < space.mesh().num_cells(); ++c) {
        const auto& b = space.cell(c);
        const int nk = b.num_flux_scalar();
        const Eigen::MatrixXd m = b.mass().topLeftCorner(nk, nk);
        const auto vi = v.interior(c);
        s += vi.head(nk).dot(m * vi.head(nk)) + vi.tail(nk).dot(m * vi.tail(nk));
    }
    return std::sqrt(s);
}

/// Gram matrix H of ||.||_{1,h}: ||w||_{1,h}^2 = w^T H w.
inline SparseMatrix h1h_matrix(const Space& space) {
    const PolyMesh& mesh = space.mesh();
    const auto& dofs = space.dofs();
    const int nb = dofs.scalar_block();
    Triplets t;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& b = space.cell(c);
        const auto& w = b.quadrature().weights;
        const Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        const Eigen::MatrixXd k = b.grad_x().transpose() * wv.asDiagonal() * b.grad_x() +
                                  b.grad_y().transpose() * wv.asDiagonal() * b.grad_y();
        std::vector<int> ids(static_cast<std::size_t>(nb));
        for (int i = 0; i < nb; ++i) ids[static_cast<std::size_t>(i)] = dofs.scalar_offset(c) + i;
        detail::scatter(t, ids, ids, k);
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& edge = mesh.edges()[static_cast<std::size_t>(e)];
        const auto& eb = space.edge(e);
        // J maps the coefficients of the incident cells to the jump moments.
        std::vector<int> ids;
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(eb.size(), 2 * nb);
        int slot = 0;
        for (int c : edge.cells) {
            if (c < 0) continue;
            const double sigma = mesh.geometry(c).signs[mesh.local_index(c, e)];
            for (std::size_t q = 0; q < eb.quadrature().size(); ++q) {
                j.block(0, slot * nb, eb.size(), nb) += sigma * eb.quadrature().weights[q] *
                                                        eb.values().row(static_cast<Eigen::Index>(q)).transpose() *
                                                        space.cell(c).eval(eb.quadrature().points[q]).transpose();
            }
            for (int i = 0; i < nb; ++i) ids.push_back(dofs.scalar_offset(c) + i);
            ++slot;
        }
        const Eigen::MatrixXd jl = j.leftCols(slot * nb);
        detail::scatter(t, ids, ids, jl.transpose() * jl / edge.length);
    }
    SparseMatrix h(dofs.num_scalar(), dofs.num_scalar());
    h.setFromTriplets(t.begin(), t.end());
    return h;
}

struct DiscreteStabilityConstants {
    double inf_sup = 0.0;    ///< inf_w sup_v b(v, w) / (|||v||| ||w||_{1,h})
    double continuity = 0.0; ///< sup_{v, w} |b(v, w)| / (|||v||| ||w||_{1,h})
};

/// Extreme singular values of L_H^{-1} B L_A^{-T}. Dense; meant for modest meshes.
inline DiscreteStabilityConstants stability_constants(const Space& space, const SaddleSystem& sys) {
    const Eigen::LLT<Eigen::MatrixXd> la{Eigen::MatrixXd(sys.A_s)};
    const Eigen::LLT<Eigen::MatrixXd> lh{Eigen::MatrixXd(h1h_matrix(space))};
    if (la.info() != Eigen::Success || lh.info() != Eigen::Success) throw AssemblyError("stability_constants: Gram matrix is not positive definite");
    // M = L_H^{-1} B L_A^{-T}
    const Eigen::MatrixXd right = la.matrixL().solve(Eigen::MatrixXd(sys.B).transpose()).transpose();
    const Eigen::MatrixXd m = lh.matrixL().solve(right);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m * m.transpose(), Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    return {std::sqrt(std::max(0.0, ev.minCoeff())), std::sqrt(ev.maxCoeff())};
}

/// v_0 = -grad phi on cells, v_b = h_e^{-1} Q_b([phi]) on edges; then
/// b(v, phi) = ||phi||_{1,h}^2.
inline FluxField inf_sup_witness(const Space& space, const ScalarField& phi) {
    const PolyMesh& mesh = space.mesh();
    FluxField v(space.dofs());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& b = space.cell(c);
        const int nk = b.num_flux_scalar();
        const Eigen::VectorXd gx = b.grad_x() * phi.cell(c);
        const Eigen::VectorXd gy = b.grad_y() * phi.cell(c);
        Eigen::VectorXd mx = Eigen::VectorXd::Zero(nk);
        Eigen::VectorXd my = Eigen::VectorXd::Zero(nk);
        for (std::size_t q = 0; q < b.quadrature().size(); ++q) {
            const auto i = static_cast<Eigen::Index>(q);
            const Eigen::VectorXd p = b.values().row(i).head(nk).transpose();
            mx += b.quadrature().weights[q] * gx(i) * p;
            my += b.quadrature().weights[q] * gy(i) * p;
        }
        const Eigen::LLT<Eigen::MatrixXd> mass(b.mass().topLeftCorner(nk, nk));
        v.interior(c).head(nk) = -mass.solve(mx);
        v.interior(c).tail(nk) = -mass.solve(my);
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        v.edge(e) = jump_moments(space, phi, e) / mesh.edges()[static_cast<std::size_t>(e)].length;
    }
    return v;
}

/// b(v, w) = w^T B v.
inline double b_form(const SparseMatrix& b, const FluxField& v, const ScalarField& w) { return w.coeffs.dot(b * v.coeffs); }

inline FluxField random_flux(const DofMap& dofs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    FluxField v(dofs);
    for (Eigen::Index i = 0; i < v.coeffs.size(); ++i) v.coeffs(i) = d(rng);
    return v;
}

inline ScalarField random_scalar(const DofMap& dofs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    ScalarField w(dofs);
    for (Eigen::Index i = 0; i < w.coeffs.size(); ++i) w.coeffs(i) = d(rng);
    return w;
}

// ---------------------------------------------------------------------------
// Errors and rates

struct ErrorBundle {
    double h = 0.0;
    double triple_bar_q = 0.0; ///< |||q_h - Q_h q|||
    double h1h_u = 0.0;        ///< ||u_h - QQ_h u||_{1,h}
    double l2_u = 0.0;         ///< ||u_h - QQ_h u||
    double l2_q0 = 0.0;        ///< ||q_0 - Q_0 q||
};

inline ErrorBundle error_bundle(const Space& space, const SaddleSystem& sys, const Solution& sol, const ManufacturedSolution& m) {
    ErrorBundle eb;
    eb.h = space.mesh().mesh_size();
    FluxField e = sol.q;
    e.coeffs -= project_Qh(space, m.q).coeffs;
    ScalarField eps = sol.u;
    eps.coeffs -= project_QQh(space, m.u).coeffs;
    eb.triple_bar_q = triple_bar_norm(sys, e);
    eb.h1h_u = h1h_norm(space, eps);
    eb.l2_u = l2_norm(space, eps);
    eb.l2_q0 = l2_norm_interior(space, e);
    return eb;
}

/// rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}); std::nullopt marks a
/// level pair with a zero error (exact, rate undefined).
inline std::vector<std::optional<double>> estimate_rates(std::span<const double> h, std::span<const double> err) {
    if (h.size() != err.size()) throw InvalidArgument("estimate_rates: h and error sequences differ in length");
    if (h.size() < 2) throw InvalidArgument("estimate_rates: need at least two levels");
    std::vector<std::optional<double>> rates;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
        if (h[i] == h[i + 1]) throw InvalidArgument("estimate_rates: rates need distinct mesh sizes");
        if (err[i] == 0.0 || err[i + 1] == 0.0) {
            rates.emplace_back(std::nullopt);
        } else {
            rates.emplace_back(std::log(err[i] / err[i + 1]) / std::log(h[i] / h[i + 1]));
        }
    }
    return rates;
}

struct ProjectionErrors {
    double h = 0.0;
    double l2_q0 = 0.0;       ///< ||q - Q_0 q||
    double triple_bar_q = 0.0; ///< |||q - Q_h q|||, interior part q - Q_0 q and edge part q.n - Q_b(q.n)
    double l2_u = 0.0;        ///< ||u - QQ_h u||
};

struct ConvergenceLevel {
    int level = 0;
    int n = 0;
    ErrorBundle errors;
    ProjectionErrors projection; ///< errors of the projections of the exact data
    double solve_seconds = 0.0;
};

struct ConvergenceReport {
    int degree = 0;
    std::string solution;
    std::string alpha;
    double rho = 1.0;
    bool convex_domain = true;
    std::vector<ConvergenceLevel> levels;

    [[nodiscard]] std::vector<double> hs() const {
        std::vector<double> v;
        for (const auto& l : levels) v.push_back(l.errors.h);
        return v;
    }
    template <class Member>
    [[nodiscard]] std::vector<double> column(Member m) const {
        std::vector<double> v;
        for (const auto& l : levels) v.push_back(l.errors.*m);
        return v;
    }
    [[nodiscard]] std::vector<std::optional<double>> rates(double ErrorBundle::*m) const {
        return estimate_rates(hs(), column(m));
    }
    [[nodiscard]] std::vector<std::optional<double>> projection_rates(double ProjectionErrors::*m) const {
        std::vector<double> v;
        for (const auto& l : levels) v.push_back(l.projection.*m);
        return estimate_rates(hs(), v);
    }
    /// Theoretical orders of (triple_bar_q, h1h_u, l2_u).
    [[nodiscard]] std::array<double, 3> targets() const { return {degree + 1.0, degree + 1.0, degree + 2.0}; }
};


/// Errors of the local projections of smooth data, by quadrature of the given exactness.
inline ProjectionErrors projection_errors(const Space& space, const SmoothVectorField& q, const SmoothScalarField& u,
                                          const CoefficientField& alpha, double rho, int degree = -1) {
    degree = detail::resolve_degree(space, degree);
    const PolyMesh& mesh = space.mesh();
    const FluxField qh = project_Qh(space, q, degree);
    const ScalarField uh = project_QQh(space, u, degree);
    ProjectionErrors pe;
    pe.h = mesh.mesh_size();
    double q0 = 0.0;
    double a = 0.0;
    double s = 0.0;
    double l2 = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const QuadratureRule rule = cell_quadrature(mesh, c, degree);
        const auto& cb = space.cell(c);
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const Point& p = rule.points[k];
            const Point d = q(p) - eval_interior(space, qh, c, p);
            q0 += rule.weights[k] * d.squaredNorm();
            a += rule.weights[k] * d.dot(alpha.value(p) * d);
            const double du = u(p) - cb.eval(p).dot(uh.cell(c));
            l2 += rule.weights[k] * du * du;
        }
        const auto& geo = mesh.geometry(c);
        const auto& ce = mesh.cell_edges(c);
        double sc = 0.0;
        for (std::size_t le = 0; le < ce.size(); ++le) {
            const QuadratureRule er = edge_quadrature(mesh, ce[le], degree);
            const auto& eb = space.edge(ce[le]);
            for (std::size_t k = 0; k < er.size(); ++k) {
                const Point& p = er.points[k];
                const Point n = geo.outward_normals[le];
                // (v_0 - v_b).n with v_0 = q - Q_0 q and v_b.n = q.n - Q_b(q.n)
                const double j = -eval_interior(space, qh, c, p).dot(n) + geo.signs[le] * eb.eval(p).dot(qh.edge(ce[le]));
                sc += er.weights[k] * j * j;
            }
        }
        s += rho * geo.diameter * sc;
    }
    pe.l2_q0 = std::sqrt(q0);
    pe.triple_bar_q = std::sqrt(a + s);
    pe.l2_u = std::sqrt(l2);
    return pe;
}

// ---------------------------------------------------------------------------
// Identity checks

struct IdentityCheck {
    std::string name;
    double max_residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct IdentityDiagnostics {
    std::vector<IdentityCheck> checks;
    [[nodiscard]] bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.pass; });
    }
};

/// Exactness used when identities involve non-polynomial data.
inline int identity_degree(const Space& space) { return std::min(kMaxQuadratureDegree, 2 * (space.degree() + 1) + 12); }

/// Max over cells and P_{k+1} test functions phi of the relative residual of
///   (div_w(Q_h q), phi)_T = (div q, phi)_T - <q.n - Q_b(q.n), phi>_{dT}.
inline double commuting_identity_residual(const Space& space, const WeakDivOperator& op, const SmoothVectorField& q, int degree = -1) {
    if (!q.divergence) throw InvalidArgument("commuting_identity_residual: the flux field needs a divergence");
    if (degree < 0) degree = identity_degree(space);
    const PolyMesh& mesh = space.mesh();
    const FluxField qh = project_Qh(space, q, degree);
    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& geo = mesh.geometry(c);
        const Eigen::VectorXd lhs = op.moments[static_cast<std::size_t>(c)] * gather_local(qh, mesh, c);
        Eigen::VectorXd rhs = cell_moments(space, c, q.divergence, degree);
        double scale = rhs.cwiseAbs().maxCoeff();
        const auto& ce = mesh.cell_edges(c);
        for (std::size_t le = 0; le < ce.size(); ++le) {
            const int e = ce[le];
            const Point n = geo.outward_normals[le];
            const double sigma = geo.signs[le];
            const auto& eb = space.edge(e);
            const Eigen::VectorXd qb = qh.edge(e);
            const QuadratureRule rule = edge_quadrature(mesh, e, degree);
            Eigen::VectorXd proj = Eigen::VectorXd::Zero(space.cell(c).num_scalar());
            for (std::size_t k = 0; k < rule.size(); ++k) {
                // Q_b(q.n) = sigma Q_b(q.n_e)
                const double val = q(rule.points[k]).dot(n) - sigma * eb.eval(rule.points[k]).dot(qb);
                proj += rule.weights[k] * val * space.cell(c).eval(rule.points[k]);
            }
            rhs -= proj;
            scale = std::max(scale, proj.cwiseAbs().maxCoeff());
        }
        scale = std::max(scale, lhs.cwiseAbs().maxCoeff());
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / (1.0 + scale));
    }
    return worst;
}

/// Max over cells of the relative residual of
///   (div_w v, QQ_h w)_T = -(v_0, grad w)_T + <(v_0 - v_b).n, w - QQ_h w>_{dT} + <v_b.n, w>_{dT}
/// for a discrete v and smooth w.
inline double integration_by_parts_residual(const Space& space, const WeakDivOperator& op, const FluxField& v, const SmoothScalarField& w,
                               int degree = -1) {
    if (!w.gradient) throw InvalidArgument("integration_by_parts_residual: the scalar field needs a gradient");
    if (degree < 0) degree = identity_degree(space);
    const PolyMesh& mesh = space.mesh();
    const ScalarField qw = project_QQh(space, w, degree);
    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& geo = mesh.geometry(c);
        const auto& cb = space.cell(c);
        const double lhs = (op.moments[static_cast<std::size_t>(c)] * gather_local(v, mesh, c)).dot(qw.cell(c));
        double vol = 0.0;
        const QuadratureRule rule = cell_quadrature(mesh, c, degree);
        for (std::size_t k = 0; k < rule.size(); ++k) {
            vol -= rule.weights[k] * eval_interior(space, v, c, rule.points[k]).dot(w.gradient(rule.points[k]));
        }
        double jump_term = 0.0;
        double flux_term = 0.0;
        const auto& ce = mesh.cell_edges(c);
        for (std::size_t le = 0; le < ce.size(); ++le) {
            const int e = ce[le];
            const Point n = geo.outward_normals[le];
            const double sigma = geo.signs[le];
            const auto& eb = space.edge(e);
            const QuadratureRule er = edge_quadrature(mesh, e, degree);
            for (std::size_t k = 0; k < er.size(); ++k) {
                const Point& p = er.points[k];
                const double vbn = sigma * eb.eval(p).dot(v.edge(e));
                const double v0n = eval_interior(space, v, c, p).dot(n);
                const double wv = w(p);
                jump_term += er.weights[k] * (v0n - vbn) * (wv - cb.eval(p).dot(qw.cell(c)));
                flux_term += er.weights[k] * vbn * wv;
            }
        }
        const double rhs = vol + jump_term + flux_term;
        const double scale = std::max({std::abs(lhs), std::abs(vol), std::abs(jump_term), std::abs(flux_term)});
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + scale));
    }
    return worst;
}

/// Max over cells and edges of max(0, ||q.n - Q_b(q.n)||_e - ||q.n - (Q_0 q).n||_e) / (1 + rhs).
inline double edge_domination_residual(const Space& space, const SmoothVectorField& q, int degree = -1) {
    if (degree < 0) degree = identity_degree(space);
    const PolyMesh& mesh = space.mesh();
    const FluxField qh = project_Qh(space, q, degree);
    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& geo = mesh.geometry(c);
        const auto& ce = mesh.cell_edges(c);
        for (std::size_t le = 0; le < ce.size(); ++le) {
            const int e = ce[le];
            const Point n = geo.outward_normals[le];
            const double sigma = geo.signs[le];
            const auto& eb = space.edge(e);
            const QuadratureRule er = edge_quadrature(mesh, e, degree);
            double lhs = 0.0;
            double rhs = 0.0;
            for (std::size_t k = 0; k < er.size(); ++k) {
                const Point& p = er.points[k];
                const double qn = q(p).dot(n);
                const double a = qn - sigma * eb.eval(p).dot(qh.edge(e));
                const double b = qn - eval_interior(space, qh, c, p).dot(n);
                lhs += er.weights[k] * a * a;
                rhs += er.weights[k] * b * b;
            }
            worst = std::max(worst, std::max(0.0, std::sqrt(lhs) - std::sqrt(rhs)) / (1.0 + std::sqrt(rhs)));
        }
    }
    return worst;
}

struct WitnessStats {
    double max_relative_residual = 0.0; ///< |b(v,phi) - ||phi||_{1,h}^2| / ||phi||_{1,h}^2
    double max_ratio = 0.0;             ///< |||v||| / ||phi||_{1,h}
    double min_ratio = 0.0;
};

inline WitnessStats witness_stats(const Space& space, const SaddleSystem& sys, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    WitnessStats st;
    st.min_ratio = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const ScalarField phi = random_scalar(space.dofs(), rng);
        const FluxField v = inf_sup_witness(space, phi);
        const double n1h = h1h_norm(space, phi);
        const double b = b_form(sys.B, v, phi);
        st.max_relative_residual = std::max(st.max_relative_residual, std::abs(b - n1h * n1h) / (n1h * n1h));
        const double ratio = triple_bar_norm(sys, v) / n1h;
        st.max_ratio = std::max(st.max_ratio, ratio);
        st.min_ratio = std::min(st.min_ratio, ratio);
    }
    return st;
}

/// Max of |b(v, w)| / (|||v||| ||w||_{1,h}) over random pairs.
inline double boundedness_ratio(const Space& space, const SaddleSystem& sys, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const FluxField v = random_flux(space.dofs(), rng);
        const ScalarField w = random_scalar(space.dofs(), rng);
        worst = std::max(worst, std::abs(b_form(sys.B, v, w)) / (triple_bar_norm(sys, v) * h1h_norm(space, w)));
    }
    return worst;
}

/// Per-cell |int_{dT} q_b.n ds - int_T f dx| / (1 + ||f||_{L1(T)}).
inline std::vector<double> local_conservation_residuals(const Space& space, const FluxField& q, const SmoothScalarField& f,
                                                        int degree = -1) {
    degree = detail::resolve_degree(space, degree);
    const PolyMesh& mesh = space.mesh();
    std::vector<double> res(static_cast<std::size_t>(mesh.num_cells()));
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& geo = mesh.geometry(c);
        double boundary = 0.0;
        const auto& ce = mesh.cell_edges(c);
        for (std::size_t le = 0; le < ce.size(); ++le) {
            const auto& eb = space.edge(ce[le]);
            for (std::size_t k = 0; k < eb.quadrature().size(); ++k) {
                boundary += geo.signs[le] * eb.quadrature().weights[k] * eb.values().row(static_cast<Eigen::Index>(k)).dot(q.edge(ce[le]));
            }
        }
        double source = 0.0;
        double l1 = 0.0;
        const QuadratureRule rule = cell_quadrature(mesh, c, degree);
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const double fv = f(rule.points[k]);
            source += rule.weights[k] * fv;
            l1 += rule.weights[k] * std::abs(fv);
        }
        res[static_cast<std::size_t>(c)] = std::abs(boundary - source) / (1.0 + l1);
    }
    return res;
}

/// (e^x, sin y) with its divergence.
inline SmoothVectorField default_identity_flux() {
    return {[](const Point& p) { return Point(std::exp(p.x()), std::sin(p.y())); },
            [](const Point& p) { return std::exp(p.x()) + std::cos(p.y()); }, "C-infinity"};
}

/// cos(pi x) y with its gradient.
inline SmoothScalarField default_identity_scalar() {
    constexpr double pi = std::numbers::pi;
    return {[](const Point& p) { return std::cos(pi * p.x()) * p.y(); },
            [](const Point& p) { return Point(-pi * std::sin(pi * p.x()) * p.y(), std::cos(pi * p.x())); }, "C-infinity"};
}

struct IdentityInputs {
    SmoothVectorField q = default_identity_flux();
    SmoothScalarField w = default_identity_scalar();
    /// Problem solved for the local-conservation check.
    ManufacturedSolution problem = manufactured_by_name("sinsin");
    double rho = 1.0;
    int samples = 20;
    std::uint64_t seed = 20240611;
};

/// Evaluates every identity on the given space and reports the worst residuals.
inline IdentityDiagnostics check_identities(const Space& space, const IdentityInputs& in = {}) {
    IdentityDiagnostics d;
    const double identity_tol = kIdentityFactor * kQuadratureTolerance;
    const WeakDivOperator op = build_weakdiv(space);
    const SaddleSystem sys = assemble_system(space, in.rho, in.problem.alpha, in.problem.f, in.problem.g);

    const double r41 = commuting_identity_residual(space, op, in.q);
    d.checks.push_back({"commuting identity (div_w Q_h q, w)_T", r41, identity_tol, r41 <= identity_tol});

    std::mt19937_64 rng(in.seed);
    double r42 = 0.0;
    for (int s = 0; s < 3; ++s) r42 = std::max(r42, integration_by_parts_residual(space, op, random_flux(space.dofs(), rng), in.w));
    d.checks.push_back({"integration by parts (div_w v, QQ_h w)_T", r42, identity_tol, r42 <= identity_tol});

    const WitnessStats ws = witness_stats(space, sys, in.samples, in.seed + 1);
    d.checks.push_back({"inf-sup witness b(v, phi) = ||phi||_{1,h}^2", ws.max_relative_residual, 1e-11,
                        ws.max_relative_residual <= 1e-11});

    const double dom = edge_domination_residual(space, in.q);
    d.checks.push_back({"edge projection domination ||q.n - Q_b(q.n)||_e <= ||q.n - Q_0 q.n||_e", dom, identity_tol,
                        dom <= identity_tol});

    const Solution sol = solve(sys);
    const auto cons = local_conservation_residuals(space, sol.q, in.problem.f);
    const double worst = *std::max_element(cons.begin(), cons.end());
    d.checks.push_back({"local conservation int_dT q_b.n = int_T f", worst, 1e-11, worst <= 1e-11});
    return d;
}

// ---------------------------------------------------------------------------
// Inverse and trace inequality constants

namespace detail {

inline Eigen::MatrixXd cell_stiffness(const Space& space, int c) {
    const auto& b = space.cell(c);
    const auto& w = b.quadrature().weights;
    const Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return b.grad_x().transpose() * wv.asDiagonal() * b.grad_x() + b.grad_y().transpose() * wv.asDiagonal() * b.grad_y();
}

/// Gram matrix of the P_{k+1}(T) basis traced on edge e of cell c.
inline Eigen::MatrixXd edge_trace_mass(const Space& space, int c, int e) {
    const auto& b = space.cell(c);
    const QuadratureRule er = edge_quadrature(space.mesh(), e, 2 * (space.degree() + 1));
    Eigen::MatrixXd em = Eigen::MatrixXd::Zero(b.num_scalar(), b.num_scalar());
    for (std::size_t k = 0; k < er.size(); ++k) {
        const Eigen::VectorXd v = b.eval(er.points[k]);
        em += er.weights[k] * v * v.transpose();
    }
    return em;
}

} // namespace detail

/// max_T sup_{phi in P_{k+1}(T)} h_T ||grad phi||_T / ||phi||_T.
inline double inverse_inequality_constant(const Space& space) {
    double worst = 0.0;
    for (int c = 0; c < space.mesh().num_cells(); ++c) {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(detail::cell_stiffness(space, c), space.cell(c).mass(),
                                                                      Eigen::EigenvaluesOnly);
        const double h = space.mesh().geometry(c).diameter;
        worst = std::max(worst, h * std::sqrt(eig.eigenvalues().maxCoeff()));
    }
    return worst;
}

/// max_{T, e in dT} sup_phi ||phi||_e^2 / (h_T^{-1} ||phi||_T^2 + h_T ||grad phi||_T^2).
inline double trace_inequality_constant(const Space& space) {
    const PolyMesh& mesh = space.mesh();
    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const double h = mesh.geometry(c).diameter;
        const Eigen::MatrixXd denom = space.cell(c).mass() / h + h * detail::cell_stiffness(space, c);
        for (int e : mesh.cell_edges(c)) {
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(detail::edge_trace_mass(space, c, e), denom,
                                                                          Eigen::EigenvaluesOnly);
            worst = std::max(worst, eig.eigenvalues().maxCoeff());
        }
    }
    return worst;
}

struct SampledInequalityConstants {
    double inverse = 0.0; ///< cell mean of max_samples h_T ||grad w||_T / ||w||_T
    double trace = 0.0;   ///< cell mean of max_{samples, e} ||w||_e^2 / (h_T^{-1} ||w||_T^2 + h_T ||grad w||_T^2)
};

/// Sampled counterparts of the inverse and trace constants: each cell takes
/// the largest ratio over `samples` random P_{k+1}(T) fields, and the cell
/// values are averaged so the statistic does not drift with the cell count.
inline SampledInequalityConstants sampled_inequality_constants(const Space& space, int samples, std::uint64_t seed) {
    const PolyMesh& mesh = space.mesh();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    SampledInequalityConstants out;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& b = space.cell(c);
        const Eigen::MatrixXd stiff = detail::cell_stiffness(space, c);
        std::vector<Eigen::MatrixXd> traces;
        for (int e : mesh.cell_edges(c)) traces.push_back(detail::edge_trace_mass(space, c, e));
        const double h = mesh.geometry(c).diameter;
        double inv = 0.0;
        double tr = 0.0;
        for (int s = 0; s < samples; ++s) {
            Eigen::VectorXd w(b.num_scalar());
            for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
            const double g = w.dot(stiff * w);
            const double m = w.dot(b.mass() * w);
            inv = std::max(inv, h * std::sqrt(g / m));
            for (const auto& t : traces) tr = std::max(tr, w.dot(t * w) / (m / h + h * g));
        }
        out.inverse += inv;
        out.trace += tr;
    }
    out.inverse /= mesh.num_cells();
    out.trace /= mesh.num_cells();
    return out;
}

} // namespace wgmfem
