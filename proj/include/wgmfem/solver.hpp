#pragma once

// Solvers for the saddle-point system assembled in forms.hpp.

#include "wgmfem/error.hpp"
#include "wgmfem/forms.hpp"
#include "wgmfem/space.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <chrono>
#include <optional>
#include <string>

namespace wgmfem {

enum class SolveMethod { Auto, Direct, SchurCG, Minres };

inline std::string to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::Auto: return "auto";
        case SolveMethod::Direct: return "direct";
        case SolveMethod::SchurCG: return "schur-cg";
        case SolveMethod::Minres: return "minres";
    }
    return "?";
}

inline SolveMethod parse_solve_method(const std::string& s) {
    if (s == "auto") return SolveMethod::Auto;
    if (s == "direct") return SolveMethod::Direct;
    if (s == "schur-cg" || s == "schur-complement-cg") return SolveMethod::SchurCG;
    if (s == "minres") return SolveMethod::Minres;
    throw InvalidArgument("unknown solver method '" + s + "'");
}

struct SolveOptions {
    SolveMethod method = SolveMethod::Auto;
    double tolerance = 1e-10;
    int max_iterations = 5000;
    /// Auto picks the direct factorization up to this many unknowns.
    int direct_limit = 200000;

    void validate() const {
        if (!(tolerance > 0.0 && tolerance < 1.0)) throw InvalidArgument("solver tolerance must lie in (0, 1)");
        if (max_iterations < 1) throw InvalidArgument("solver max_iterations must be >= 1");
    }
};

struct Solution {
    FluxField q;
    ScalarField u;
    double flux_residual = 0.0;   ///< ||A_s q - B^T u - G||
    double scalar_residual = 0.0; ///< ||B q - F||
    int iterations = 0;
    double wall_seconds = 0.0;
    SolveMethod method = SolveMethod::Direct;
};

namespace detail {

inline void fill_residuals(const SaddleSystem& sys, const Eigen::VectorXd& q, const Eigen::VectorXd& u, Solution& s) {
    s.flux_residual = (sys.A_s * q - sys.B.transpose() * u - sys.G).norm();
    s.scalar_residual = (sys.B * q - sys.F).norm();
}

inline double residual_budget(const SaddleSystem& sys, double tol) { return tol * (sys.G.norm() + sys.F.norm() + 1.0); }

inline Eigen::SparseMatrix<double> block_matrix(const SaddleSystem& sys, double lower_sign) {
    const auto nq = sys.dofs.num_flux();
    const auto nu = sys.dofs.num_scalar();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(sys.A_s.nonZeros() + 2 * sys.B.nonZeros()));
    for (int r = 0; r < sys.A_s.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(sys.A_s, r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    }
    for (int r = 0; r < sys.B.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(sys.B, r); it; ++it) {
            t.emplace_back(it.col(), nq + it.row(), -it.value());
            t.emplace_back(nq + it.row(), it.col(), lower_sign * it.value());
        }
    }
    Eigen::SparseMatrix<double> k(nq + nu, nq + nu);
    k.setFromTriplets(t.begin(), t.end());
    return k;
}

inline void solve_direct(const SaddleSystem& sys, const SolveOptions& opts, Eigen::VectorXd& q, Eigen::VectorXd& u, Solution& s) {
    const auto nq = sys.dofs.num_flux();
    const auto nu = sys.dofs.num_scalar();
    Eigen::SparseMatrix<double> k = block_matrix(sys, 1.0);
    k.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(k);
    lu.factorize(k);
    if (lu.info() != Eigen::Success) throw AssemblyError("saddle system is structurally singular: " + lu.lastErrorMessage());
    Eigen::VectorXd rhs(nq + nu);
    rhs << sys.G, sys.F;
    Eigen::VectorXd x = lu.solve(rhs);
    // Iterative refinement for badly scaled systems.
    for (int it = 0; it < 2; ++it) {
        const Eigen::VectorXd r = rhs - k * x;
        if (r.norm() <= 1e-3 * residual_budget(sys, opts.tolerance)) break;
        x += lu.solve(r);
        ++s.iterations;
    }
    q = x.head(nq);
    u = x.tail(nu);
}

inline void solve_schur_cg(const SaddleSystem& sys, const SolveOptions& opts, Eigen::VectorXd& q, Eigen::VectorXd& u, Solution& s) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> a_inv;
    const Eigen::SparseMatrix<double> a = sys.A_s;
    a_inv.compute(a);
    if (a_inv.info() != Eigen::Success) throw AssemblyError("A_s is not positive definite");
    const SparseMatrix bt = sys.B.transpose();
    // S u = F - B A^{-1} G with S = B A^{-1} B^T.
    const Eigen::VectorXd a_inv_g = a_inv.solve(sys.G);
    const Eigen::VectorXd rhs = sys.F - sys.B * a_inv_g;
    auto apply_s = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return sys.B * a_inv.solve(bt * x); };
    const double target = 0.5 * residual_budget(sys, opts.tolerance);
    u = Eigen::VectorXd::Zero(sys.dofs.num_scalar());
    Eigen::VectorXd r = rhs;
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    double best = std::sqrt(rr);
    int it = 0;
    while (std::sqrt(rr) > target) {
        if (it >= opts.max_iterations) {
            throw NonConvergence("schur-complement CG did not converge in " + std::to_string(opts.max_iterations) + " iterations", best);
        }
        const Eigen::VectorXd sp = apply_s(p);
        const double alpha = rr / p.dot(sp);
        u += alpha * p;
        r -= alpha * sp;
        const double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;
        best = std::min(best, std::sqrt(rr));
        ++it;
    }
    s.iterations = it;
    q = a_inv_g + a_inv.solve(bt * u);
}

inline void solve_minres(const SaddleSystem& sys, const SolveOptions& opts, Eigen::VectorXd& q, Eigen::VectorXd& u, Solution& s) {
    const auto nq = sys.dofs.num_flux();
    const auto nu = sys.dofs.num_scalar();
    // Symmetrized: [A_s, -B^T; -B, 0] (q; u) = (G; -F).
    const Eigen::SparseMatrix<double> k = block_matrix(sys, -1.0);
    Eigen::VectorXd rhs(nq + nu);
    rhs << sys.G, -sys.F;
    Eigen::MINRES<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> minres;
    minres.setMaxIterations(opts.max_iterations);
    const double bnorm = rhs.norm();
    minres.setTolerance(bnorm > 0.0 ? std::min(0.5, 0.5 * residual_budget(sys, opts.tolerance) / bnorm) : opts.tolerance);
    minres.compute(k);
    Eigen::VectorXd x = minres.solve(rhs);
    s.iterations = static_cast<int>(minres.iterations());
    if (minres.info() != Eigen::Success) {
        throw NonConvergence("MINRES did not converge in " + std::to_string(opts.max_iterations) + " iterations",
                             (rhs - k * x).norm());
    }
    q = x.head(nq);
    u = x.tail(nu);
}

} // namespace detail

inline Solution solve(const SaddleSystem& sys, const SolveOptions& opts = {}) {
    opts.validate();
    const auto start = std::chrono::steady_clock::now();
    Solution s;
    s.method = opts.method;
    if (s.method == SolveMethod::Auto) {
        s.method = sys.dofs.num_flux() + sys.dofs.num_scalar() <= opts.direct_limit ? SolveMethod::Direct : SolveMethod::SchurCG;
    }
    Eigen::VectorXd q;
    Eigen::VectorXd u;
    switch (s.method) {
        case SolveMethod::Direct: detail::solve_direct(sys, opts, q, u, s); break;
        case SolveMethod::SchurCG: detail::solve_schur_cg(sys, opts, q, u, s); break;
        case SolveMethod::Minres: detail::solve_minres(sys, opts, q, u, s); break;
        case SolveMethod::Auto: break;
    }
    detail::fill_residuals(sys, q, u, s);
    const double budget = detail::residual_budget(sys, opts.tolerance);
    if (!(s.flux_residual <= budget && s.scalar_residual <= budget)) {
        throw NonConvergence(to_string(s.method) + ": residual contract violated (flux " + std::to_string(s.flux_residual) +
                                 ", scalar " + std::to_string(s.scalar_residual) + ", budget " + std::to_string(budget) + ")",
                             std::max(s.flux_residual, s.scalar_residual));
    }
    s.q = FluxField(sys.dofs, std::move(q));
    s.u = ScalarField(sys.dofs, std::move(u));
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

} // namespace wgmfem
