#pragma once

// Discrete weak divergence r = k+1. For v = {v_0, v_b n_e} and every
// phi in P_{k+1}(T):
//   (div_w v, phi)_T = -(v_0, grad phi)_T + <v_b n_e . n, phi>_{dT}.

#include "wgmfem/space.hpp"

#include <Eigen/Dense>

#include <vector>

namespace wgmfem {

/// Per-cell maps from local flux coefficients (interior block, then edge
/// blocks in loop order) to P_{k+1}(T) data.
struct WeakDivOperator {
    DofMap dofs;
    /// moments[c](i, j) = (div_w e_j, phi_i)_T for local flux dof j.
    std::vector<Eigen::MatrixXd> moments;
    /// matrices[c] = M_T^{-1} moments[c]; coefficients of div_w v in the cell basis.
    std::vector<Eigen::MatrixXd> matrices;
};

inline WeakDivOperator build_weakdiv(const Space& space) {
    const PolyMesh& mesh = space.mesh();
    WeakDivOperator op;
    op.dofs = space.dofs();
    op.moments.resize(static_cast<std::size_t>(mesh.num_cells()));
    op.matrices.resize(static_cast<std::size_t>(mesh.num_cells()));
    const int eb = op.dofs.edge_block();
    parallel_for(mesh.num_cells(), [&](int c) {
        const auto& basis = space.cell(c);
        const auto& geo = mesh.geometry(c);
        const auto& cell_edges = mesh.cell_edges(c);
        const int ns = basis.num_scalar();
        const int nk = basis.num_flux_scalar();
        const int nloc = 2 * nk + static_cast<int>(cell_edges.size()) * eb;
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(ns, nloc);

        const auto& quad = basis.quadrature();
        for (std::size_t q = 0; q < quad.size(); ++q) {
            const auto qi = static_cast<Eigen::Index>(q);
            const double w = quad.weights[q];
            const Eigen::VectorXd phi = basis.values().row(qi).head(nk).transpose();
            r.leftCols(nk) -= w * basis.grad_x().row(qi).transpose() * phi.transpose();
            r.middleCols(nk, nk) -= w * basis.grad_y().row(qi).transpose() * phi.transpose();
        }
        for (std::size_t le = 0; le < cell_edges.size(); ++le) {
            const auto& eb_basis = space.edge(cell_edges[le]);
            const auto& equad = eb_basis.quadrature();
            const double sigma = geo.signs[le];
            const int off = 2 * nk + static_cast<int>(le) * eb;
            for (std::size_t q = 0; q < equad.size(); ++q) {
                const Eigen::VectorXd psi = basis.eval(equad.points[q]);
                r.middleCols(off, eb) += sigma * equad.weights[q] * psi * eb_basis.values().row(static_cast<Eigen::Index>(q));
            }
        }
        op.matrices[static_cast<std::size_t>(c)] = basis.mass_factor().solve(r);
        op.moments[static_cast<std::size_t>(c)] = std::move(r);
    });
    return op;
}

inline ScalarField apply_weakdiv(const WeakDivOperator& op, const PolyMesh& mesh, const FluxField& v) {
    if (!(v.dofs == op.dofs)) throw InvalidArgument("apply_weakdiv: flux field layout does not match the operator");
    ScalarField out(op.dofs);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        out.cell(c) = op.matrices[static_cast<std::size_t>(c)] * gather_local(v, mesh, c);
    }
    return out;
}

} // namespace wgmfem
