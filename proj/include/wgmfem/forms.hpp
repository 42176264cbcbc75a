#pragma once

// Assembly of the stabilized saddle-point system
//
//   [ A_s  -B^T ] [q]   [G]
//   [ B     0   ] [u] = [F]
//
// with A_s = a + s,
//   a(eta, v) = (alpha eta_0, v_0),
//   s(eta, v) = rho sum_T h_T <(eta_0 - eta_b).n, (v_0 - v_b).n>_{dT},
//   b(v, w)   = (div_w v, w),
//   G(v) = <g, v_b . n>_{dOmega},  F(w) = (f, w).

#include "wgmfem/error.hpp"
#include "wgmfem/projection.hpp"
#include "wgmfem/space.hpp"
#include "wgmfem/weakdiv.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <string>
#include <utility>
#include <vector>

namespace wgmfem {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Symmetric, uniformly positive definite diffusion tensor.
struct CoefficientField {
    std::function<Eigen::Matrix2d(const Point&)> value;
    double lower_bound = 0.0; ///< declared lower bound of the smallest eigenvalue
    std::string name;
    /// Optional (d alpha/dx, d alpha/dy); only manufactured solutions need it.
    std::function<std::array<Eigen::Matrix2d, 2>(const Point&)> derivatives;

    static CoefficientField identity() {
        return constant(Eigen::Matrix2d::Identity(), 1.0, "identity");
    }

    static CoefficientField constant(const Eigen::Matrix2d& m, double lower_bound, std::string name = "constant") {
        return {[m](const Point&) { return m; }, lower_bound, std::move(name),
                [](const Point&) { return std::array<Eigen::Matrix2d, 2>{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()}; }};
    }

    /// [[2 + x, y/2], [y/2, 2 + y]]; smallest eigenvalue >= 1.5 on the unit square.
    static CoefficientField variable() {
        return {[](const Point& p) {
                    Eigen::Matrix2d a;
                    a << 2.0 + p.x(), 0.5 * p.y(), 0.5 * p.y(), 2.0 + p.y();
                    return a;
                },
                1.5, "variable",
                [](const Point&) {
                    Eigen::Matrix2d dx;
                    Eigen::Matrix2d dy;
                    dx << 1.0, 0.0, 0.0, 0.0;
                    dy << 0.0, 0.5, 0.5, 1.0;
                    return std::array<Eigen::Matrix2d, 2>{dx, dy};
                }};
    }
};

namespace detail {

inline void check_coefficient(const CoefficientField& alpha, const Eigen::Matrix2d& a, int cell) {
    if (a(0, 1) != a(1, 0)) throw CoefficientError("alpha is not symmetric in cell " + std::to_string(cell));
    const double tr = a.trace();
    const double det = a.determinant();
    const double lmin = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    if (!(alpha.lower_bound > 0.0) || !(lmin >= alpha.lower_bound * (1.0 - 1e-12))) {
        throw CoefficientError("alpha is not uniformly positive definite in cell " + std::to_string(cell) +
                               " (smallest eigenvalue " + std::to_string(lmin) + ", declared bound " +
                               std::to_string(alpha.lower_bound) + ")");
    }
}

inline void scatter(Triplets& out, const std::vector<int>& rows, const std::vector<int>& cols, const Eigen::MatrixXd& local) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double v = local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (v != 0.0) out.emplace_back(rows[i], cols[j], v);
        }
    }
}

inline SparseMatrix compress(int rows, int cols, const std::vector<Triplets>& per_cell) {
    Triplets all;
    for (const auto& t : per_cell) all.insert(all.end(), t.begin(), t.end());
    SparseMatrix m(rows, cols);
    m.setFromTriplets(all.begin(), all.end());
    return m;
}

} // namespace detail

/// Element matrix of a on cell c over its interior flux block.
inline Eigen::MatrixXd local_a(const Space& space, int c, const CoefficientField& alpha) {
    const auto& basis = space.cell(c);
    const int nk = basis.num_flux_scalar();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * nk, 2 * nk);
    const auto& quad = basis.quadrature();
    for (std::size_t q = 0; q < quad.size(); ++q) {
        const Eigen::Matrix2d al = alpha.value(quad.points[q]);
        detail::check_coefficient(alpha, al, c);
        const Eigen::VectorXd phi = basis.values().row(static_cast<Eigen::Index>(q)).head(nk).transpose();
        const Eigen::MatrixXd pp = quad.weights[q] * phi * phi.transpose();
        for (int r = 0; r < 2; ++r) {
            for (int s = 0; s < 2; ++s) a.block(r * nk, s * nk, nk, nk) += al(r, s) * pp;
        }
    }
    return a;
}

/// Element matrix of s on cell c over its local flux dofs.
inline Eigen::MatrixXd local_s(const Space& space, int c, double rho) {
    const PolyMesh& mesh = space.mesh();
    const auto& basis = space.cell(c);
    const auto& geo = mesh.geometry(c);
    const auto& cell_edges = mesh.cell_edges(c);
    const int nk = basis.num_flux_scalar();
    const int eb = space.dofs().edge_block();
    const int nloc = 2 * nk + static_cast<int>(cell_edges.size()) * eb;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nloc, nloc);
    Eigen::VectorXd row(nloc);
    for (std::size_t le = 0; le < cell_edges.size(); ++le) {
        const auto& ebasis = space.edge(cell_edges[le]);
        const Point& n = geo.outward_normals[le];
        const double sigma = geo.signs[le];
        const int off = 2 * nk + static_cast<int>(le) * eb;
        for (std::size_t q = 0; q < ebasis.quadrature().size(); ++q) {
            const Eigen::VectorXd phi = basis.eval(ebasis.quadrature().points[q]).head(nk);
            row.setZero();
            row.head(nk) = n.x() * phi;
            row.segment(nk, nk) = n.y() * phi;
            row.segment(off, eb) = -sigma * ebasis.values().row(static_cast<Eigen::Index>(q)).transpose();
            s += ebasis.quadrature().weights[q] * row * row.transpose();
        }
    }
    return rho * geo.diameter * s;
}

inline SparseMatrix assemble_a(const Space& space, const CoefficientField& alpha) {
    const auto& dofs = space.dofs();
    std::vector<Triplets> parts(static_cast<std::size_t>(space.mesh().num_cells()));
    parallel_for(space.mesh().num_cells(), [&](int c) {
        std::vector<int> ids(static_cast<std::size_t>(dofs.interior_block()));
        for (int i = 0; i < dofs.interior_block(); ++i) ids[static_cast<std::size_t>(i)] = dofs.interior_offset(c) + i;
        detail::scatter(parts[static_cast<std::size_t>(c)], ids, ids, local_a(space, c, alpha));
    });
    return detail::compress(dofs.num_flux(), dofs.num_flux(), parts);
}

inline SparseMatrix assemble_s(const Space& space, double rho) {
    if (!(rho > 0.0)) throw InvalidArgument("stabilization parameter rho must be > 0");
    const auto& dofs = space.dofs();
    std::vector<Triplets> parts(static_cast<std::size_t>(space.mesh().num_cells()));
    parallel_for(space.mesh().num_cells(), [&](int c) {
        const auto ids = dofs.local_flux_dofs(space.mesh(), c);
        detail::scatter(parts[static_cast<std::size_t>(c)], ids, ids, local_s(space, c, rho));
    });
    return detail::compress(dofs.num_flux(), dofs.num_flux(), parts);
}

/// B(i, j) = b(e_j, w_i): rows are scalar dofs, columns flux dofs.
inline SparseMatrix assemble_b(const Space& space, const WeakDivOperator& op) {
    const auto& dofs = space.dofs();
    std::vector<Triplets> parts(static_cast<std::size_t>(space.mesh().num_cells()));
    parallel_for(space.mesh().num_cells(), [&](int c) {
        const auto cols = dofs.local_flux_dofs(space.mesh(), c);
        std::vector<int> rows(static_cast<std::size_t>(dofs.scalar_block()));
        for (int i = 0; i < dofs.scalar_block(); ++i) rows[static_cast<std::size_t>(i)] = dofs.scalar_offset(c) + i;
        detail::scatter(parts[static_cast<std::size_t>(c)], rows, cols, op.moments[static_cast<std::size_t>(c)]);
    });
    return detail::compress(dofs.num_scalar(), dofs.num_flux(), parts);
}

/// Load vectors: G on boundary-edge flux dofs, F on scalar dofs.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> assemble_rhs(const Space& space, const SmoothScalarField& f,
                                                                const SmoothScalarField& g, int degree = -1) {
    degree = detail::resolve_degree(space, degree);
    const PolyMesh& mesh = space.mesh();
    const auto& dofs = space.dofs();
    Eigen::VectorXd G = Eigen::VectorXd::Zero(dofs.num_flux());
    Eigen::VectorXd F = Eigen::VectorXd::Zero(dofs.num_scalar());
    for (int e : mesh.boundary_edge_ids()) {
        const auto& edge = mesh.edges()[static_cast<std::size_t>(e)];
        const double sigma = mesh.geometry(edge.cells[0]).signs[mesh.local_index(edge.cells[0], e)];
        G.segment(dofs.edge_offset(e), dofs.edge_block()) = sigma * edge_moments(space, e, g.value, degree);
    }
    parallel_for(mesh.num_cells(), [&](int c) {
        F.segment(dofs.scalar_offset(c), dofs.scalar_block()) = cell_moments(space, c, f.value, degree);
    });
    return {std::move(G), std::move(F)};
}

struct SaddleSystem {
    DofMap dofs;
    SparseMatrix A_s; ///< N_q x N_q
    SparseMatrix B;   ///< N_u x N_q
    Eigen::VectorXd G;
    Eigen::VectorXd F;
    double rho = 1.0;
};

inline SaddleSystem assemble_system(const Space& space, double rho, const CoefficientField& alpha,
                                    const SmoothScalarField& f, const SmoothScalarField& g) {
    SaddleSystem sys;
    sys.dofs = space.dofs();
    sys.rho = rho;
    sys.A_s = assemble_a(space, alpha) + assemble_s(space, rho);
    sys.B = assemble_b(space, build_weakdiv(space));
    std::tie(sys.G, sys.F) = assemble_rhs(space, f, g);
    return sys;
}

/// Coordinate-triplet text dump: header "rows cols nnz", then "row col value" lines.
inline void write_triplets(const SparseMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n' << std::setprecision(17);
    for (int r = 0; r < m.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(m, r); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
}

inline void write_triplets(const Eigen::VectorXd& v, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    int nnz = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) nnz += v(i) != 0.0;
    out << v.size() << " 1 " << nnz << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) != 0.0) out << i << " 0 " << v(i) << '\n';
    }
}

} // namespace wgmfem
