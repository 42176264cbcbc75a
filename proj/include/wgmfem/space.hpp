#pragma once

// Degree-of-freedom layout and coefficient vectors for the flux space
// V_h = {[P_k(T)]^2 on cells, P_k(e) n_e on edges} and the scalar space
// W_h = {P_{k+1}(T) on cells}.

#include "wgmfem/basis.hpp"
#include "wgmfem/error.hpp"
#include "wgmfem/mesh.hpp"
#include "wgmfem/parallel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace wgmfem {

/// Flux dofs: all cell-interior blocks first (cell-major), then one block
/// per edge. Scalar dofs: one block per cell.
struct DofMap {
    int degree = 0;
    int num_cells = 0;
    int num_edges = 0;

    [[nodiscard]] int interior_block() const { return 2 * poly_dim(degree); }
    [[nodiscard]] int edge_block() const { return degree + 1; }
    [[nodiscard]] int scalar_block() const { return poly_dim(degree + 1); }

    [[nodiscard]] int num_interior_flux() const { return num_cells * interior_block(); }
    [[nodiscard]] int num_flux() const { return num_interior_flux() + num_edges * edge_block(); }
    [[nodiscard]] int num_scalar() const { return num_cells * scalar_block(); }

    [[nodiscard]] int interior_offset(int c) const { return c * interior_block(); }
    [[nodiscard]] int edge_offset(int e) const { return num_interior_flux() + e * edge_block(); }
    [[nodiscard]] int scalar_offset(int c) const { return c * scalar_block(); }

    /// Global flux indices touched by cell c: its interior block, then its
    /// edge blocks in loop order.
    [[nodiscard]] std::vector<int> local_flux_dofs(const PolyMesh& mesh, int c) const {
        std::vector<int> ids;
        for (int i = 0; i < interior_block(); ++i) ids.push_back(interior_offset(c) + i);
        for (int e : mesh.cell_edges(c)) {
            for (int i = 0; i < edge_block(); ++i) ids.push_back(edge_offset(e) + i);
        }
        return ids;
    }

    friend bool operator==(const DofMap&, const DofMap&) = default;
};

/// Mesh plus bases for a fixed degree k. Holds a reference to the mesh,
/// which must outlive the space.
class Space {
public:
    Space(const PolyMesh& mesh, int k, const BasisOptions& opts = {}) : mesh_(&mesh), k_(k), opts_(opts) {
        if (k < 0 || k > 3) throw InvalidArgument("degree k must lie in {0, 1, 2, 3}");
        dofs_ = DofMap{k, mesh.num_cells(), mesh.num_edges()};
        cells_.resize(static_cast<std::size_t>(mesh.num_cells()));
        edges_.resize(static_cast<std::size_t>(mesh.num_edges()));
        parallel_for(mesh.num_cells(), [&](int c) { cells_[static_cast<std::size_t>(c)] = ElementBasis(mesh, c, k, opts); });
        parallel_for(mesh.num_edges(), [&](int e) { edges_[static_cast<std::size_t>(e)] = EdgeBasis(mesh, e, k, opts); });
    }
    Space(const PolyMesh&&, int, const BasisOptions& = {}) = delete;

    [[nodiscard]] const PolyMesh& mesh() const { return *mesh_; }
    [[nodiscard]] int degree() const { return k_; }
    [[nodiscard]] const BasisOptions& options() const { return opts_; }
    [[nodiscard]] const DofMap& dofs() const { return dofs_; }
    [[nodiscard]] const ElementBasis& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] const EdgeBasis& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

    /// Exactness used when integrating non-polynomial data against the bases.
    [[nodiscard]] int data_degree() const { return 2 * (k_ + 2) + 4; }

private:
    const PolyMesh* mesh_;
    int k_;
    BasisOptions opts_;
    DofMap dofs_;
    std::vector<ElementBasis> cells_;
    std::vector<EdgeBasis> edges_;
};

/// Coefficients of v = {v_0, v_b n_e} in V_h.
struct FluxField {
    DofMap dofs;
    Eigen::VectorXd coeffs;

    FluxField() = default;
    explicit FluxField(const DofMap& d) : dofs(d), coeffs(Eigen::VectorXd::Zero(d.num_flux())) {}
    FluxField(const DofMap& d, Eigen::VectorXd c) : dofs(d), coeffs(std::move(c)) {
        if (coeffs.size() != dofs.num_flux()) throw InvalidArgument("FluxField: coefficient count does not match the dof map");
    }

    [[nodiscard]] auto interior(int c) { return coeffs.segment(dofs.interior_offset(c), dofs.interior_block()); }
    [[nodiscard]] auto interior(int c) const { return coeffs.segment(dofs.interior_offset(c), dofs.interior_block()); }
    [[nodiscard]] auto edge(int e) { return coeffs.segment(dofs.edge_offset(e), dofs.edge_block()); }
    [[nodiscard]] auto edge(int e) const { return coeffs.segment(dofs.edge_offset(e), dofs.edge_block()); }
};

/// Coefficients of w in W_h, per cell in the P_{k+1}(T) basis.
struct ScalarField {
    DofMap dofs;
    Eigen::VectorXd coeffs;

    ScalarField() = default;
    explicit ScalarField(const DofMap& d) : dofs(d), coeffs(Eigen::VectorXd::Zero(d.num_scalar())) {}
    ScalarField(const DofMap& d, Eigen::VectorXd c) : dofs(d), coeffs(std::move(c)) {
        if (coeffs.size() != dofs.num_scalar()) throw InvalidArgument("ScalarField: coefficient count does not match the dof map");
    }

    [[nodiscard]] auto cell(int c) { return coeffs.segment(dofs.scalar_offset(c), dofs.scalar_block()); }
    [[nodiscard]] auto cell(int c) const { return coeffs.segment(dofs.scalar_offset(c), dofs.scalar_block()); }
};

/// Local flux vector of cell c (interior block then edge blocks in loop order).
inline Eigen::VectorXd gather_local(const FluxField& v, const PolyMesh& mesh, int c) {
    const auto ids = v.dofs.local_flux_dofs(mesh, c);
    Eigen::VectorXd out(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) out(static_cast<Eigen::Index>(i)) = v.coeffs(ids[i]);
    return out;
}

/// Value of w restricted to cell c at point p.
inline double eval_scalar(const Space& space, const ScalarField& w, int c, const Point& p) {
    return space.cell(c).eval(p).dot(w.cell(c));
}

/// Value of v_0 on cell c at point p.
inline Point eval_interior(const Space& space, const FluxField& v, int c, const Point& p) {
    const auto& b = space.cell(c);
    const int nk = b.num_flux_scalar();
    const Eigen::VectorXd phi = b.eval(p).head(nk);
    const auto vi = v.interior(c);
    return {phi.dot(vi.head(nk)), phi.dot(vi.tail(nk))};
}

} // namespace wgmfem
