#pragma once

// Polynomial bases on cells and edges.
//
// Cell functions are scaled monomials ((x - x_T)/h_T)^a ((y - y_T)/h_T)^b
// ordered by total degree, optionally orthonormalized in L2(T). Because the
// orthonormalization is a lower-triangular transform, the first dim P_k
// functions of the P_{k+1} basis span P_k; the flux basis reuses them.

#include "wgmfem/error.hpp"
#include "wgmfem/mesh.hpp"
#include "wgmfem/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

namespace wgmfem {

/// dim P_m in two variables.
constexpr int poly_dim(int m) { return m < 0 ? 0 : (m + 1) * (m + 2) / 2; }

/// Exponent pairs (a, b) of the degree <= m monomials, ordered by total degree.
inline std::vector<std::pair<int, int>> monomial_exponents(int m) {
    std::vector<std::pair<int, int>> ex;
    for (int d = 0; d <= m; ++d) {
        for (int b = 0; b <= d; ++b) ex.emplace_back(d - b, b);
    }
    return ex;
}

struct BasisOptions {
    bool orthonormalize = true;
    int cell_degree = -1; ///< quadrature exactness on cells; -1 selects 2(k+1)+2
    int edge_degree = -1; ///< quadrature exactness on edges; -1 selects 2k+2
};

/// Scalar basis of P_{k+1}(T); its first poly_dim(k) members form the basis
/// of P_k(T). Vector basis of [P_k(T)]^2: index j < n_k is (phi_j, 0), index
/// n_k + j is (0, phi_j).
class ElementBasis {
public:
    ElementBasis() = default;

    ElementBasis(const PolyMesh& mesh, int cell, int k, const BasisOptions& opts = {})
        : cell_id_(cell), k_(k), centroid_(mesh.geometry(cell).centroid), scale_(mesh.geometry(cell).diameter) {
        if (k < 0) throw InvalidArgument("build_element_basis: degree must be >= 0");
        exponents_ = monomial_exponents(k + 1);
        const int n = num_scalar();
        quad_ = cell_quadrature(mesh, cell, opts.cell_degree < 0 ? 2 * (k + 1) + 2 : opts.cell_degree);

        Eigen::MatrixXd raw(static_cast<Eigen::Index>(quad_.size()), n);
        for (std::size_t q = 0; q < quad_.size(); ++q) raw.row(static_cast<Eigen::Index>(q)) = monomials(quad_.points[q]).transpose();
        const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(quad_.weights.data(), static_cast<Eigen::Index>(quad_.size()));
        const Eigen::MatrixXd raw_mass = raw.transpose() * w.asDiagonal() * raw;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(raw_mass, Eigen::EigenvaluesOnly);
        raw_condition_ = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();

        coeff_ = Eigen::MatrixXd::Identity(n, n);
        if (opts.orthonormalize) {
            // Two Cholesky passes; the second removes the round-off of the first.
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::MatrixXd m = coeff_ * raw_mass * coeff_.transpose();
                Eigen::LLT<Eigen::MatrixXd> llt(m);
                if (llt.info() != Eigen::Success) {
                    throw GeometryError("cell " + std::to_string(cell) + ": singular mass matrix");
                }
                const Eigen::MatrixXd linv =
                    llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
                coeff_ = linv * coeff_;
            }
        }
        mass_ = coeff_ * raw_mass * coeff_.transpose();
        mass_llt_.compute(mass_);
        if (mass_llt_.info() != Eigen::Success) throw GeometryError("cell " + std::to_string(cell) + ": singular mass matrix");

        values_ = raw * coeff_.transpose();
        grad_x_.resize(values_.rows(), n);
        grad_y_.resize(values_.rows(), n);
        for (std::size_t q = 0; q < quad_.size(); ++q) {
            const auto g = gradients(quad_.points[q]);
            grad_x_.row(static_cast<Eigen::Index>(q)) = g.col(0).transpose();
            grad_y_.row(static_cast<Eigen::Index>(q)) = g.col(1).transpose();
        }
    }

    [[nodiscard]] int cell_id() const { return cell_id_; }
    [[nodiscard]] int degree() const { return k_; }
    [[nodiscard]] int num_scalar() const { return poly_dim(k_ + 1); }  ///< dim P_{k+1}
    [[nodiscard]] int num_flux_scalar() const { return poly_dim(k_); } ///< dim P_k
    [[nodiscard]] int num_vector() const { return 2 * poly_dim(k_); }  ///< dim [P_k]^2
    [[nodiscard]] const Point& centroid() const { return centroid_; }
    [[nodiscard]] double scale() const { return scale_; }

    /// Gram matrix of the P_{k+1} basis (identity when orthonormalized).
    [[nodiscard]] const Eigen::MatrixXd& mass() const { return mass_; }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& mass_factor() const { return mass_llt_; }
    /// Condition number of the unorthonormalized scaled-monomial mass matrix.
    [[nodiscard]] double raw_condition() const { return raw_condition_; }
    /// Row i holds the monomial coefficients of basis function i.
    [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coeff_; }

    /// Rule the cached tables refer to.
    [[nodiscard]] const QuadratureRule& quadrature() const { return quad_; }
    /// values()(q, i) = phi_i at quadrature point q; likewise for the gradients.
    [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }
    [[nodiscard]] const Eigen::MatrixXd& grad_x() const { return grad_x_; }
    [[nodiscard]] const Eigen::MatrixXd& grad_y() const { return grad_y_; }

    /// Scaled monomials at p (P_{k+1} ordering).
    [[nodiscard]] Eigen::VectorXd monomials(const Point& p) const {
        const double x = (p.x() - centroid_.x()) / scale_;
        const double y = (p.y() - centroid_.y()) / scale_;
        Eigen::VectorXd m(static_cast<Eigen::Index>(exponents_.size()));
        for (std::size_t i = 0; i < exponents_.size(); ++i) {
            m(static_cast<Eigen::Index>(i)) = ipow(x, exponents_[i].first) * ipow(y, exponents_[i].second);
        }
        return m;
    }

    /// All P_{k+1} basis values at p.
    [[nodiscard]] Eigen::VectorXd eval(const Point& p) const { return coeff_ * monomials(p); }

    /// All P_{k+1} basis gradients at p; row i is grad phi_i.
    [[nodiscard]] Eigen::MatrixX2d gradients(const Point& p) const {
        const double x = (p.x() - centroid_.x()) / scale_;
        const double y = (p.y() - centroid_.y()) / scale_;
        Eigen::MatrixX2d g(static_cast<Eigen::Index>(exponents_.size()), 2);
        for (std::size_t i = 0; i < exponents_.size(); ++i) {
            const auto [a, b] = exponents_[i];
            const auto r = static_cast<Eigen::Index>(i);
            g(r, 0) = a == 0 ? 0.0 : a * ipow(x, a - 1) * ipow(y, b) / scale_;
            g(r, 1) = b == 0 ? 0.0 : b * ipow(x, a) * ipow(y, b - 1) / scale_;
        }
        return coeff_ * g;
    }

    /// Vector basis function j of [P_k]^2 given the scalar values at a point.
    [[nodiscard]] Point vector_value(int j, const Eigen::VectorXd& scalar_values) const {
        const int nk = num_flux_scalar();
        const double v = scalar_values(j % nk);
        return j < nk ? Point(v, 0.0) : Point(0.0, v);
    }

private:
    static double ipow(double x, int e) {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= x;
        return r;
    }

    int cell_id_ = -1;
    int k_ = 0;
    Point centroid_ = Point::Zero();
    double scale_ = 1.0;
    std::vector<std::pair<int, int>> exponents_;
    Eigen::MatrixXd coeff_;
    Eigen::MatrixXd mass_;
    Eigen::LLT<Eigen::MatrixXd> mass_llt_;
    double raw_condition_ = 1.0;
    QuadratureRule quad_;
    Eigen::MatrixXd values_;
    Eigen::MatrixXd grad_x_;
    Eigen::MatrixXd grad_y_;
};

inline ElementBasis build_element_basis(const PolyMesh& mesh, int cell, int k, const BasisOptions& opts = {}) {
    return ElementBasis(mesh, cell, k, opts);
}

/// L2(e)-orthonormal Legendre basis of P_k(e) in the arc-length parameter,
/// measured from the edge's first vertex.
class EdgeBasis {
public:
    EdgeBasis() = default;

    EdgeBasis(const PolyMesh& mesh, int edge, int k, const BasisOptions& opts = {}) : edge_id_(edge), k_(k) {
        if (k < 0) throw InvalidArgument("EdgeBasis: degree must be >= 0");
        const auto& e = mesh.edges()[static_cast<std::size_t>(edge)];
        start_ = mesh.vertices()[static_cast<std::size_t>(e.vertices[0])];
        const Point end = mesh.vertices()[static_cast<std::size_t>(e.vertices[1])];
        length_ = e.length;
        tangent_ = (end - start_) / length_;
        quad_ = segment_quadrature(start_, end, opts.edge_degree < 0 ? 2 * k + 2 : opts.edge_degree);
        values_.resize(static_cast<Eigen::Index>(quad_.size()), k + 1);
        for (std::size_t q = 0; q < quad_.size(); ++q) values_.row(static_cast<Eigen::Index>(q)) = eval(quad_.points[q]).transpose();
    }

    [[nodiscard]] int edge_id() const { return edge_id_; }
    [[nodiscard]] int degree() const { return k_; }
    [[nodiscard]] int size() const { return k_ + 1; }
    [[nodiscard]] double length() const { return length_; }
    [[nodiscard]] const QuadratureRule& quadrature() const { return quad_; }
    [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }

    [[nodiscard]] Eigen::VectorXd eval(const Point& p) const {
        const double x = 2.0 * (p - start_).dot(tangent_) / length_ - 1.0;
        Eigen::VectorXd v(k_ + 1);
        double pm1 = 0.0;
        double pj = 1.0;
        for (int j = 0; j <= k_; ++j) {
            v(j) = pj * std::sqrt((2.0 * j + 1.0) / length_);
            const double next = ((2.0 * j + 1.0) * x * pj - j * pm1) / (j + 1.0);
            pm1 = pj;
            pj = next;
        }
        return v;
    }

private:
    int edge_id_ = -1;
    int k_ = 0;
    Point start_ = Point::Zero();
    Point tangent_ = Point::UnitX();
    double length_ = 1.0;
    QuadratureRule quad_;
    Eigen::MatrixXd values_;
};

} // namespace wgmfem
