#pragma once

// Quadrature on segments, triangles and star-shaped polygons (via the
// centroid fan).

#include "wgmfem/error.hpp"
#include "wgmfem/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace wgmfem {

struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exactness = 0;

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Largest polynomial degree the rules below are offered for.
inline constexpr int kMaxQuadratureDegree = 30;

/// Gauss-Legendre nodes and weights on [0, 1] (Golub-Welsch).
struct GaussRule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const GaussRule1D& gauss_legendre(int npoints) {
    static std::mutex mutex;
    static std::map<int, GaussRule1D> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(npoints); it != cache.end()) return it->second;
    if (npoints < 1) throw InvalidArgument("gauss_legendre: need at least one point");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(npoints, npoints);
    for (int i = 1; i < npoints; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        jacobi(i, i - 1) = b;
        jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussRule1D rule;
    std::vector<std::pair<double, double>> nw;
    for (int i = 0; i < npoints; ++i) {
        const double v0 = eig.eigenvectors()(0, i);
        nw.emplace_back(0.5 * (eig.eigenvalues()(i) + 1.0), v0 * v0);
    }
    std::sort(nw.begin(), nw.end());
    // Symmetrize to remove eigen-solver round-off.
    for (int i = 0; i < npoints / 2; ++i) {
        auto& lo = nw[static_cast<std::size_t>(i)];
        auto& hi = nw[static_cast<std::size_t>(npoints - 1 - i)];
        const double x = 0.5 * (lo.first + (1.0 - hi.first));
        const double w = 0.5 * (lo.second + hi.second);
        lo = {x, w};
        hi = {1.0 - x, w};
    }
    if (npoints % 2 == 1) nw[static_cast<std::size_t>(npoints / 2)].first = 0.5;
    for (const auto& [x, w] : nw) {
        rule.nodes.push_back(x);
        rule.weights.push_back(w);
    }
    return cache.emplace(npoints, std::move(rule)).first->second;
}

namespace detail {

inline void check_degree(int degree, const char* where) {
    if (degree < 0) throw InvalidArgument(std::string(where) + ": negative exactness degree");
    if (degree > kMaxQuadratureDegree) {
        throw CapabilityError(std::string(where) + ": exactness degree " + std::to_string(degree) +
                              " exceeds the implemented maximum " + std::to_string(kMaxQuadratureDegree));
    }
}

} // namespace detail

/// Gauss rule on the segment [a, b], exact for polynomials of the given degree.
inline QuadratureRule segment_quadrature(const Point& a, const Point& b, int degree) {
    detail::check_degree(degree, "segment_quadrature");
    const auto& g = gauss_legendre(degree / 2 + 1);
    const double len = (b - a).norm();
    QuadratureRule r;
    r.exactness = degree;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        r.points.push_back(a + g.nodes[i] * (b - a));
        r.weights.push_back(g.weights[i] * len);
    }
    return r;
}

/// Collapsed-coordinate rule on a triangle. The Duffy Jacobian (1 - v) adds
/// one degree in v, hence the extra point there.
inline void append_triangle_quadrature(const std::array<Point, 3>& tri, int degree, QuadratureRule& out) {
    const auto& gu = gauss_legendre(degree / 2 + 1);
    const auto& gv = gauss_legendre((degree + 1) / 2 + 1);
    const Point e1 = tri[1] - tri[0];
    const Point e2 = tri[2] - tri[0];
    const double jac = std::abs(detail::cross2(e1, e2));
    for (std::size_t j = 0; j < gv.nodes.size(); ++j) {
        const double v = gv.nodes[j];
        for (std::size_t i = 0; i < gu.nodes.size(); ++i) {
            const double u = gu.nodes[i];
            out.points.push_back(tri[0] + u * (1.0 - v) * e1 + v * e2);
            out.weights.push_back(gu.weights[i] * gv.weights[j] * (1.0 - v) * jac);
        }
    }
}

inline QuadratureRule triangle_quadrature(const std::array<Point, 3>& tri, int degree) {
    detail::check_degree(degree, "triangle_quadrature");
    QuadratureRule r;
    r.exactness = degree;
    append_triangle_quadrature(tri, degree, r);
    return r;
}

/// Rule on cell c built from its centroid fan. Requires the cell to be
/// star-shaped with respect to the centroid.
inline QuadratureRule cell_quadrature(const PolyMesh& mesh, int cell, int degree) {
    detail::check_degree(degree, "cell_quadrature");
    const auto& g = mesh.geometry(cell);
    QuadratureRule r;
    r.exactness = degree;
    for (const auto& tri : g.fan_triangles) {
        if (!(detail::cross2(tri[1] - tri[0], tri[2] - tri[0]) > 0.0)) {
            throw GeometryError("cell " + std::to_string(cell) + " is not star-shaped with respect to its centroid");
        }
        append_triangle_quadrature(tri, degree, r);
    }
    return r;
}

inline QuadratureRule edge_quadrature(const PolyMesh& mesh, int edge, int degree) {
    const auto& e = mesh.edges()[static_cast<std::size_t>(edge)];
    return segment_quadrature(mesh.vertices()[static_cast<std::size_t>(e.vertices[0])],
                              mesh.vertices()[static_cast<std::size_t>(e.vertices[1])], degree);
}

} // namespace wgmfem
