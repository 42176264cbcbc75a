#pragma once

// Polygonal meshes: storage, validation, generators and shape-regularity
// diagnostics. Geometry kernels are two-dimensional.

#include "wgmfem/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wgmfem {

using Point = Eigen::Vector2d;

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rectangle {
    double x0 = 0.0;
    double x1 = 1.0;
    double y0 = 0.0;
    double y1 = 1.0;

    [[nodiscard]] double width() const { return x1 - x0; }
    [[nodiscard]] double height() const { return y1 - y0; }
};

struct Edge {
    std::array<int, 2> vertices{};   ///< traversal order of cells[0]
    std::array<int, 2> cells{-1, -1}; ///< cells[1] == -1 on the boundary
    Point normal = Point::Zero();     ///< the direction n_e of the normal set
    double length = 0.0;

    [[nodiscard]] bool is_boundary() const { return cells[1] < 0; }
};

/// Per-cell geometric data derived from the vertex loop.
struct ElementGeometry {
    int cell_id = -1;
    Point centroid = Point::Zero(); ///< arithmetic mean of the vertices; star point of the fan
    double diameter = 0.0;          ///< h_T
    double area = 0.0;              ///< |T|
    std::vector<std::array<Point, 3>> fan_triangles; ///< (centroid, v_i, v_{i+1})
    std::vector<Point> outward_normals;              ///< per local edge
    std::vector<int> signs;                          ///< n_e . n_{dT} per local edge, +1 or -1
};

namespace detail {

inline double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double signed_area(std::span<const Point> pts) {
    double a = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        a += cross2(pts[i], pts[(i + 1) % pts.size()]);
    }
    return 0.5 * a;
}

// Proper or touching intersection of closed segments [p0,p1] and [q0,q1].
inline bool segments_intersect(const Point& p0, const Point& p1, const Point& q0, const Point& q1) {
    auto orient = [](const Point& a, const Point& b, const Point& c) {
        const double v = cross2(b - a, c - a);
        const double scale = (b - a).norm() * (c - a).norm();
        if (std::abs(v) <= 1e-14 * scale) return 0;
        return v > 0 ? 1 : -1;
    };
    auto on_segment = [](const Point& a, const Point& b, const Point& c) {
        return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) &&
               std::min(a.y(), b.y()) <= c.y() && c.y() <= std::max(a.y(), b.y());
    };
    const int o1 = orient(p0, p1, q0);
    const int o2 = orient(p0, p1, q1);
    const int o3 = orient(q0, q1, p0);
    const int o4 = orient(q0, q1, p1);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p0, p1, q0)) return true;
    if (o2 == 0 && on_segment(p0, p1, q1)) return true;
    if (o3 == 0 && on_segment(q0, q1, p0)) return true;
    if (o4 == 0 && on_segment(q0, q1, p1)) return true;
    return false;
}

} // namespace detail

/// Immutable polygonal mesh with oriented edges and the edge normal set.
///
/// Edge normals follow a fixed convention: n_e points out of the
/// lower-indexed incident cell (hence outward of the domain on boundary
/// edges). with_flipped_normals() produces meshes with other admissible
/// choices of the normal set.
class PolyMesh {
public:
    PolyMesh() = default;

    /// Builds and validates a mesh from a vertex list and CCW vertex loops.
    /// Throws MeshInvalid with cell context on any violated invariant.
    static PolyMesh from_cells(std::vector<Point> vertices, std::vector<std::vector<int>> cells) {
        PolyMesh m;
        m.vertices_ = std::move(vertices);
        m.cells_ = std::move(cells);
        m.build();
        return m;
    }

    [[nodiscard]] int dimension() const { return 2; }
    [[nodiscard]] const std::vector<Point>& vertices() const { return vertices_; }
    [[nodiscard]] const std::vector<std::vector<int>>& cells() const { return cells_; }
    [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
    [[nodiscard]] const std::vector<int>& boundary_edge_ids() const { return boundary_edges_; }
    [[nodiscard]] int num_cells() const { return static_cast<int>(cells_.size()); }
    [[nodiscard]] int num_edges() const { return static_cast<int>(edges_.size()); }
    [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_interior_edges() const { return num_edges() - static_cast<int>(boundary_edges_.size()); }

    /// Edge ids of cell c in loop order; local edge i joins local vertices i and i+1.
    [[nodiscard]] const std::vector<int>& cell_edges(int c) const { return cell_edges_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] const ElementGeometry& geometry(int c) const { return geometry_[static_cast<std::size_t>(c)]; }

    /// h = max_T h_T.
    [[nodiscard]] double mesh_size() const {
        double h = 0.0;
        for (const auto& g : geometry_) h = std::max(h, g.diameter);
        return h;
    }

    [[nodiscard]] double total_area() const {
        double a = 0.0;
        for (const auto& g : geometry_) a += g.area;
        return a;
    }

    /// Copy of the mesh with n_e reversed on the listed edges.
    [[nodiscard]] PolyMesh with_flipped_normals(std::span<const int> edge_ids) const {
        PolyMesh m = *this;
        for (int e : edge_ids) {
            if (e < 0 || e >= num_edges()) throw InvalidArgument("with_flipped_normals: edge id out of range");
            m.edges_[static_cast<std::size_t>(e)].normal = -m.edges_[static_cast<std::size_t>(e)].normal;
        }
        m.compute_signs();
        return m;
    }

    [[nodiscard]] PolyMesh with_all_normals_flipped() const {
        std::vector<int> all(edges_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        return with_flipped_normals(all);
    }

    /// Domain boundary is convex (checked on boundary edge turning directions).
    [[nodiscard]] bool boundary_is_convex() const {
        // Every vertex must lie on the inner side of every boundary edge.
        for (int e : boundary_edges_) {
            const Edge& ed = edges_[static_cast<std::size_t>(e)];
            const Point& a = vertices_[static_cast<std::size_t>(ed.vertices[0])];
            const Point outward = geometry(ed.cells[0]).outward_normals[local_index(ed.cells[0], e)];
            for (const auto& p : vertices_) {
                if ((p - a).dot(outward) > 1e-12 * ed.length) return false;
            }
        }
        return true;
    }

    /// Local position of edge e in the loop of cell c.
    [[nodiscard]] std::size_t local_index(int c, int e) const {
        const auto& ce = cell_edges(c);
        const auto it = std::find(ce.begin(), ce.end(), e);
        if (it == ce.end()) throw InvalidArgument("edge " + std::to_string(e) + " is not a side of cell " + std::to_string(c));
        return static_cast<std::size_t>(it - ce.begin());
    }

    friend bool operator==(const PolyMesh& a, const PolyMesh& b) {
        return a.vertices_ == b.vertices_ && a.cells_ == b.cells_;
    }

private:
    void build() {
        const int nv = num_vertices();
        if (cells_.empty()) throw MeshInvalid("mesh has no cells");
        std::map<std::pair<int, int>, int> edge_of;
        cell_edges_.assign(cells_.size(), {});
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            const auto& loop = cells_[c];
            const std::string ctx = "cell " + std::to_string(c) + ": ";
            if (loop.size() < 3) throw MeshInvalid(ctx + "fewer than 3 vertices");
            for (int v : loop) {
                if (v < 0 || v >= nv) {
                    throw MeshInvalid(ctx + "vertex index " + std::to_string(v) + " out of range [0, " +
                                      std::to_string(nv) + ")");
                }
            }
            std::vector<int> sorted = loop;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                throw MeshInvalid(ctx + "repeated vertex in loop");
            }
            const auto pts = loop_points(static_cast<int>(c));
            double scale = 0.0;
            for (const auto& p : pts) scale = std::max(scale, (p - pts[0]).squaredNorm());
            const double area = detail::signed_area(pts);
            if (std::abs(area) <= 1e-14 * scale) throw MeshInvalid(ctx + "degenerate cell (zero area)");
            if (area < 0.0) throw MeshInvalid(ctx + "orientation: vertices are listed clockwise");
            const std::size_t m = pts.size();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = i + 2; j < m; ++j) {
                    if (i == 0 && j == m - 1) continue;
                    if (detail::segments_intersect(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m])) {
                        throw MeshInvalid(ctx + "polygon is not simple");
                    }
                }
            }
            for (std::size_t i = 0; i < m; ++i) {
                const int a = loop[i];
                const int b = loop[(i + 1) % m];
                const auto key = std::minmax(a, b);
                auto it = edge_of.find(key);
                if (it == edge_of.end()) {
                    Edge e;
                    e.vertices = {a, b};
                    e.cells = {static_cast<int>(c), -1};
                    const Point t = vertices_[static_cast<std::size_t>(b)] - vertices_[static_cast<std::size_t>(a)];
                    e.length = t.norm();
                    e.normal = Point(t.y(), -t.x()) / e.length;
                    edge_of.emplace(key, static_cast<int>(edges_.size()));
                    cell_edges_[c].push_back(static_cast<int>(edges_.size()));
                    edges_.push_back(e);
                } else {
                    Edge& e = edges_[static_cast<std::size_t>(it->second)];
                    if (!e.is_boundary()) throw MeshInvalid(ctx + "edge shared by more than two cells");
                    if (e.vertices[0] != b || e.vertices[1] != a) {
                        throw MeshInvalid(ctx + "orientation: shared edge traversed in the same direction as its neighbour");
                    }
                    e.cells[1] = static_cast<int>(c);
                    cell_edges_[c].push_back(it->second);
                }
            }
        }
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            if (edges_[e].is_boundary()) boundary_edges_.push_back(static_cast<int>(e));
        }
        geometry_.resize(cells_.size());
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            auto& g = geometry_[c];
            const auto pts = loop_points(static_cast<int>(c));
            g.cell_id = static_cast<int>(c);
            g.area = detail::signed_area(pts);
            g.centroid = Point::Zero();
            for (const auto& p : pts) g.centroid += p;
            g.centroid /= static_cast<double>(pts.size());
            g.diameter = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                for (std::size_t j = i + 1; j < pts.size(); ++j) g.diameter = std::max(g.diameter, (pts[i] - pts[j]).norm());
            }
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const Point& p0 = pts[i];
                const Point& p1 = pts[(i + 1) % pts.size()];
                g.fan_triangles.push_back({g.centroid, p0, p1});
                const Point t = (p1 - p0).normalized();
                g.outward_normals.emplace_back(t.y(), -t.x());
            }
        }
        compute_signs();
    }

    void compute_signs() {
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            auto& g = geometry_[c];
            g.signs.clear();
            for (std::size_t i = 0; i < cell_edges_[c].size(); ++i) {
                const Edge& e = edges_[static_cast<std::size_t>(cell_edges_[c][i])];
                g.signs.push_back(e.normal.dot(g.outward_normals[i]) > 0.0 ? 1 : -1);
            }
        }
    }

    [[nodiscard]] std::vector<Point> loop_points(int c) const {
        std::vector<Point> pts;
        for (int v : cells_[static_cast<std::size_t>(c)]) pts.push_back(vertices_[static_cast<std::size_t>(v)]);
        return pts;
    }

    std::vector<Point> vertices_;
    std::vector<std::vector<int>> cells_;
    std::vector<Edge> edges_;
    std::vector<int> boundary_edges_;
    std::vector<std::vector<int>> cell_edges_;
    std::vector<ElementGeometry> geometry_;
};

/// n x n axis-aligned cells on a rectangle, vertex (i, j) at index j(n+1)+i.
inline PolyMesh generate_uniform_quad_mesh(int n, const Rectangle& domain = {}) {
    if (n < 1) throw InvalidArgument("generate_uniform_quad_mesh: n must be >= 1");
    if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
        throw InvalidArgument("generate_uniform_quad_mesh: degenerate rectangle");
    }
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            // Exact endpoints keep the domain area exact.
            const double x = (i == n) ? domain.x1 : domain.x0 + domain.width() * i / n;
            const double y = (j == n) ? domain.y1 : domain.y0 + domain.height() * j / n;
            vertices.emplace_back(x, y);
        }
    }
    std::vector<std::vector<int>> cells;
    cells.reserve(static_cast<std::size_t>(n * n));
    const auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
    return PolyMesh::from_cells(std::move(vertices), std::move(cells));
}

/// Uniform quad mesh whose interior vertices are moved by a pseudo-random
/// offset of length at most jitter * min(cell width, cell height).
inline PolyMesh generate_perturbed_poly_mesh(int n, double jitter, std::uint64_t seed, const Rectangle& domain = {}) {
    if (!(jitter >= 0.0 && jitter <= 0.3)) throw InvalidArgument("generate_perturbed_poly_mesh: jitter must lie in [0, 0.3]");
    const PolyMesh base = generate_uniform_quad_mesh(n, domain);
    if (jitter == 0.0) return base;
    std::vector<Point> vertices = base.vertices();
    const double radius = jitter * std::min(domain.width(), domain.height()) / n;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            const double r = radius * std::sqrt(unit(rng));
            const double theta = 2.0 * std::numbers::pi * unit(rng);
            vertices[static_cast<std::size_t>(j * (n + 1) + i)] += Point(r * std::cos(theta), r * std::sin(theta));
        }
    }
    return PolyMesh::from_cells(std::move(vertices), base.cells());
}

/// Empirical shape-regularity constants.
struct RegularityReport {
    std::vector<double> rho_v;        ///< per cell |T| / h_T^2
    std::vector<double> rho_e;        ///< per edge |e| / h_e
    std::vector<double> kappa;        ///< per edge min over incident cells of h_e / h_T
    std::vector<bool> star_shaped;    ///< per cell, w.r.t. the vertex centroid
    std::vector<double> height_ratio; ///< per cell min over edges of (height of centroid over e) / h_T
    std::vector<double> apex_angle;   ///< per cell max angle between x_e - centroid and n, radians

    double min_rho_v = 0.0;
    double max_rho_v = 0.0;
    double min_rho_e = 0.0;
    double min_kappa = 0.0;
    double min_height_ratio = 0.0;
    double max_apex_angle = 0.0;
    bool all_star_shaped = false;
};

inline RegularityReport check_regularity(const PolyMesh& mesh) {
    RegularityReport r;
    const int nc = mesh.num_cells();
    r.rho_v.resize(static_cast<std::size_t>(nc));
    r.star_shaped.resize(static_cast<std::size_t>(nc));
    r.height_ratio.resize(static_cast<std::size_t>(nc));
    r.apex_angle.resize(static_cast<std::size_t>(nc));
    r.rho_e.assign(static_cast<std::size_t>(mesh.num_edges()), 0.0);
    r.kappa.assign(static_cast<std::size_t>(mesh.num_edges()), std::numeric_limits<double>::infinity());
    for (int c = 0; c < nc; ++c) {
        const auto& g = mesh.geometry(c);
        const auto cs = static_cast<std::size_t>(c);
        if (!(g.area > 0.0)) throw MeshInvalid("cell " + std::to_string(c) + ": degenerate cell (area <= 0)");
        r.rho_v[cs] = g.area / (g.diameter * g.diameter);
        bool star = true;
        double min_height = std::numeric_limits<double>::infinity();
        double max_angle = 0.0;
        for (std::size_t i = 0; i < g.fan_triangles.size(); ++i) {
            const auto& tri = g.fan_triangles[i];
            const double tri_area = 0.5 * detail::cross2(tri[1] - tri[0], tri[2] - tri[0]);
            if (!(tri_area > 1e-14 * g.area)) star = false;
            const double len = (tri[2] - tri[1]).norm();
            min_height = std::min(min_height, 2.0 * tri_area / len / g.diameter);
            const Point& n = g.outward_normals[i];
            for (int k = 1; k <= 2; ++k) {
                const Point d = tri[static_cast<std::size_t>(k)] - g.centroid;
                max_angle = std::max(max_angle, std::acos(std::clamp(d.dot(n) / d.norm(), -1.0, 1.0)));
            }
            const int e = mesh.cell_edges(c)[i];
            auto& kap = r.kappa[static_cast<std::size_t>(e)];
            kap = std::min(kap, len / g.diameter);
        }
        r.star_shaped[cs] = star;
        r.height_ratio[cs] = min_height;
        r.apex_angle[cs] = max_angle;
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        // flat edges: h_e == |e|
        const double len = mesh.edges()[static_cast<std::size_t>(e)].length;
        r.rho_e[static_cast<std::size_t>(e)] = len / len;
    }
    r.min_rho_v = *std::min_element(r.rho_v.begin(), r.rho_v.end());
    r.max_rho_v = *std::max_element(r.rho_v.begin(), r.rho_v.end());
    r.min_rho_e = *std::min_element(r.rho_e.begin(), r.rho_e.end());
    r.min_kappa = *std::min_element(r.kappa.begin(), r.kappa.end());
    r.min_height_ratio = *std::min_element(r.height_ratio.begin(), r.height_ratio.end());
    r.max_apex_angle = *std::max_element(r.apex_angle.begin(), r.apex_angle.end());
    r.all_star_shaped = std::all_of(r.star_shaped.begin(), r.star_shaped.end(), [](bool b) { return b; });
    return r;
}

} // namespace wgmfem
