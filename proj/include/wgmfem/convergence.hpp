#pragma once

// Refinement studies against manufactured solutions, and their CSV and
// JSON serializations.

#include "wgmfem/analysis.hpp"
#include "wgmfem/forms.hpp"
#include "wgmfem/manufactured.hpp"
#include "wgmfem/mesh.hpp"
#include "wgmfem/solver.hpp"
#include "wgmfem/space.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wgmfem {

enum class MeshFamily { Uniform, Perturbed };

struct StudyConfig {
    MeshFamily family = MeshFamily::Uniform;
    int n0 = 4;
    int levels = 4;
    double jitter = 0.2;
    std::uint64_t seed = 1;
    int degree = 0;
    double rho = 1.0;
    std::string solution = "sinsin";
    std::string alpha = "identity";
    SolveOptions solver;
    Rectangle domain;

    void validate() const {
        if (n0 < 1) throw InvalidArgument("n0 must be >= 1");
        if (levels < 2) throw InvalidArgument("a convergence study needs levels >= 2");
        if (degree < 0 || degree > 3) throw InvalidArgument("degree k must be in 0..3");
        if (!(rho > 0.0)) throw InvalidArgument("rho must be > 0");
        solver.validate();
    }
};

inline PolyMesh make_study_mesh(const StudyConfig& cfg, int n) {
    if (cfg.family == MeshFamily::Uniform) return generate_uniform_quad_mesh(n, cfg.domain);
    return generate_perturbed_poly_mesh(n, cfg.jitter, cfg.seed, cfg.domain);
}

/// Solves on n0, 2 n0, ..., 2^{levels-1} n0 and records the errors.
inline ConvergenceReport run_study(const StudyConfig& cfg) {
    cfg.validate();
    ConvergenceReport report;
    report.degree = cfg.degree;
    report.solution = cfg.solution;
    report.alpha = cfg.alpha;
    report.rho = cfg.rho;
    const ManufacturedSolution m = manufactured_by_name(cfg.solution, cfg.alpha);
    for (int l = 0; l < cfg.levels; ++l) {
        const int n = cfg.n0 << l;
        const PolyMesh mesh = make_study_mesh(cfg, n);
        if (l == 0) report.convex_domain = mesh.boundary_is_convex();
        const Space space(mesh, cfg.degree);
        const SaddleSystem sys = assemble_system(space, cfg.rho, m.alpha, m.f, m.g);
        const Solution sol = solve(sys, cfg.solver);
        report.levels.push_back(
            {l, n, error_bundle(space, sys, sol, m), projection_errors(space, m.q, m.u, m.alpha, cfg.rho), sol.wall_seconds});
    }
    return report;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_rate(const std::vector<std::optional<double>>& r, std::size_t level) {
    if (level == 0) return "";
    const auto& v = r[level - 1];
    return v ? fmt17(*v) : "exact";
}

inline nlohmann::json rate_json(const std::optional<double>& r) { return r ? nlohmann::json(*r) : nlohmann::json("exact"); }

} // namespace detail

/// Columns: level, h, triple_bar_q, h1h_u, l2_u, l2_q0, rate_triple, rate_h1h,
/// rate_l2. Rates are empty on the first row and "exact" for zero errors.
inline void write_csv(const ConvergenceReport& r, std::ostream& out) {
    out << "level,h,triple_bar_q,h1h_u,l2_u,l2_q0,rate_triple,rate_h1h,rate_l2\n";
    const bool rated = r.levels.size() >= 2;
    const auto rt = rated ? r.rates(&ErrorBundle::triple_bar_q) : std::vector<std::optional<double>>{};
    const auto rh = rated ? r.rates(&ErrorBundle::h1h_u) : std::vector<std::optional<double>>{};
    const auto rl = rated ? r.rates(&ErrorBundle::l2_u) : std::vector<std::optional<double>>{};
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
        const auto& e = r.levels[i].errors;
        out << r.levels[i].level << ',' << detail::fmt17(e.h) << ',' << detail::fmt17(e.triple_bar_q) << ','
            << detail::fmt17(e.h1h_u) << ',' << detail::fmt17(e.l2_u) << ',' << detail::fmt17(e.l2_q0) << ',';
        if (rated) {
            out << detail::fmt_rate(rt, i) << ',' << detail::fmt_rate(rh, i) << ',' << detail::fmt_rate(rl, i);
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

/// Observed rate on the finest pair compared with its target. The last two
/// verdicts rate the projections ||q - Q_0 q|| and ||u - QQ_h u|| of the exact data.
struct RateVerdict {
    std::string name;
    std::optional<double> observed; ///< nullopt: errors vanish (exact)
    double target = 0.0;
    bool asserted = true;
    bool pass = false;
};

inline std::vector<RateVerdict> judge_rates(const ConvergenceReport& r, double tolerance) {
    const auto t = r.targets();
    auto verdict = [&](const char* name, const std::vector<std::optional<double>>& rates, double target, bool asserted) {
        RateVerdict v{name, rates.back(), target, asserted, false};
        // A vanishing error cannot contradict an order.
        v.pass = !asserted || !v.observed || std::abs(*v.observed - target) <= tolerance;
        return v;
    };
    const double k = r.degree;
    return {verdict("triple_bar_q", r.rates(&ErrorBundle::triple_bar_q), t[0], true),
            verdict("h1h_u", r.rates(&ErrorBundle::h1h_u), t[1], true),
            verdict("l2_u", r.rates(&ErrorBundle::l2_u), t[2], r.convex_domain),
            verdict("projection_q0", r.projection_rates(&ProjectionErrors::l2_q0), k + 1.0, true),
            verdict("projection_u", r.projection_rates(&ProjectionErrors::l2_u), k + 2.0, true)};
}

inline nlohmann::json summary_json(const ConvergenceReport& r, double tolerance) {
    nlohmann::json j;
    j["degree"] = r.degree;
    j["solution"] = r.solution;
    j["alpha"] = r.alpha;
    j["rho"] = r.rho;
    j["convex_domain"] = r.convex_domain;
    j["rate_tolerance"] = tolerance;
    j["levels"] = nlohmann::json::array();
    for (const auto& l : r.levels) {
        j["levels"].push_back({{"level", l.level},
                               {"n", l.n},
                               {"h", l.errors.h},
                               {"triple_bar_q", l.errors.triple_bar_q},
                               {"h1h_u", l.errors.h1h_u},
                               {"l2_u", l.errors.l2_u},
                               {"l2_q0", l.errors.l2_q0},
                               {"projection_q0", l.projection.l2_q0},
                               {"projection_triple_bar_q", l.projection.triple_bar_q},
                               {"projection_u", l.projection.l2_u}});
    }
    j["rates"] = nlohmann::json::array();
    for (const auto& v : judge_rates(r, tolerance)) {
        j["rates"].push_back({{"name", v.name},
                              {"observed", detail::rate_json(v.observed)},
                              {"target", v.target},
                              {"asserted", v.asserted},
                              {"pass", v.pass}});
    }
    return j;
}

} // namespace wgmfem
