#include "oracles.hpp"

#include "wgmfem/analysis.hpp"
#include "wgmfem/convergence.hpp"
#include "wgmfem/driver.hpp"
#include "wgmfem/manufactured.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace wgmfem;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string f; std::getline(ss, f, sep);) out.push_back(f);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

struct SolvedProblem {
    PolyMesh mesh;
    std::unique_ptr<Space> space;
    SaddleSystem sys;
    Solution sol;
};

SolvedProblem solve_problem(PolyMesh mesh, int k, const ManufacturedSolution& ms, double rho = 1.0) {
    SolvedProblem p{std::move(mesh), nullptr, {}, {}};
    p.space = std::make_unique<Space>(p.mesh, k);
    p.sys = assemble_system(*p.space, rho, ms.alpha, ms.f, ms.g);
    p.sol = solve(p.sys);
    return p;
}

int cli(const std::string& args, const std::string& capture) {
    const std::string cmd = std::string(WGMFEM_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

} // namespace

// ---------------------------------------------------------------------------
// Manufactured solutions

TEST(Manufactured, DefiningEquationsHold) {
    const PolyMesh m = generate_perturbed_poly_mesh(4, 0.2, 1);
    for (const char* name : {"affine", "sinsin", "poly", "zero"}) {
        for (const char* alpha : {"identity", "variable"}) {
            const ConsistencyResidual r = check_self_consistency(manufactured_by_name(name, alpha), m);
            EXPECT_LT(r.constitutive, 1e-13) << name << ' ' << alpha;
            EXPECT_LT(r.balance, 1e-8) << name << ' ' << alpha;
        }
    }
}

TEST(Manufactured, BoundaryDataAndNames) {
    const ManufacturedSolution m = manufactured_by_name("poly");
    const Point p(0.3, 0.8);
    EXPECT_DOUBLE_EQ(m.g(p), -(0.09 * 0.8 + std::cos(std::numbers::pi * 0.8)));
    EXPECT_THROW(manufactured_by_name("cubic"), InvalidArgument);
    EXPECT_THROW(manufactured_by_name("sinsin", "anisotropic"), InvalidArgument);
}

TEST(Manufactured, VariableCoefficientDerivatives) {
    const CoefficientField a = CoefficientField::variable();
    const Point p(0.4, 0.7);
    const double h = 1e-6;
    const auto d = a.derivatives(p);
    EXPECT_LT(((a.value(p + Point(h, 0)) - a.value(p - Point(h, 0))) / (2 * h) - d[0]).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(((a.value(p + Point(0, h)) - a.value(p - Point(0, h))) / (2 * h) - d[1]).cwiseAbs().maxCoeff(), 1e-9);
    // Smallest eigenvalue stays above the declared bound on the unit square.
    for (double x : {0.0, 0.5, 1.0}) {
        for (double y : {0.0, 0.5, 1.0}) {
            EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(a.value({x, y})).eigenvalues().minCoeff(), a.lower_bound);
        }
    }
}

// ---------------------------------------------------------------------------
// Norms

TEST(Norms, TripleBarOfMatchedConstant) {
    const PolyMesh m = generate_perturbed_poly_mesh(3, 0.2, 2);
    const Space s(m, 0);
    const SaddleSystem sys = assemble_system(s, 1.0, CoefficientField::identity(), manufactured_by_name("zero").f,
                                             manufactured_by_name("zero").g);
    const FluxField v = project_Qh(s, {[](const Point&) { return Point(1.0, 0.0); }, {}, "C-infinity"});
    EXPECT_NEAR(triple_bar_norm(sys, v), 1.0, 1e-13);
    std::mt19937_64 rng(4);
    const FluxField r = random_flux(s.dofs(), rng);
    EXPECT_NEAR(triple_bar_norm(sys, FluxField(s.dofs(), 2.0 * r.coeffs)), 2.0 * triple_bar_norm(sys, r), 1e-12);
}

TEST(Norms, H1hOfOneOnUnitCell) {
    const PolyMesh m = generate_uniform_quad_mesh(1);
    const Space s(m, 0);
    const ScalarField one = project_QQh(s, {[](const Point&) { return 1.0; }, {}, "C-infinity"});
    EXPECT_NEAR(std::pow(h1h_norm(s, one), 2), 4.0, 1e-13);
}

TEST(Norms, ContinuousFieldsHaveNoInteriorJumps) {
    const PolyMesh m = generate_perturbed_poly_mesh(4, 0.2, 3);
    const Space s(m, 0);
    const ScalarField w = project_QQh(s, {[](const Point& p) { return p.x(); }, {}, "C-infinity"});
    for (int e = 0; e < m.num_edges(); ++e) {
        if (m.edges()[static_cast<std::size_t>(e)].is_boundary()) continue;
        EXPECT_LT(jump_moments(s, w, e).cwiseAbs().maxCoeff(), 1e-12);
    }
    // Broken gradient part equals int |grad x|^2 = 1.
    EXPECT_NEAR(broken_gradient_sq(s, w), 1.0, 1e-12);
}

TEST(Norms, GramMatrixMatchesNorm) {
    const PolyMesh m = generate_perturbed_poly_mesh(3, 0.2, 3);
    const Space s(m, 1);
    const SparseMatrix h = h1h_matrix(s);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 5; ++i) {
        const ScalarField w = random_scalar(s.dofs(), rng);
        EXPECT_NEAR(std::sqrt(w.coeffs.dot(h * w.coeffs)), h1h_norm(s, w), 1e-12 * h1h_norm(s, w));
    }
}

TEST(Norms, ProjectionTripleBarRate) {
    const SmoothVectorField q{[](const Point& p) { return Point(std::sin(std::numbers::pi * p.x()), 0.0); }, {}, "C-infinity"};
    const SmoothScalarField u{[](const Point&) { return 0.0; }, {}, "C-infinity"};
    for (int k = 0; k <= 1; ++k) {
        std::vector<double> h;
        std::vector<double> e;
        for (int n : {4, 8, 16}) {
            const PolyMesh m = generate_uniform_quad_mesh(n);
            const ProjectionErrors pe = projection_errors(Space(m, k), q, u, CoefficientField::identity(), 1.0);
            h.push_back(pe.h);
            e.push_back(pe.triple_bar_q);
        }
        EXPECT_NEAR(*estimate_rates(h, e).back(), k + 1.0, 0.15) << "k " << k;
    }
}

// ---------------------------------------------------------------------------
// Errors and rates

TEST(Errors, AffineSolutionIsExact) {
    const ManufacturedSolution ms = manufactured_by_name("affine");
    for (PolyMesh m : {generate_uniform_quad_mesh(4), generate_perturbed_poly_mesh(4, 0.2, 7)}) {
        const SolvedProblem p = solve_problem(std::move(m), 0, ms);
        const ErrorBundle e = error_bundle(*p.space, p.sys, p.sol, ms);
        EXPECT_LE(e.triple_bar_q, 1e-9);
        EXPECT_LE(e.h1h_u, 1e-9);
        EXPECT_LE(e.l2_u, 1e-9);
        EXPECT_LE(e.l2_q0, 1e-9);
    }
}

TEST(Errors, ZeroSolutionGivesZeroErrors) {
    const ManufacturedSolution ms = manufactured_by_name("zero", "variable");
    const SolvedProblem p = solve_problem(generate_perturbed_poly_mesh(3, 0.2, 1), 1, ms);
    const ErrorBundle e = error_bundle(*p.space, p.sys, p.sol, ms);
    EXPECT_EQ(e.triple_bar_q, 0.0);
    EXPECT_EQ(e.h1h_u, 0.0);
    EXPECT_EQ(e.l2_u, 0.0);
    EXPECT_EQ(e.l2_q0, 0.0);
}

TEST(Errors, L2RatioUnderRefinement) {
    const ManufacturedSolution ms = manufactured_by_name("sinsin");
    const SolvedProblem a = solve_problem(generate_uniform_quad_mesh(8), 0, ms);
    const SolvedProblem b = solve_problem(generate_uniform_quad_mesh(16), 0, ms);
    const double ratio = error_bundle(*a.space, a.sys, a.sol, ms).l2_u / error_bundle(*b.space, b.sys, b.sol, ms).l2_u;
    EXPECT_NEAR(std::log2(ratio), 2.0, 0.15);
}

TEST(Rates, Arithmetic) {
    const std::vector<double> h{0.25, 0.125};
    EXPECT_NEAR(*estimate_rates(h, std::vector<double>{1e-1, 2.5e-2})[0], 2.0, 1e-14);
    EXPECT_EQ(*estimate_rates(h, std::vector<double>{3.0, 3.0})[0], 0.0);
    const auto three = estimate_rates(std::vector<double>{0.5, 0.25, 0.125}, std::vector<double>{1.0, 0.6, 0.2});
    ASSERT_EQ(three.size(), 2u);
    EXPECT_GT(*three[0], 0.0);
    EXPECT_GT(*three[1], 0.0);
    EXPECT_FALSE(estimate_rates(h, std::vector<double>{0.0, 0.0})[0].has_value());
    EXPECT_THROW(estimate_rates(std::vector<double>{0.5}, std::vector<double>{1.0}), InvalidArgument);
    EXPECT_THROW(estimate_rates(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.5}), InvalidArgument);
    EXPECT_THROW(estimate_rates(h, std::vector<double>{1.0}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Identities

TEST(Identities, AllHoldOnPerturbedMeshes) {
    const PolyMesh m = generate_perturbed_poly_mesh(6, 0.2, 13);
    for (int k = 0; k <= 2; ++k) {
        const IdentityDiagnostics d = check_identities(Space(m, k));
        ASSERT_EQ(d.checks.size(), 5u);
        for (const auto& c : d.checks) EXPECT_TRUE(c.pass) << c.name << " k " << k << " residual " << c.max_residual;
        EXPECT_TRUE(d.all_pass());
    }
}

TEST(Identities, ChecksDetectWrongInputs) {
    const PolyMesh m = generate_perturbed_poly_mesh(4, 0.2, 13);
    const Space s(m, 1);
    WeakDivOperator op = build_weakdiv(s);
    // Wrong divergence for the commuting identity.
    SmoothVectorField q = default_identity_flux();
    q.divergence = [](const Point& p) { return std::exp(p.x()); };
    EXPECT_GT(commuting_identity_residual(s, op, q), 1e-3);
    // Corrupted operator for the integration-by-parts identity.
    op.moments[3](1, 2) += 0.1;
    std::mt19937_64 rng(3);
    EXPECT_GT(integration_by_parts_residual(s, op, random_flux(s.dofs(), rng), default_identity_scalar()), 1e-8);
}

TEST(Identities, WitnessIsExactAndItsRatioStable) {
    const ManufacturedSolution ms = manufactured_by_name("sinsin");
    for (int k = 0; k <= 1; ++k) {
        std::vector<double> ratios;
        for (int n : {4, 8, 16}) {
            const PolyMesh m = generate_uniform_quad_mesh(n);
            const Space s(m, k);
            const SaddleSystem sys = assemble_system(s, 1.0, ms.alpha, ms.f, ms.g);
            const WitnessStats w = witness_stats(s, sys, 20, 77);
            EXPECT_LE(w.max_relative_residual, 1e-11);
            ratios.push_back(w.max_ratio);
        }
        const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        EXPECT_LT(*hi / *lo, 1.1) << "k " << k;
    }
}

TEST(Identities, EdgeProjectionDominationByDirectQuadrature) {
    // Both sides of the inequality for q = (e^x, sin y) on one edge of a coarse
    // mesh, evaluated with composite Simpson along the edge.
    const PolyMesh m = generate_perturbed_poly_mesh(2, 0.2, 4);
    const Space s(m, 0);
    const SmoothVectorField q = default_identity_flux();
    const FluxField qh = project_Qh(s, q);
    for (int c = 0; c < m.num_cells(); ++c) {
        const auto& g = m.geometry(c);
        for (std::size_t le = 0; le < m.cell_edges(c).size(); ++le) {
            const int e = m.cell_edges(c)[le];
            const auto& ed = m.edges()[static_cast<std::size_t>(e)];
            const Point a = m.vertices()[static_cast<std::size_t>(ed.vertices[0])];
            const Point b = m.vertices()[static_cast<std::size_t>(ed.vertices[1])];
            const Point n = g.outward_normals[le];
            auto at = [&](double t) { return Point(a + t * (b - a)); };
            // Q_b(q.n) on a P_0 edge is the mean of q.n.
            const double mean = oracle::simpson([&](double t) { return q(at(t)).dot(n); }, 0.0, 1.0);
            const double lhs = oracle::simpson([&](double t) { return std::pow(q(at(t)).dot(n) - mean, 2); }, 0.0, 1.0);
            const double rhs =
                oracle::simpson([&](double t) { return std::pow((q(at(t)) - eval_interior(s, qh, c, at(t))).dot(n), 2); }, 0.0, 1.0);
            EXPECT_LE(lhs, rhs + 1e-14);
        }
    }
    EXPECT_EQ(edge_domination_residual(s, q), 0.0);
}

TEST(Identities, LocalConservation) {
    const ManufacturedSolution ms = manufactured_by_name("poly", "variable");
    const SolvedProblem p = solve_problem(generate_perturbed_poly_mesh(8, 0.2, 5), 1, ms);
    for (double r : local_conservation_residuals(*p.space, p.sol.q, ms.f)) EXPECT_LE(r, 1e-11);
}

// ---------------------------------------------------------------------------
// Stability and inequality constants

TEST(Stability, BoundednessIsMeshIndependent) {
    const ManufacturedSolution ms = manufactured_by_name("sinsin");
    for (int k = 0; k <= 1; ++k) {
        std::vector<DiscreteStabilityConstants> c;
        for (int n : {4, 8, 16}) {
            const PolyMesh m = generate_uniform_quad_mesh(n);
            const Space s(m, k);
            const SaddleSystem sys = assemble_system(s, 1.0, ms.alpha, ms.f, ms.g);
            c.push_back(stability_constants(s, sys));
            // 100 random pairs never exceed the exact continuity constant.
            EXPECT_LE(boundedness_ratio(s, sys, 100, 21), c.back().continuity * (1.0 + 1e-12));
            EXPECT_GT(c.back().inf_sup, 0.0);
            EXPECT_LE(c.back().inf_sup, c.back().continuity);
        }
        for (std::size_t i = 1; i < c.size(); ++i) {
            EXPECT_LT(c[i].continuity / c[0].continuity, 1.1) << "k " << k;
            EXPECT_GT(c[i].inf_sup / c[0].inf_sup, 0.9) << "k " << k;
        }
    }
}

TEST(Stability, InverseAndTraceConstants) {
    for (int k = 0; k <= 1; ++k) {
        std::vector<double> inv;
        std::vector<double> tr;
        for (int n : {2, 4, 8}) {
            const PolyMesh m = generate_uniform_quad_mesh(n);
            const Space s(m, k);
            inv.push_back(inverse_inequality_constant(s));
            tr.push_back(trace_inequality_constant(s));
            // Random P_{k+1} fields stay below the supremum.
            std::mt19937_64 rng(static_cast<std::uint64_t>(n));
            std::uniform_real_distribution<double> d(-1.0, 1.0);
            for (int c = 0; c < m.num_cells(); ++c) {
                const auto& b = s.cell(c);
                Eigen::VectorXd w(b.num_scalar());
                for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = d(rng);
                double g2 = 0.0;
                for (std::size_t q = 0; q < b.quadrature().size(); ++q) {
                    const auto qi = static_cast<Eigen::Index>(q);
                    g2 += b.quadrature().weights[q] * (std::pow(b.grad_x().row(qi).dot(w), 2) + std::pow(b.grad_y().row(qi).dot(w), 2));
                }
                const double h = m.geometry(c).diameter;
                EXPECT_LE(h * std::sqrt(g2 / w.dot(b.mass() * w)), inv.back() * (1.0 + 1e-12));
            }
        }
        EXPECT_NEAR(inv[2] / inv[0], 1.0, 1e-10);
        EXPECT_NEAR(tr[2] / tr[0], 1.0, 1e-10);
    }
    // k = 0: P_1 on the unit square has sup h ||grad phi|| / ||phi|| = sqrt(2) * sqrt(12).
    const PolyMesh unit = generate_uniform_quad_mesh(1);
    EXPECT_NEAR(inverse_inequality_constant(Space(unit, 0)), std::sqrt(24.0), 1e-12);
}

// ---------------------------------------------------------------------------
// Convergence studies

TEST(Convergence, CsvLayoutAndDeterminism) {
    StudyConfig c;
    c.n0 = 2;
    c.levels = 3;
    const ConvergenceReport r = run_study(c);
    std::ostringstream a;
    write_csv(r, a);
    std::ostringstream b;
    write_csv(run_study(c), b);
    EXPECT_EQ(a.str(), b.str());
    const auto ls = lines(a.str());
    ASSERT_EQ(ls.size(), 4u);
    EXPECT_EQ(ls[0], "level,h,triple_bar_q,h1h_u,l2_u,l2_q0,rate_triple,rate_h1h,rate_l2");
    EXPECT_EQ(split(ls[1], ',').size(), 9u);
    EXPECT_EQ(split(ls[1], ',')[6], "");
    const auto row = split(ls[2], ',');
    EXPECT_EQ(row[0], "1");
    EXPECT_NEAR(std::stod(row[1]), std::sqrt(2.0) / 4.0, 1e-16);
    EXPECT_EQ(std::stod(row[4]), r.levels[1].errors.l2_u);
}

TEST(Convergence, ExactAndUnassertedRates) {
    StudyConfig c;
    c.n0 = 1;
    c.levels = 2;
    c.solution = "zero";
    const ConvergenceReport r = run_study(c);
    std::ostringstream out;
    write_csv(r, out);
    EXPECT_NE(out.str().find("exact,exact,exact"), std::string::npos);
    for (const auto& v : judge_rates(r, 0.15)) EXPECT_TRUE(v.pass);

    StudyConfig two;
    two.n0 = 2;
    two.levels = 2;
    ConvergenceReport nc = run_study(two);
    nc.convex_domain = false;
    nc.levels[1].errors.l2_u = nc.levels[0].errors.l2_u; // rate 0
    const auto v = judge_rates(nc, 0.15);
    EXPECT_FALSE(v[2].asserted);
    EXPECT_TRUE(v[2].pass);
    const nlohmann::json j = summary_json(nc, 0.15);
    EXPECT_EQ(j["convex_domain"], false);
    EXPECT_EQ(j["levels"].size(), 2u);
    EXPECT_EQ(j["rates"][2]["asserted"], false);
    EXPECT_EQ(j["rates"].size(), 5u);
    EXPECT_EQ(j["rates"][3]["name"], "projection_q0");
    EXPECT_GT(j["levels"][0]["projection_u"].get<double>(), 0.0);
}

TEST(Convergence, ProjectionRatesAreReported) {
    StudyConfig c;
    c.n0 = 4;
    c.levels = 3;
    c.degree = 1;
    const auto v = judge_rates(run_study(c), 0.15);
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v[3].target, 2.0);
    EXPECT_EQ(v[4].target, 3.0);
    EXPECT_TRUE(v[3].pass) << *v[3].observed;
    EXPECT_TRUE(v[4].pass) << *v[4].observed;
}

TEST(Convergence, ConfigValidation) {
    auto with = [](auto set) {
        StudyConfig c;
        set(c);
        return c;
    };
    EXPECT_THROW(run_study(with([](StudyConfig& c) { c.levels = 1; })), InvalidArgument);
    EXPECT_THROW(run_study(with([](StudyConfig& c) { c.n0 = 0; })), InvalidArgument);
    EXPECT_THROW(run_study(with([](StudyConfig& c) { c.degree = 4; })), InvalidArgument);
    EXPECT_THROW(run_study(with([](StudyConfig& c) { c.rho = 0.0; })), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Driver

TEST(Driver, ConfigParsing) {
    const RunConfig c = config_from_json({{"command", "converge"}, {"k", 1}, {"rho", 4.0}, {"dump_system", "x"}});
    EXPECT_EQ(c.command, "converge");
    EXPECT_EQ(c.k, 1);
    EXPECT_EQ(c.rho, 4.0);
    EXPECT_EQ(c.dump_system, "x");
    EXPECT_THROW(config_from_json({{"degree", 1}}), InvalidArgument);
    EXPECT_THROW(config_from_json({{"k", "one"}}), InvalidArgument);
    EXPECT_THROW(config_from_json(nlohmann::json::array()), InvalidArgument);
}

TEST(Driver, StatusCodes) {
    std::ostringstream out;
    std::ostringstream err;
    RunConfig c;
    c.command = "solve";
    c.n = 1;
    c.solution = "affine";
    EXPECT_EQ(run(c, out, err), kExitOk);
    EXPECT_NE(out.str().find("PASS exactness"), std::string::npos);

    c.command = "frobnicate";
    EXPECT_EQ(run(c, out, err), kExitUsage);
    c.command = "solve";
    c.k = 5;
    EXPECT_EQ(run(c, out, err), kExitUsage);
    c.k = 0;
    c.mesh = temp_path("wgmfem_does_not_exist.json").string();
    EXPECT_EQ(run(c, out, err), kExitUsage);
    c.mesh.clear();

    c.solution = "sinsin";
    c.n = 8;
    c.method = "minres";
    c.maxit = 1;
    EXPECT_EQ(run(c, out, err), kExitNonConvergence);
    EXPECT_NE(err.str().find("best residual"), std::string::npos);

    RunConfig conv;
    conv.command = "converge";
    conv.n0 = 2;
    conv.levels = 2;
    conv.rate_tol = 1e-6;
    EXPECT_EQ(run(conv, out, err), kExitThreshold);
    conv.levels = 1;
    EXPECT_EQ(run(conv, out, err), kExitUsage);
    conv.levels = 2;
    conv.csv = "/nonexistent-dir/report.csv";
    EXPECT_EQ(run(conv, out, err), kExitUsage);
}

TEST(Driver, SolveWritesArtifacts) {
    const auto dir = temp_path("wgmfem_solve_artifacts");
    std::filesystem::remove_all(dir);
    RunConfig c;
    c.command = "solve";
    c.n = 2;
    c.out = (dir.string() + "_solution.json");
    c.dump_system = dir.string();
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(run(c, out, err), kExitOk) << err.str();
    const nlohmann::json j = nlohmann::json::parse(slurp(c.out));
    EXPECT_EQ(j["q"].size(), 20u);
    EXPECT_EQ(j["u"].size(), 12u);
    EXPECT_GT(j["errors"]["l2_u"].get<double>(), 0.0);
    for (const char* f : {"A_s.txt", "B.txt", "G.txt", "F.txt"}) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    std::filesystem::remove_all(dir);
    std::filesystem::remove(c.out);
}

TEST(Driver, MeshFromFile) {
    const auto path = temp_path("wgmfem_driver_mesh.json");
    write_mesh(generate_perturbed_poly_mesh(3, 0.2, 2), path);
    RunConfig c;
    c.command = "check-identities";
    c.mesh = path.string();
    c.k = 1;
    std::ostringstream out;
    std::ostringstream err;
    EXPECT_EQ(run(c, out, err), kExitOk) << out.str() << err.str();
    const auto ls = lines(out.str());
    ASSERT_EQ(ls.size(), 8u);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(ls[static_cast<std::size_t>(i)].rfind("PASS ", 0), 0u) << ls[static_cast<std::size_t>(i)];
    EXPECT_EQ(ls[5].rfind("info witness_ratio", 0), 0u);
    EXPECT_EQ(ls[6].rfind("info inverse_constant", 0), 0u);
    EXPECT_EQ(ls[7].rfind("info trace_constant", 0), 0u);
    std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// Command-line tool

TEST(Cli, ConvergeExample) {
    const auto csv = temp_path("wgmfem_cli_converge.csv");
    const auto log = temp_path("wgmfem_cli_converge.log").string();
    // Energy and broken H1 errors superconverge (order 2) on uniform meshes at
    // k = 0, so the two-sided rate check reports status 4.
    EXPECT_EQ(cli("converge --gen uniform --n0 4 --levels 4 --k 0 --solution sinsin --alpha identity --csv " + csv.string(), log),
              kExitThreshold)
        << slurp(log);
    const auto ls = lines(slurp(csv));
    ASSERT_EQ(ls.size(), 5u);
    const double rate = std::stod(split(ls[4], ',')[8]);
    EXPECT_GE(rate, 1.85);
    EXPECT_LE(rate, 2.15);
    EXPECT_NE(slurp(log).find("PASS l2_u: observed"), std::string::npos);
    EXPECT_NE(slurp(log).find("theoretical 2.0000"), std::string::npos);
    EXPECT_NE(slurp(log).find("FAIL triple_bar_q"), std::string::npos);
    std::filesystem::remove(csv);
}

TEST(Cli, CheckMeshExample) {
    const auto log = temp_path("wgmfem_cli_mesh.log").string();
    EXPECT_EQ(cli("check-mesh --gen perturbed --n 8 --jitter 0.2 --seed 7", log), 0);
    EXPECT_NE(slurp(log).find("star_shaped true"), std::string::npos);
}

TEST(Cli, SolveExample) {
    const auto log = temp_path("wgmfem_cli_solve.log").string();
    EXPECT_EQ(cli("solve --gen uniform --n 1 --k 0 --solution affine", log), 0) << slurp(log);
    EXPECT_NE(slurp(log).find("PASS exactness"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfigFile) {
    const auto cfg = temp_path("wgmfem_cli_config.json");
    std::ofstream(cfg) << R"({"n": 1, "k": 2, "solution": "affine", "method": "schur-cg"})";
    const auto log = temp_path("wgmfem_cli_config.log").string();
    EXPECT_EQ(cli("solve --config " + cfg.string() + " --n 2", log), 0) << slurp(log);
    // n = 2 from the flag, k = 2 from the file: 4 cells, 4 * dim P_3 scalar dofs.
    EXPECT_NE(slurp(log).find("cells 4, flux dofs"), std::string::npos) << slurp(log);
    EXPECT_NE(slurp(log).find("scalar dofs 40"), std::string::npos) << slurp(log);
    EXPECT_NE(slurp(log).find("schur-cg"), std::string::npos);
    std::ofstream(cfg) << R"({"bogus": 1})";
    EXPECT_EQ(cli("solve --config " + cfg.string(), log), 2);
    std::filesystem::remove(cfg);
}

TEST(Cli, UsageErrors) {
    const auto log = temp_path("wgmfem_cli_usage.log").string();
    EXPECT_EQ(cli("", log), 2);
    EXPECT_EQ(cli("solve --no-such-flag", log), 2);
    EXPECT_EQ(cli("solve --k 9", log), 2);
    EXPECT_EQ(cli("converge --levels 1", log), 2);
    EXPECT_EQ(cli("--help", log), 0);
}
