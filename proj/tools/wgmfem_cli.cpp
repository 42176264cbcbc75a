// wgmfem: solve, refinement studies, mesh diagnostics and identity checks.

#include "wgmfem/driver.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

// Records a flag so that it overrides the config file only when given.
template <class T>
struct Flag {
    const char* key;
    T value{};
    CLI::Option* opt = nullptr;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak Galerkin mixed finite elements on polygonal meshes"};
    app.require_subcommand(1);
    app.fallthrough();

    Flag<std::string> config{"config"};
    Flag<std::string> mesh{"mesh"}, gen{"gen"}, alpha{"alpha"}, solution{"solution"}, method{"method"};
    Flag<std::string> out{"out"}, csv{"csv"}, summary{"summary"}, dump{"dump_system"};
    Flag<int> n{"n"}, n0{"n0"}, levels{"levels"}, k{"k"}, maxit{"maxit"}, samples{"samples"};
    Flag<double> jitter{"jitter"}, rho{"rho"}, tol{"tol"}, rate_tol{"rate_tol"};
    Flag<std::uint64_t> seed{"seed"};

    config.opt = app.add_option("--config", config.value, "JSON config; keys mirror the long flag names");
    mesh.opt = app.add_option("--mesh", mesh.value, "mesh file (JSON); overrides --gen");
    gen.opt = app.add_option("--gen", gen.value, "mesh generator: uniform | perturbed");
    n.opt = app.add_option("--n", n.value, "cells per side");
    n0.opt = app.add_option("--n0", n0.value, "cells per side on the coarsest level");
    levels.opt = app.add_option("--levels", levels.value, "refinement levels (converge)");
    jitter.opt = app.add_option("--jitter", jitter.value, "vertex perturbation as a fraction of the cell width, in [0, 0.3]");
    seed.opt = app.add_option("--seed", seed.value, "random seed");
    k.opt = app.add_option("--k", k.value, "polynomial degree k in 0..3");
    rho.opt = app.add_option("--rho", rho.value, "stabilization parameter > 0");
    alpha.opt = app.add_option("--alpha", alpha.value, "coefficient: identity | variable");
    solution.opt = app.add_option("--solution", solution.value, "manufactured solution: affine | sinsin | poly | zero");
    method.opt = app.add_option("--method", method.value, "solver: auto | direct | schur-cg | minres");
    tol.opt = app.add_option("--tol", tol.value, "relative residual tolerance");
    maxit.opt = app.add_option("--maxit", maxit.value, "iteration cap for iterative solvers");
    out.opt = app.add_option("--out", out.value, "solve: write coefficients and errors (JSON)");
    csv.opt = app.add_option("--csv", csv.value, "converge: write the report CSV (default stdout)");
    summary.opt = app.add_option("--summary", summary.value, "converge: write a JSON summary");
    dump.opt = app.add_option("--dump-system", dump.value, "solve: directory for triplet dumps of A_s, B, G, F");
    rate_tol.opt = app.add_option("--rate-tol", rate_tol.value, "converge: accepted deviation from the theoretical rate");
    samples.opt = app.add_option("--samples", samples.value, "check-identities: random fields per sampled check");

    const std::vector<std::string> commands{"solve", "converge", "check-mesh", "check-identities"};
    for (const auto& c : commands) app.add_subcommand(c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wgmfem::kExitUsage;
    }

    try {
        nlohmann::json j = config.opt->count() ? wgmfem::read_config_file(config.value) : nlohmann::json::object();
        j["command"] = app.get_subcommands().front()->get_name();
        auto put = [&j](const auto& f) {
            if (f.opt->count()) j[f.key] = f.value;
        };
        put(mesh), put(gen), put(alpha), put(solution), put(method), put(out), put(csv), put(summary), put(dump);
        put(n), put(n0), put(levels), put(k), put(maxit), put(samples);
        put(jitter), put(rho), put(tol), put(rate_tol), put(seed);
        return wgmfem::run(wgmfem::config_from_json(j), std::cout, std::cerr);
    } catch (const wgmfem::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return wgmfem::kExitUsage;
    }
}
