#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "hilfed/error.hpp"
#include "hilfed/grid_io.hpp"
#include "hilfed/powerflow.hpp"
#include "hilfed/runner.hpp"
#include "hilfed/scenario.hpp"

using namespace hilfed;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

/// Errors in user input (files, grids, scenarios) exit 1; anything that fails while running exits 2.
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    }
}

int runtime_guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return kExitRuntime;
    }
}

int cmd_validate(const std::string& path) {
    return guarded([&] {
        const auto sc = load_scenario(load_scenario_spec(path));
        std::size_t nodes = 0;
        for (const auto& f : sc.feeders)
            for (const auto& b : f.buses) nodes += b.phases.count();
        std::printf("ok: %zu transmission buses, %zu feeders (%zu nodes), %s inverter, %.3f h from %.3f h, mode %s\n",
                    sc.transmission.buses.size(), sc.feeders.size(), nodes, sc.spec.inverter ? "1" : "no",
                    sc.spec.duration_h, sc.spec.start_h, std::string(to_string(sc.spec.mode)).c_str());
        return kExitOk;
    });
}

int cmd_run(const std::string& path, const std::optional<std::string>& mode, const std::optional<std::uint64_t>& seed,
            const std::string& out_dir) {
    std::optional<LoadedScenario> sc;
    if (const int rc = guarded([&] {
            auto spec = load_scenario_spec(path);
            if (mode) spec.mode = *mode == "realtime" ? ClockMode::realtime : ClockMode::simulated;
            if (seed) spec.seed = *seed;
            sc = load_scenario(spec);
            return kExitOk;
        });
        rc != kExitOk)
        return rc;
    return runtime_guarded([&] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto paths = run_scenario(*sc, out_dir);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ifstream summary(paths.summary);
        std::cout << summary.rdbuf();
        std::fprintf(stderr, "wrote %s, %s, %s in %.2f s\n", paths.telemetry.c_str(), paths.events.c_str(), paths.summary.c_str(), wall);
        return kExitOk;
    });
}

int cmd_powerflow(const std::string& path, const std::string& solver) {
    std::optional<GridModel> model;
    if (const int rc = guarded([&] {
            model = load_grid_file(path);
            return kExitOk;
        });
        rc != kExitOk)
        return rc;
    const auto& m = *model;
    bool newton = solver == "newton";
    if (solver == "auto") {
        newton = !m.generators.empty();
        for (const auto& b : m.buses) newton = newton || b.kind == BusKind::pv;
        try {
            check_radial(m);
        } catch (const ModelError&) {
            newton = true;
        }
    }
    return runtime_guarded([&] {
        PhasorState st = newton ? solve_transmission(m) : solve_feeder(m, balanced_voltage(1.0, 0.0));
        std::printf("# %s, %s in %d iterations\n", newton ? "newton" : "sweep", st.converged ? "converged" : "NOT converged", st.iterations);
        std::printf("bus,phase,v_mag_pu,v_angle_deg\n");
        for (std::size_t b = 0; b < m.buses.size(); ++b) {
            const auto phases = newton ? PhaseSet::single(Phase::a).phases() : m.buses[b].phases.phases();
            for (Phase p : phases) {
                const auto v = st.voltage[b](int(p));
                std::printf("%s,%c,%.6f,%.4f\n", m.buses[b].id.c_str(), phase_letter(p), std::abs(v),
                            std::arg(v) * 180.0 / std::numbers::pi);
            }
        }
        if (!newton) {
            const auto agg = feeder_aggregate(st, m);
            std::printf("# head P %.3f kW, Q %.3f kVAR, losses %.3f kW\n", agg.p_total_kw, agg.q_total_kvar, agg.losses_kw);
        }
        return st.converged ? kExitOk : kExitRuntime;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hilfed: transmission-distribution Volt-VAR federation simulator"};
    app.require_subcommand(1);

    std::string scenario_path, grid_path, out_dir = "out", solver = "auto";
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run a scenario and write telemetry.csv, events.csv, summary.txt");
    run->add_option("scenario", scenario_path, "Scenario file")->required();
    run->add_option("--mode", mode, "Clock mode")->check(CLI::IsMember({"sim", "realtime"}));
    run->add_option("--seed", seed, "Link RNG seed (overrides the scenario)");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Load and cross-check a scenario");
    validate->add_option("scenario", scenario_path, "Scenario file")->required();

    auto* pf = app.add_subcommand("powerflow", "One-shot power flow of a grid file");
    pf->add_option("grid", grid_path, "Grid file")->required();
    pf->add_option("--solver", solver, "auto picks newton for meshed or generator grids")
        ->check(CLI::IsMember({"auto", "sweep", "newton"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    if (*run) return cmd_run(scenario_path, mode, seed, out_dir);
    if (*validate) return cmd_validate(scenario_path);
    return cmd_powerflow(grid_path, solver);
}
