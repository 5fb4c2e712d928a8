#include <chrono>
#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "droplet/config.hpp"
#include "droplet/io.hpp"
#include "droplet/isoline.hpp"

namespace {

using namespace droplet;
namespace fs = std::filesystem;

class PhaseTimer {
  public:
    explicit PhaseTimer(RunManifest& manifest) : manifest_(manifest) {}

    template <class F>
    auto time(const std::string& name, F&& f) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            record(name, start);
        } else {
            auto result = f();
            record(name, start);
            return result;
        }
    }

  private:
    void record(const std::string& name, std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        manifest_.phase_seconds.emplace_back(name, dt.count());
    }

    RunManifest& manifest_;
};

struct OutputSink {
    fs::path dir;
    RunManifest* manifest;

    std::string path(const std::string& name) const {
        const auto p = dir / name;
        manifest->outputs.push_back(p.string());
        return p.string();
    }
};

void dump_isolines(const Scenario& sc, const Trajectory& traj, const OutputSink& sink,
                   const std::string& prefix) {
    for (double t : sc.config.output.isoline_times) {
        const double m_real = t / sc.model.params.tau;
        const int m = static_cast<int>(std::lround(m_real));
        if (m < 0 || m > traj.step_count() || std::abs(m_real - m) > 1e-9) continue;
        std::ostringstream name;
        name << prefix << "_t" << t << ".csv";
        write_isolines_csv(sink.path(name.str()), zero_isoline(traj.states[m].phi));
    }
}

int run_simulate(const Scenario& sc, const ControlVector& u, OutputSink& sink, PhaseTimer& timer) {
    const Trajectory traj = timer.time("simulate", [&] { return simulate(sc.model, sc.phi0, sc.v0, u); });
    dump_isolines(sc, traj, sink, "isoline");
    const EnergyReport report = timer.time("energy", [&] { return energy_report(sc.model, traj); });
    write_energy_csv(sink.path("energy.csv"), report);
    write_control_csv(sink.path("control.csv"), u);

    const auto metrics = droplet_metrics(traj.states.back().phi, BoundaryTag::Bottom, sc.model.params.eps);
    std::cout << "final centroid x = " << metrics.centroid.x() << ", y = " << metrics.centroid.y() << "\n";
    if (metrics.angle_deg) std::cout << "final contact angle = " << *metrics.angle_deg << " deg\n";
    std::cout << "mass drift = "
              << std::abs(mass(traj.states.back().phi) - mass(traj.states.front().phi)) << "\n";
    return 0;
}

int run_energycheck(const Scenario& sc, const ControlVector& u, OutputSink& sink, PhaseTimer& timer) {
    const Trajectory traj = timer.time("simulate", [&] { return simulate(sc.model, sc.phi0, sc.v0, u); });
    const EnergyReport report = timer.time("energy", [&] { return energy_report(sc.model, traj); });
    write_energy_csv(sink.path("energy.csv"), report);
    const auto ok = check_energy_inequality(report);
    int violations = 0;
    for (size_t i = 0; i < ok.size(); ++i) {
        if (!ok[i]) {
            ++violations;
            std::cout << "energy inequality violated at step " << report.rows[i].m
                      << ": lhs = " << report.rows[i].lhs << ", rhs = " << report.rows[i].rhs << "\n";
        }
    }
    std::cout << (violations == 0 ? "energy inequality satisfied at every step\n"
                                  : "energy inequality violated\n");
    return violations == 0 ? 0 : 1;
}

int run_optimize(const Scenario& sc, OutputSink& sink, PhaseTimer& timer) {
    const Field phi_d = timer.time("desired_field", [&] { return make_desired_field(sc); });
    if (!sc.config.desired.field_file.empty())
        sink.manifest->outputs.push_back(sc.config.desired.field_file);
    write_field(sink.path("phi_d.field"), phi_d);
    write_isolines_csv(sink.path("isoline_phid.csv"), zero_isoline(phi_d));

    ControlVector u0(sc.model.grid);
    const OptResult result = timer.time(
        "optimize", [&] { return optimize(sc.model, sc.phi0, sc.v0, u0, phi_d, sc.config.optimizer); });

    write_iteration_csv(sink.path("iterations.csv"), result.history);
    write_control_csv(sink.path("control_opt.csv"), result.u_opt);
    dump_isolines(sc, result.final_trajectory, sink, "isoline_opt");

    const auto metrics =
        droplet_metrics(result.final_trajectory.states.back().phi, BoundaryTag::Bottom, sc.model.params.eps);
    std::cout << "optimizer " << (result.converged ? "converged" : "stopped at the iteration limit")
              << " after " << (result.history.size() - 1) << " accepted iterates, " << result.forward_solves
              << " forward solves\n";
    std::cout << "final J = " << result.history.back().j << "\n";
    std::cout << "final centroid x = " << metrics.centroid.x() << "\n";
    return 0;
}

int run_gradcheck(const Scenario& sc, OutputSink& sink, PhaseTimer& timer) {
    const GradcheckConfig& gc = sc.config.gradcheck;
    Field phi_d(*sc.model.p1);
    if (!gc.surrogate) {
        phi_d = timer.time("desired_field", [&] { return make_desired_field(sc); });
        if (!sc.config.desired.field_file.empty())
            sink.manifest->outputs.push_back(sc.config.desired.field_file);
    }

    // Deterministic directions from the configured seed, scaled to unit norm.
    std::mt19937 rng(gc.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<ControlVector> directions;
    for (int k = 0; k < gc.directions; ++k) {
        ControlVector d(sc.model.grid);
        for (int i = 0; i < d.coeffs.size(); ++i) d.coeffs[i] = unit(rng);
        d.coeffs /= d.coeffs.norm();
        directions.push_back(std::move(d));
    }
    ControlVector u(sc.model.grid);  // baseline u = 0, interior of the box

    const auto entries = timer.time("fd_sweep", [&] {
        return fd_gradient_report(sc.model, sc.phi0, sc.v0, u, phi_d, directions, gc.epsilons,
                                  gc.surrogate);
    });
    write_fd_report_csv(sink.path("fd_report.csv"), entries);

    // Success criterion: every direction's best epsilon agrees with the
    // assembled gradient.
    const double threshold = gc.surrogate ? 1e-10 : 1e-3;
    bool ok = true;
    for (int k = 0; k < gc.directions; ++k) {
        double best = 1e300;
        for (const auto& e : entries)
            if (e.direction == k) best = std::min(best, e.rel_error);
        std::cout << "direction " << k << ": best relative error " << best << "\n";
        if (!(best <= threshold)) ok = false;
    }
    std::cout << (ok ? "gradient check passed\n" : "gradient check FAILED\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Droplet contact-angle control: energy-stable phase-field flow solver and adjoint-based "
                 "optimal control"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    double bu_const = 0.0;
    bool have_bu_const = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario configuration (JSON)")->required();
        cmd->add_option("--out", out_override, "output directory (overrides config)");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run the forward model and export isolines + energy");
    add_common(sim);
    sim->add_option("--bu-const", bu_const, "constant control action Bu applied on every patch")
        ->each([&](const std::string&) { have_bu_const = true; });

    CLI::App* opt = app.add_subcommand("optimize", "solve the tracking control problem");
    add_common(opt);

    CLI::App* grd = app.add_subcommand("gradcheck", "finite-difference verification of the reduced gradient");
    add_common(grd);

    CLI::App* enr = app.add_subcommand("energycheck", "verify the per-step energy inequality");
    add_common(enr);
    enr->add_option("--bu-const", bu_const, "constant control action Bu applied on every patch")
        ->each([&](const std::string&) { have_bu_const = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        ScenarioConfig config = load_config(config_path);
        if (!out_override.empty()) config.output.dir = out_override;
        fs::create_directories(config.output.dir);

        RunManifest manifest;
        manifest.version = kVersion;
        manifest.config_json = config_to_json(config);
        PhaseTimer timer(manifest);
        OutputSink sink{config.output.dir, &manifest};

        const Scenario sc = timer.time("build", [&] { return build_scenario(config); });

        ControlVector u(sc.model.grid);
        if (have_bu_const) u.coeffs.setConstant(bu_const);

        int status = 1;
        if (app.got_subcommand(sim)) {
            manifest.subcommand = "simulate";
            status = run_simulate(sc, u, sink, timer);
        } else if (app.got_subcommand(opt)) {
            manifest.subcommand = "optimize";
            status = run_optimize(sc, sink, timer);
        } else if (app.got_subcommand(grd)) {
            manifest.subcommand = "gradcheck";
            status = run_gradcheck(sc, sink, timer);
        } else if (app.got_subcommand(enr)) {
            manifest.subcommand = "energycheck";
            status = run_energycheck(sc, u, sink, timer);
        }

        write_manifest((fs::path(config.output.dir) / "manifest.json").string(), manifest);
        return status;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
