#pragma once

#include <string>
#include <vector>

#include "droplet/optimize.hpp"

namespace droplet {

struct MeshConfig {
    int nx = 64;
    int ny = 32;
    double lx = 1.0;
    double ly = 0.5;
};

struct InitialDropletConfig {
    double center_x = 0.375;
    double center_y = 0.0;
    double radius = 0.25;
};

struct DesiredConfig {
    double center_x = 0.625;
    double center_y = 0.0;
    double radius = 0.25;
    double theta_deg = 135.0;   // static angle imposed while equilibrating
    std::string field_file;     // cache; loaded when present, written after a pre-run
    double equilibrium_tol = 1e-6;
    int max_steps = 4000;
};

struct GradcheckConfig {
    int directions = 3;
    std::vector<double> epsilons = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    unsigned seed = 1;
    bool surrogate = false;
};

struct OutputConfig {
    std::string dir = "out";
    std::vector<double> isoline_times = {0, 1, 2, 3, 4, 5};
};

struct ScenarioConfig {
    MeshConfig mesh;
    PhysicalParams physics;   // defaults are the droplet experiment values
    ControlGrid control_grid; // r/s counts; extents filled from mesh/time
    AdmissibleBox bounds;
    InitialDropletConfig initial;
    DesiredConfig desired;
    VelocityBcTable velocity_bc;
    OptimizerConfig optimizer;
    GradcheckConfig gradcheck;
    OutputConfig output;

    void validate() const;
};

/// Parses and validates a JSON scenario file; omitted keys take the defaults
/// above, unknown keys are rejected by name.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& json_text);

/// Resolved-config echo; reloading the emitted text reproduces the config.
std::string config_to_json(const ScenarioConfig& config);
void save_config(const std::string& path, const ScenarioConfig& config);

/// Fully built scenario: model plus initial/desired fields.
struct Scenario {
    Model model;
    Field phi0;
    Field v0;
    ScenarioConfig config;
};

Scenario build_scenario(const ScenarioConfig& config);

/// The desired phase field: loaded from the configured cache when present,
/// otherwise produced by equilibrating the analytic cap on a level plate at
/// the configured static angle under the constant control
/// cos(theta) - cos(theta_eq), then written back to the cache.
Field make_desired_field(const Scenario& scenario);

/// The equilibration pre-run only (no cache I/O); also returns the number of
/// steps taken.
std::pair<Field, int> equilibrate_desired_field(const Scenario& scenario);

}  // namespace droplet
