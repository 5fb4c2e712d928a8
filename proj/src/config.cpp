#include "droplet/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "droplet/io.hpp"

namespace droplet {

using nlohmann::json;

namespace {

/// Tracks handled keys per object so typos are rejected rather than ignored.
class Section {
  public:
    Section(const json& j, std::string name, std::string* errors)
        : j_(j), name_(std::move(name)), errors_(errors) {}

    template <class T>
    void get(const char* key, T& out) {
        handled_.push_back(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            append(name_ + "." + key + ": " + e.what());
        }
    }

    const json* sub(const char* key) {
        handled_.push_back(key);
        if (!j_.contains(key)) return nullptr;
        if (!j_.at(key).is_object()) {
            append(name_ + "." + key + ": object expected");
            return nullptr;
        }
        return &j_.at(key);
    }

    ~Section() {
        for (const auto& [key, value] : j_.items()) {
            if (std::find(handled_.begin(), handled_.end(), key) == handled_.end())
                append(name_ + ": unknown key '" + key + "'");
        }
    }

  private:
    void append(const std::string& msg) {
        if (!errors_->empty()) *errors_ += "; ";
        *errors_ += msg;
    }

    const json& j_;
    std::string name_;
    std::string* errors_;
    std::vector<std::string> handled_;
};

std::string bc_name(VelocityBc bc) {
    switch (bc) {
        case VelocityBc::NoSlip: return "noslip";
        case VelocityBc::Slip: return "slip";
        case VelocityBc::None: return "none";
    }
    return "?";
}

VelocityBc bc_from_name(const std::string& name, const std::string& key, std::string* errors) {
    if (name == "noslip") return VelocityBc::NoSlip;
    if (name == "slip") return VelocityBc::Slip;
    if (name == "none") return VelocityBc::None;
    if (!errors->empty()) *errors += "; ";
    *errors += key + ": unknown boundary condition '" + name + "'";
    return VelocityBc::NoSlip;
}

}  // namespace

void ScenarioConfig::validate() const {
    std::string errs;
    auto require = [&errs](bool ok, const std::string& msg) {
        if (!ok) {
            if (!errs.empty()) errs += "; ";
            errs += msg;
        }
    };
    require(mesh.nx >= 1 && mesh.ny >= 1, "mesh: cell counts must be >= 1");
    require(mesh.lx > 0.0 && mesh.ly > 0.0, "mesh: dimensions must be positive");
    try {
        physics.validate();
    } catch (const std::exception& e) {
        require(false, e.what());
    }
    require(control_grid.r_intervals >= 1, "control.r_intervals must be >= 1");
    require(control_grid.s_patches >= 1, "control.s_patches must be >= 1");
    require(bounds.lo < bounds.hi, "bounds: cos_min must be below cos_max");
    require(bounds.lo >= -1.0 && bounds.hi <= 1.0, "bounds: cosine box must stay inside [-1, 1]");
    require(initial.radius > 0.0, "initial_droplet.radius must be positive");
    require(desired.radius > 0.0, "desired.radius must be positive");
    require(desired.equilibrium_tol > 0.0, "desired.equilibrium_tol must be positive");
    require(desired.max_steps >= 1, "desired.max_steps must be >= 1");
    require(gradcheck.directions >= 1, "gradcheck.directions must be >= 1");
    require(!gradcheck.epsilons.empty(), "gradcheck.epsilons must not be empty");
    try {
        optimizer.validate();
    } catch (const std::exception& e) {
        require(false, e.what());
    }
    const double m_real = physics.t_end / physics.tau;
    require(std::abs(m_real - std::lround(m_real)) <= 1e-9 * std::max(1.0, m_real), "time: tau must divide T");
    if (!desired.field_file.empty()) {
        // Existence is checked at load time so a to-be-written cache is fine.
    }
    if (!errs.empty()) throw std::invalid_argument("invalid configuration: " + errs);
}

ScenarioConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("config parse error: top-level object expected");

    ScenarioConfig c;
    c.physics.finalize();
    std::string errors;
    {
        Section top(root, "config", &errors);
        if (const json* j = top.sub("mesh")) {
            Section s(*j, "mesh", &errors);
            s.get("nx", c.mesh.nx);
            s.get("ny", c.mesh.ny);
            s.get("lx", c.mesh.lx);
            s.get("ly", c.mesh.ly);
        }
        if (const json* j = top.sub("physics")) {
            Section s(*j, "physics", &errors);
            s.get("sigma_lg", c.physics.sigma_lg);
            s.get("rho_l", c.physics.rho_l);
            s.get("rho_g", c.physics.rho_g);
            s.get("eta_l", c.physics.eta_l);
            s.get("eta_g", c.physics.eta_g);
            s.get("g", c.physics.g_mag);
            s.get("incline_deg", c.physics.incline_deg);
            s.get("r", c.physics.r_relax);
            s.get("eps", c.physics.eps);
            s.get("b", c.physics.mobility);
            s.get("theta_eq_deg", c.physics.theta_eq_deg);
        }
        if (const json* j = top.sub("time")) {
            Section s(*j, "time", &errors);
            s.get("tau", c.physics.tau);
            s.get("t_end", c.physics.t_end);
        }
        if (const json* j = top.sub("control")) {
            Section s(*j, "control", &errors);
            s.get("r_intervals", c.control_grid.r_intervals);
            s.get("s_patches", c.control_grid.s_patches);
            s.get("cos_min", c.bounds.lo);
            s.get("cos_max", c.bounds.hi);
        }
        if (const json* j = top.sub("initial_droplet")) {
            Section s(*j, "initial_droplet", &errors);
            s.get("center_x", c.initial.center_x);
            s.get("center_y", c.initial.center_y);
            s.get("radius", c.initial.radius);
        }
        if (const json* j = top.sub("desired")) {
            Section s(*j, "desired", &errors);
            s.get("center_x", c.desired.center_x);
            s.get("center_y", c.desired.center_y);
            s.get("radius", c.desired.radius);
            s.get("theta_deg", c.desired.theta_deg);
            s.get("field_file", c.desired.field_file);
            s.get("equilibrium_tol", c.desired.equilibrium_tol);
            s.get("max_steps", c.desired.max_steps);
        }
        if (const json* j = top.sub("velocity_bc")) {
            Section s(*j, "velocity_bc", &errors);
            std::string bottom = bc_name(c.velocity_bc.bottom), t = bc_name(c.velocity_bc.top);
            std::string l = bc_name(c.velocity_bc.left), r = bc_name(c.velocity_bc.right);
            s.get("bottom", bottom);
            s.get("top", t);
            s.get("left", l);
            s.get("right", r);
            c.velocity_bc.bottom = bc_from_name(bottom, "velocity_bc.bottom", &errors);
            c.velocity_bc.top = bc_from_name(t, "velocity_bc.top", &errors);
            c.velocity_bc.left = bc_from_name(l, "velocity_bc.left", &errors);
            c.velocity_bc.right = bc_from_name(r, "velocity_bc.right", &errors);
        }
        if (const json* j = top.sub("optimizer")) {
            Section s(*j, "optimizer", &errors);
            s.get("max_iters", c.optimizer.max_iters);
            s.get("step0", c.optimizer.step0);
            s.get("backtrack", c.optimizer.backtrack);
            s.get("armijo_c", c.optimizer.armijo_c);
            s.get("grad_tol", c.optimizer.grad_tol);
            s.get("barzilai_borwein", c.optimizer.barzilai_borwein);
            s.get("alpha", c.physics.alpha_reg);
        }
        if (const json* j = top.sub("gradcheck")) {
            Section s(*j, "gradcheck", &errors);
            s.get("directions", c.gradcheck.directions);
            s.get("epsilons", c.gradcheck.epsilons);
            s.get("seed", c.gradcheck.seed);
            s.get("surrogate", c.gradcheck.surrogate);
        }
        if (const json* j = top.sub("output")) {
            Section s(*j, "output", &errors);
            s.get("dir", c.output.dir);
            s.get("isoline_times", c.output.isoline_times);
        }
    }
    if (!errors.empty()) throw std::invalid_argument("config error: " + errors);

    c.physics.finalize();
    c.control_grid.t_end = c.physics.t_end;
    c.control_grid.x_lo = 0.0;
    c.control_grid.x_hi = c.mesh.lx;
    c.bounds.cos_theta_eq = c.physics.cos_theta_eq;
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    ScenarioConfig c = parse_config(buf.str());
    if (!c.desired.field_file.empty() && !std::filesystem::exists(c.desired.field_file)) {
        // A nonexistent cache is created by the pre-run; only report plainly
        // impossible paths.
        const auto parent = std::filesystem::path(c.desired.field_file).parent_path();
        if (!parent.empty() && !std::filesystem::exists(parent))
            throw std::invalid_argument("desired.field_file: directory does not exist: " + parent.string());
    }
    return c;
}

std::string config_to_json(const ScenarioConfig& c) {
    json j;
    j["mesh"] = {{"nx", c.mesh.nx}, {"ny", c.mesh.ny}, {"lx", c.mesh.lx}, {"ly", c.mesh.ly}};
    j["physics"] = {{"sigma_lg", c.physics.sigma_lg}, {"rho_l", c.physics.rho_l},
                    {"rho_g", c.physics.rho_g},       {"eta_l", c.physics.eta_l},
                    {"eta_g", c.physics.eta_g},       {"g", c.physics.g_mag},
                    {"incline_deg", c.physics.incline_deg}, {"r", c.physics.r_relax},
                    {"eps", c.physics.eps},           {"b", c.physics.mobility},
                    {"theta_eq_deg", c.physics.theta_eq_deg}};
    j["time"] = {{"tau", c.physics.tau}, {"t_end", c.physics.t_end}};
    j["control"] = {{"r_intervals", c.control_grid.r_intervals},
                    {"s_patches", c.control_grid.s_patches},
                    {"cos_min", c.bounds.lo},
                    {"cos_max", c.bounds.hi}};
    j["initial_droplet"] = {{"center_x", c.initial.center_x},
                            {"center_y", c.initial.center_y},
                            {"radius", c.initial.radius}};
    j["desired"] = {{"center_x", c.desired.center_x}, {"center_y", c.desired.center_y},
                    {"radius", c.desired.radius},     {"theta_deg", c.desired.theta_deg},
                    {"field_file", c.desired.field_file}, {"equilibrium_tol", c.desired.equilibrium_tol},
                    {"max_steps", c.desired.max_steps}};
    j["velocity_bc"] = {{"bottom", bc_name(c.velocity_bc.bottom)},
                        {"top", bc_name(c.velocity_bc.top)},
                        {"left", bc_name(c.velocity_bc.left)},
                        {"right", bc_name(c.velocity_bc.right)}};
    j["optimizer"] = {{"max_iters", c.optimizer.max_iters}, {"step0", c.optimizer.step0},
                      {"backtrack", c.optimizer.backtrack}, {"armijo_c", c.optimizer.armijo_c},
                      {"grad_tol", c.optimizer.grad_tol},
                      {"barzilai_borwein", c.optimizer.barzilai_borwein},
                      {"alpha", c.physics.alpha_reg}};
    j["gradcheck"] = {{"directions", c.gradcheck.directions},
                      {"epsilons", c.gradcheck.epsilons},
                      {"seed", c.gradcheck.seed},
                      {"surrogate", c.gradcheck.surrogate}};
    j["output"] = {{"dir", c.output.dir}, {"isoline_times", c.output.isoline_times}};
    return j.dump(2);
}

void save_config(const std::string& path, const ScenarioConfig& config) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open config for writing: " + path);
    os << config_to_json(config) << "\n";
}

Scenario build_scenario(const ScenarioConfig& config) {
    Scenario sc;
    sc.config = config;
    Mesh mesh = build_rect_mesh(config.mesh.nx, config.mesh.ny, config.mesh.lx, config.mesh.ly);
    sc.model = make_model(std::move(mesh), config.physics, config.control_grid, config.velocity_bc);
    sc.model.box = config.bounds;
    sc.model.box.cos_theta_eq = config.physics.cos_theta_eq;
    sc.phi0 = initial_droplet(Vec2(config.initial.center_x, config.initial.center_y),
                              config.initial.radius, config.physics.eps, *sc.model.p1);
    sc.v0 = Field(*sc.model.p2v);
    return sc;
}

std::pair<Field, int> equilibrate_desired_field(const Scenario& scenario) {
    const ScenarioConfig& c = scenario.config;
    // Level plate, same mesh and discretization.
    PhysicalParams params = c.physics;
    params.incline_deg = 0.0;
    params.finalize();
    Mesh mesh = build_rect_mesh(c.mesh.nx, c.mesh.ny, c.mesh.lx, c.mesh.ly);
    Model model = make_model(std::move(mesh), params, c.control_grid, c.velocity_bc);

    const double target_cos = std::cos(c.desired.theta_deg * std::numbers::pi / 180.0);
    const double bu_const = target_cos - params.cos_theta_eq;
    if (std::abs(params.cos_theta_eq + bu_const) > 1.0)
        throw std::invalid_argument("desired.theta_deg leaves the solvable control range");
    const std::vector<double> bu(static_cast<size_t>(c.control_grid.s_patches), bu_const);

    State state = initial_state(
        model,
        initial_droplet(Vec2(c.desired.center_x, c.desired.center_y), c.desired.radius, params.eps,
                        *model.p1),
        Field(*model.p2v));
    SolverWorkspace ws;
    for (int m = 1; m <= c.desired.max_steps; ++m) {
        ChResult ch = ch_step(model, state.phi, state.mu, state.v, bu, ws);
        NsResult ns = ns_step(model, ch.phi, state.phi, ch.mu, state.v, ws);
        const double rate = model.l2_norm(ch.phi.coeffs - state.phi.coeffs) / params.tau;
        state = State{std::move(ns.v), std::move(ns.p), std::move(ch.phi), std::move(ch.mu),
                      m * params.tau};
        if (rate <= c.desired.equilibrium_tol) {
            // Re-wrap onto the scenario's own P1 space (identical layout).
            return {Field(*scenario.model.p1, state.phi.coeffs), m};
        }
    }
    throw std::runtime_error("desired-field pre-run did not reach equilibrium within " +
                             std::to_string(c.desired.max_steps) + " steps");
}

Field make_desired_field(const Scenario& scenario) {
    const std::string& cache = scenario.config.desired.field_file;
    if (!cache.empty() && std::filesystem::exists(cache)) return read_field(cache, *scenario.model.p1);
    auto [field, steps] = equilibrate_desired_field(scenario);
    if (!cache.empty()) write_field(cache, field);
    return field;
}

}  // namespace droplet
