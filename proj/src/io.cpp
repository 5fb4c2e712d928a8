#include "droplet/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace droplet {

const char* const kVersion = "droplet-ctrl 1.0.0";

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open file for writing: " + path);
    os << std::setprecision(17);
    return os;
}

}  // namespace

void write_isolines_csv(const std::string& path, const std::vector<Polyline>& lines) {
    auto os = open_out(path);
    os << "x,y\n";
    for (size_t k = 0; k < lines.size(); ++k) {
        if (k > 0) os << "\n";
        for (const auto& p : lines[k]) os << p.x() << "," << p.y() << "\n";
    }
}

void write_energy_csv(const std::string& path, const EnergyReport& report, double rel_tol) {
    auto os = open_out(path);
    const auto ok = check_energy_inequality(report, rel_tol);
    os << "step,time,kinetic,gl_bulk,boundary,diss_visc,diss_mu,diss_relax,gravity_work,lhs,rhs,satisfied\n";
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        os << r.m << "," << r.time << "," << r.kinetic << "," << r.gl_bulk << "," << r.boundary << ","
           << r.diss_visc << "," << r.diss_mu << "," << r.diss_relax << "," << r.gravity_work << ","
           << r.lhs << "," << r.rhs << "," << (ok[i] ? 1 : 0) << "\n";
    }
}

void write_control_csv(const std::string& path, const ControlVector& u) {
    auto os = open_out(path);
    os << "r,s,t_lo,t_hi,x_lo,x_hi,value\n";
    const ControlGrid& g = u.grid;
    for (int r = 0; r < g.r_intervals; ++r) {
        for (int s = 0; s < g.s_patches; ++s) {
            os << r << "," << s << "," << r * g.interval_length() << "," << (r + 1) * g.interval_length()
               << "," << g.x_lo + s * g.patch_length() << "," << g.x_lo + (s + 1) * g.patch_length() << ","
               << u.at(r, s) << "\n";
        }
    }
}

void write_iteration_csv(const std::string& path, const std::vector<IterationRecord>& history) {
    auto os = open_out(path);
    os << "iter,J,tracking,regularization,stationarity,step_length,forward_solves\n";
    for (const auto& h : history)
        os << h.iter << "," << h.j << "," << h.tracking << "," << h.regularization << "," << h.stationarity
           << "," << h.step_length << "," << h.forward_solves << "\n";
}

void write_fd_report_csv(const std::string& path, const std::vector<FdEntry>& entries) {
    auto os = open_out(path);
    os << "direction,epsilon,fd_value,grad_dot,rel_error\n";
    for (const auto& e : entries)
        os << e.direction << "," << e.eps << "," << e.fd_value << "," << e.grad_dot << "," << e.rel_error
           << "\n";
}

void write_field(const std::string& path, const Field& field) {
    auto os = open_out(path);
    os << "field " << field.coeffs.size() << "\n";
    for (int i = 0; i < field.coeffs.size(); ++i) os << i << " " << field.coeffs[i] << "\n";
}

Field read_field(const std::string& path, const FunctionSpace& space) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open field file: " + path);
    std::string word;
    long count = 0;
    is >> word >> count;
    if (word != "field" || count != space.dof_count())
        throw std::runtime_error("field file does not match the function space: " + path);
    Field f(space);
    for (long i = 0; i < count; ++i) {
        long idx;
        double v;
        if (!(is >> idx >> v) || idx != i) throw std::runtime_error("malformed field file: " + path);
        f.coeffs[i] = v;
    }
    return f;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json j;
    j["version"] = manifest.version;
    j["subcommand"] = manifest.subcommand;
    j["config"] = nlohmann::json::parse(manifest.config_json);
    nlohmann::json phases = nlohmann::json::object();
    for (const auto& [name, seconds] : manifest.phase_seconds) phases[name] = seconds;
    j["wall_clock_seconds"] = phases;
    j["outputs"] = manifest.outputs;
    auto os = open_out(path);
    os << j.dump(2) << "\n";
}

}  // namespace droplet
