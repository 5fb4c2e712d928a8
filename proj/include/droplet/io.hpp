#pragma once

#include <string>
#include <vector>

#include "droplet/adjoint.hpp"
#include "droplet/isoline.hpp"
#include "droplet/optimize.hpp"

namespace droplet {

void write_isolines_csv(const std::string& path, const std::vector<Polyline>& lines);
void write_energy_csv(const std::string& path, const EnergyReport& report, double rel_tol = 1e-8);
void write_control_csv(const std::string& path, const ControlVector& u);
void write_iteration_csv(const std::string& path, const std::vector<IterationRecord>& history);
void write_fd_report_csv(const std::string& path, const std::vector<FdEntry>& entries);

void write_field(const std::string& path, const Field& field);
Field read_field(const std::string& path, const FunctionSpace& space);

/// Run metadata written exactly once per CLI invocation.
struct RunManifest {
    std::string version;
    std::string subcommand;
    std::string config_json;                                  // resolved echo
    std::vector<std::pair<std::string, double>> phase_seconds;
    std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

extern const char* const kVersion;

}  // namespace droplet
