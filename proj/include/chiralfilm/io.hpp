#pragma once

#include "chiralfilm/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace chiralfilm {

/// Structured run configuration: everything a CLI run needs.
struct RunConfig {
  SweepConfig sweep;  // surface, target, perturbation, tensor, minimizer, eps list, seed
  std::string output_dir = "out";
};

/// Parses and validates a JSON document. Unknown keys, wrong types and out-of-range
/// values raise InvalidInput with the JSON path of the offending entry
/// (e.g. "/perturbation/J/1/2: expected a number").
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully materialized JSON (every default spelled out), 2-space indent, trailing newline.
/// Parsing the echo and echoing again reproduces the same bytes.
std::string echo_config(const RunConfig& config);

/// Names accepted by preset_config.
const std::vector<std::string>& preset_names();

/// Sphere(1) band with the named perturbation and a Sphere(1) target.
///   bulk         BulkDMI, kappa = 1
///   interfacial  InterfacialDMI, kappa = 1
///   anisotropic  AnisotropicDMI, J = [[1, .3, 0], [0, .7, .2], [.1, 0, .9]]
///   temperature  Temperature, J = I, Ms = 1 + 0.2 x3^2, A = Ms I
/// All presets select the lbfgs step rule.
RunConfig preset_config(std::string_view name);

/// Thread count after the CHIRALFILM_THREADS override (positive integer) is applied.
int resolve_threads(int configured);

/// Field CSV: header u,v,ux,uy,uz (Surface) or u,v,s,ux,uy,uz (Thin), one row per
/// value in layer-major order, 17 significant digits.
void write_field_csv(std::ostream& os, const DirectorField& field, const SurfaceGrid& grid);

/// Reads a field written by write_field_csv. Layout follows the header; the row count
/// and chart coordinates must match the grid.
DirectorField read_field_csv(std::istream& is, const SurfaceGrid& grid);
DirectorField load_field_csv(const std::filesystem::path& path, const SurfaceGrid& grid);

std::string energy_to_json(const EnergyBreakdown& e);
std::string report_to_json(const SweepReport& report);
SweepReport report_from_json(std::string_view text);

/// eps,minE_eps,minE_limit,gap,recovery_gap,h1_dist rows, one per eps.
void write_sweep_csv(std::ostream& os, const SweepReport& report);

/// Writes report.json, sweep.csv, fields/limit.csv, fields/eps_<k>.csv,
/// config.echo.json and version.txt into dir (created when missing).
/// I/O failures raise InvalidInput naming the path.
void serialize_report(const SweepReport& report, const SweepFields* fields, const RunConfig& config,
                      const SurfaceGrid& grid, const std::filesystem::path& dir);

/// Writes config.echo.json and version.txt.
void write_run_echo(const RunConfig& config, const std::filesystem::path& dir);

/// Command-line entry point. Returns 0 on success, 1 on invalid input, 2 on numerical failure.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chiralfilm
