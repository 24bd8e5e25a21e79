#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "psipi/fock.hpp"
#include "psipi/imaging.hpp"
#include "psipi/interferometer.hpp"
#include "psipi/io.hpp"

/// Configuration, subcommand pipelines and output bookkeeping of the `psipi` tool.
namespace psipi::cli {

using io::json;

enum class Experiment : std::uint8_t { two_mode, multimode, herzog, noise_sweep, reconstruct, verify };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct Phases {
  double phi_s{0.0};
  double phi_s_prime{0.0};
  double gamma_i{0.0};
  double gamma_i_prime{0.0};
  friend bool operator==(const Phases&, const Phases&) = default;
};

struct ObjectSpec {
  imaging::ObjectKind kind{imaging::ObjectKind::quadratic1d};
  /// Defaults depend on the kind (see default_object_scale).
  std::optional<double> scale;
  std::string file;
  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct CorrelationSpec {
  imaging::CorrelationKind kind{imaging::CorrelationKind::delta};
  double sigma{1.0};
  double gain{0.1};
  std::size_t max_dense_pixels{64};
  friend bool operator==(const CorrelationSpec&, const CorrelationSpec&) = default;
};

struct NoiseSpec {
  double amplitude{3.141592653589793};
  std::int64_t frames{10000};
  interferometer::NoiseLaw law{interferometer::NoiseLaw::uniform};
  std::int64_t total_counts{0};
  bool subtract_background{false};
  int sweep_points{9};
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct ReconstructSpec {
  std::string input;
  std::string truth;
  std::string method{"rank2"};
  std::optional<std::size_t> reference;
  friend bool operator==(const ReconstructSpec&, const ReconstructSpec&) = default;
};

struct RunConfig {
  Experiment experiment{Experiment::two_mode};
  std::uint64_t seed{0};
  std::string output_dir{"psipi_out"};
  std::optional<int> threads;
  fock::Statistics statistics{fock::Statistics::boson};
  double gain{0.1};
  Phases phases;
  int scan_points{64};
  /// Defaults to 64 px (1D) or 32 x 32 (cubic2d objects).
  std::optional<imaging::ModeGrid> grid;
  ObjectSpec object;
  CorrelationSpec correlation;
  imaging::PortPair ports{imaging::PortPair::bb};
  NoiseSpec noise;
  ReconstructSpec reconstruct;

  void validate() const;
  imaging::ModeGrid effective_grid() const;
  double effective_scale() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

double default_object_scale(imaging::ObjectKind kind, const imaging::ModeGrid& grid);

/// Strict JSON parsing: unknown keys are rejected, syntax errors report line and column.
RunConfig config_from_json(const json& j);
/// json::parse with errors reported as InvalidArgument "<origin>:<line>:<col>: ...".
json parse_json_text(const std::string& text, const std::string& origin);
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Fully resolved config (every field present).
json config_to_json(const RunConfig& config);

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<std::string> files;  // relative to output_dir, excluding the manifest
  json summary;
  bool passed{true};
};

/// Runs the configured pipeline and writes outputs plus manifest.json.
RunResult run(const RunConfig& config, int threads, std::ostream* log = nullptr);

/// Hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

struct CheckResult {
  std::string name;
  double measured{0.0};
  double tolerance{0.0};
  bool passed{false};
};

/// Oracle suite behind `psipi verify`.
std::vector<CheckResult> run_verify_suite(std::uint64_t seed);

/// Exit code convention: 2 for invalid input, 3 for numerical failure.
int exit_code_for(const std::exception& e);
json error_json(const std::exception& e);

}  // namespace psipi::cli
