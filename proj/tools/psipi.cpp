// psipi: command-line driver for the simulation, reconstruction and verification pipelines.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "psipi/cli.hpp"
#include "psipi/io.hpp"

namespace {

using psipi::cli::json;

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;

  std::optional<int> points;
  std::optional<std::string> statistics;
  std::optional<double> phi_s, phi_s_prime, gamma_i_prime, gain;

  std::optional<std::string> object, object_file, correlation, ports;
  std::optional<double> scale, sigma;
  std::optional<int> nx, ny;
  std::optional<std::int64_t> total_counts;

  std::optional<double> amplitude;
  std::optional<std::int64_t> frames;
  std::optional<std::string> law;
  bool subtract_background{false};
  std::optional<int> sweep_points;

  std::optional<std::string> input, truth, method;
  std::optional<std::size_t> reference;
};

template <class T>
void put(json& j, const std::string& key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

json patch_from(const Overrides& o) {
  json p = json::object();
  put(p, "seed", o.seed);
  put(p, "output_dir", o.out);
  put(p, "scan_points", o.points);
  put(p, "statistics", o.statistics);
  put(p, "gain", o.gain);
  put(p, "ports", o.ports);
  json phases = json::object();
  put(phases, "phi_s", o.phi_s);
  put(phases, "phi_s_prime", o.phi_s_prime);
  put(phases, "gamma_i_prime", o.gamma_i_prime);
  if (!phases.empty()) p["phases"] = phases;
  json object = json::object();
  put(object, "kind", o.object);
  put(object, "scale", o.scale);
  put(object, "file", o.object_file);
  if (!object.empty()) p["object"] = object;
  json corr = json::object();
  put(corr, "kind", o.correlation);
  put(corr, "sigma", o.sigma);
  if (!corr.empty()) p["correlation"] = corr;
  if (o.nx) p["grid"] = {{"dimension", o.ny ? 2 : 1}, {"nx", *o.nx}, {"ny", o.ny.value_or(1)}};
  json noise = json::object();
  put(noise, "total_counts", o.total_counts);
  put(noise, "amplitude", o.amplitude);
  put(noise, "frames", o.frames);
  put(noise, "law", o.law);
  put(noise, "sweep_points", o.sweep_points);
  if (o.subtract_background) noise["subtract_background"] = true;
  if (!noise.empty()) p["noise"] = noise;
  json rec = json::object();
  put(rec, "input", o.input);
  put(rec, "truth", o.truth);
  put(rec, "method", o.method);
  put(rec, "reference", o.reference);
  if (!rec.empty()) p["reconstruct"] = rec;
  return p;
}

int fail(const std::exception& e) {
  std::cerr << psipi::cli::error_json(e).dump() << '\n';
  return psipi::cli::exit_code_for(e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-subtractive interference by path identity: simulation and phase imaging"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--seed", o.seed, "Master seed (u64)");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads (fallback: PSIPI_THREADS)")->check(CLI::PositiveNumber);

  auto* two_mode = app.add_subcommand("two-mode", "Two-mode fringe versus the idler phase difference");
  two_mode->add_option("--points", o.points, "Scan points over [0, 2pi)");
  two_mode->add_option("--statistics", o.statistics, "boson or fermion");
  two_mode->add_option("--phi-s", o.phi_s);
  two_mode->add_option("--phi-s-prime", o.phi_s_prime);
  two_mode->add_option("--gamma-i-prime", o.gamma_i_prime);
  two_mode->add_option("--gain", o.gain);

  auto* multimode = app.add_subcommand("multimode", "Pixel-pair coincidence map of a phase object");
  auto* herzog = app.add_subcommand("herzog", "Single-crystal double-pass coincidence map");
  for (auto* sub : {multimode, herzog}) {
    sub->add_option("--object", o.object, "flat, quadratic1d, cubic2d, linear_ramp or from_file");
    sub->add_option("--scale", o.scale, "Object scale (rad)");
    sub->add_option("--object-file", o.object_file, "Grid file for from_file objects");
    sub->add_option("--correlation", o.correlation, "delta or gaussian");
    sub->add_option("--sigma", o.sigma, "Gaussian correlation width (px)");
    sub->add_option("--nx", o.nx, "Grid columns");
    sub->add_option("--ny", o.ny, "Grid rows (2D grid)");
    sub->add_option("--total-counts", o.total_counts, "Shot-noise total counts (0: noiseless)");
  }
  multimode->add_option("--ports", o.ports, "bb, b'b' or bb'");

  auto* sweep = app.add_subcommand("noise-sweep", "Fringe visibility versus frame phase-noise amplitude");
  sweep->add_option("--amplitude", o.amplitude, "Largest noise amplitude (rad)");
  sweep->add_option("--frames", o.frames, "Frames per amplitude");
  sweep->add_option("--law", o.law, "uniform or gaussian");
  sweep->add_option("--sweep-points", o.sweep_points, "Amplitudes in the sweep");
  sweep->add_flag("--subtract-background", o.subtract_background, "Remove individual-emission background");

  auto* reconstruct = app.add_subcommand("reconstruct", "Recover the object phase from a map CSV");
  reconstruct->add_option("--input", o.input, "Map CSV (with JSON sidecar)");
  reconstruct->add_option("--truth", o.truth, "Ground-truth grid file");
  reconstruct->add_option("--method", o.method, "rank2 or quadrature");
  reconstruct->add_option("--reference", o.reference, "Reference pixel index");

  auto* verify = app.add_subcommand("verify", "Run the oracle suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(psipi::InvalidArgument(e.what()));
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    json cfg = json::object();
    if (o.config) cfg = psipi::cli::parse_json_text(psipi::io::read_text(*o.config), *o.config);
    if (!cfg.is_object()) throw psipi::InvalidArgument("config must be a JSON object");
    if (cfg.contains("experiment") && cfg["experiment"] != sub->get_name())
      throw psipi::InvalidArgument("config experiment '" + cfg["experiment"].dump() + "' does not match subcommand '" +
                                   sub->get_name() + "'");
    cfg["experiment"] = sub->get_name();
    cfg.merge_patch(patch_from(o));
    const auto config = psipi::cli::config_from_json(cfg);

    int threads = 1;
    if (o.threads) {
      threads = *o.threads;
    } else if (config.threads) {
      threads = *config.threads;
    } else if (const char* env = std::getenv("PSIPI_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw psipi::InvalidArgument(std::string("PSIPI_THREADS is not an integer: ") + env);
      }
      if (threads < 1) throw psipi::InvalidArgument("PSIPI_THREADS must be >= 1");
    }

    const auto result = psipi::cli::run(config, threads, &std::cout);
    if (!result.passed) throw psipi::NumericalError("verification failed: see " + (result.output_dir / "verify.json").string());
    (void)verify;
  } catch (const std::exception& e) {
    return fail(e);
  }
  return 0;
}
