#include "psipi/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "psipi/oracle.hpp"
#include "psipi/recover.hpp"
#include "psipi/rng.hpp"
#include "psipi/spdc.hpp"

#ifndef PSIPI_VERSION
#define PSIPI_VERSION "0.0.0"
#endif

namespace psipi::cli {

namespace fs = std::filesystem;
using imaging::CorrelationKind;
using imaging::ModeGrid;
using imaging::ObjectKind;
using imaging::PortPair;

constexpr double kPi = std::numbers::pi;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::two_mode: return "two-mode";
    case Experiment::multimode: return "multimode";
    case Experiment::herzog: return "herzog";
    case Experiment::noise_sweep: return "noise-sweep";
    case Experiment::reconstruct: return "reconstruct";
    case Experiment::verify: return "verify";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  for (auto e : {Experiment::two_mode, Experiment::multimode, Experiment::herzog, Experiment::noise_sweep,
                 Experiment::reconstruct, Experiment::verify})
    if (to_string(e) == name) return e;
  throw InvalidArgument("unknown experiment '" + name + "'");
}

namespace {

std::string statistics_name(fock::Statistics s) { return s == fock::Statistics::boson ? "boson" : "fermion"; }

fock::Statistics statistics_from_string(const std::string& name) {
  if (name == "boson") return fock::Statistics::boson;
  if (name == "fermion") return fock::Statistics::fermion;
  throw InvalidArgument("unknown statistics '" + name + "' (expected boson or fermion)");
}

std::string law_name(interferometer::NoiseLaw law) {
  return law == interferometer::NoiseLaw::uniform ? "uniform" : "gaussian";
}

interferometer::NoiseLaw law_from_string(const std::string& name) {
  if (name == "uniform") return interferometer::NoiseLaw::uniform;
  if (name == "gaussian") return interferometer::NoiseLaw::gaussian;
  throw InvalidArgument("unknown noise law '" + name + "' (expected uniform or gaussian)");
}

/// Strict accessor for one JSON object of the config.
class Section {
 public:
  Section(const json& obj, std::string path, std::initializer_list<const char*> allowed) : obj_(obj), path_(path) {
    if (!obj.is_object()) throw InvalidArgument("config '" + label() + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) throw InvalidArgument("unknown config key '" + qualified(key) + "'");
    }
  }

  bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
  const json& at(const char* key) const { return obj_.at(key); }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void read(const char* key, double& out) const {
    if (!has(key)) return;
    if (!at(key).is_number()) fail(key, "a number");
    out = at(key).get<double>();
  }
  void read(const char* key, std::optional<double>& out) const {
    if (!has(key)) return;
    double v = 0.0;
    read(key, v);
    out = v;
  }
  void read(const char* key, int& out) const {
    if (!has(key)) return;
    if (!at(key).is_number_integer()) fail(key, "an integer");
    const auto v = at(key).get<std::int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) fail(key, "a 32-bit integer");
    out = static_cast<int>(v);
  }
  void read(const char* key, std::optional<int>& out) const {
    if (!has(key)) return;
    int v = 0;
    read(key, v);
    out = v;
  }
  void read(const char* key, std::int64_t& out) const {
    if (!has(key)) return;
    if (!at(key).is_number_integer()) fail(key, "an integer");
    out = at(key).get<std::int64_t>();
  }
  void read(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    if (!at(key).is_number_unsigned()) fail(key, "a non-negative integer");
    out = at(key).get<std::uint64_t>();
  }
  void read(const char* key, std::optional<std::size_t>& out) const {
    if (!has(key)) return;
    std::uint64_t v = 0;
    read(key, v);
    out = static_cast<std::size_t>(v);
  }
  void read(const char* key, bool& out) const {
    if (!has(key)) return;
    if (!at(key).is_boolean()) fail(key, "a boolean");
    out = at(key).get<bool>();
  }
  void read(const char* key, std::string& out) const {
    if (!has(key)) return;
    if (!at(key).is_string()) fail(key, "a string");
    out = at(key).get<std::string>();
  }
  template <class F>
  void read_enum(const char* key, F&& convert) const {
    if (!has(key)) return;
    std::string s;
    read(key, s);
    try {
      convert(s);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("config key '" + qualified(key) + "': " + e.what());
    }
  }

 private:
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw InvalidArgument("config key '" + qualified(key) + "' must be " + what);
  }
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
};

json grid_json_or_null(const std::optional<ModeGrid>& grid) {
  return grid ? io::grid_to_json(*grid) : json(nullptr);
}

}  // namespace

double default_object_scale(ObjectKind kind, const ModeGrid& grid) {
  switch (kind) {
    case ObjectKind::flat: return 0.0;
    case ObjectKind::quadratic1d: return 6.0 * kPi;  // spans 6 pi over the grid
    case ObjectKind::cubic2d: return 1.5 * kPi;      // u^3 + v^3 spans [-2, 2]: 6 pi in total
    case ObjectKind::linear_ramp: return 2.0 * kPi * 4.0 / grid.nx;  // four cycles
    case ObjectKind::from_file: return 1.0;
  }
  return 0.0;
}

ModeGrid RunConfig::effective_grid() const {
  if (grid) return *grid;
  if (object.kind == ObjectKind::from_file && !object.file.empty()) return io::read_grid_file(object.file).grid;
  if (object.kind == ObjectKind::cubic2d) return imaging::grid_2d(32, 32);
  return imaging::grid_1d(64);
}

double RunConfig::effective_scale() const {
  return object.scale.value_or(default_object_scale(object.kind, effective_grid()));
}

void RunConfig::validate() const {
  if (threads && *threads < 1) throw InvalidArgument("threads must be >= 1");
  if (!std::isfinite(gain) || gain == 0.0) throw InvalidArgument("gain must be finite and nonzero");
  for (double v : {phases.phi_s, phases.phi_s_prime, phases.gamma_i, phases.gamma_i_prime})
    if (!std::isfinite(v)) throw InvalidArgument("phases must be finite");
  if (scan_points < 2) throw InvalidArgument("scan_points must be >= 2");
  if (grid) grid->validate();
  if (object.scale && !std::isfinite(*object.scale)) throw InvalidArgument("object.scale must be finite");
  if (object.kind == ObjectKind::from_file && object.file.empty())
    throw InvalidArgument("object.kind from_file needs object.file");
  if (correlation.kind == CorrelationKind::sinc_product || correlation.kind == CorrelationKind::table)
    throw InvalidArgument("correlation.kind must be delta or gaussian in run configs");
  if (!(correlation.sigma > 0) || !std::isfinite(correlation.sigma))
    throw InvalidArgument("correlation.sigma must be > 0");
  if (!(correlation.gain > 0) || !std::isfinite(correlation.gain))
    throw InvalidArgument("correlation.gain must be > 0");
  if (!(noise.amplitude >= 0) || !std::isfinite(noise.amplitude))
    throw InvalidArgument("noise.amplitude must be finite and >= 0");
  if (noise.frames < 1) throw InvalidArgument("noise.frames must be >= 1");
  if (noise.total_counts < 0) throw InvalidArgument("noise.total_counts must be >= 0");
  if (noise.sweep_points < 2) throw InvalidArgument("noise.sweep_points must be >= 2");
  if (reconstruct.method != "rank2" && reconstruct.method != "quadrature")
    throw InvalidArgument("reconstruct.method must be rank2 or quadrature");
  if (experiment == Experiment::reconstruct && reconstruct.input.empty())
    throw InvalidArgument("reconstruct needs reconstruct.input (a map CSV)");
  if (experiment == Experiment::multimode || experiment == Experiment::herzog) {
    const ModeGrid g = effective_grid();
    if (object.kind == ObjectKind::cubic2d && g.dimension != 2) throw InvalidArgument("cubic2d needs a 2D grid");
  }
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "",
               {"experiment", "seed", "output_dir", "threads", "statistics", "gain", "phases", "scan_points", "grid",
                "object", "correlation", "ports", "noise", "reconstruct"});
  root.read_enum("experiment", [&](const std::string& s) { c.experiment = experiment_from_string(s); });
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  root.read("threads", c.threads);
  root.read_enum("statistics", [&](const std::string& s) { c.statistics = statistics_from_string(s); });
  root.read("gain", c.gain);
  root.read("scan_points", c.scan_points);
  root.read_enum("ports", [&](const std::string& s) { c.ports = imaging::port_pair_from_string(s); });

  if (root.has("phases")) {
    Section s(root.at("phases"), "phases", {"phi_s", "phi_s_prime", "gamma_i", "gamma_i_prime"});
    s.read("phi_s", c.phases.phi_s);
    s.read("phi_s_prime", c.phases.phi_s_prime);
    s.read("gamma_i", c.phases.gamma_i);
    s.read("gamma_i_prime", c.phases.gamma_i_prime);
  }
  if (root.has("grid")) {
    Section s(root.at("grid"), "grid", {"dimension", "nx", "ny", "pixel_pitch_m", "magnification"});
    ModeGrid g;
    s.read("dimension", g.dimension);
    s.read("nx", g.nx);
    g.ny = g.dimension == 2 ? g.nx : 1;
    s.read("ny", g.ny);
    s.read("pixel_pitch_m", g.pixel_pitch);
    s.read("magnification", g.magnification);
    try {
      g.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(std::string("config 'grid': ") + e.what());
    }
    c.grid = g;
  }
  if (root.has("object")) {
    Section s(root.at("object"), "object", {"kind", "scale", "file"});
    s.read_enum("kind", [&](const std::string& v) { c.object.kind = imaging::object_kind_from_string(v); });
    s.read("scale", c.object.scale);
    s.read("file", c.object.file);
  }
  if (root.has("correlation")) {
    Section s(root.at("correlation"), "correlation", {"kind", "sigma", "gain", "max_dense_pixels"});
    s.read_enum("kind", [&](const std::string& v) { c.correlation.kind = imaging::correlation_kind_from_string(v); });
    s.read("sigma", c.correlation.sigma);
    s.read("gain", c.correlation.gain);
    std::uint64_t limit = c.correlation.max_dense_pixels;
    s.read("max_dense_pixels", limit);
    c.correlation.max_dense_pixels = static_cast<std::size_t>(limit);
  }
  if (root.has("noise")) {
    Section s(root.at("noise"), "noise",
              {"amplitude", "frames", "law", "total_counts", "subtract_background", "sweep_points"});
    s.read("amplitude", c.noise.amplitude);
    s.read("frames", c.noise.frames);
    s.read_enum("law", [&](const std::string& v) { c.noise.law = law_from_string(v); });
    s.read("total_counts", c.noise.total_counts);
    s.read("subtract_background", c.noise.subtract_background);
    s.read("sweep_points", c.noise.sweep_points);
  }
  if (root.has("reconstruct")) {
    Section s(root.at("reconstruct"), "reconstruct", {"input", "truth", "method", "reference"});
    s.read("input", c.reconstruct.input);
    s.read("truth", c.reconstruct.truth);
    s.read("method", c.reconstruct.method);
    s.read("reference", c.reconstruct.reference);
  }
  c.validate();
  return c;
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte counts characters read up to and including the offending one.
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string reason = e.what();
    if (auto pos = reason.find("parse error"); pos != std::string::npos) reason = reason.substr(pos);
    throw InvalidArgument(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + reason);
  }
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  return config_from_json(parse_json_text(text, origin));
}

RunConfig load_config(const fs::path& path) { return parse_config(io::read_text(path), path.string()); }

json config_to_json(const RunConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads ? json(*c.threads) : json(nullptr);
  j["statistics"] = statistics_name(c.statistics);
  j["gain"] = c.gain;
  j["phases"] = {{"phi_s", c.phases.phi_s},
                 {"phi_s_prime", c.phases.phi_s_prime},
                 {"gamma_i", c.phases.gamma_i},
                 {"gamma_i_prime", c.phases.gamma_i_prime}};
  j["scan_points"] = c.scan_points;
  j["grid"] = grid_json_or_null(c.grid);
  j["object"] = {{"kind", imaging::to_string(c.object.kind)},
                 {"scale", c.object.scale ? json(*c.object.scale) : json(nullptr)},
                 {"file", c.object.file}};
  j["correlation"] = {{"kind", imaging::to_string(c.correlation.kind)},
                      {"sigma", c.correlation.sigma},
                      {"gain", c.correlation.gain},
                      {"max_dense_pixels", c.correlation.max_dense_pixels}};
  j["ports"] = imaging::to_string(c.ports);
  j["noise"] = {{"amplitude", c.noise.amplitude},
                {"frames", c.noise.frames},
                {"law", law_name(c.noise.law)},
                {"total_counts", c.noise.total_counts},
                {"subtract_background", c.noise.subtract_background},
                {"sweep_points", c.noise.sweep_points}};
  j["reconstruct"] = {{"input", c.reconstruct.input},
                      {"truth", c.reconstruct.truth},
                      {"method", c.reconstruct.method},
                      {"reference", c.reconstruct.reference ? json(*c.reconstruct.reference) : json(nullptr)}};
  return j;
}

std::string sha256_file(const fs::path& path) {
  const std::string data = io::read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 failed for " + path.string());
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
  return 3;
}

json error_json(const std::exception& e) {
  const int code = exit_code_for(e);
  std::string kind = "numerical_error";
  if (dynamic_cast<const InvalidArgument*>(&e)) kind = "invalid_argument";
  else if (dynamic_cast<const fs::filesystem_error*>(&e)) kind = "filesystem_error";
  else if (!dynamic_cast<const NumericalError*>(&e)) kind = "internal_error";
  return json{{"error", {{"kind", kind}, {"message", e.what()}, {"exit_code", code}}}};
}

namespace {

/// Exclusive lock on an output directory for the lifetime of one run.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".psipi.lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw InvalidArgument("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Context {
  const RunConfig& config;
  fs::path out;
  int threads;
  std::ostream* log;
  RunResult result;

  void write(const std::string& name, const std::string& text) {
    io::write_text(out / name, text);
    result.files.push_back(name);
  }
  void write_map(const std::string& name, const imaging::CoincidenceMap& map, const json& extra) {
    io::write_map(out / name, map, extra);
    result.files.push_back(name);
    result.files.push_back(io::sidecar_path(name).string());
  }
  void say(const std::string& line) {
    if (log) *log << line << '\n';
  }
};

void run_two_mode(Context& ctx) {
  const auto& c = ctx.config;
  const auto n = static_cast<std::size_t>(c.scan_points);
  std::vector<double> delta(n), fock_rate(n), closed(n);
  const auto op_h = interferometer::two_path_detector(interferometer::Port::h, c.phases.phi_s, c.phases.phi_s_prime);
  const auto op_g = interferometer::two_path_detector(interferometer::Port::g, c.phases.phi_s, c.phases.phi_s_prime);
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    delta[k] = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    const double gamma_i = c.phases.gamma_i_prime + delta[k];
    const auto [src1, src2] = spdc::two_path_sources(c.gain);
    auto state = spdc::build_two_source_state(src1, src2, c.statistics);
    state = spdc::filter_detectable(state, {spdc::two_path_hg_channel()});
    state = spdc::apply_path_identity(state, spdc::two_path_identity(gamma_i, c.phases.gamma_i_prime));
    fock_rate[k] = interferometer::coincidence_rate(state, op_h, op_g).rate;
    closed[k] = interferometer::two_mode_psipi_rate(c.phases.phi_s, c.phases.phi_s_prime, gamma_i,
                                                    c.phases.gamma_i_prime);
    worst = std::max(worst, std::abs(fock_rate[k] - closed[k]));
  }
  ctx.write("fringe.csv", io::columns_text({"gamma_difference", "rate_fock", "rate_closed_form"},
                                           {delta, fock_rate, closed}));
  const auto [lo, hi] = std::minmax_element(fock_rate.begin(), fock_rate.end());
  ctx.result.summary = {{"min", *lo},
                        {"max", *hi},
                        {"visibility", interferometer::visibility(fock_rate)},
                        {"max_abs_deviation_from_closed_form", worst}};
  ctx.say("two-mode: min " + io::format_double(*lo) + ", max " + io::format_double(*hi));
}

imaging::CorrelationModel make_correlation(const RunConfig& c, const ModeGrid& grid) {
  if (c.correlation.kind == CorrelationKind::gaussian)
    return imaging::gaussian_correlation(grid, c.correlation.sigma, c.correlation.gain);
  return imaging::delta_correlation(grid, c.correlation.gain);
}

json map_extra(const RunConfig& c, double scale) {
  return json{{"object_file", "object.grid"},
              {"object", {{"kind", imaging::to_string(c.object.kind)}, {"scale", scale}}},
              {"correlation",
               {{"kind", imaging::to_string(c.correlation.kind)},
                {"sigma", c.correlation.sigma},
                {"gain", c.correlation.gain}}},
              {"diagonal_flagged", true}};
}

void run_multimode(Context& ctx, bool herzog) {
  const auto& c = ctx.config;
  const ModeGrid grid = c.effective_grid();
  const double scale = c.effective_scale();
  const auto object = imaging::make_phase_object(c.object.kind, scale, grid, c.object.file);
  const auto corr = make_correlation(c, grid);
  imaging::MapOptions options;
  options.max_dense_pixels = c.correlation.max_dense_pixels;
  options.threads = ctx.threads;

  ctx.write("object.grid", io::grid_file_text(grid, object.alpha));
  auto standard = imaging::coincidence_map(object, corr, herzog ? PortPair::bb : c.ports, options);
  if (c.noise.total_counts > 0) standard = imaging::add_shot_noise(standard, c.noise.total_counts, c.seed);
  json extra = map_extra(c, scale);
  if (c.noise.total_counts > 0) extra["total_counts"] = c.noise.total_counts;

  if (!herzog) {
    ctx.write_map("map.csv", standard, extra);
    const auto [lo, hi] = std::minmax_element(standard.values.begin(), standard.values.end());
    ctx.result.summary = {{"pixels", grid.pixel_count()}, {"min", *lo}, {"max", *hi}};
    ctx.say("multimode: " + std::to_string(grid.pixel_count()) + " px map written");
    return;
  }

  auto doubled = imaging::herzog_map(object, corr, options);
  if (c.noise.total_counts > 0)
    doubled = imaging::add_shot_noise(doubled, c.noise.total_counts, derive_seed(c.seed, 1));
  ctx.write_map("map.csv", doubled, extra);
  ctx.write_map("standard_map.csv", standard, extra);

  const std::size_t r0 = recover::default_reference(grid);
  const std::size_t row = r0 / static_cast<std::size_t>(grid.nx);
  std::vector<double> x(grid.nx), f_std(grid.nx), f_her(grid.nx);
  for (int k = 0; k < grid.nx; ++k) {
    const std::size_t p = row * grid.nx + k;
    x[k] = k;
    f_std[k] = standard.at(r0, p);
    f_her[k] = doubled.at(r0, p);
  }
  ctx.write("fringe.csv", io::columns_text({"x", "standard", "herzog"}, {x, f_std, f_her}));
  const double nu_std = imaging::dominant_fringe_frequency(f_std);
  const double nu_her = imaging::dominant_fringe_frequency(f_her);
  ctx.result.summary = {{"frequency_standard", nu_std},
                        {"frequency_herzog", nu_her},
                        {"frequency_ratio", nu_her / nu_std}};
  ctx.say("herzog: fringe frequency ratio " + io::format_double(nu_her / nu_std));
}

void run_noise_sweep(Context& ctx) {
  const auto& c = ctx.config;
  const auto n = static_cast<std::size_t>(c.noise.sweep_points);
  std::vector<double> amp(n), vis_psipi(n), vis_std(n);
  interferometer::FrameNoiseOptions options;
  options.law = c.noise.law;
  options.subtract_background = c.noise.subtract_background;
  for (std::size_t k = 0; k < n; ++k) {
    amp[k] = c.noise.amplitude * static_cast<double>(k) / static_cast<double>(n - 1);
    const auto r = interferometer::frame_noise_experiment(amp[k], c.noise.frames, c.seed, options);
    vis_psipi[k] = r.visibility_psipi;
    vis_std[k] = r.visibility_standard;
  }
  ctx.write("noise_sweep.csv",
            io::columns_text({"amplitude", "visibility_psipi", "visibility_standard"}, {amp, vis_psipi, vis_std}));
  ctx.result.summary = {{"amplitude", c.noise.amplitude},
                        {"visibility_psipi", vis_psipi.back()},
                        {"visibility_standard", vis_std.back()}};
  ctx.say("noise-sweep: at amplitude " + io::format_double(c.noise.amplitude) + " psipi " +
          io::format_double(vis_psipi.back()) + ", standard " + io::format_double(vis_std.back()));
}

void run_reconstruct(Context& ctx) {
  const auto& c = ctx.config;
  const fs::path input = c.reconstruct.input;
  const auto map = io::read_map(input);
  const std::size_t r0 = c.reconstruct.reference.value_or(recover::default_reference(map.grid));
  recover::WrappedField wrapped;
  if (c.reconstruct.method == "rank2") {
    recover::FactorizationOptions options;
    options.reference = r0;
    wrapped = recover::rank2_phase_factorization(map, options);
  } else {
    wrapped = recover::quadrature_two_reference(map, r0, recover::choose_second_reference(map, r0));
  }
  int merges = 0;
  const auto unwrapped = recover::unwrap_2d(wrapped, &merges);
  ctx.write("wrapped.grid", io::grid_file_text(map.grid, wrapped.values));
  ctx.write("quality.grid", io::grid_file_text(map.grid, wrapped.quality));
  ctx.write("reconstruction.grid", io::grid_file_text(map.grid, unwrapped.values));

  json report{{"method", c.reconstruct.method},
              {"input", input.filename().string()},
              {"reference_pixel", r0},
              {"rank_ratio", wrapped.rank_ratio},
              {"degraded", wrapped.degraded},
              {"unwrap_merges", merges},
              {"warnings", json::array()}};
  if (wrapped.degraded) report["warnings"].push_back("cosine matrix is not rank 2 within tolerance");

  fs::path truth_path = c.reconstruct.truth;
  if (truth_path.empty()) {
    const auto meta = json::parse(io::read_text(io::sidecar_path(input)));
    if (meta.contains("object_file") && meta["object_file"].is_string())
      truth_path = input.parent_path() / meta["object_file"].get<std::string>();
  }
  if (!truth_path.empty() && fs::exists(truth_path)) {
    const auto truth = io::read_grid_file(truth_path);
    auto rep = recover::align_and_rms(unwrapped, truth);
    rep.pixels_processed = map.pixels();
    const auto aligned = recover::apply_gauge(unwrapped, rep);
    std::vector<double> error(aligned.values.size());
    for (std::size_t i = 0; i < error.size(); ++i) error[i] = aligned.values[i] - truth.values[i];
    ctx.write("aligned.grid", io::grid_file_text(map.grid, aligned.values));
    ctx.write("error.grid", io::grid_file_text(map.grid, error));
    report["truth"] = truth_path.filename().string();
    report["report"] = recover::report_to_json(rep);
    ctx.say("reconstruct: rms error " + io::format_double(rep.rms_error) + " rad");
  } else {
    report["truth"] = nullptr;
    report["report"] = nullptr;
    ctx.say("reconstruct: no ground truth available, rms not computed");
  }
  ctx.write("report.json", report.dump(2) + "\n");
  ctx.result.summary = report;
}

void run_verify(Context& ctx) {
  const auto checks = run_verify_suite(ctx.config.seed);
  json rows = json::array();
  bool all = true;
  ctx.say("check                                               measured        tolerance   result");
  for (const auto& ch : checks) {
    rows.push_back({{"name", ch.name}, {"measured", ch.measured}, {"tolerance", ch.tolerance}, {"passed", ch.passed}});
    all = all && ch.passed;
    std::ostringstream line;
    line << std::left << std::setw(52) << ch.name << std::setw(16) << std::setprecision(6) << ch.measured
         << std::setw(12) << ch.tolerance << (ch.passed ? "PASS" : "FAIL");
    ctx.say(line.str());
  }
  ctx.write("verify.json", json{{"checks", rows}, {"all_passed", all}}.dump(2) + "\n");
  ctx.result.summary = {{"all_passed", all}, {"checks", checks.size()}};
  ctx.result.passed = all;
}

}  // namespace

RunResult run(const RunConfig& config, int threads, std::ostream* log) {
  config.validate();
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  DirectoryLock lock(out);

  Context ctx{config, out, threads, log, {}};
  ctx.result.output_dir = out;
  switch (config.experiment) {
    case Experiment::two_mode: run_two_mode(ctx); break;
    case Experiment::multimode: run_multimode(ctx, false); break;
    case Experiment::herzog: run_multimode(ctx, true); break;
    case Experiment::noise_sweep: run_noise_sweep(ctx); break;
    case Experiment::reconstruct: run_reconstruct(ctx); break;
    case Experiment::verify: run_verify(ctx); break;
  }

  json checksums = json::object();
  for (const auto& f : ctx.result.files) checksums[f] = sha256_file(out / f);
  json manifest{{"tool", "psipi"},
                {"version", PSIPI_VERSION},
                {"libraries",
                 {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                {"experiment", to_string(config.experiment)},
                {"threads", threads},
                {"config", config_to_json(config)},
                {"checksums", checksums},
                {"summary", ctx.result.summary},
                {"created_utc", utc_timestamp()}};
  io::write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return ctx.result;
}

std::vector<CheckResult> run_verify_suite(std::uint64_t seed) {
  using interferometer::Port;
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double measured, double tol) {
    out.push_back({std::move(name), measured, tol, measured <= tol});
  };
  Engine engine(derive_seed(seed, 0x7665726966ULL));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

  for (auto stats : {fock::Statistics::boson, fock::Statistics::fermion}) {
    double worst = 0.0;
    for (int k = 0; k < 64; ++k) {
      const double a = phase(engine), b = phase(engine), g1 = phase(engine), g2 = phase(engine);
      worst = std::max(worst, std::abs(interferometer::psipi_two_path_rate(a, b, g1, g2, stats) -
                                       interferometer::two_mode_psipi_rate(a, b, g1, g2)));
    }
    add("two-mode Fock vs closed form (" + statistics_name(stats) + ")", worst, 1e-12);
  }

  {
    const auto state = interferometer::standard_two_photon_state();
    double worst = 0.0;
    for (int k = 0; k < 64; ++k) {
      const double a = phase(engine), b = phase(engine);
      const double r = interferometer::coincidence_rate(state, interferometer::two_path_detector(Port::h, a, b),
                                                        interferometer::two_path_detector(Port::g, a, b))
                           .rate;
      worst = std::max(worst, std::abs(r - interferometer::standard_two_photon_rate(a, b)));
    }
    add("standard two-photon Fock vs closed form", worst, 1e-12);
  }

  {
    const auto [src1, src2] = spdc::two_path_sources();
    auto state = spdc::build_two_source_state(src1, src2, fock::Statistics::boson);
    state = spdc::filter_detectable(state, {spdc::two_path_hg_channel()});
    double lo = INFINITY, hi = -INFINITY;
    for (int k = 0; k < 64; ++k) {
      const double a = phase(engine), b = phase(engine);
      const double r = interferometer::coincidence_rate(state, interferometer::two_path_detector(Port::h, a, b),
                                                        interferometer::two_path_detector(Port::g, a, b))
                           .rate;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    add("no path identity: fringe peak-to-peak", hi - lo, 1e-12);
  }

  {
    double worst = 0.0;
    double worst_mc = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double a = phase(engine), b = phase(engine), g1 = phase(engine), g2 = phase(engine);
      const auto stats = k % 2 ? fock::Statistics::fermion : fock::Statistics::boson;
      const auto state = interferometer::psipi_two_path_state(g1, g2, stats);
      const auto op_h = interferometer::two_path_detector(Port::h, a, b);
      const auto op_g = interferometer::two_path_detector(Port::g, a, b);
      const auto tagged = interferometer::coincidence_rate(state, op_h, op_g);
      std::vector<fock::TaggedState> branches;
      for (auto& [m, branch] : fock::split_by_pump_exponent(state)) branches.push_back(branch);
      const auto dm = interferometer::density_matrix_rate(branches, op_h, op_g);
      worst = std::max(worst, std::abs(dm.rate - tagged.rate));
      const auto mc = interferometer::coincidence_rate_mc(state, op_h, op_g, 20000, derive_seed(seed, k));
      worst_mc = std::max(worst_mc, std::abs(mc.rate - tagged.rate) / std::max(mc.standard_error, 1e-300));
    }
    add("density matrix vs tagged averaging", worst, 1e-12);
    add("Monte Carlo vs tagged (in standard errors)", worst_mc, 3.0);
  }

  {
    const auto grid = imaging::grid_1d(64);
    const auto object = imaging::make_phase_object(ObjectKind::quadratic1d, 6.0 * kPi, grid);
    const auto map = imaging::coincidence_map(object, imaging::delta_correlation(grid), PortPair::bb);
    const auto closed = imaging::perfect_correlation_map(object);
    double worst = 0.0;
    for (std::size_t i = 0; i < map.values.size(); ++i)
      worst = std::max(worst, std::abs(map.values[i] - closed.values[i]));
    add("multimode delta map vs closed form (64 px)", worst, 1e-12);
  }

  {
    const auto grid = imaging::grid_1d(16);
    const auto object = imaging::make_phase_object(ObjectKind::quadratic1d, 2.0 * kPi, grid);
    const auto corr = imaging::gaussian_correlation(grid, 1.5);
    const auto table = corr.dense();
    double worst = 0.0;
    for (auto ports : {PortPair::bb, PortPair::b_bprime}) {
      const auto map = imaging::coincidence_map(object, corr, ports);
      for (std::size_t p = 0; p < 16; ++p)
        for (std::size_t q = 0; q < 16; ++q)
          worst = std::max(worst, std::abs(map.at(p, q) - oracle::multimode_direct_sum(table, object.alpha, p, q, ports)));
    }
    add("multimode gaussian map vs direct four-photon sum", worst, 1e-10);
  }

  {
    const auto grid = imaging::grid_1d(3);
    const imaging::PhaseObject object{grid, {0.3, -1.1, 2.0}};
    const auto corr = imaging::gaussian_correlation(grid, 0.8);
    const auto map = imaging::coincidence_map(object, corr, PortPair::bb);
    double worst = 0.0;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t q = 0; q < 3; ++q)
        if (p != q)
          worst = std::max(worst, std::abs(map.at(p, q) -
                                           oracle::multimode_fock_normalized(corr.dense(), object.alpha, p, q)));
    add("multimode map vs Fock brute force (3 px)", worst, 1e-12);
  }
  return out;
}

}  // namespace psipi::cli
