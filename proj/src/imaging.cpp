#include "psipi/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <thread>

#include "psipi/io.hpp"
#include "psipi/rng.hpp"

namespace psipi::imaging {

void ModeGrid::validate() const {
  if (dimension != 1 && dimension != 2) throw InvalidArgument("grid dimension must be 1 or 2");
  if (nx < 2) throw InvalidArgument("grid needs at least 2 modes per axis");
  if (dimension == 1 && ny != 1) throw InvalidArgument("1D grid must have ny = 1");
  if (dimension == 2 && ny < 2) throw InvalidArgument("2D grid needs at least 2 modes along y");
  if (!(pixel_pitch > 0) || !std::isfinite(pixel_pitch)) throw InvalidArgument("pixel pitch must be > 0");
  if (!(magnification > 0) || !std::isfinite(magnification)) throw InvalidArgument("magnification must be > 0");
}

double ModeGrid::x_coordinate(int x) const { return (x - (nx - 1) / 2.0) * pixel_pitch * magnification; }
double ModeGrid::y_coordinate(int y) const { return (y - (ny - 1) / 2.0) * pixel_pitch * magnification; }

ModeGrid grid_1d(int n, double pixel_pitch) {
  ModeGrid grid{1, n, 1, pixel_pitch, 1.0};
  grid.validate();
  return grid;
}

ModeGrid grid_2d(int nx, int ny, double pixel_pitch) {
  ModeGrid grid{2, nx, ny, pixel_pitch, 1.0};
  grid.validate();
  return grid;
}

void PhaseObject::validate() const {
  grid.validate();
  if (alpha.size() != grid.pixel_count()) throw InvalidArgument("phase object does not match its grid");
  for (double a : alpha)
    if (!std::isfinite(a)) throw InvalidArgument("phase object contains non-finite values");
}

std::string to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::flat: return "flat";
    case ObjectKind::quadratic1d: return "quadratic1d";
    case ObjectKind::cubic2d: return "cubic2d";
    case ObjectKind::linear_ramp: return "linear_ramp";
    case ObjectKind::from_file: return "from_file";
  }
  return "?";
}

ObjectKind object_kind_from_string(const std::string& name) {
  for (auto kind : {ObjectKind::flat, ObjectKind::quadratic1d, ObjectKind::cubic2d, ObjectKind::linear_ramp,
                    ObjectKind::from_file})
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown object kind '" + name + "'");
}

PhaseObject make_phase_object(ObjectKind kind, double scale, const ModeGrid& grid, const std::string& path) {
  grid.validate();
  if (!std::isfinite(scale)) throw InvalidArgument("object scale must be finite");
  PhaseObject object{grid, std::vector<double>(grid.pixel_count(), 0.0)};
  if (kind == ObjectKind::from_file) {
    auto data = io::read_grid_file(path);
    if (data.grid.dimension != grid.dimension || data.grid.nx != grid.nx || data.grid.ny != grid.ny)
      throw InvalidArgument("grid file " + path + " does not match the configured grid");
    object.alpha = std::move(data.values);
    object.validate();
    return object;
  }
  if (kind == ObjectKind::cubic2d && grid.dimension != 2) throw InvalidArgument("cubic2d needs a 2D grid");

  const double cx = (grid.nx - 1) / 2.0;
  const double cy = (grid.ny - 1) / 2.0;
  for (int y = 0; y < grid.ny; ++y) {
    for (int x = 0; x < grid.nx; ++x) {
      const double u = (x - cx) / cx;
      const double v = grid.ny > 1 ? (y - cy) / cy : 0.0;
      double a = 0.0;
      switch (kind) {
        case ObjectKind::flat: break;
        case ObjectKind::quadratic1d: a = scale * u * u; break;
        case ObjectKind::cubic2d: a = scale * (u * u * u + v * v * v); break;
        case ObjectKind::linear_ramp: a = scale * x; break;
        case ObjectKind::from_file: break;
      }
      object.alpha[static_cast<std::size_t>(y) * grid.nx + x] = a;
    }
  }
  return object;
}

std::string to_string(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::delta: return "delta";
    case CorrelationKind::gaussian: return "gaussian";
    case CorrelationKind::sinc_product: return "sinc_product";
    case CorrelationKind::table: return "table";
  }
  return "?";
}

CorrelationKind correlation_kind_from_string(const std::string& name) {
  for (auto kind : {CorrelationKind::delta, CorrelationKind::gaussian, CorrelationKind::sinc_product,
                    CorrelationKind::table})
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown correlation kind '" + name + "'");
}

std::vector<std::vector<complex>> CorrelationModel::dense() const {
  std::vector<std::vector<complex>> table(pixels, std::vector<complex>(pixels));
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (const auto& e : rows[s]) table[s][e.idler] = e.value;
  return table;
}

void CorrelationModel::validate() const {
  if (rows.size() != pixels) throw InvalidArgument("correlation table has the wrong number of rows");
  double total = 0.0;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    if (rows[s].empty()) throw InvalidArgument("signal pixel " + std::to_string(s) + " has no correlated idler mode");
    for (const auto& e : rows[s]) {
      if (e.idler >= pixels) throw InvalidArgument("correlation entry outside the grid");
      if (!std::isfinite(e.value.real()) || !std::isfinite(e.value.imag()))
        throw InvalidArgument("correlation table contains non-finite values");
      total += std::norm(e.value);
    }
  }
  if (!(total > 0) || !std::isfinite(total)) throw InvalidArgument("correlation table is all zero");
}

namespace {

// Entries below this fraction of the row peak are dropped from sparse rows.
constexpr double kSparseCutoff = 1e-300;

CorrelationModel from_function(const ModeGrid& grid, CorrelationKind kind,
                               const std::function<complex(int, int, int, int)>& amplitude) {
  grid.validate();
  CorrelationModel model;
  model.kind = kind;
  model.pixels = grid.pixel_count();
  model.rows.resize(model.pixels);
  for (int sy = 0; sy < grid.ny; ++sy)
    for (int sx = 0; sx < grid.nx; ++sx) {
      auto& row = model.rows[static_cast<std::size_t>(sy) * grid.nx + sx];
      for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
          const complex c = amplitude(sx, sy, ix, iy);
          if (std::abs(c) > kSparseCutoff) row.push_back({static_cast<std::size_t>(iy) * grid.nx + ix, c});
        }
    }
  return model;
}

}  // namespace

CorrelationModel delta_correlation(const ModeGrid& grid, complex gain) {
  grid.validate();
  if (gain == complex{}) throw InvalidArgument("correlation gain must be nonzero");
  CorrelationModel model;
  model.kind = CorrelationKind::delta;
  model.pixels = grid.pixel_count();
  model.rows.resize(model.pixels);
  for (std::size_t s = 0; s < model.pixels; ++s) model.rows[s].push_back({s, gain});
  return model;
}

CorrelationModel gaussian_correlation(const ModeGrid& grid, double sigma, complex gain) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw InvalidArgument("gaussian sigma must be > 0");
  if (gain == complex{}) throw InvalidArgument("correlation gain must be nonzero");
  auto model = from_function(grid, CorrelationKind::gaussian, [&](int sx, int sy, int ix, int iy) {
    const double d2 = static_cast<double>((sx - ix) * (sx - ix) + (sy - iy) * (sy - iy));
    return gain * std::exp(-d2 / (2.0 * sigma * sigma));
  });
  model.sigma = sigma;
  return model;
}

CorrelationModel sinc_correlation(const ModeGrid& grid, const spdc::PhaseMatchingParams& params, double dq) {
  params.validate();
  if (!std::isfinite(dq)) throw InvalidArgument("momentum step must be finite");
  return from_function(grid, CorrelationKind::sinc_product, [&](int sx, int sy, int ix, int iy) {
    spdc::PhaseMatchingParams p = params;
    p.delta_k[0] += (sx - ix) * dq;
    p.delta_k[1] += (sy - iy) * dq;
    return spdc::c2_sinc_model(p);
  });
}

CorrelationModel correlation_from_table(const std::vector<std::vector<complex>>& table) {
  CorrelationModel model;
  model.kind = CorrelationKind::table;
  model.pixels = table.size();
  model.rows.resize(model.pixels);
  for (std::size_t s = 0; s < table.size(); ++s) {
    if (table[s].size() != table.size()) throw InvalidArgument("correlation table must be square");
    for (std::size_t i = 0; i < table[s].size(); ++i)
      if (table[s][i] != complex{}) model.rows[s].push_back({i, table[s][i]});
  }
  model.validate();
  return model;
}

std::string to_string(PortPair ports) {
  switch (ports) {
    case PortPair::bb: return "bb";
    case PortPair::bprime_bprime: return "b'b'";
    case PortPair::b_bprime: return "bb'";
  }
  return "?";
}

PortPair port_pair_from_string(const std::string& name) {
  if (name == "bb") return PortPair::bb;
  if (name == "b'b'" || name == "bpbp") return PortPair::bprime_bprime;
  if (name == "bb'" || name == "bbp") return PortPair::b_bprime;
  throw InvalidArgument("unknown port pair '" + name + "' (expected bb, b'b' or bb')");
}

PairRate pair_rate(const CorrelationModel& corr, const std::vector<double>& alpha, std::size_t p, std::size_t q,
                   PortPair ports, double signal_phase_p, double signal_phase_q) {
  const auto& row_p = corr.rows[p];
  const auto& row_q = corr.rows[q];

  // Dense copies over the union of both supports.
  std::vector<std::size_t> support;
  support.reserve(row_p.size() + row_q.size());
  for (const auto& e : row_p) support.push_back(e.idler);
  for (const auto& e : row_q) support.push_back(e.idler);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  const std::size_t n = support.size();
  std::vector<complex> x(n), y(n), w(n);
  auto slot = [&](std::size_t idler) {
    return static_cast<std::size_t>(std::lower_bound(support.begin(), support.end(), idler) - support.begin());
  };
  for (const auto& e : row_p) x[slot(e.idler)] = e.value;
  for (const auto& e : row_q) y[slot(e.idler)] = e.value;
  for (std::size_t i = 0; i < n; ++i) w[i] = std::polar(1.0, -alpha[support[i]]);

  double nx = 0.0;
  double ny = 0.0;
  complex overlap{};
  for (std::size_t i = 0; i < n; ++i) {
    nx += std::norm(x[i]);
    ny += std::norm(y[i]);
    overlap += x[i] * std::conj(y[i]);
  }
  // sum_ij |x_i y_j + x_j y_i|^2 and sum_ij |x_i y_j - x_j y_i|^2.
  const double sym = 2.0 * nx * ny + 2.0 * std::norm(overlap);
  const double antisym = 2.0 * nx * ny - 2.0 * std::norm(overlap);

  // Joint emission: one pair from each crystal, either crystal's signal photon
  // reaching either pixel. k1 weights (crystal 1 at p, crystal 2 at q).
  complex k1 = std::polar(1.0, signal_phase_q);
  complex k2 = std::polar(1.0, signal_phase_p);
  if (ports == PortPair::b_bprime) k2 = -k2;
  double joint = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const complex term = x[i] * y[j] * (k1 * w[j] + k2 * w[i]) + x[j] * y[i] * (k2 * w[j] + k1 * w[i]);
      joint += std::norm(term);
    }

  // One single-crystal term per crystal.
  const double individual = 2.0 * sym;
  const double background = ports == PortPair::b_bprime ? 2.0 * sym + 2.0 * antisym : 4.0 * sym;
  return {individual + joint, background};
}

namespace {

CoincidenceMap make_map(const ModeGrid& grid, PortPair ports) {
  CoincidenceMap map;
  map.grid = grid;
  map.ports = ports;
  map.values.assign(grid.pixel_count() * grid.pixel_count(), 0.0);
  return map;
}

}  // namespace

CoincidenceMap coincidence_map(const PhaseObject& object, const CorrelationModel& corr, PortPair ports,
                               const MapOptions& options) {
  object.validate();
  corr.validate();
  const std::size_t n = object.grid.pixel_count();
  if (corr.pixels != n) throw InvalidArgument("correlation table does not match the object grid");
  if (corr.kind != CorrelationKind::delta && n > options.max_dense_pixels)
    throw InvalidArgument("non-delta correlation on " + std::to_string(n) + " pixels exceeds the limit of " +
                          std::to_string(options.max_dense_pixels));
  if (!options.signal_phase.empty() && options.signal_phase.size() != n)
    throw InvalidArgument("signal phase field does not match the grid");

  CoincidenceMap map = make_map(object.grid, ports);
  auto phase = [&](std::size_t p) { return options.signal_phase.empty() ? 0.0 : options.signal_phase[p]; };
  auto fill_rows = [&](std::size_t first, std::size_t stride) {
    for (std::size_t p = first; p < n; p += stride)
      for (std::size_t q = p; q < n; ++q) {
        const auto r = pair_rate(corr, object.alpha, p, q, ports, phase(p), phase(q));
        const double value = r.rate / r.background;
        map.at(p, q) = value;
        map.at(q, p) = value;
      }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, options.threads));
  if (threads == 1) {
    fill_rows(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) workers.emplace_back(fill_rows, t, threads);
  }
  return map;
}

CoincidenceMap perfect_correlation_map(const PhaseObject& object) {
  object.validate();
  const std::size_t n = object.grid.pixel_count();
  CoincidenceMap map = make_map(object.grid, PortPair::bb);
  map.model = "perfect_correlation";
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) map.at(p, q) = 1.0 + 0.5 * std::cos(object.alpha[p] - object.alpha[q]);
  return map;
}

CoincidenceMap herzog_map(const PhaseObject& object, const CorrelationModel& corr, const MapOptions& options) {
  PhaseObject doubled = object;
  for (double& a : doubled.alpha) a *= 2.0;
  CoincidenceMap map = coincidence_map(doubled, corr, PortPair::bb, options);
  map.model = "herzog";
  return map;
}

CoincidenceMap add_shot_noise(const CoincidenceMap& map, std::int64_t total_counts, std::uint64_t seed) {
  if (total_counts <= 0) throw InvalidArgument("total_counts must be > 0");
  const std::size_t n = map.pixels();
  double sum = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p; q < n; ++q) {
      if (!(map.at(p, q) >= 0)) throw InvalidArgument("coincidence map has negative or non-finite values");
      sum += map.at(p, q);
    }
  if (!(sum > 0)) throw InvalidArgument("coincidence map is all zero");

  CoincidenceMap noisy = map;
  noisy.seed = seed;
  Engine engine(derive_seed(seed, Stream::shot_noise));
  const double counts_per_unit = static_cast<double>(total_counts) / sum;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p; q < n; ++q) {
      const double mean = map.at(p, q) * counts_per_unit;
      double counts = 0.0;
      if (mean > 0) counts = static_cast<double>(std::poisson_distribution<std::int64_t>(mean)(engine));
      const double value = counts / counts_per_unit;
      noisy.at(p, q) = value;
      noisy.at(q, p) = value;
    }
  return noisy;
}

double dominant_fringe_frequency(const std::vector<double>& profile) {
  const std::size_t n = profile.size();
  if (n < 4) throw InvalidArgument("fringe profile needs at least 4 samples");
  double mean = 0.0;
  for (double v : profile) mean += v;
  mean /= static_cast<double>(n);
  std::size_t best = 1;
  double best_power = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    complex acc{};
    for (std::size_t j = 0; j < n; ++j)
      acc += (profile[j] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j) / n);
    if (std::norm(acc) > best_power * (1.0 + 1e-12)) {
      best_power = std::norm(acc);
      best = k;
    }
  }
  return static_cast<double>(best) / static_cast<double>(n);
}

}  // namespace psipi::imaging
