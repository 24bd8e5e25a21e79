#include "psipi/recover.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

namespace psipi::recover {

using imaging::CoincidenceMap;
using imaging::ModeGrid;
using imaging::PortPair;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double angle) {
  double w = std::remainder(angle, kTwoPi);
  if (w <= -std::numbers::pi) w += kTwoPi;
  return w;
}

std::size_t default_reference(const ModeGrid& grid) {
  return static_cast<std::size_t>(grid.ny / 2) * grid.nx + static_cast<std::size_t>(grid.nx / 2);
}

namespace {

void check_map(const CoincidenceMap& map) {
  map.grid.validate();
  const std::size_t n = map.pixels();
  if (map.values.size() != n * n) throw InvalidArgument("coincidence map size does not match its grid");
  if (map.ports == PortPair::b_bprime)
    throw InvalidArgument("phase retrieval expects a (b,b) or (b',b') map");
  for (double v : map.values)
    if (!std::isfinite(v)) throw InvalidArgument("coincidence map contains non-finite values");
}

/// M = 2 (map - 1), symmetrized, unit diagonal.
Eigen::MatrixXd cosine_matrix(const CoincidenceMap& map) {
  const auto n = static_cast<Eigen::Index>(map.pixels());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q)
      m(p, q) = p == q ? 1.0 : (map.at(p, q) + map.at(q, p)) - 2.0;
  return m;
}

double cos_entry(const CoincidenceMap& map, std::size_t p, std::size_t q) {
  if (p == q) return 1.0;
  return std::clamp(2.0 * (map.at(p, q) - 1.0), -1.0, 1.0);
}

/// Flips the sign so the first nonzero discrete gradient (x first, then y) is positive.
void fix_sign(const ModeGrid& grid, std::vector<double>& alpha) {
  auto flip_if = [&](double gradient) {
    if (gradient < 0)
      for (double& a : alpha) a = wrap(-a);
  };
  for (int y = 0; y < grid.ny; ++y)
    for (int x = 0; x + 1 < grid.nx; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * grid.nx + x;
      const double g = wrap(alpha[p + 1] - alpha[p]);
      if (std::abs(g) > 1e-9) return flip_if(g);
    }
  for (int y = 0; y + 1 < grid.ny; ++y)
    for (int x = 0; x < grid.nx; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * grid.nx + x;
      const double g = wrap(alpha[p + grid.nx] - alpha[p]);
      if (std::abs(g) > 1e-9) return flip_if(g);
    }
}

}  // namespace

WrappedField rank2_phase_factorization(const CoincidenceMap& map, const FactorizationOptions& options) {
  check_map(map);
  const std::size_t n = map.pixels();
  const std::size_t r0 = options.reference.value_or(default_reference(map.grid));
  if (r0 >= n) throw InvalidArgument("reference pixel outside the grid");

  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      if (p != q) {
        lo = std::min(lo, map.at(p, q));
        hi = std::max(hi, map.at(p, q));
      }
  if (hi - lo < 1e-12) throw NumericalError("coincidence map is constant: object phase is unobservable");

  const Eigen::MatrixXd m = cosine_matrix(map);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition of the cosine matrix failed");
  const auto& evals = solver.eigenvalues();
  const auto& evecs = solver.eigenvectors();
  const auto k = static_cast<Eigen::Index>(n);
  const double l1 = evals(k - 1);
  const double l2 = evals(k - 2);
  const double l3 = k >= 3 ? std::max(evals(k - 3), 0.0) : 0.0;
  if (!(l1 > 0) || l2 < 1e-12 * l1)
    throw NumericalError("cosine matrix has rank < 2: object phase is unobservable");

  const Eigen::VectorXd c = std::sqrt(l1) * evecs.col(k - 1);
  const Eigen::VectorXd s = std::sqrt(l2) * evecs.col(k - 2);

  WrappedField out;
  out.grid = map.grid;
  out.reference = r0;
  out.rank_ratio = l3 / l1;
  out.degraded = out.rank_ratio > options.rank_tolerance;
  out.values.resize(n);
  const double theta0 = std::atan2(s(static_cast<Eigen::Index>(r0)), c(static_cast<Eigen::Index>(r0)));
  for (std::size_t p = 0; p < n; ++p) {
    const auto i = static_cast<Eigen::Index>(p);
    out.values[p] = wrap(std::atan2(s(i), c(i)) - theta0);
  }
  out.values[r0] = 0.0;
  fix_sign(map.grid, out.values);

  out.quality.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    double sum = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      const double d = m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) -
                       std::cos(out.values[p] - out.values[q]);
      sum += d * d;
    }
    out.quality[p] = 1.0 / (std::sqrt(sum / static_cast<double>(n - 1)) + 1e-12);
  }
  return out;
}

std::size_t choose_second_reference(const CoincidenceMap& map, std::size_t r0) {
  check_map(map);
  if (r0 >= map.pixels()) throw InvalidArgument("reference pixel outside the grid");
  std::size_t best = r0;
  double best_abs = INFINITY;
  for (std::size_t q = 0; q < map.pixels(); ++q) {
    if (q == r0) continue;
    const double a = std::abs(cos_entry(map, q, r0));
    if (a < best_abs) {
      best_abs = a;
      best = q;
    }
  }
  return best;
}

WrappedField quadrature_two_reference(const CoincidenceMap& map, std::size_t r0, std::size_t r1) {
  check_map(map);
  const std::size_t n = map.pixels();
  if (r0 >= n || r1 >= n) throw InvalidArgument("reference pixel outside the grid");
  if (r0 == r1) throw InvalidArgument("reference pixels must differ");
  const double cos_d = cos_entry(map, r0, r1);
  const double d = std::acos(cos_d);
  const double sin_d = std::sin(d);
  if (sin_d < 1e-6)
    throw InvalidArgument("reference pair is degenerate (map value near 0.5 or 1.5); choose different references");

  WrappedField out;
  out.grid = map.grid;
  out.reference = r0;
  out.values.resize(n);
  out.quality.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    // cos(a) from r0; cos(a - d) = cos a cos d + sin a sin d from r1.
    const double c0 = cos_entry(map, r, r0);
    const double c1 = cos_entry(map, r, r1);
    const double s0 = (c1 - c0 * cos_d) / sin_d;
    out.values[r] = r == r0 ? 0.0 : wrap(std::atan2(s0, c0));
    out.quality[r] = 1.0 / (std::abs(c0 * c0 + s0 * s0 - 1.0) + 1e-12);
  }
  out.values[r1] = d;
  return out;
}

namespace {

struct Edge {
  std::size_t a;
  std::size_t b;
  double reliability;
};

std::vector<double> pixel_reliability(const ModeGrid& grid, const std::vector<double>& phi) {
  const int nx = grid.nx;
  const int ny = grid.ny;
  std::vector<double> rel(phi.size(), 0.0);
  auto at = [&](int x, int y) { return phi[static_cast<std::size_t>(y) * nx + x]; };
  auto second = [&](int x0, int y0, int x1, int y1, int x2, int y2) {
    return wrap(at(x0, y0) - at(x1, y1)) - wrap(at(x1, y1) - at(x2, y2));
  };
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      double sum = 0.0;
      int terms = 0;
      if (x > 0 && x + 1 < nx) {
        sum += std::pow(second(x - 1, y, x, y, x + 1, y), 2);
        ++terms;
      }
      if (y > 0 && y + 1 < ny) {
        sum += std::pow(second(x, y - 1, x, y, x, y + 1), 2);
        ++terms;
        if (x > 0 && x + 1 < nx) {
          sum += std::pow(second(x - 1, y - 1, x, y, x + 1, y + 1), 2);
          sum += std::pow(second(x - 1, y + 1, x, y, x + 1, y - 1), 2);
          terms += 2;
        }
      }
      // Border pixels without a full stencil are least reliable.
      rel[static_cast<std::size_t>(y) * nx + x] = terms == 0 ? 0.0 : 1.0 / (std::sqrt(sum) + 1e-12);
    }
  return rel;
}

}  // namespace

PhaseField unwrap_2d(const WrappedField& wrapped, int* merges) {
  wrapped.grid.validate();
  const std::size_t n = wrapped.grid.pixel_count();
  if (wrapped.values.size() != n) throw InvalidArgument("wrapped field does not match its grid");
  const auto& phi = wrapped.values;
  const auto nx = static_cast<std::size_t>(wrapped.grid.nx);
  const auto ny = static_cast<std::size_t>(wrapped.grid.ny);
  const auto rel = pixel_reliability(wrapped.grid, phi);

  std::vector<Edge> edges;
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x + 1 < nx; ++x) {
      const std::size_t p = y * nx + x;
      edges.push_back({p, p + 1, rel[p] + rel[p + 1]});
    }
  for (std::size_t y = 0; y + 1 < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t p = y * nx + x;
      edges.push_back({p, p + nx, rel[p] + rel[p + nx]});
    }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& l, const Edge& r) { return l.reliability > r.reliability; });

  // Groups as explicit member lists; the smaller group is shifted and absorbed.
  std::vector<std::size_t> group(n);
  std::iota(group.begin(), group.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t p = 0; p < n; ++p) members[p] = {p};
  std::vector<long long> k(n, 0);
  int merged = 0;
  for (const auto& e : edges) {
    std::size_t ga = group[e.a];
    std::size_t gb = group[e.b];
    if (ga == gb) continue;
    // Shift so that unwrapped(b) - unwrapped(a) equals the wrapped difference.
    const double ua = phi[e.a] + kTwoPi * static_cast<double>(k[e.a]);
    const double ub = phi[e.b] + kTwoPi * static_cast<double>(k[e.b]);
    long long shift = std::llround((ua + wrap(phi[e.b] - phi[e.a]) - ub) / kTwoPi);
    if (members[ga].size() < members[gb].size()) {
      std::swap(ga, gb);
      shift = -shift;
    }
    for (std::size_t p : members[gb]) {
      k[p] += shift;
      group[p] = ga;
    }
    members[ga].insert(members[ga].end(), members[gb].begin(), members[gb].end());
    members[gb].clear();
    members[gb].shrink_to_fit();
    ++merged;
  }
  if (merges) *merges = merged;

  PhaseField out{wrapped.grid, std::vector<double>(n)};
  const long long k0 = k[0];
  for (std::size_t p = 0; p < n; ++p) out.values[p] = phi[p] + kTwoPi * static_cast<double>(k[p] - k0);
  return out;
}

ReconstructionReport align_and_rms(const PhaseField& reconstructed, const PhaseField& truth) {
  if (!(reconstructed.grid.nx == truth.grid.nx && reconstructed.grid.ny == truth.grid.ny &&
        reconstructed.grid.dimension == truth.grid.dimension) ||
      reconstructed.values.size() != truth.values.size())
    throw InvalidArgument("reconstruction and truth have different shapes");
  const std::size_t n = truth.values.size();
  if (n == 0) throw InvalidArgument("empty phase field");

  ReconstructionReport best;
  best.rms_error = INFINITY;
  best.iterations = 2;
  best.pixels_processed = n;
  for (int sigma : {1, -1}) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += truth.values[i] - sigma * reconstructed.values[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sigma * reconstructed.values[i] + mean - truth.values[i];
      ss += d * d;
    }
    const double rms = std::sqrt(ss / static_cast<double>(n));
    if (rms < best.rms_error) {
      best.rms_error = rms;
      best.offset_applied = mean;
      best.sign_flipped = sigma < 0;
    }
  }
  return best;
}

PhaseField apply_gauge(const PhaseField& reconstructed, const ReconstructionReport& report) {
  PhaseField out = reconstructed;
  for (double& v : out.values) v = (report.sign_flipped ? -v : v) + report.offset_applied;
  return out;
}

io::json report_to_json(const ReconstructionReport& report) {
  return io::json{{"rms_error_rad", report.rms_error},
                  {"offset_applied_rad", report.offset_applied},
                  {"sign_flipped", report.sign_flipped},
                  {"iterations", report.iterations},
                  {"pixels_processed", report.pixels_processed}};
}

}  // namespace psipi::recover
