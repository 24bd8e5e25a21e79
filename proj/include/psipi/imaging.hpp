#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psipi/fock.hpp"
#include "psipi/spdc.hpp"

/// Multimode coincidence imaging: pixel-pair coincidence maps of a phase
/// object placed in the undetected idler beam.
namespace psipi::imaging {

using fock::complex;

/// Fourier-plane pixel grid shared by camera and object (unit magnification
/// by default). Pixel p = y * nx + x.
struct ModeGrid {
  int dimension{1};
  int nx{64};
  int ny{1};
  double pixel_pitch{10e-6};  // m
  double magnification{1.0};

  void validate() const;
  std::size_t pixel_count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  /// Centered object-plane coordinate of column x (m).
  double x_coordinate(int x) const;
  double y_coordinate(int y) const;

  friend bool operator==(const ModeGrid&, const ModeGrid&) = default;
};

ModeGrid grid_1d(int n, double pixel_pitch = 10e-6);
ModeGrid grid_2d(int nx, int ny, double pixel_pitch = 10e-6);

struct PhaseObject {
  ModeGrid grid;
  std::vector<double> alpha;  // rad, row-major

  void validate() const;
};

enum class ObjectKind : std::uint8_t { flat, quadratic1d, cubic2d, linear_ramp, from_file };

std::string to_string(ObjectKind kind);
ObjectKind object_kind_from_string(const std::string& name);

/// Coordinates are normalized to u = x / x_max in [-1, 1] over the grid:
/// quadratic1d gives scale * u^2, cubic2d scale * (u^3 + v^3), linear_ramp
/// scale * (x index) (rad per pixel along x).
PhaseObject make_phase_object(ObjectKind kind, double scale, const ModeGrid& grid, const std::string& path = {});

enum class CorrelationKind : std::uint8_t { delta, gaussian, sinc_product, table };

std::string to_string(CorrelationKind kind);
CorrelationKind correlation_kind_from_string(const std::string& name);

/// Joint signal-idler amplitude C2(k_S, k_I) between signal pixel (row) and
/// idler pixel (column), stored as sparse rows.
struct CorrelationModel {
  struct Entry {
    std::size_t idler;
    complex value;
  };

  CorrelationKind kind{CorrelationKind::delta};
  double sigma{0.0};  // Gaussian width, pixel units
  std::size_t pixels{0};
  std::vector<std::vector<Entry>> rows;

  /// Dense C2 table (tests and small grids).
  std::vector<std::vector<complex>> dense() const;
  void validate() const;
};

CorrelationModel delta_correlation(const ModeGrid& grid, complex gain = 0.1);
/// C2 = gain * exp(-d^2 / (2 sigma^2)), d the index distance between pixels.
CorrelationModel gaussian_correlation(const ModeGrid& grid, double sigma, complex gain = 0.1);
/// Sinc-product amplitude with transverse mismatch (index difference) * dq
/// along x (and y); other parameters taken from `params`.
CorrelationModel sinc_correlation(const ModeGrid& grid, const spdc::PhaseMatchingParams& params, double dq);
CorrelationModel correlation_from_table(const std::vector<std::vector<complex>>& table);

enum class PortPair : std::uint8_t { bb, bprime_bprime, b_bprime };

std::string to_string(PortPair ports);
PortPair port_pair_from_string(const std::string& name);

struct CoincidenceMap {
  ModeGrid grid;
  PortPair ports{PortPair::bb};
  std::vector<double> values;  // pixel_count x pixel_count, row-major, symmetric
  double lambda_signal{810e-9};
  double lambda_idler{1550e-9};
  std::string normalization{"background"};
  std::string model{"coincidence"};
  std::optional<std::uint64_t> seed;

  std::size_t pixels() const { return grid.pixel_count(); }
  double at(std::size_t p, std::size_t q) const { return values[p * pixels() + q]; }
  double& at(std::size_t p, std::size_t q) { return values[p * pixels() + q]; }
};

struct MapOptions {
  /// Optional residual signal propagation phase per camera pixel (rad).
  std::vector<double> signal_phase;
  /// Grids larger than this are rejected for non-delta correlations.
  std::size_t max_dense_pixels{64};
  int threads{1};
};

/// Background-normalized multimode coincidence rate over every pixel pair.
CoincidenceMap coincidence_map(const PhaseObject& object, const CorrelationModel& corr, PortPair ports,
                               const MapOptions& options = {});

/// 1 + cos(alpha(r) - alpha(r')) / 2.
CoincidenceMap perfect_correlation_map(const PhaseObject& object);

/// Single-crystal double-pass variant: the object phase enters twice.
CoincidenceMap herzog_map(const PhaseObject& object, const CorrelationModel& corr, const MapOptions& options = {});

/// Poisson realization at `total_counts` expected counts over unordered pixel
/// pairs, returned in rate units. Deterministic per seed.
CoincidenceMap add_shot_noise(const CoincidenceMap& map, std::int64_t total_counts, std::uint64_t seed);

/// Rate of one pixel pair from explicit sums of the source amplitudes (no
/// normalization): P1 + P2 + joint-emission term.
struct PairRate {
  double rate;
  double background;
};
PairRate pair_rate(const CorrelationModel& corr, const std::vector<double>& alpha, std::size_t p, std::size_t q,
                   PortPair ports, double signal_phase_p = 0.0, double signal_phase_q = 0.0);

/// Frequency (cycles per sample) of the largest non-DC DFT bin of a profile.
double dominant_fringe_frequency(const std::vector<double>& profile);

}  // namespace psipi::imaging
