#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "psipi/imaging.hpp"
#include "psipi/io.hpp"

/// Phase retrieval from coincidence maps and 2D phase unwrapping.
namespace psipi::recover {

using PhaseField = io::GridField;

struct WrappedField {
  imaging::ModeGrid grid;
  std::vector<double> values;   // (-pi, pi]
  std::vector<double> quality;  // >= 0, larger is better
  std::size_t reference{0};
  /// lambda_3 / lambda_1 of the cosine matrix (rank-2 method only).
  double rank_ratio{0.0};
  /// Set when rank_ratio exceeds the tolerance.
  bool degraded{false};
};

struct ReconstructionReport {
  double rms_error{0.0};
  double offset_applied{0.0};
  bool sign_flipped{false};
  int iterations{0};
  std::size_t pixels_processed{0};
};

/// Wraps into (-pi, pi].
double wrap(double angle);

/// Pixel (nx / 2, ny / 2).
std::size_t default_reference(const imaging::ModeGrid& grid);

struct FactorizationOptions {
  std::optional<std::size_t> reference;
  double rank_tolerance{1e-6};
};

/// Eigen-factorizes M = 2 (map - 1) = cos(alpha_r - alpha_r') into its two
/// leading components. Output satisfies alpha(reference) = 0 and has a
/// positive first nonzero gradient along x.
WrappedField rank2_phase_factorization(const imaging::CoincidenceMap& map, const FactorizationOptions& options = {});

/// Reference r1 with cos(alpha_r1 - alpha_r0) closest to zero.
std::size_t choose_second_reference(const imaging::CoincidenceMap& map, std::size_t r0);

/// Per-pixel inversion from two reference pixels. Sign gauge: alpha(r1) > alpha(r0) = 0.
WrappedField quadrature_two_reference(const imaging::CoincidenceMap& map, std::size_t r0, std::size_t r1);

/// Reliability-sorted union-find unwrapping. Pixel 0 keeps its wrapped value.
PhaseField unwrap_2d(const WrappedField& wrapped, int* merges = nullptr);

/// Minimizes RMS(sigma * rec + c - truth) over sigma = +-1 and real c.
ReconstructionReport align_and_rms(const PhaseField& reconstructed, const PhaseField& truth);

/// Applies the gauge found by align_and_rms.
PhaseField apply_gauge(const PhaseField& reconstructed, const ReconstructionReport& report);

io::json report_to_json(const ReconstructionReport& report);

}  // namespace psipi::recover
