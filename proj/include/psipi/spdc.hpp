#pragma once

#include <array>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "psipi/fock.hpp"

/// Two independent down-conversion sources to four-photon order, detection
/// filtering and idler path identity.
namespace psipi::spdc {

using fock::complex;
using fock::ModeId;
using fock::TaggedState;

struct ModePair {
  ModeId signal;
  ModeId idler;
  complex weight{1.0};
};

struct SourceSpec {
  int source_id{1};
  complex gain{0.1};
  /// 0 for source 1 (reference pump), 1 for source 2.
  int pump_exponent_per_pair{0};
  std::vector<ModePair> mode_pairs;
};

/// Phase-matching inputs of the sinc-product joint amplitude. `prefactor`
/// absorbs susceptibility, pump amplitude, field normalizations and the
/// volume-time factor.
struct PhaseMatchingParams {
  complex prefactor{1.0};
  double delta_omega{0.0};        // rad/s
  double tau{1.0};                // s
  std::array<double, 3> delta_k{};  // rad/m
  std::array<double, 3> crystal_lengths{1.0, 1.0, 1.0};  // m
  std::array<double, 3> crystal_center{};  // m

  void validate() const;
};

/// Rewrites source-2 idler modes onto source-1 idler modes with a phase.
struct PathIdentityMap {
  struct Target {
    ModeId idler;
    double phase{0.0};  // rad; each rewritten photon picks up e^{-i phase}
  };
  std::map<ModeId, Target> map;

  void validate() const;
};

double sinc(double x);

complex c2_sinc_model(const PhaseMatchingParams& params);
complex c4_from_c2(complex c2_a, complex c2_b);

struct BuildOptions {
  int max_photons{4};
  /// Sources of unequal pump intensity are rejected unless this is set.
  bool allow_unequal_gains{false};
};

/// U2 U1 |vac> expanded through `max_photons` total photons. Each
/// single-pair emission of source 2 raises the pump exponent by one.
TaggedState build_two_source_state(const SourceSpec& src1, const SourceSpec& src2,
                                   fock::Statistics statistics = fock::Statistics::boson,
                                   const BuildOptions& options = {});

/// Modes seen by detector A and detector B of one coincidence channel.
struct DetectionChannel {
  std::vector<ModeId> detector_a;
  std::vector<ModeId> detector_b;
};

/// Keeps the terms with a nonzero matrix element under at least one channel's
/// pair-detection operator (one photon removed from each detector's modes).
TaggedState filter_detectable(const TaggedState& state, const std::vector<DetectionChannel>& channels);

TaggedState apply_path_identity(const TaggedState& state, const PathIdentityMap& identity);

/// Sources of the two-path geometry: source 1 emits into (u,u') or (v,v'),
/// source 2 into (c,c') or (d,d'); all weights 1.
std::pair<SourceSpec, SourceSpec> two_path_sources(complex gain = 0.1);

/// c' -> u' with phase gamma_i, d' -> v' with phase gamma_i_prime.
PathIdentityMap two_path_identity(double gamma_i, double gamma_i_prime);

/// Channel (h, g): h sees {u, c}, g sees {v, d}.
DetectionChannel two_path_hg_channel();

}  // namespace psipi::spdc
