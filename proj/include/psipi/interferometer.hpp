#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "psipi/fock.hpp"

/// Beamsplitter detection operators and coincidence rates.
namespace psipi::interferometer {

using fock::complex;
using fock::ModeId;
using fock::TaggedState;

enum class Port : std::uint8_t { h, h_prime, g, g_prime, b, b_prime };

std::string to_string(Port port);

/// a(port) = sum coeff * a(mode) over exactly two input modes.
struct DetectorOp {
  Port port{Port::h};
  std::vector<std::pair<ModeId, complex>> composition;

  void validate() const;
};

/// Output `port` of a beamsplitter combining `from_source1` and `from_source2`
/// with relative phase phi: unprimed ports are (1, i e^{i phi}) / sqrt2,
/// primed ports (i, e^{i phi}) / sqrt2.
DetectorOp beamsplitter_output(Port port, const ModeId& from_source1, const ModeId& from_source2, double phi);

/// h (u,c; phi_s) and g (v,d; phi_s_prime) of the two-path geometry, or their
/// primed partners.
DetectorOp two_path_detector(Port port, double phi_s, double phi_s_prime);

enum class RateMethod : std::uint8_t { analytic, monte_carlo, density_matrix };

struct RateResult {
  /// Rate in units of the incoherent background (see `background`).
  double rate{0.0};
  double standard_error{0.0};
  RateMethod method{RateMethod::analytic};
  /// Unnormalized <psi| a+_A a+_B a_B a_A |psi>.
  double raw{0.0};
  /// Rate with every (ket, pump exponent) term of the state treated as
  /// mutually incoherent. Zero when the state has no detectable term.
  double background{0.0};
};

/// Applies a(op) = sum coeff * a(mode).
TaggedState apply_detector(const TaggedState& state, const DetectorOp& op);

/// Exact pump-phase-averaged P_AB = ||a_B a_A psi||^2, averaged via tag contraction.
RateResult coincidence_rate(const TaggedState& state, const DetectorOp& op_a, const DetectorOp& op_b);

/// Same quantity estimated by sampling the pump phase uniformly on [0, 2pi).
RateResult coincidence_rate_mc(const TaggedState& state, const DetectorOp& op_a, const DetectorOp& op_b,
                               std::int64_t n_samples, std::uint64_t seed);

/// tr{rho a+_A a+_B a_B a_A} for rho = sum_i |psi_i><psi_i| over independent
/// emission branches, evaluated with explicit sparse matrices on a truncated
/// Fock basis.
RateResult density_matrix_rate(const std::vector<TaggedState>& branches, const DetectorOp& op_a,
                               const DetectorOp& op_b, int max_photons = 4);

/// Closed form 1 + cos(phi_s' - phi_s + gamma_i - gamma_i') / 2.
double two_mode_psipi_rate(double phi_s, double phi_s_prime, double gamma_i, double gamma_i_prime);

/// Closed form 1 - cos(phi_s + phi_s').
double standard_two_photon_rate(double phi_s, double phi_s_prime);

/// (|S_u S_v>_1 + |S_c S_d>_2) / sqrt2, both sources coherent (exponent 0).
TaggedState standard_two_photon_state(fock::Statistics statistics = fock::Statistics::boson);

/// Four-photon state of the two-path geometry after path identity, built from
/// first principles (source expansion, detection filter, path identity).
TaggedState psipi_two_path_state(double gamma_i, double gamma_i_prime,
                                 fock::Statistics statistics = fock::Statistics::boson, bool filter = true);

/// Brute-force P_hg for the two-path geometry, normalized to the background.
double psipi_two_path_rate(double phi_s, double phi_s_prime, double gamma_i, double gamma_i_prime,
                           fock::Statistics statistics = fock::Statistics::boson);

/// (max - min) / (max + min).
double visibility(const std::vector<double>& fringe);

enum class NoiseLaw : std::uint8_t { uniform, gaussian };

struct FrameNoiseOptions {
  NoiseLaw law{NoiseLaw::uniform};
  int scan_points{32};
  /// Subtract the contribution of individual (single-source) emissions from
  /// the phase-subtractive fringe.
  bool subtract_background{false};
};

struct FrameNoiseResult {
  double visibility_psipi{0.0};
  double visibility_standard{0.0};
  std::vector<double> fringe_psipi;
  std::vector<double> fringe_standard;
};

/// Accumulates both fringes over `n_frames` frames; each frame applies one
/// common propagation-phase offset delta (uniform on [-A, A], or normal with
/// standard deviation A) to both detected paths. Frame seeds are derived from
/// (seed, frame index).
FrameNoiseResult frame_noise_experiment(double noise_amplitude, std::int64_t n_frames, std::uint64_t seed,
                                        const FrameNoiseOptions& options = {});

/// Fraction of the normalized PSIPI rate carried by single-source emissions,
/// computed from the Fock state (phase independent).
double psipi_individual_emission_background();

}  // namespace psipi::interferometer
