#include "psipi/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "psipi/fock_dense.hpp"
#include "psipi/rng.hpp"
#include "psipi/spdc.hpp"

namespace psipi::interferometer {

using fock::OccupationKet;
using fock::Species;
using fock::Statistics;

namespace {
constexpr complex kI{0.0, 1.0};
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

std::string to_string(Port port) {
  switch (port) {
    case Port::h: return "h";
    case Port::h_prime: return "h'";
    case Port::g: return "g";
    case Port::g_prime: return "g'";
    case Port::b: return "b";
    case Port::b_prime: return "b'";
  }
  return "?";
}

void DetectorOp::validate() const {
  if (composition.size() != 2) throw InvalidArgument("detector " + to_string(port) + " must combine exactly two modes");
  for (const auto& [mode, coeff] : composition) {
    if (mode.species != Species::signal)
      throw InvalidArgument("detector " + to_string(port) + " sees signal modes only, got " + fock::to_string(mode));
    if (std::abs(std::abs(coeff) - 1.0 / std::numbers::sqrt2) > 1e-12)
      throw InvalidArgument("detector " + to_string(port) + " coefficients must have magnitude 1/sqrt2");
  }
}

DetectorOp beamsplitter_output(Port port, const ModeId& from_source1, const ModeId& from_source2, double phi) {
  const double r = 1.0 / std::numbers::sqrt2;
  const bool primed = port == Port::h_prime || port == Port::g_prime || port == Port::b_prime;
  const complex c1 = primed ? kI * r : complex{r};
  const complex c2 = primed ? std::polar(r, phi) : kI * std::polar(r, phi);
  return {port, {{from_source1, c1}, {from_source2, c2}}};
}

DetectorOp two_path_detector(Port port, double phi_s, double phi_s_prime) {
  switch (port) {
    case Port::h:
    case Port::h_prime: return beamsplitter_output(port, fock::signal(1, "u"), fock::signal(2, "c"), phi_s);
    case Port::g:
    case Port::g_prime: return beamsplitter_output(port, fock::signal(1, "v"), fock::signal(2, "d"), phi_s_prime);
    default: throw InvalidArgument("two-path geometry has ports h, h', g, g' only");
  }
}

TaggedState apply_detector(const TaggedState& state, const DetectorOp& op) {
  TaggedState out(state.statistics());
  for (const auto& [mode, coeff] : op.composition)
    out = fock::add(out, fock::scale(fock::apply_annihilation(state, mode), coeff));
  return out;
}

namespace {

void check_compatible(const TaggedState& state, const DetectorOp& op_a, const DetectorOp& op_b) {
  op_a.validate();
  op_b.validate();
  if (state.is_zero()) return;
  for (const auto* op : {&op_a, &op_b}) {
    bool seen = false;
    for (const auto& [key, amp] : state.terms())
      for (const auto& [mode, coeff] : op->composition) seen = seen || key.ket.count(mode) > 0;
    if (!seen)
      throw InvalidArgument("modes of detector " + to_string(op->port) + " do not occur in the state (mode mismatch)");
  }
}

TaggedState detect_pair(const TaggedState& state, const DetectorOp& op_a, const DetectorOp& op_b) {
  return apply_detector(apply_detector(state, op_a), op_b);
}

double incoherent_background(const TaggedState& state, const DetectorOp& op_a, const DetectorOp& op_b) {
  double sum = 0.0;
  for (const auto& [key, amp] : state.terms()) {
    auto single = TaggedState::single_term(key.ket, amp, key.pump_exponent, state.statistics());
    sum += averaged_pairing(detect_pair(single, op_a, op_b), detect_pair(single, op_a, op_b)).real();
  }
  return sum;
}

RateResult finish(double raw, double background, double standard_error, RateMethod method) {
  RateResult r;
  r.raw = raw;
  r.background = background;
  r.method = method;
  r.rate = background > 0 ? raw / background : 0.0;
  r.standard_error = background > 0 ? standard_error / background : 0.0;
  return r;
}

}  // namespace

RateResult coincidence_rate(const TaggedState& state, const DetectorOp& op_a, const DetectorOp& op_b) {
  check_compatible(state, op_a, op_b);
  TaggedState detected = detect_pair(state, op_a, op_b);
  const double raw = fock::averaged_pairing(detected, detected).real();
  return finish(raw, incoherent_background(state, op_a, op_b), 0.0, RateMethod::analytic);
}

RateResult coincidence_rate_mc(const TaggedState& state, const DetectorOp& op_a, const DetectorOp& op_b,
                               std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 100) throw InvalidArgument("coincidence_rate_mc: n_samples must be >= 100");
  check_compatible(state, op_a, op_b);
  TaggedState detected = detect_pair(state, op_a, op_b);

  std::map<OccupationKet, std::vector<std::pair<int, complex>>> by_ket;
  for (const auto& [key, amp] : detected.terms()) by_ket[key.ket].emplace_back(key.pump_exponent, amp);

  Engine engine(derive_seed(seed, Stream::pump_phase));
  std::uniform_real_distribution<double> pump_phase(0.0, kTwoPi);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t n = 1; n <= n_samples; ++n) {
    const double theta = pump_phase(engine);
    double value = 0.0;
    for (const auto& [ket, parts] : by_ket) {
      complex amp{};
      for (const auto& [m, a] : parts) amp += a * std::polar(1.0, m * theta);
      value += std::norm(amp);
    }
    const double delta = value - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (value - mean);
  }
  const double variance = n_samples > 1 ? m2 / static_cast<double>(n_samples - 1) : 0.0;
  const double standard_error = std::sqrt(variance / static_cast<double>(n_samples));
  return finish(mean, incoherent_background(state, op_a, op_b), standard_error, RateMethod::monte_carlo);
}

RateResult density_matrix_rate(const std::vector<TaggedState>& branches, const DetectorOp& op_a,
                               const DetectorOp& op_b, int max_photons) {
  if (branches.empty()) throw InvalidArgument("density_matrix_rate: no branches");
  op_a.validate();
  op_b.validate();
  std::vector<TaggedState> stripped;
  stripped.reserve(branches.size());
  for (const auto& branch : branches) stripped.push_back(fock::evaluate_at_phase(branch, 0.0));

  std::vector<ModeId> detector_modes;
  for (const auto* op : {&op_a, &op_b})
    for (const auto& [mode, coeff] : op->composition) detector_modes.push_back(mode);
  const auto basis = fock::DenseFockBasis::covering(stripped, detector_modes, max_photons);

  auto field = [&](const DetectorOp& op) {
    fock::SparseOperator a(static_cast<Eigen::Index>(basis.dimension()), static_cast<Eigen::Index>(basis.dimension()));
    for (const auto& [mode, coeff] : op.composition) a += coeff * basis.annihilation(mode);
    return a;
  };
  const fock::SparseOperator ba = field(op_b) * field(op_a);
  const fock::SparseOperator observable = fock::SparseOperator(ba.adjoint()) * ba;

  std::vector<Eigen::Triplet<complex>> rho_entries;
  for (const auto& branch : stripped) {
    const fock::DenseVector v = basis.to_vector(branch);
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] != complex{}) support.push_back(i);
    for (auto j : support)
      for (auto k : support) rho_entries.emplace_back(static_cast<int>(j), static_cast<int>(k), v[j] * std::conj(v[k]));
  }
  fock::SparseOperator rho(observable.rows(), observable.cols());
  rho.setFromTriplets(rho_entries.begin(), rho_entries.end());

  complex trace{};
  complex diagonal_trace{};
  for (Eigen::Index col = 0; col < rho.outerSize(); ++col) {
    for (fock::SparseOperator::InnerIterator it(rho, col); it; ++it) {
      const complex o = observable.coeff(it.col(), it.row());
      trace += it.value() * o;
      if (it.row() == it.col()) diagonal_trace += it.value() * o;
    }
  }
  return finish(trace.real(), diagonal_trace.real(), 0.0, RateMethod::density_matrix);
}

double two_mode_psipi_rate(double phi_s, double phi_s_prime, double gamma_i, double gamma_i_prime) {
  return 1.0 + 0.5 * std::cos(phi_s_prime - phi_s + gamma_i - gamma_i_prime);
}

double standard_two_photon_rate(double phi_s, double phi_s_prime) { return 1.0 - std::cos(phi_s + phi_s_prime); }

TaggedState standard_two_photon_state(Statistics statistics) {
  const double r = 1.0 / std::numbers::sqrt2;
  TaggedState state(statistics);
  auto pair = [&](const ModeId& a, const ModeId& b) {
    auto s = fock::apply_creation(fock::apply_creation(TaggedState::vacuum(statistics), b), a);
    state = fock::add(state, fock::scale(s, r));
  };
  pair(fock::signal(1, "u"), fock::signal(1, "v"));
  pair(fock::signal(2, "c"), fock::signal(2, "d"));
  return state;
}

TaggedState psipi_two_path_state(double gamma_i, double gamma_i_prime, Statistics statistics, bool filter) {
  const auto [src1, src2] = spdc::two_path_sources();
  TaggedState state = spdc::build_two_source_state(src1, src2, statistics);
  if (filter) state = spdc::filter_detectable(state, {spdc::two_path_hg_channel()});
  return spdc::apply_path_identity(state, spdc::two_path_identity(gamma_i, gamma_i_prime));
}

double psipi_two_path_rate(double phi_s, double phi_s_prime, double gamma_i, double gamma_i_prime,
                           Statistics statistics) {
  const TaggedState state = psipi_two_path_state(gamma_i, gamma_i_prime, statistics);
  return coincidence_rate(state, two_path_detector(Port::h, phi_s, phi_s_prime),
                          two_path_detector(Port::g, phi_s, phi_s_prime))
      .rate;
}

double visibility(const std::vector<double>& fringe) {
  if (fringe.empty()) throw InvalidArgument("visibility of an empty fringe");
  const auto [lo, hi] = std::minmax_element(fringe.begin(), fringe.end());
  const double sum = *hi + *lo;
  return sum == 0.0 ? 0.0 : (*hi - *lo) / sum;
}

double psipi_individual_emission_background() {
  const TaggedState state = psipi_two_path_state(0.0, 0.0);
  const auto op_h = two_path_detector(Port::h, 0.0, 0.0);
  const auto op_g = two_path_detector(Port::g, 0.0, 0.0);
  const auto total = coincidence_rate(state, op_h, op_g);
  double individual = 0.0;
  for (const auto& [exponent, branch] : fock::split_by_pump_exponent(state)) {
    // Exponents 0 and 2: both pairs from the same crystal.
    if (exponent == 1) continue;
    TaggedState detected = detect_pair(branch, op_h, op_g);
    individual += fock::averaged_pairing(detected, detected).real();
  }
  return individual / total.background;
}

FrameNoiseResult frame_noise_experiment(double noise_amplitude, std::int64_t n_frames, std::uint64_t seed,
                                        const FrameNoiseOptions& options) {
  if (n_frames < 1) throw InvalidArgument("frame_noise_experiment: n_frames must be >= 1");
  if (!(noise_amplitude >= 0) || !std::isfinite(noise_amplitude))
    throw InvalidArgument("frame_noise_experiment: noise amplitude must be finite and >= 0");
  if (options.scan_points < 32) throw InvalidArgument("frame_noise_experiment: fringe scans need >= 32 points");

  const auto points = static_cast<std::size_t>(options.scan_points);
  std::vector<double> scan(points);
  for (std::size_t j = 0; j < points; ++j) scan[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(points);
  const double background = options.subtract_background ? psipi_individual_emission_background() : 0.0;
  const std::uint64_t frame_seed = derive_seed(seed, Stream::frame_noise);

  FrameNoiseResult result;
  result.fringe_psipi.assign(points, 0.0);
  result.fringe_standard.assign(points, 0.0);
  for (std::int64_t frame = 0; frame < n_frames; ++frame) {
    double delta = 0.0;
    if (noise_amplitude > 0) {
      Engine engine(derive_seed(frame_seed, static_cast<std::uint64_t>(frame)));
      if (options.law == NoiseLaw::uniform)
        delta = std::uniform_real_distribution<double>(-noise_amplitude, noise_amplitude)(engine);
      else
        delta = std::normal_distribution<double>(0.0, noise_amplitude)(engine);
    }
    for (std::size_t j = 0; j < points; ++j) {
      result.fringe_psipi[j] += two_mode_psipi_rate(delta, delta, scan[j], 0.0) - background;
      result.fringe_standard[j] += standard_two_photon_rate(scan[j] + delta, delta);
    }
  }
  for (std::size_t j = 0; j < points; ++j) {
    result.fringe_psipi[j] /= static_cast<double>(n_frames);
    result.fringe_standard[j] /= static_cast<double>(n_frames);
  }
  result.visibility_psipi = visibility(result.fringe_psipi);
  result.visibility_standard = visibility(result.fringe_standard);
  return result;
}

}  // namespace psipi::interferometer
