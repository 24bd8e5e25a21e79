#include "psipi/spdc.hpp"

#include <cmath>
#include <numbers>

namespace psipi::spdc {

using fock::OccupationKet;
using fock::Species;
using fock::Statistics;

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

void PhaseMatchingParams::validate() const {
  if (!(tau > 0)) throw InvalidArgument("PhaseMatchingParams: tau must be > 0");
  for (double l : crystal_lengths)
    if (!(l > 0)) throw InvalidArgument("PhaseMatchingParams: crystal lengths must be > 0");
}

complex c2_sinc_model(const PhaseMatchingParams& params) {
  params.validate();
  const double half_wt = params.delta_omega * params.tau / 2.0;
  double k_dot_r = 0.0;
  double spatial = 1.0;
  for (std::size_t m = 0; m < 3; ++m) {
    k_dot_r += params.delta_k[m] * params.crystal_center[m];
    spatial *= sinc(params.delta_k[m] * params.crystal_lengths[m] / 2.0);
  }
  return params.prefactor * std::polar(1.0, half_wt) * std::polar(1.0, -k_dot_r) * sinc(half_wt) * spatial;
}

complex c4_from_c2(complex c2_a, complex c2_b) { return c2_a * c2_b / 2.0; }

void PathIdentityMap::validate() const {
  std::set<ModeId> targets;
  for (const auto& [from, to] : map) {
    if (from.species != Species::idler || to.idler.species != Species::idler)
      throw InvalidArgument("path identity maps idler modes only: " + fock::to_string(from));
    if (from.source != 2 || to.idler.source != 1)
      throw InvalidArgument("path identity maps source-2 idlers onto source-1 idlers: " +
                            fock::to_string(from));
    if (!std::isfinite(to.phase)) throw InvalidArgument("non-finite path identity phase");
    if (!targets.insert(to.idler).second)
      throw InvalidArgument("path identity map is not injective at " + fock::to_string(to.idler));
  }
}

namespace {

void validate_source(const SourceSpec& src) {
  if (src.mode_pairs.empty()) throw InvalidArgument("source has no mode pairs");
  if (!std::isfinite(src.gain.real()) || !std::isfinite(src.gain.imag()))
    throw InvalidArgument("source gain must be finite");
  for (const auto& pair : src.mode_pairs) {
    if (pair.signal.species != Species::signal || pair.idler.species != Species::idler)
      throw InvalidArgument("mode pair species must be (signal, idler)");
    if (pair.signal.source != src.source_id || pair.idler.source != src.source_id)
      throw InvalidArgument("mode pair " + fock::to_string(pair.signal) + " does not belong to source " +
                            std::to_string(src.source_id));
    if (!std::isfinite(pair.weight.real()) || !std::isfinite(pair.weight.imag()))
      throw InvalidArgument("mode pair weight must be finite");
  }
}

TaggedState shift_exponent(const TaggedState& state, int delta) {
  TaggedState out(state.statistics());
  for (const auto& [key, amp] : state.terms()) out.add_term(key.ket, key.pump_exponent + delta, amp);
  return out;
}

/// K|psi> with K = sum_p w_p a+_S(p) a+_I(p).
TaggedState apply_pair_creation(const TaggedState& state, const SourceSpec& src, int max_photons) {
  TaggedState pruned = fock::truncate_photon_number(state, max_photons - 2);
  TaggedState out(state.statistics());
  for (const auto& pair : src.mode_pairs) {
    TaggedState created = fock::apply_creation(fock::apply_creation(pruned, pair.idler), pair.signal);
    out = fock::add(out, fock::scale(created, pair.weight));
  }
  return shift_exponent(out, src.pump_exponent_per_pair);
}

/// (1 + g K + g^2 K^2 / 2) |psi>, truncated.
TaggedState apply_source(const TaggedState& state, const SourceSpec& src, int max_photons) {
  TaggedState once = apply_pair_creation(state, src, max_photons);
  TaggedState twice = apply_pair_creation(once, src, max_photons);
  TaggedState out = fock::add(state, fock::scale(once, src.gain));
  out = fock::add(out, fock::scale(twice, src.gain * src.gain / 2.0));
  return fock::truncate_photon_number(out, max_photons);
}

}  // namespace

TaggedState build_two_source_state(const SourceSpec& src1, const SourceSpec& src2, Statistics statistics,
                                   const BuildOptions& options) {
  validate_source(src1);
  validate_source(src2);
  if (src1.pump_exponent_per_pair == src2.pump_exponent_per_pair)
    throw InvalidArgument("sources must carry distinct pump exponents (independent pumps)");
  if (!options.allow_unequal_gains && std::abs(std::abs(src1.gain) - std::abs(src2.gain)) > 1e-15)
    throw InvalidArgument("pump intensities differ (|g1| != |g2|); set allow_unequal_gains to explore");
  for (const auto& a : src1.mode_pairs)
    for (const auto& b : src2.mode_pairs)
      if (a.signal == b.signal || a.idler == b.idler)
        throw InvalidArgument("sources share mode " + fock::to_string(a.signal == b.signal ? a.signal : a.idler));

  TaggedState state = TaggedState::vacuum(statistics);
  state = apply_source(state, src1, options.max_photons);
  state = apply_source(state, src2, options.max_photons);
  return state;
}

TaggedState filter_detectable(const TaggedState& state, const std::vector<DetectionChannel>& channels) {
  TaggedState out(state.statistics());
  if (state.path_identity_applied()) out.mark_path_identity_applied();
  for (const auto& [key, amp] : state.terms()) {
    bool keep = false;
    for (const auto& channel : channels) {
      for (const auto& a : channel.detector_a) {
        const int na = key.ket.count(a);
        if (na == 0) continue;
        for (const auto& b : channel.detector_b) {
          const int nb = key.ket.count(b);
          if (nb > 0 && (!(a == b) || na >= 2)) {
            keep = true;
            break;
          }
        }
        if (keep) break;
      }
      if (keep) break;
    }
    if (keep) out.add_term(key.ket, key.pump_exponent, amp);
  }
  return out;
}

TaggedState apply_path_identity(const TaggedState& state, const PathIdentityMap& identity) {
  identity.validate();
  if (state.path_identity_applied()) throw InvalidArgument("path identity already applied to this state");

  TaggedState out(state.statistics());
  for (const auto& [key, amp] : state.terms()) {
    // Rebuild the ket as an ordered product of (substituted) creation operators.
    TaggedState rebuilt = TaggedState::single_term(OccupationKet{}, amp, key.pump_exponent, state.statistics());
    const auto& occ = key.ket.occupations();
    for (auto it = occ.rbegin(); it != occ.rend(); ++it) {
      const auto& [mode, n] = *it;
      ModeId target = mode;
      complex phase = 1.0;
      if (mode.species == Species::idler && mode.source == 2) {
        auto found = identity.map.find(mode);
        if (found == identity.map.end())
          throw InvalidArgument("no path identity partner for idler mode " + fock::to_string(mode));
        target = found->second.idler;
        phase = std::polar(1.0, -found->second.phase);
      }
      double factorial = 1.0;
      for (int k = 0; k < n; ++k) {
        rebuilt = fock::scale(fock::apply_creation(rebuilt, target), phase);
        factorial *= (k + 1);
      }
      if (state.statistics() == Statistics::boson && n > 1) rebuilt = fock::scale(rebuilt, 1.0 / std::sqrt(factorial));
    }
    for (const auto& [rkey, ramp] : rebuilt.terms()) out.add_term(rkey.ket, rkey.pump_exponent, ramp);
  }
  out.mark_path_identity_applied();
  return out;
}

std::pair<SourceSpec, SourceSpec> two_path_sources(complex gain) {
  SourceSpec src1{1, gain, 0,
                  {{fock::signal(1, "u"), fock::idler(1, "u'")}, {fock::signal(1, "v"), fock::idler(1, "v'")}}};
  SourceSpec src2{2, gain, 1,
                  {{fock::signal(2, "c"), fock::idler(2, "c'")}, {fock::signal(2, "d"), fock::idler(2, "d'")}}};
  return {src1, src2};
}

PathIdentityMap two_path_identity(double gamma_i, double gamma_i_prime) {
  PathIdentityMap pi;
  pi.map.emplace(fock::idler(2, "c'"), PathIdentityMap::Target{fock::idler(1, "u'"), gamma_i});
  pi.map.emplace(fock::idler(2, "d'"), PathIdentityMap::Target{fock::idler(1, "v'"), gamma_i_prime});
  return pi;
}

DetectionChannel two_path_hg_channel() {
  return {{fock::signal(1, "u"), fock::signal(2, "c")}, {fock::signal(1, "v"), fock::signal(2, "d")}};
}

}  // namespace psipi::spdc
