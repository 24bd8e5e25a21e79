#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "psipi/fock.hpp"

namespace testing {

using psipi::fock::complex;
using psipi::fock::ModeId;
using psipi::fock::OccupationKet;
using psipi::fock::Statistics;
using psipi::fock::TaggedState;

inline constexpr double kPi = std::numbers::pi;

/// Eight-mode register: four signal and four idler modes over two sources.
inline std::vector<ModeId> register8() {
  using namespace psipi::fock;
  return {signal(1, "u"), signal(1, "v"), signal(2, "c"), signal(2, "d"),
          idler(1, "u'"), idler(1, "v'"), idler(2, "c'"), idler(2, "d'")};
}

inline complex random_complex(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng)};
}

/// Random state of `terms` kets with at most `max_photons` photons, random pump exponents in [-2, 2].
inline TaggedState random_state(std::mt19937_64& rng, const std::vector<ModeId>& modes, Statistics stats, int terms,
                                int max_photons) {
  std::uniform_int_distribution<int> pick_mode(0, static_cast<int>(modes.size()) - 1);
  std::uniform_int_distribution<int> pick_n(0, max_photons);
  std::uniform_int_distribution<int> pick_m(-2, 2);
  TaggedState state(stats);
  for (int t = 0; t < terms; ++t) {
    const int photons = pick_n(rng);
    std::vector<int> counts(modes.size(), 0);
    for (int k = 0; k < photons; ++k) {
      const int m = pick_mode(rng);
      if (stats == Statistics::fermion && counts[m] == 1) continue;
      ++counts[m];
    }
    std::vector<std::pair<ModeId, int>> occ;
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (counts[i]) occ.emplace_back(modes[i], counts[i]);
    state.add_term(OccupationKet(occ), pick_m(rng), random_complex(rng));
  }
  return state;
}

inline double max_abs_diff(const TaggedState& a, const TaggedState& b) {
  double worst = 0.0;
  for (const auto& [key, amp] : a.terms()) worst = std::max(worst, std::abs(amp - b.amplitude(key.ket, key.pump_exponent)));
  for (const auto& [key, amp] : b.terms()) worst = std::max(worst, std::abs(amp - a.amplitude(key.ket, key.pump_exponent)));
  return worst;
}

}  // namespace testing
