#include <doctest.h>

#include <random>

#include "psipi/fock.hpp"
#include "psipi/fock_dense.hpp"
#include "support.hpp"

using namespace psipi::fock;
using testing::kPi;

TEST_SUITE("fock") {
  TEST_CASE("mode order is species, source, then label with integers first") {
    CHECK(signal(2, "a") < idler(1, "a"));
    CHECK(signal(1, "z") < signal(2, "a"));
    CHECK(signal(1, 5) < signal(1, "a"));
    CHECK(signal(1, 2) < signal(1, 10));
    CHECK(signal(1, "u") == signal(1, "u"));
  }

  TEST_CASE("kets drop zero counts and reject negative ones") {
    OccupationKet ket({{signal(1, "u"), 1}, {idler(1, "u'"), 0}});
    CHECK(ket.total() == 1);
    CHECK(ket.occupations().size() == 1);
    CHECK_THROWS_AS(OccupationKet({{signal(1, "u"), -1}}), psipi::InvalidArgument);
  }

  TEST_CASE("creation on the vacuum") {
    for (auto stats : {Statistics::boson, Statistics::fermion}) {
      auto s = apply_creation(TaggedState::vacuum(stats), signal(1, "u"));
      CHECK(s.size() == 1);
      CHECK(s.amplitude(OccupationKet({{signal(1, "u"), 1}})) == complex(1.0));
    }
  }

  TEST_CASE("bosonic creation carries sqrt(n+1), fermionic creation obeys exclusion") {
    const auto u = signal(1, "u");
    auto once = apply_creation(TaggedState::vacuum(Statistics::boson), u);
    auto twice = apply_creation(once, u);
    CHECK(twice.amplitude(OccupationKet({{u, 2}})).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    auto f = apply_creation(TaggedState::vacuum(Statistics::fermion), u);
    CHECK(apply_creation(f, u).is_zero());
  }

  TEST_CASE("annihilation examples") {
    const auto u = signal(1, "u");
    auto one = apply_creation(TaggedState::vacuum(), u);
    auto back = apply_annihilation(one, u);
    CHECK(back.amplitude(OccupationKet{}) == complex(1.0));
    CHECK(apply_annihilation(TaggedState::vacuum(), u).is_zero());
  }

  TEST_CASE("single_term rejects doubly occupied fermion modes") {
    CHECK_THROWS_AS(TaggedState::single_term(OccupationKet({{signal(1, "u"), 2}}), 1.0, 0, Statistics::fermion),
                    psipi::InvalidArgument);
  }

  TEST_CASE("creation operators anticommute for fermions and commute for bosons on an 8-mode register") {
    const auto modes = testing::register8();
    std::mt19937_64 rng(11);
    for (auto stats : {Statistics::boson, Statistics::fermion}) {
      const auto base = testing::random_state(rng, modes, stats, 5, 2);
      for (std::size_t i = 0; i < modes.size(); ++i)
        for (std::size_t j = 0; j < modes.size(); ++j) {
          if (i == j) continue;
          auto ab = apply_creation(apply_creation(base, modes[j]), modes[i]);
          auto ba = apply_creation(apply_creation(base, modes[i]), modes[j]);
          const double sign = stats == Statistics::fermion ? -1.0 : 1.0;
          CHECK(testing::max_abs_diff(ab, scale(ba, sign)) < 1e-12);
        }
    }
  }

  TEST_CASE("ladder operators agree with explicit sparse matrices") {
    const auto modes = testing::register8();
    std::mt19937_64 rng(12);
    for (auto stats : {Statistics::boson, Statistics::fermion}) {
      DenseFockBasis basis(modes, 4, stats);
      for (int trial = 0; trial < 20; ++trial) {
        const auto state = testing::random_state(rng, modes, stats, 4, 3);
        for (const auto& mode : modes) {
          for (const auto& [m, branch] : split_by_pump_exponent(state)) {
            const DenseVector v = basis.to_vector(branch);
            const DenseVector created = basis.creation(mode) * v;
            const DenseVector annihilated = basis.annihilation(mode) * v;
            const double scale_ref = std::max(1.0, v.norm());
            CHECK((basis.to_vector(apply_creation(branch, mode)) - created).norm() / scale_ref < 1e-12);
            CHECK((basis.to_vector(apply_annihilation(branch, mode)) - annihilated).norm() / scale_ref < 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("a a+ psi equals (n + 1) psi for bosons on random three-term states") {
    const auto modes = testing::register8();
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const auto state = testing::random_state(rng, modes, Statistics::boson, 3, 3);
      for (const auto& mode : modes) {
        const auto lhs = apply_annihilation(apply_creation(state, mode), mode);
        TaggedState rhs;
        for (const auto& [key, amp] : state.terms())
          rhs.add_term(key.ket, key.pump_exponent, amp * double(key.ket.count(mode) + 1));
        CHECK(testing::max_abs_diff(lhs, rhs) < 1e-12);
      }
    }
  }

  TEST_CASE("averaged pairing examples") {
    const OccupationKet su({{signal(1, "u"), 1}});
    const auto a = TaggedState::single_term(su, 1.0, 1);
    CHECK(averaged_pairing(a, a) == complex(1.0));
    const auto b = TaggedState::single_term(su, 1.0, 0);
    CHECK(averaged_pairing(b, a) == complex(0.0));
    CHECK_THROWS_AS(averaged_pairing(a, TaggedState::vacuum(Statistics::fermion)), psipi::InvalidArgument);
  }

  TEST_CASE("averaged pairing is conjugate symmetric and obeys the exponent selection rule") {
    const auto modes = testing::register8();
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 50; ++trial) {
      const auto a = testing::random_state(rng, modes, Statistics::boson, 6, 2);
      const auto b = testing::random_state(rng, modes, Statistics::boson, 6, 2);
      CHECK(std::abs(averaged_pairing(a, b) - std::conj(averaged_pairing(b, a))) < 1e-12);

      // Shift every exponent of b by one: pairing with unequal exponents only.
      TaggedState shifted;
      for (const auto& [key, amp] : a.terms()) shifted.add_term(key.ket, key.pump_exponent + 7, amp);
      CHECK(averaged_pairing(a, shifted) == complex(0.0));
    }
  }

  TEST_CASE("averaged pairing matches a Monte Carlo average over the pump phase") {
    const auto modes = testing::register8();
    std::mt19937_64 rng(15);
    const auto a = testing::random_state(rng, modes, Statistics::boson, 8, 2);
    const auto b = testing::random_state(rng, modes, Statistics::boson, 8, 2);
    const complex exact = averaged_pairing(a, b);

    std::mt19937_64 draw(16);
    std::uniform_real_distribution<double> theta(0.0, 2.0 * kPi);
    const int n = 100000;
    complex sum{};
    double sum_re2 = 0.0;
    double sum_im2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double t = theta(draw);
      const complex v = averaged_pairing(evaluate_at_phase(a, t), evaluate_at_phase(b, t));
      sum += v;
      sum_re2 += v.real() * v.real();
      sum_im2 += v.imag() * v.imag();
    }
    const complex mean = sum / double(n);
    const double se_re = std::sqrt((sum_re2 / n - mean.real() * mean.real()) / n);
    const double se_im = std::sqrt((sum_im2 / n - mean.imag() * mean.imag()) / n);
    CHECK(std::abs(mean.real() - exact.real()) < 3.0 * se_re);
    CHECK(std::abs(mean.imag() - exact.imag()) < 3.0 * se_im);
  }

  TEST_CASE("norm, scale and add") {
    CHECK(norm(TaggedState::vacuum()) == doctest::Approx(1.0));
    const auto modes = testing::register8();
    std::mt19937_64 rng(17);
    const auto psi = testing::random_state(rng, modes, Statistics::boson, 5, 3);
    const complex a{0.3, -1.2};
    CHECK(norm(scale(psi, a)) == doctest::Approx(std::abs(a) * norm(psi)).epsilon(1e-14));

    const auto x = TaggedState::single_term(OccupationKet({{signal(1, "u"), 1}}), 3.0);
    const auto y = TaggedState::single_term(OccupationKet({{signal(1, "v"), 1}}), 4.0);
    CHECK(norm(add(x, y)) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK_THROWS_AS(add(x, TaggedState(Statistics::fermion)), psipi::InvalidArgument);
  }

  TEST_CASE("amplitudes below the pruning threshold are dropped") {
    TaggedState s;
    s.add_term(OccupationKet{}, 0, 1e-16);
    CHECK(s.is_zero());
    s.add_term(OccupationKet{}, 0, 1.0);
    s.add_term(OccupationKet{}, 0, -1.0);
    CHECK(s.is_zero());
  }

  TEST_CASE("truncation and exponent split") {
    TaggedState s;
    s.add_term(OccupationKet{}, 0, 1.0);
    s.add_term(OccupationKet({{signal(1, "u"), 3}}), 1, 2.0);
    s.add_term(OccupationKet({{signal(1, "u"), 1}}), 1, 3.0);
    CHECK(truncate_photon_number(s, 2).size() == 2);
    const auto split = split_by_pump_exponent(s);
    CHECK(split.size() == 2);
    CHECK(split.at(1).size() == 2);
  }

  TEST_CASE("evaluating at a pump phase multiplies by exp(i m theta)") {
    TaggedState s;
    s.add_term(OccupationKet{}, 2, 1.0);
    const auto e = evaluate_at_phase(s, 0.4);
    CHECK(std::abs(e.amplitude(OccupationKet{}, 0) - std::polar(1.0, 0.8)) < 1e-15);
  }
}
