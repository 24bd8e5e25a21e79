#include <doctest.h>

#include <random>

#include "psipi/interferometer.hpp"
#include "psipi/spdc.hpp"
#include "support.hpp"

using namespace psipi;
using namespace psipi::interferometer;
using fock::Statistics;
using testing::kPi;

namespace {

double hg_rate(const fock::TaggedState& state, double phi_s, double phi_s_prime, Port a = Port::h, Port b = Port::g) {
  return coincidence_rate(state, two_path_detector(a, phi_s, phi_s_prime), two_path_detector(b, phi_s, phi_s_prime))
      .rate;
}

fock::TaggedState no_identity_state(Statistics stats = Statistics::boson) {
  const auto [s1, s2] = spdc::two_path_sources(0.1);
  return spdc::filter_detectable(spdc::build_two_source_state(s1, s2, stats), {spdc::two_path_hg_channel()});
}

}  // namespace

TEST_SUITE("interferometer") {
  TEST_CASE("beamsplitter outputs have two modes of magnitude 1/sqrt2") {
    for (auto port : {Port::h, Port::h_prime, Port::g, Port::g_prime}) {
      const auto op = two_path_detector(port, 0.3, -0.8);
      REQUIRE(op.composition.size() == 2);
      for (const auto& [mode, c] : op.composition) CHECK(std::abs(c) == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
    DetectorOp bad;
    bad.composition = {{fock::signal(1, "u"), 1.0}};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  }

  TEST_CASE("coincidence rate examples") {
    const auto psipi = psipi_two_path_state(0.0, 0.0);
    CHECK(hg_rate(psipi, 0.4, 0.4) == doctest::Approx(1.5).epsilon(1e-13));

    const auto plain = no_identity_state();
    const double ref = hg_rate(plain, 0.0, 0.0);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    for (int k = 0; k < 16; ++k) CHECK(std::abs(hg_rate(plain, ph(rng), ph(rng)) - ref) < 1e-12);

    const auto standard = standard_two_photon_state();
    CHECK(std::abs(coincidence_rate(standard, two_path_detector(Port::h, 0, 0), two_path_detector(Port::g, 0, 0)).raw) <
          1e-15);
  }

  TEST_CASE("a detector over modes absent from the state is a mode mismatch") {
    DetectorOp stray = beamsplitter_output(Port::h, fock::signal(7, "x"), fock::signal(8, "y"), 0.0);
    const auto state = psipi_two_path_state(0, 0);
    CHECK_THROWS_AS(coincidence_rate(state, stray, two_path_detector(Port::g, 0, 0)), InvalidArgument);
    CHECK_THROWS_AS(coincidence_rate(state, two_path_detector(Port::h, 0, 0), stray), InvalidArgument);
  }

  TEST_CASE("Monte Carlo pump-phase average") {
    const auto state = psipi_two_path_state(0.0, 0.0);
    const auto op_h = two_path_detector(Port::h, 0.0, 0.0);
    const auto op_g = two_path_detector(Port::g, 0.0, 0.0);
    const auto mc = coincidence_rate_mc(state, op_h, op_g, 100000, 5);
    CHECK(mc.method == RateMethod::monte_carlo);
    CHECK(mc.standard_error > 0.0);
    CHECK(std::abs(mc.rate - 1.5) < 3.0 * mc.standard_error);

    const auto again = coincidence_rate_mc(state, op_h, op_g, 100000, 5);
    CHECK(again.rate == mc.rate);
    CHECK(again.standard_error == mc.standard_error);

    const auto standard = standard_two_photon_state();
    const auto flat = coincidence_rate_mc(standard, two_path_detector(Port::h, 0.2, 0.1),
                                          two_path_detector(Port::g, 0.2, 0.1), 1000, 1);
    CHECK(flat.standard_error == 0.0);
    CHECK_THROWS_AS(coincidence_rate_mc(state, op_h, op_g, 99, 1), InvalidArgument);
  }

  TEST_CASE("density matrix over emission branches equals tag contraction and Monte Carlo") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    const Port firsts[] = {Port::h, Port::h_prime};
    const Port seconds[] = {Port::g, Port::g_prime};
    for (int trial = 0; trial < 50; ++trial) {
      const auto stats = trial % 2 ? Statistics::fermion : Statistics::boson;
      const double a = ph(rng), b = ph(rng), g1 = ph(rng), g2 = ph(rng);
      const auto state = psipi_two_path_state(g1, g2, stats, trial % 3 != 0);
      const auto op_a = two_path_detector(firsts[trial % 2], a, b);
      const auto op_b = two_path_detector(seconds[(trial / 2) % 2], a, b);
      const auto tagged = coincidence_rate(state, op_a, op_b);
      std::vector<fock::TaggedState> branches;
      for (const auto& [m, branch] : fock::split_by_pump_exponent(state)) branches.push_back(branch);
      const auto dm = density_matrix_rate(branches, op_a, op_b);
      CHECK(std::abs(dm.raw - tagged.raw) < 1e-12 * std::max(1.0, tagged.raw));
      CHECK(std::abs(dm.rate - tagged.rate) < 1e-12);
      if (trial < 5) {
        const auto mc = coincidence_rate_mc(state, op_a, op_b, 100000, 100 + trial);
        CHECK(std::abs(mc.rate - tagged.rate) < 3.0 * mc.standard_error + 1e-12);
      }
    }
  }

  TEST_CASE("one emission branch shows no interference and branch weights scale the trace") {
    const auto state = psipi_two_path_state(0.3, 1.4);
    const auto branches = fock::split_by_pump_exponent(state);
    // Source-1 pair emissions alone.
    const auto& only = branches.at(0);
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    const auto base = density_matrix_rate({only}, two_path_detector(Port::h, 0, 0), two_path_detector(Port::g, 0, 0));
    for (int k = 0; k < 8; ++k) {
      const double a = ph(rng), b = ph(rng);
      const auto r = density_matrix_rate({only}, two_path_detector(Port::h, a, b), two_path_detector(Port::g, a, b));
      CHECK(std::abs(r.raw - base.raw) < 1e-14);
    }
    const double c = 2.7;
    std::vector<fock::TaggedState> scaled;
    std::vector<fock::TaggedState> plain;
    for (const auto& [m, branch] : branches) {
      plain.push_back(branch);
      scaled.push_back(fock::scale(branch, std::sqrt(c)));
    }
    const auto op_h = two_path_detector(Port::h, 0.5, 0.1);
    const auto op_g = two_path_detector(Port::g, 0.5, 0.1);
    CHECK(density_matrix_rate(scaled, op_h, op_g).raw ==
          doctest::Approx(c * density_matrix_rate(plain, op_h, op_g).raw).epsilon(1e-13));
  }

  TEST_CASE("closed forms") {
    CHECK(two_mode_psipi_rate(0, 0, 0, 0) == 1.5);
    CHECK(two_mode_psipi_rate(0.9, 0.9, 0.2, 0.2 + kPi) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(two_mode_psipi_rate(0.3, 1.1, 0.0, 0.0) == 1.0 + 0.5 * std::cos(0.8));
    CHECK(standard_two_photon_rate(0, 0) == 0.0);
    CHECK(standard_two_photon_rate(kPi, 0) == 2.0);
  }

  TEST_CASE("standard two-photon state brute force matches 1 - cos(phi_s + phi_s')") {
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    for (auto stats : {Statistics::boson, Statistics::fermion}) {
      const auto state = standard_two_photon_state(stats);
      for (int k = 0; k < 16; ++k) {
        const double a = ph(rng), b = ph(rng);
        const auto r = coincidence_rate(state, two_path_detector(Port::h, a, b), two_path_detector(Port::g, a, b));
        CHECK(std::abs(r.rate - standard_two_photon_rate(a, b)) < 1e-12);
      }
    }
  }

  TEST_CASE("path-identity brute force matches 1 + cos(phi_s' - phi_s + gamma_i - gamma_i') / 2 for both statistics") {
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    for (auto stats : {Statistics::boson, Statistics::fermion}) {
      for (int k = 0; k < 16; ++k) {
        const double a = ph(rng), b = ph(rng), g1 = ph(rng), g2 = ph(rng);
        CHECK(std::abs(psipi_two_path_rate(a, b, g1, g2, stats) - two_mode_psipi_rate(a, b, g1, g2)) < 1e-12);
      }
    }
  }

  TEST_CASE("a common signal phase offset cancels") {
    std::mt19937_64 rng(36);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    const double a = 0.4, b = 2.1, g1 = 1.0, g2 = -0.3;
    const auto state = psipi_two_path_state(g1, g2);
    const double ref = hg_rate(state, a, b);
    for (int k = 0; k < 32; ++k) {
      const double d = ph(rng);
      CHECK(std::abs(hg_rate(state, a + d, b + d) - ref) < 1e-12);
      CHECK(two_mode_psipi_rate(a + d, b + d, g1, g2) == doctest::Approx(two_mode_psipi_rate(a, b, g1, g2)));
    }
  }

  TEST_CASE("the four output pairs conserve the total coincidence rate") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    double reference = -1.0;
    for (int k = 0; k < 16; ++k) {
      const double a = ph(rng), b = ph(rng), g1 = ph(rng), g2 = ph(rng);
      const auto state = psipi_two_path_state(g1, g2, Statistics::boson, false);
      double total = 0.0;
      for (auto pa : {Port::h, Port::h_prime})
        for (auto pb : {Port::g, Port::g_prime})
          total += coincidence_rate(state, two_path_detector(pa, a, b), two_path_detector(pb, a, b)).raw;
      if (reference < 0.0) reference = total;
      CHECK(std::abs(total - reference) < 1e-12 * std::max(1.0, reference));
    }
  }

  TEST_CASE("complementary port gives 1 - cos(...) / 2") {
    std::mt19937_64 rng(38);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    for (int k = 0; k < 16; ++k) {
      const double a = ph(rng), b = ph(rng), g1 = ph(rng), g2 = ph(rng);
      const auto state = psipi_two_path_state(g1, g2, Statistics::boson, false);
      const double r = hg_rate(state, a, b, Port::h_prime, Port::g);
      CHECK(std::abs(r - (2.0 - two_mode_psipi_rate(a, b, g1, g2))) < 1e-12);
    }
  }

  TEST_CASE("visibility") {
    CHECK(visibility({0.5, 1.0, 1.5}) == doctest::Approx(0.5));
    CHECK(visibility({1.0, 1.0}) == 0.0);
    CHECK_THROWS_AS(visibility({}), InvalidArgument);
  }

  TEST_CASE("frame noise examples") {
    const auto quiet = frame_noise_experiment(0.0, 10, 1);
    CHECK(quiet.visibility_psipi == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(quiet.visibility_standard == doctest::Approx(1.0).epsilon(1e-12));

    const auto noisy = frame_noise_experiment(kPi, 10000, 7);
    CHECK(std::abs(noisy.visibility_psipi - 0.5) < 0.01);
    CHECK(noisy.visibility_standard < 0.05);

    FrameNoiseOptions sub;
    sub.subtract_background = true;
    const auto cleaned = frame_noise_experiment(kPi, 10000, 7, sub);
    CHECK(std::abs(cleaned.visibility_psipi - 1.0) < 0.01);

    FrameNoiseOptions gauss;
    gauss.law = NoiseLaw::gaussian;
    const auto g = frame_noise_experiment(kPi, 2000, 7, gauss);
    CHECK(std::abs(g.visibility_psipi - 0.5) < 0.01);

    const auto repeat = frame_noise_experiment(kPi, 10000, 7);
    CHECK(repeat.fringe_standard == noisy.fringe_standard);
    CHECK_THROWS_AS(frame_noise_experiment(kPi, 0, 7), InvalidArgument);
  }

  TEST_CASE("single-source emissions carry half of the normalized rate") {
    CHECK(psipi_individual_emission_background() == doctest::Approx(0.5).epsilon(1e-13));
  }
}
