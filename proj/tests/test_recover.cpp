#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "psipi/imaging.hpp"
#include "psipi/recover.hpp"
#include "support.hpp"

using namespace psipi;
using namespace psipi::recover;
using imaging::ObjectKind;
using testing::kPi;

namespace {

WrappedField wrapped_of(const imaging::ModeGrid& grid, const std::vector<double>& alpha) {
  WrappedField w;
  w.grid = grid;
  for (double a : alpha) w.values.push_back(wrap(a));
  w.quality.assign(alpha.size(), 1.0);
  return w;
}

double max_wrapped_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(wrap(a[i] - b[i])));
  return worst;
}

/// Truth gauge-fixed like the rank-2 output: zero at r0, positive first x-gradient.
std::vector<double> gauge_fixed(const std::vector<double>& alpha, std::size_t r0) {
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) out[i] = wrap(alpha[i] - alpha[r0]);
  for (std::size_t i = 0; i + 1 < alpha.size(); ++i) {
    const double d = wrap(out[i + 1] - out[i]);
    if (std::abs(d) > 1e-9) {
      if (d < 0)
        for (auto& v : out) v = wrap(-v);
      break;
    }
  }
  return out;
}

PhaseField field(const imaging::ModeGrid& grid, std::vector<double> values) { return {grid, std::move(values)}; }

}  // namespace

TEST_SUITE("recover") {
  TEST_CASE("wrap maps into (-pi, pi]") {
    CHECK(wrap(kPi) == doctest::Approx(kPi));
    CHECK(wrap(-kPi) == doctest::Approx(kPi));
    CHECK(wrap(3.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0));
    CHECK(wrap(0.25) == 0.25);
    CHECK(default_reference(imaging::grid_2d(8, 6)) == 3 * 8 + 4);
    CHECK(default_reference(imaging::grid_1d(64)) == 32);
  }

  TEST_CASE("rank-2 factorization of a three-pixel cosine matrix") {
    const auto g = imaging::grid_1d(3);
    const imaging::PhaseObject o{g, {0.0, kPi / 2.0, kPi}};
    const auto map = imaging::perfect_correlation_map(o);
    Eigen::Matrix3d expected;
    expected << 1, 0, -1, 0, 1, 0, -1, 0, 1;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t q = 0; q < 3; ++q) CHECK(std::abs(2.0 * (map.at(p, q) - 1.0) - expected(p, q)) < 1e-15);
    FactorizationOptions opts;
    opts.reference = 0;
    const auto w = rank2_phase_factorization(map, opts);
    CHECK(max_wrapped_diff(w.values, {0.0, kPi / 2.0, kPi}) < 1e-12);
    CHECK(w.values[0] == 0.0);
    CHECK_FALSE(w.degraded);
  }

  TEST_CASE("unobservable and unsupported maps") {
    const auto g = imaging::grid_1d(8);
    const auto flat = imaging::perfect_correlation_map(imaging::make_phase_object(ObjectKind::flat, 0.0, g));
    CHECK_THROWS_AS(rank2_phase_factorization(flat), NumericalError);
    auto bbp = imaging::coincidence_map(imaging::make_phase_object(ObjectKind::quadratic1d, 3.0, g),
                                        imaging::delta_correlation(g), imaging::PortPair::b_bprime);
    CHECK_THROWS_AS(rank2_phase_factorization(bbp), InvalidArgument);
    FactorizationOptions opts;
    opts.reference = 8;
    CHECK_THROWS_AS(rank2_phase_factorization(imaging::perfect_correlation_map(imaging::make_phase_object(
                                                  ObjectKind::quadratic1d, 3.0, g)),
                                              opts),
                    InvalidArgument);
  }

  TEST_CASE("rank-2 factorization recovers a noiseless quadratic object") {
    const auto g = imaging::grid_1d(64);
    const auto o = imaging::make_phase_object(ObjectKind::quadratic1d, 6.0 * kPi, g);
    const auto w = rank2_phase_factorization(imaging::perfect_correlation_map(o));
    CHECK(w.reference == 32);
    CHECK(max_wrapped_diff(w.values, gauge_fixed(o.alpha, 32)) < 1e-9);
    CHECK(w.rank_ratio < 1e-10);
    for (double v : w.values) {
      CHECK(v > -kPi);
      CHECK(v <= kPi);
    }
    for (double qv : w.quality) CHECK(qv >= 0.0);
  }

  TEST_CASE("rank-2 output is invariant under a global object offset") {
    const auto g = imaging::grid_2d(9, 7);
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    imaging::PhaseObject o{g, std::vector<double>(g.pixel_count())};
    for (auto& a : o.alpha) a = ph(rng);
    auto shifted = o;
    for (auto& a : shifted.alpha) a += 1.234;
    const auto a = rank2_phase_factorization(imaging::perfect_correlation_map(o));
    const auto b = rank2_phase_factorization(imaging::perfect_correlation_map(shifted));
    CHECK(max_wrapped_diff(a.values, b.values) < 1e-9);
  }

  TEST_CASE("noiseless cosine matrices are positive semidefinite with rank two") {
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    for (int trial = 0; trial < 5; ++trial) {
      const auto g = imaging::grid_1d(20);
      imaging::PhaseObject o{g, std::vector<double>(20)};
      for (auto& a : o.alpha) a = ph(rng);
      const auto map = imaging::coincidence_map(o, imaging::delta_correlation(g), imaging::PortPair::bb);
      Eigen::MatrixXd m(20, 20);
      for (int p = 0; p < 20; ++p)
        for (int q = 0; q < 20; ++q) m(p, q) = p == q ? 1.0 : 2.0 * (map.at(p, q) - 1.0);
      CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
      const auto ev = es.eigenvalues();
      CHECK(ev.minCoeff() > -1e-12);
      CHECK(ev(17) < 1e-10 * ev(19));
      CHECK(rank2_phase_factorization(map).rank_ratio < 1e-10);
    }
  }

  TEST_CASE("shot noise inflates the third eigenvalue and flags the field") {
    const auto g = imaging::grid_1d(32);
    const auto o = imaging::make_phase_object(ObjectKind::quadratic1d, 6.0 * kPi, g);
    const auto noisy = imaging::add_shot_noise(imaging::perfect_correlation_map(o), 100000, 3);
    const auto w = rank2_phase_factorization(noisy);
    CHECK(w.degraded);
    CHECK(w.rank_ratio > 1e-6);
  }

  TEST_CASE("quadrature inversion from two references") {
    const auto g = imaging::grid_1d(3);
    const imaging::PhaseObject o{g, {0.0, kPi / 2.0, kPi / 4.0}};
    const auto map = imaging::perfect_correlation_map(o);
    const auto w = quadrature_two_reference(map, 0, 1);
    CHECK(w.values[0] == 0.0);
    CHECK(w.values[1] == doctest::Approx(kPi / 2.0).epsilon(1e-14));
    CHECK(w.values[2] == doctest::Approx(kPi / 4.0).epsilon(1e-14));

    const imaging::PhaseObject degenerate{g, {0.0, kPi, 0.3}};
    CHECK_THROWS_AS(quadrature_two_reference(imaging::perfect_correlation_map(degenerate), 0, 1), InvalidArgument);
    CHECK_THROWS_AS(quadrature_two_reference(map, 0, 0), InvalidArgument);
    CHECK(choose_second_reference(map, 0) == 1);
  }

  TEST_CASE("quadrature and rank-2 methods agree on a noiseless quadratic object") {
    const auto g = imaging::grid_1d(64);
    const auto o = imaging::make_phase_object(ObjectKind::quadratic1d, 6.0 * kPi, g);
    const auto map = imaging::perfect_correlation_map(o);
    const auto r0 = default_reference(g);
    const auto a = rank2_phase_factorization(map);
    const auto b = quadrature_two_reference(map, r0, choose_second_reference(map, r0));
    const auto ua = unwrap_2d(a);
    const auto ub = unwrap_2d(b);
    CHECK(align_and_rms(ua, ub).rms_error < 1e-9);
  }

  TEST_CASE("unwrapping examples") {
    const auto g = imaging::grid_1d(64);
    std::vector<double> ramp(64);
    for (int i = 0; i < 64; ++i) ramp[i] = 0.5 * i;
    const auto u = unwrap_2d(wrapped_of(g, ramp));
    for (int i = 0; i < 64; ++i) CHECK(u.values[i] == doctest::Approx(ramp[i]).epsilon(1e-13));

    const auto quad = imaging::make_phase_object(ObjectKind::quadratic1d, 6.0 * kPi, g);
    const auto uq = unwrap_2d(wrapped_of(g, quad.alpha));
    const double k = (uq.values[0] - quad.alpha[0]) / (2.0 * kPi);
    CHECK(std::abs(k - std::round(k)) < 1e-12);
    for (int i = 0; i < 64; ++i) CHECK(std::abs(uq.values[i] - quad.alpha[i] - 2.0 * kPi * std::round(k)) < 1e-9);

    std::vector<double> small(64);
    for (int i = 0; i < 64; ++i) small[i] = 0.4 * std::sin(0.2 * i);
    CHECK(unwrap_2d(wrapped_of(g, small)).values == small);
  }

  TEST_CASE("unwrapping round-trips smooth 2D fields up to a global 2 pi k") {
    std::mt19937_64 rng(63);
    std::uniform_real_distribution<double> coef(-0.8, 0.8);
    for (int trial = 0; trial < 10; ++trial) {
      const auto g = imaging::grid_2d(24, 17);
      const double ax = coef(rng), ay = coef(rng), bx = 0.02 * coef(rng), by = 0.02 * coef(rng);
      std::vector<double> alpha(g.pixel_count());
      for (int y = 0; y < g.ny; ++y)
        for (int x = 0; x < g.nx; ++x) alpha[y * g.nx + x] = ax * x + ay * y + bx * x * x + by * x * y + 3.0;
      int merges = 0;
      const auto w = wrapped_of(g, alpha);
      const auto u = unwrap_2d(w, &merges);
      CHECK(merges == static_cast<int>(g.pixel_count()) - 1);
      const double offset = u.values[0] - alpha[0];
      CHECK(std::abs(offset / (2.0 * kPi) - std::round(offset / (2.0 * kPi))) < 1e-12);
      for (std::size_t i = 0; i < alpha.size(); ++i) {
        CHECK(std::abs(u.values[i] - alpha[i] - offset) < 1e-9);
        CHECK(std::abs(wrap(u.values[i]) - w.values[i]) < 1e-12);
      }
    }
  }

  TEST_CASE("unwrapping is deterministic") {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    const auto g = imaging::grid_2d(11, 9);
    std::vector<double> noise(g.pixel_count());
    for (auto& v : noise) v = ph(rng);
    const auto w = wrapped_of(g, noise);
    CHECK(unwrap_2d(w).values == unwrap_2d(w).values);
  }

  TEST_CASE("gauge alignment examples") {
    const auto g = imaging::grid_1d(50);
    std::vector<double> truth(50);
    for (int i = 0; i < 50; ++i) truth[i] = std::sin(0.3 * i) + 0.01 * i * i;
    std::vector<double> plus(truth), minus(truth);
    for (auto& v : plus) v += 1.7;
    for (auto& v : minus) v = -v;
    const auto a = align_and_rms(field(g, plus), field(g, truth));
    CHECK(a.rms_error < 1e-13);
    CHECK(a.offset_applied == doctest::Approx(-1.7));
    CHECK_FALSE(a.sign_flipped);
    const auto b = align_and_rms(field(g, minus), field(g, truth));
    CHECK(b.rms_error < 1e-13);
    CHECK(b.sign_flipped);
    CHECK(b.pixels_processed == 50);
    const auto aligned = apply_gauge(field(g, minus), b);
    for (int i = 0; i < 50; ++i) CHECK(aligned.values[i] == doctest::Approx(truth[i]));

    std::mt19937_64 rng(65);
    std::normal_distribution<double> n(0.0, 0.01);
    const auto big = imaging::grid_2d(40, 40);
    std::vector<double> t(big.pixel_count()), r(big.pixel_count());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = 0.001 * i;
      r[i] = t[i] + n(rng);
    }
    const auto c = align_and_rms(field(big, r), field(big, t));
    CHECK(c.rms_error == doctest::Approx(0.01).epsilon(0.2));
    CHECK(report_to_json(c).at("rms_error_rad") == c.rms_error);
    CHECK_THROWS_AS(align_and_rms(field(g, truth), field(imaging::grid_1d(49), std::vector<double>(49))),
                    InvalidArgument);
  }

  TEST_CASE("end-to-end reconstruction of both objects without noise") {
    for (const auto& [kind, grid, scale] :
         {std::tuple{ObjectKind::quadratic1d, imaging::grid_1d(64), 6.0 * kPi},
          std::tuple{ObjectKind::cubic2d, imaging::grid_2d(32, 32), 1.5 * kPi}}) {
      const auto o = imaging::make_phase_object(kind, scale, grid);
      const auto map = imaging::coincidence_map(o, imaging::delta_correlation(grid), imaging::PortPair::bb);
      const auto u = unwrap_2d(rank2_phase_factorization(map));
      CHECK(align_and_rms(u, field(grid, o.alpha)).rms_error < 1e-6);
    }
  }
}
