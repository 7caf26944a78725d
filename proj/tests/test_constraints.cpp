#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oog/oog.hpp"
#include "test_support.hpp"

using oog::CVec;
using oog::Mat;
using oog::Vec;

TEST_CASE("scalar sector form is zero on the rays and signed by membership") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    double a = u(rng), b = u(rng);
    const double lo = std::min(a, b), hi = std::max(a, b) + 0.1;
    const auto f = oog::sector_to_form({lo, hi});
    REQUIRE(f.n_xi == 1);
    REQUIRE(f.n_sigma == 1);
    CHECK((f.F_bar - f.F_bar.transpose()).norm() == 0.0);

    double sigma = u(rng);
    if (std::abs(sigma) < 0.1) sigma = 0.7;
    Vec s(1), xi(1);
    s << sigma;

    // On either sector boundary the form vanishes identically.
    xi << lo * sigma;
    CHECK(oog::evaluate(f, xi, s) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    xi << hi * sigma;
    CHECK(oog::evaluate(f, xi, s) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

    // Strictly inside: positive. Strictly outside: negative.
    xi << 0.5 * (lo + hi) * sigma;
    CHECK(oog::evaluate(f, xi, s) > 0.0);
    xi << (hi + 1.0) * sigma;
    CHECK(oog::evaluate(f, xi, s) < 0.0);
    xi << (lo - 1.0) * sigma;
    CHECK(oog::evaluate(f, xi, s) < 0.0);
  }
}

TEST_CASE("vector sector form is the channel-wise sum of scalar forms") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const std::vector<oog::SectorBound> sectors = {{-0.3, 1.2}, {0.5, 0.9}, {-1.0, -0.2}};
  const auto F = oog::sectors_to_form(sectors);
  REQUIRE(F.n_xi == 3);
  REQUIRE(F.n_sigma == 3);
  for (int trial = 0; trial < 20; ++trial) {
    Vec xi = testsup::random_mat(rng, 3, 1);
    Vec sg = testsup::random_mat(rng, 3, 1);
    double expected = 0.0;
    for (int j = 0; j < 3; ++j) {
      Vec xj(1), sj(1);
      xj << xi[j];
      sj << sg[j];
      expected += oog::evaluate(oog::sector_to_form(sectors[j]), xj, sj);
    }
    CHECK(oog::evaluate(F, xi, sg) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("composition applies the multipliers blockwise") {
  std::mt19937_64 rng(13);
  const auto f1 = oog::sectors_to_form({{0.0, 1.0}});
  const auto f2 = oog::sectors_to_form({{-0.5, 0.5}, {0.2, 2.0}});
  const std::vector<double> taus = {0.7, 2.5};
  const auto comp = oog::compose({f1, f2}, taus);
  REQUIRE(comp.n_xi() == 3);
  REQUIRE(comp.n_sigma() == 3);

  for (int trial = 0; trial < 20; ++trial) {
    Vec xi = testsup::random_mat(rng, 3, 1);
    Vec sg = testsup::random_mat(rng, 3, 1);
    const double expected =
        taus[0] * oog::evaluate(f1, xi.head(1), sg.head(1)) +
        taus[1] * oog::evaluate(f2, xi.tail(2), sg.tail(2));
    CHECK(oog::evaluate(comp, xi, sg) == doctest::Approx(expected).epsilon(1e-12));
    // The dense F_bar view agrees with the block evaluation.
    Vec z(6);
    z << xi, sg;
    CHECK(z.dot(comp.F_bar() * z) == doctest::Approx(expected).epsilon(1e-12));
  }

  CHECK_THROWS_AS(oog::compose({f1}, {0.7, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(oog::compose({f1}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(oog::compose({f1}, {-1.0}), std::invalid_argument);
}

TEST_CASE("sector estimation recovers a pure gain exactly up to the margin") {
  const auto s = oog::estimate_sector([](double v) { return 0.7 * v; }, -2.0, 5.0);
  CHECK(s.mu_minus == doctest::Approx(0.7 - 1e-4).epsilon(1e-12));
  CHECK(s.mu_plus == doctest::Approx(0.7 + 1e-4).epsilon(1e-12));
}

TEST_CASE("sector estimation certifies the offset-sine nonlinearity") {
  const auto s =
      oog::estimate_sector([](double v) { return v - 0.5 * std::sin(v); }, -50.0, 50.0);
  // Analytic extrema: ratio = 1 - 0.5 sinc(sigma); sup sinc = 1 at 0 and
  // inf sinc ~ -0.217234 near |sigma| ~ 4.4934, then the +-1e-4 margin.
  CHECK(s.mu_minus >= 0.4999);
  CHECK(s.mu_minus <= 0.5001);
  CHECK(s.mu_plus >= 1.1080);
  CHECK(s.mu_plus <= 1.1095);
  // 1 + 0.5*0.217233628... + 1e-4, up to the sampling resolution of the grid.
  CHECK(s.mu_plus == doctest::Approx(1.1087168140).epsilon(1e-7));
  CHECK(s.mu_minus == doctest::Approx(0.4999).epsilon(1e-9));
}

TEST_CASE("sector estimation rejects empty grids") {
  CHECK_THROWS_AS(oog::estimate_sector([](double v) { return v; }, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(oog::estimate_sector([](double v) { return v; }, 2.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(oog::estimate_sector([](double v) { return v; }, -1.0, 1.0, -0.5),
                  std::invalid_argument);
}

TEST_CASE("hermitian evaluation extends the real form") {
  std::mt19937_64 rng(14);
  const auto f = oog::sector_to_form({0.25, 1.75});

  // Real arguments reduce to the real evaluation.
  for (int trial = 0; trial < 10; ++trial) {
    Vec xi = testsup::random_mat(rng, 1, 1);
    Vec sg = testsup::random_mat(rng, 1, 1);
    CVec z(2);
    z << std::complex<double>(xi[0], 0.0), std::complex<double>(sg[0], 0.0);
    CHECK(oog::evaluate_hermitian(f, z) ==
          doctest::Approx(oog::evaluate(f, xi, sg)).epsilon(1e-12));
  }

  // Complex argument against hand-expanded arithmetic.
  const std::complex<double> xi(0.3, -1.1), sg(-0.7, 0.4);
  CVec z(2);
  z << xi, sg;
  const double f11 = f.F11()(0, 0), f12 = f.F12()(0, 0), f22 = f.F22()(0, 0);
  const double manual = f11 * std::norm(xi) + 2.0 * f12 * (std::conj(xi) * sg).real() +
                        f22 * std::norm(sg);
  CHECK(oog::evaluate_hermitian(f, z) == doctest::Approx(manual).epsilon(1e-12));

  // Composite Hermitian evaluation agrees with its dense form.
  const auto comp = oog::compose({f, oog::sector_to_form({0.0, 1.0})}, {1.0, 3.0});
  CVec w(4);
  w << std::complex<double>(0.1, 0.2), std::complex<double>(-0.4, 0.9),
      std::complex<double>(1.2, -0.3), std::complex<double>(0.5, 0.0);
  const Mat Fb = comp.F_bar();
  // (xi, sigma) interleave: reorder w into the stacked (xi_all, sigma_all).
  const double direct = (w.adjoint() * Fb.cast<std::complex<double>>() * w)(0).real();
  CHECK(oog::evaluate_hermitian(comp, w) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("evaluation rejects mismatched block sizes") {
  const auto f = oog::sectors_to_form({{0.0, 1.0}, {0.0, 1.0}});
  CHECK_THROWS_AS(oog::evaluate(f, Vec::Zero(1), Vec::Zero(2)), oog::dimension_error);
  CHECK_THROWS_AS(oog::evaluate_hermitian(f, CVec::Zero(3)), oog::dimension_error);
}
