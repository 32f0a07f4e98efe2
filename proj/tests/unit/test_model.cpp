#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "optomech/errors.hpp"
#include "optomech/model.hpp"

using namespace optomech;
using testing::kPi;

TEST_SUITE("model") {

TEST_CASE("spring shift vanishes on resonance and is odd in detuning") {
  CHECK(optical_spring_shift(1.0, 10.0, 0.0, 3.0) == 0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 100; ++k) {
    const double d = u(rng);
    CHECK(optical_spring_shift(0.3, 7.0, -d, 2.5) == -optical_spring_shift(0.3, 7.0, d, 2.5));
  }
}

TEST_CASE("spring shift at the operating detuning matches its closed form") {
  const SystemParams sys = reference_system();
  const double delta = -sys.kappa / (2.0 * std::sqrt(3.0));
  const double closed = -std::sqrt(3.0) * sys.g0[0] * sys.g0[0] * 2.88e13 / sys.kappa;
  const double got = optical_spring_shift(sys.g0[0], 2.88e13, delta, sys.kappa);
  CHECK(testing::rel_err(got, closed) < 1e-12);
  // Same number in Hz by hand: -√3 · (28.2e-3)² · 2.88e13 / 38.9e6.
  const double hz = -std::sqrt(3.0) * 28.2e-3 * 28.2e-3 * 2.88e13 / 38.9e6;
  CHECK(got / kTwoPi == doctest::Approx(hz).epsilon(1e-12));
  CHECK(got / kTwoPi == doctest::Approx(-1020.0).epsilon(1e-3));
}

TEST_CASE("spring shift magnitude peaks at half the linewidth") {
  const double kappa = 2.0;
  double best = 0.0, at = 0.0;
  for (int i = 1; i <= 20000; ++i) {
    const double d = 0.0002 * i;
    const double s = std::abs(optical_spring_shift(1.0, 1.0, d, kappa));
    if (s > best) {
      best = s;
      at = d;
    }
  }
  CHECK(at == doctest::Approx(kappa / 2.0).epsilon(2e-4));
}

TEST_CASE("couplings vanish without modulation and follow the sign of the detuning") {
  const SystemParams sys = reference_system();
  DriveConfig d = reference_drive(sys);
  d.beta_s = d.beta_t = 0.0;
  const EffectiveCouplings c = effective_couplings(sys, d);
  CHECK(c.g_s == 0.0);
  CHECK(c.g_t == 0.0);
  CHECK(c.dOmega_opt[0] < 0.0);
  CHECK(c.dOmega_opt[1] < 0.0);
  d.detuning = -d.detuning;
  const EffectiveCouplings b = effective_couplings(sys, d);
  CHECK(b.dOmega_opt[0] > 0.0);
  CHECK(b.dOmega_opt[1] > 0.0);
}

TEST_CASE("squeezing rate definition including the stiffened-spring factor") {
  // β_s = 4 with |δΩ₁| = 1 gives g_s = 1/(1 + 2/Ω₁), i.e. 1 for a soft spring.
  SystemParams sys = reference_system();
  DriveConfig d = reference_drive(sys);
  d.beta_s = 4.0;
  d.n_d = 1.0 / std::abs(optical_spring_shift(sys.g0[0], 1.0, d.detuning, sys.kappa));
  const EffectiveCouplings c = effective_couplings(sys, d);
  CHECK(std::abs(c.dOmega_opt[0]) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.g_s == doctest::Approx(1.0 / (1.0 + 2.0 / sys.omega_m[0])).epsilon(1e-14));
  CHECK(c.g_s == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("operating-point rates") {
  const SystemParams sys = reference_system();
  const DriveConfig d = reference_drive(sys);
  const EffectiveCouplings c = effective_couplings(sys, d);
  // Independent arithmetic from the closed-form shifts.
  const double s1 = std::sqrt(3.0) * sys.g0[0] * sys.g0[0] * d.n_d / sys.kappa;
  const double s2 = std::sqrt(3.0) * sys.g0[1] * sys.g0[1] * d.n_d / sys.kappa;
  const double gs = 0.0476 * s1 / (4.0 * (1.0 + 2.0 * s1 / sys.omega_m[0]));
  const double gt = 0.28 * std::sqrt(s1 * s2) / 2.0;
  CHECK(c.g_s == doctest::Approx(gs).epsilon(1e-12));
  CHECK(c.g_t == doctest::Approx(gt).epsilon(1e-12));
  CHECK(c.g_s / kTwoPi == doctest::Approx(11.98).epsilon(1e-3));
  CHECK(c.g_t / kTwoPi == doctest::Approx(31.95).epsilon(1e-3));
  CHECK(c.dOmega_opt[1] / kTwoPi == doctest::Approx(-51.06).epsilon(1e-3));
  CHECK(c.beta_th == doctest::Approx(0.0396268).epsilon(1e-5));
}

TEST_CASE("rates are linear in the modulation depths") {
  const SystemParams sys = reference_system();
  DriveConfig d = reference_drive(sys);
  const EffectiveCouplings a = effective_couplings(sys, d);
  d.beta_s *= 3.0;
  d.beta_t *= 0.5;
  const EffectiveCouplings b = effective_couplings(sys, d);
  CHECK(b.g_s == doctest::Approx(3.0 * a.g_s).epsilon(1e-14));
  CHECK(b.g_t == doctest::Approx(0.5 * a.g_t).epsilon(1e-14));
}

TEST_CASE("cooperativity formula and scaling") {
  CHECK(cooperativity(1.0, 1.0, 2.0, 2.0) == 1.0);
  CHECK(cooperativity(1.0, 0.0, 2.0, 2.0) == 0.0);
  const double c = cooperativity(0.7, 3.0, 1.3, 2.1);
  CHECK(cooperativity(0.7, 6.0, 1.3, 2.1) == doctest::Approx(2.0 * c).epsilon(1e-15));
  CHECK(cooperativity(2.1, 3.0, 1.3, 2.1) == doctest::Approx(9.0 * c).epsilon(1e-14));
}

TEST_CASE("table parameters give cooperativities about four times the quoted ones") {
  const SystemParams sys = reference_system();
  const double c1 = cooperativity(sys.g0[0], 2.88e13, sys.gamma_m[0], sys.kappa);
  const double c2 = cooperativity(sys.g0[1], 2.88e13, sys.gamma_m[1], sys.kappa);
  CHECK(c1 / 14.9 == doctest::Approx(4.0).epsilon(0.02));
  CHECK(c2 / 1.90 == doctest::Approx(4.5).epsilon(0.05));
}

TEST_CASE("threshold limits and errors") {
  CHECK_THROWS_AS(squeeze_threshold(0.0, 1.0, 100.0), InvalidArgument);
  CHECK(squeeze_threshold(1e-3, 1e-4, 1e6) == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(squeeze_threshold(-1e-3, 1e-4, 1e6) == squeeze_threshold(1e-3, 1e-4, 1e6));
  CHECK(squeeze_threshold(5.0, 5.0, 1e300) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(analytic_gain(0.04, 0.04, Quadrature::deamplified) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("analytic gain by phase") {
  const double th = 0.04;
  CHECK(analytic_gain(0.02, th, 0.0) == doctest::Approx(analytic_gain(0.02, th, Quadrature::deamplified)));
  CHECK(analytic_gain(0.02, th, kPi / 2) == doctest::Approx(analytic_gain(0.02, th, Quadrature::amplified)));
  for (double p : {0.1, 0.7, 1.3, 2.9}) {
    CHECK(analytic_gain(0.02, th, p) == doctest::Approx(analytic_gain(0.02, th, p + kPi)).epsilon(1e-12));
  }
  CHECK(analytic_gain(0.0, th, 0.4) == doctest::Approx(1.0));
}

TEST_CASE("modulated photon number") {
  DriveConfig d;
  d.n_d = 5.0;
  const std::array<double, 2> w{3.0, 7.0};
  CHECK(modulated_photon_number(0.37, d, w) == 5.0);
  d.beta_s = 0.2;
  d.beta_t = 0.3;
  CHECK(modulated_photon_number(0.0, d, w) == doctest::Approx(5.0 * 1.5));
  d.phi_s = 0.4;
  d.phi_t = -1.1;
  // 2Ω₁ = 6 and Ω₂ - Ω₁ = 4 share the period π. Simpson over three periods.
  const int n = 6000;
  const double T = 3.0 * kPi;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += wgt * modulated_photon_number(T * i / n, d, w);
  }
  CHECK(sum * (T / n) / 3.0 / T == doctest::Approx(5.0).epsilon(1e-10));
}

TEST_CASE("parameter validation") {
  SystemParams sys = reference_system();
  CHECK(validate(sys).empty());
  SystemParams bad = sys;
  bad.kappa_ex = 2.0 * sys.kappa;
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = sys;
  std::swap(bad.omega_m[0], bad.omega_m[1]);
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = sys;
  bad.gamma_m[1] = 0.5 * sys.omega_m[1];
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = sys;
  bad.gamma_m[0] = 0.01 * sys.omega_m[0];
  CHECK(validate(bad).size() == 1);

  DriveConfig d = reference_drive(sys);
  CHECK(validate(d, sys).empty());
  d.beta_s = -0.1;
  CHECK_THROWS_AS(validate(d, sys), InvalidArgument);
  d.beta_s = 1.5;
  CHECK(validate(d, sys).size() == 1);
  d.beta_s = 0.01;
  d.detuning = -sys.omega_m[0];
  CHECK(validate(d, sys).size() == 1);
}

}  // TEST_SUITE
