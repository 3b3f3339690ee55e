#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsl/rates.hpp"
#include "hsl/rng.hpp"

using namespace hsl;

namespace {

// Brute-force |F_n - Phi| by per-segment trapezoid quadrature.  Splitting at
// the sample points keeps the integrand continuous on each piece, so the
// trapezoid error is O(step^2) rather than O(step) at the jumps.
double w1_bruteforce(std::vector<double> sample, double lo, double hi,
                     int pts_per_segment) {
  std::sort(sample.begin(), sample.end());
  const size_t n = sample.size();
  std::vector<double> knots;
  knots.push_back(lo);
  for (double x : sample) knots.push_back(x);
  knots.push_back(hi);
  double acc = 0.0;
  for (size_t seg = 0; seg + 1 < knots.size(); ++seg) {
    const double a = knots[seg], b = knots[seg + 1];
    const double level = static_cast<double>(seg) / static_cast<double>(n);
    const double step = (b - a) / (pts_per_segment - 1);
    double part = 0.0;
    for (int i = 0; i < pts_per_segment; ++i) {
      const double w = (i == 0 || i == pts_per_segment - 1) ? 0.5 : 1.0;
      part += w * std::abs(level - gauss_cdf(a + i * step));
    }
    acc += part * step;
  }
  return acc;
}

std::vector<double> iid_normal(size_t n, uint64_t seed, double shift = 0.0) {
  RandomStream rs(seed, 0);
  std::vector<double> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = rs.normal() + shift;
  return v;
}

}  // namespace

TEST_CASE("W1 of a point mass at zero equals sqrt(2/pi)") {
  const double got = wasserstein1_to_gauss({0.0});
  CHECK(got == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-14));
}

TEST_CASE("W1 of a point mass at m matches the closed form") {
  // E|Z - m| = m(2 Phi(m) - 1) + 2 phi(m)
  for (double m : {0.3, -0.7, 1.5, -2.4}) {
    const double expect =
        m * (2.0 * gauss_cdf(m) - 1.0) + 2.0 * gauss_pdf(m);
    CHECK(wasserstein1_to_gauss({m}) == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("W1 exact piecewise form matches a fine trapezoid quadrature") {
  const std::vector<double> sample{-1.3, -0.25, 0.4, 0.9, 2.2};
  const double exact = wasserstein1_to_gauss(sample);
  const double brute = w1_bruteforce(sample, -12.0, 12.0, 400001);
  CHECK(exact == doctest::Approx(brute).epsilon(1e-8));
}

TEST_CASE("W1 of a large standard normal sample is small") {
  const auto sample = iid_normal(100000, 97531);
  CHECK(wasserstein1_to_gauss(sample) < 0.01);
}

TEST_CASE("W1 of a shifted normal sample recovers the shift") {
  // W1(N(m,1), N(0,1)) = |m| via the quantile coupling.
  for (double m : {0.8, -1.6}) {
    const auto sample = iid_normal(100000, 8642, m);
    CHECK(wasserstein1_to_gauss(sample) ==
          doctest::Approx(std::abs(m)).epsilon(0.02));
  }
}

TEST_CASE("W1 satisfies a translation lower bound") {
  // W1(sample + c, N) >= |c| - W1(sample, N)
  const auto sample = iid_normal(2000, 5555);
  const double base = wasserstein1_to_gauss(sample);
  for (double c : {1.0, -2.5}) {
    auto shifted = sample;
    for (double& x : shifted) x += c;
    CHECK(wasserstein1_to_gauss(shifted) >= std::abs(c) - base - 1e-12);
  }
}

TEST_CASE("W1 input validation") {
  CHECK_THROWS_AS(wasserstein1_to_gauss({}), std::domain_error);
  CHECK_THROWS_AS(wasserstein1_to_gauss({0.0, std::nan("")}),
                  std::domain_error);
  CHECK_THROWS_AS(
      wasserstein1_to_gauss({std::numeric_limits<double>::infinity()}),
      std::domain_error);
}

TEST_CASE("sample-vs-sample W1 shrinks with sample size") {
  double prev = 1e30;
  for (size_t n : {200, 2000, 20000}) {
    std::vector<double> med;
    for (uint64_t rep = 0; rep < 5; ++rep) {
      auto a = iid_normal(n, 100 + rep);
      auto b = iid_normal(n, 900 + rep);
      med.push_back(wasserstein1_samples(a, b));
    }
    std::sort(med.begin(), med.end());
    CHECK(med[2] < prev);
    prev = med[2];
  }
  CHECK_THROWS_AS(wasserstein1_samples({1.0}, {1.0, 2.0}), std::domain_error);
}

TEST_CASE("smoothed TV proxy basic properties") {
  const auto sample = iid_normal(100000, 2468);
  const double self = smoothed_tv_to_gauss(sample, 0.1);
  CHECK(self >= 0.0);
  CHECK(self <= 0.02);

  // Symmetric grid makes the proxy exactly invariant under negation.
  auto neg = sample;
  for (double& x : neg) x = -x;
  CHECK(smoothed_tv_to_gauss(neg, 0.1) == doctest::Approx(self).epsilon(1e-12));

  // A well-separated sample approaches the two-normal total variation
  // 2*Phi(shift/2) - 1; always within [0, 1].
  auto shifted = iid_normal(2000, 1357, 3.0);
  const double far = smoothed_tv_to_gauss(shifted, 0.1);
  CHECK(far <= 1.0 + 1e-9);
  CHECK(far > 0.8);
  CHECK(far < 0.92);

  // When the sample mass leaves the integration window entirely, only the
  // reference density remains and the proxy saturates at 1/2.
  auto gone = iid_normal(500, 7788, 30.0);
  CHECK(smoothed_tv_to_gauss(gone, 0.1) == doctest::Approx(0.5).epsilon(1e-6));

  CHECK_THROWS_AS(smoothed_tv_to_gauss(sample, 0.0), std::domain_error);
  CHECK_THROWS_AS(smoothed_tv_to_gauss({}, 0.1), std::domain_error);
}

TEST_CASE("rate_fit recovers an exact power law") {
  RateSeries s;
  for (int ell : {8, 16, 32, 64, 128})
    s.points.push_back({ell, 3.0 / std::sqrt(static_cast<double>(ell)), 0.0});
  rate_fit(s);
  CHECK(s.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(s.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(s.slope_err == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("rate_fit sees the log correction as a shallower slope") {
  // y = log(l)/l has local log-log slope 1/log(l) - 1, which runs from
  // about -0.52 at l=8 to -0.82 at l=256; the least-squares fit over this
  // grid lands near -0.72, strictly above the pure 1/l slope of -1.
  RateSeries s;
  for (int ell : {8, 16, 32, 64, 128, 256}) {
    const double l = static_cast<double>(ell);
    s.points.push_back({ell, std::log(l) / l, 0.0});
  }
  rate_fit(s);
  CHECK(s.slope > -0.8);
  CHECK(s.slope < -0.6);
  CHECK(s.slope_err > 0.0);
}

TEST_CASE("rate_fit input validation") {
  RateSeries s;
  s.points = {{8, 1.0, 0.0}, {16, 0.5, 0.0}, {32, 0.25, 0.0}};
  CHECK_THROWS_AS(rate_fit(s), std::domain_error);
  s.points.push_back({64, -0.1, 0.0});
  CHECK_THROWS_AS(rate_fit(s), std::domain_error);
}

TEST_CASE("theory slopes") {
  CHECK(theory_slope_xtilde() == -0.5);
  CHECK(theory_slope_sigma(2) == -0.5);
  CHECK(theory_slope_sigma(3) == -0.5);
  CHECK(theory_slope_sigma(4) == -0.75);
  CHECK(theory_slope_sigma(5) == -1.0);
  CHECK(theory_slope_sigma(9) == -1.0);
}
