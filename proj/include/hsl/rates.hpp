#pragma once

// Distances of empirical samples to the standard Gaussian and log-log rate
// regression. Wasserstein-1 is exact (piecewise closed form between order
// statistics); total variation against a continuous law is identically 1
// for any empirical measure, so the artifact reports a same-kernel smoothed
// proxy and labels it as such.

#include <optional>
#include <vector>

namespace hsl {

struct RatePoint {
  int ell = 0;
  double y = 0.0;
  double y_err = 0.0;
};

struct RateSeries {
  std::vector<RatePoint> points;  // ell strictly increasing, y > 0
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  std::optional<double> theory_slope;
};

// Exact integral |F_n(x) - Phi(x)| dx over the whole line; the input is
// sorted internally. Piecewise evaluation uses the antiderivative
// x*Phi(x) + phi(x) with a root solve at each level crossing.
double wasserstein1_to_gauss(std::vector<double> sample);

// Exact empirical W1 between two equal-size samples: mean absolute
// difference of order statistics.
double wasserstein1_samples(std::vector<double> a, std::vector<double> b);

// (1/2) integral over [-6,6] of |kde_h(sample) - N(0, 1+h^2)| with a
// Gaussian kernel of bandwidth h on both sides; trapezoid step h/5 on a
// symmetric grid. Always in [0, 1].
double smoothed_tv_to_gauss(const std::vector<double>& sample, double h);

// Ordinary least squares of log y on log ell; fills slope, intercept and
// the slope standard error. Needs >= 4 points with positive y.
void rate_fit(RateSeries& series);

// Paper rate constants used as theory_slope defaults: the standardized
// functional converges at l^(-1/2); its Malliavin covariance at l^(-1/2)
// for d in {2,3}, l^(-3/4) for d = 4, l^(-1) for d >= 5.
double theory_slope_xtilde();
double theory_slope_sigma(int d);

// Standard normal CDF and density.
double gauss_cdf(double x);
double gauss_pdf(double x);

}  // namespace hsl
