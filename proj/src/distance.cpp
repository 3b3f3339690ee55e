#include "hsl/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsl {

double gauss_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double gauss_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.3989422804014326779399460599344;
}

namespace {

// Antiderivative of Phi; tends to 0 at -inf and to x at +inf.
double cdf_primitive(double x) { return x * gauss_cdf(x) + gauss_pdf(x); }

// integral_a^b |c - Phi(x)| dx with a <= b, 0 <= c <= 1.
double segment_abs(double a, double b, double c) {
  if (b <= a) return 0.0;
  auto signed_part = [c](double lo, double hi) {
    return c * (hi - lo) - (cdf_primitive(hi) - cdf_primitive(lo));
  };
  const double fa = c - gauss_cdf(a);
  const double fb = c - gauss_cdf(b);
  if (fa == 0.0 || fb == 0.0 || (fa > 0) == (fb > 0))
    return std::abs(signed_part(a, b));
  // Phi crosses level c inside (a, b): bisection plus Newton polish.
  double lo = a, hi = b;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (((c - gauss_cdf(mid)) > 0) == (fa > 0))
      lo = mid;
    else
      hi = mid;
  }
  double r = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double pdf = gauss_pdf(r);
    if (pdf < 1e-300) break;
    r -= (gauss_cdf(r) - c) / pdf;
    r = std::min(std::max(r, a), b);
  }
  return std::abs(signed_part(a, r)) + std::abs(signed_part(r, b));
}

}  // namespace

double wasserstein1_to_gauss(std::vector<double> sample) {
  if (sample.size() < 1) throw std::domain_error("wasserstein1: empty sample");
  for (double x : sample)
    if (!std::isfinite(x)) throw std::domain_error("wasserstein1: non-finite input");
  std::sort(sample.begin(), sample.end());
  const size_t n = sample.size();
  // Left tail: F_n = 0, integral of Phi up to the smallest point.
  double total = cdf_primitive(sample.front());
  for (size_t i = 0; i + 1 < n; ++i)
    total += segment_abs(sample[i], sample[i + 1],
                         static_cast<double>(i + 1) / static_cast<double>(n));
  // Right tail: integral of 1 - Phi from the largest point.
  total += cdf_primitive(sample.back()) - sample.back();
  return total;
}

double wasserstein1_samples(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::domain_error("wasserstein1_samples: need equal nonzero sizes");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double smoothed_tv_to_gauss(const std::vector<double>& sample, double h) {
  if (h <= 0.0) throw std::domain_error("smoothed_tv: bandwidth must be positive");
  if (sample.empty()) throw std::domain_error("smoothed_tv: empty sample");
  const double lim = 6.0;
  const int half_steps = static_cast<int>(std::ceil(lim / (h / 5.0)));
  const int n_pts = 2 * half_steps + 1;  // symmetric grid including 0
  const double step = lim / half_steps;
  const double target_sd = std::sqrt(1.0 + h * h);
  const double inv_h = 1.0 / h;
  const double kde_norm = inv_h / static_cast<double>(sample.size());
  double acc = 0.0;
  for (int k = 0; k < n_pts; ++k) {
    const double x = -lim + k * step;
    double f = 0.0;
    for (double s : sample) f += gauss_pdf((x - s) * inv_h);
    f *= kde_norm;
    const double g = gauss_pdf(x / target_sd) / target_sd;
    const double w = (k == 0 || k == n_pts - 1) ? 0.5 : 1.0;
    acc += w * std::abs(f - g);
  }
  return 0.5 * acc * step;
}

void rate_fit(RateSeries& series) {
  const size_t n = series.points.size();
  if (n < 4) throw std::domain_error("rate_fit: need at least 4 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const RatePoint& p : series.points) {
    if (p.y <= 0.0) throw std::domain_error("rate_fit: non-positive value");
    if (p.ell <= 0) throw std::domain_error("rate_fit: non-positive degree");
    const double x = std::log(static_cast<double>(p.ell));
    const double y = std::log(p.y);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  series.slope = (n * sxy - sx * sy) / den;
  series.intercept = (sy - series.slope * sx) / n;
  double rss = 0.0;
  for (const RatePoint& p : series.points) {
    const double x = std::log(static_cast<double>(p.ell));
    const double r = std::log(p.y) - (series.intercept + series.slope * x);
    rss += r * r;
  }
  const double sigma2 = rss / static_cast<double>(n - 2);
  series.slope_err = std::sqrt(sigma2 * n / den);
}

double theory_slope_xtilde() { return -0.5; }

double theory_slope_sigma(int d) {
  if (d <= 3) return -0.5;
  if (d == 4) return -0.75;
  return -1.0;
}

}  // namespace hsl
