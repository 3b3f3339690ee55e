#pragma once

// Nonlinear functionals of random eigenfunctions: sphere-quadrature
// integrals of phi(T), per-degree Hermite-chaos projections, closed-form
// moment formulas, the quadratic Malliavin statistic sigma, and Monte Carlo
// scans of its variance across degrees.

#include <cstdint>
#include <functional>
#include <vector>

#include "hsl/field.hpp"
#include "hsl/hermite.hpp"
#include "hsl/rates.hpp"

namespace hsl {

struct AnalyticMoments {
  double mean = 0.0;           // b_0 * mu_d
  double variance = 0.0;       // Sum_{q>=2} b_q^2/q! * mu_d * m_q
  std::vector<double> shares;  // per-chaos contributions, index q (0,1 zero)
  double sigma_mean = 0.0;     // (1/v^2) Sum_{q>=2} b_q^2/(q-1)! * mu_d * m_q
  double eta_rate = 0.0;       // concentration scale for |E[sigma] - 2|
};

// Closed-form moments of X = integral phi(T). Throws std::domain_error when
// the chaos truncation tail is not certified below tail_tol.
AnalyticMoments analytic_moments(int d, int ell, const ChaosSpec& spec,
                                 double tail_tol = 1e-9);

// Quadrature integral Sum_i w_i phi(T(x_i)).
double integrate_functional(const FieldRealization& realization, const ChaosSpec& spec);
double integrate_functional(const FieldRealization& realization,
                            const std::function<double(double)>& phi);

// Chaos component (b_q/q!) Sum_i w_i H_q(T(x_i)).
double chaos_projection(const FieldRealization& realization, const ChaosSpec& spec,
                        int q);

enum class SigmaPath { Auto, Spectral, Dense };

// sigma = (1/v^2) * double integral psi(T(x)) psi(T(z)) G(<x,z>) dx dz with
// psi(u) = Sum_{q>=2} b_q H_{q-1}(u)/(q-1)! and v^2 the analytic variance.
// Spectral path (ring grids, d = 2) computes (mu_d/(n v^2)) times the
// degree-ell projection energy of psi(T); the dense path does the double
// quadrature directly (node budget 600). Auto prefers spectral.
double sigma_sample(const FieldRealization& realization, const ChaosSpec& spec,
                    const AnalyticMoments& moments, SigmaPath path = SigmaPath::Auto);
double sigma_sample(const FieldRealization& realization, const ChaosSpec& spec,
                    SigmaPath path = SigmaPath::Auto);

struct StatSample {
  int ell = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  double X = 0.0;
  double Xtilde = 0.0;
  double sigma = 0.0;  // NaN when not requested
};

// Sampler selection: Auto picks synthesis on d=2 ring grids and dense
// Cholesky otherwise; the explicit choices force one path (and inherit its
// preconditions: synthesis needs a ring grid, Cholesky caps the node count).
enum class BackendChoice { Auto, Synthesis, Cholesky };

// Replicated field draws and functionals on a fresh grid for (d, ell).
// Per-replicate streams keyed by (seed, replicate); rows are written by
// replicate index, so the result is independent of n_threads.
std::vector<StatSample> run_replicates(int d, int ell, const ChaosSpec& spec,
                                       int reps, std::uint64_t seed, bool want_sigma,
                                       int oversample = 1, int n_threads = 1,
                                       BackendChoice backend = BackendChoice::Auto);

// Streaming (count, mean, M2) accumulator with an associative merge.
struct RunningMoments {
  long long count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x);
  void merge(const RunningMoments& other);
  double variance() const;       // unbiased, count >= 2
  double mean_std_error() const; // sqrt(variance/count)
};

// Delete-one jackknife standard error of the unbiased sample variance.
double jackknife_variance_se(const std::vector<double>& sample);

// MC variance of sigma per degree with jackknife error bars and a log-log
// fit. Requires even degrees, at least 4 of them, and reps >= 500.
RateSeries sigma_variance_scan(int d, const std::vector<int>& ell_list,
                               const ChaosSpec& spec, int reps, std::uint64_t seed,
                               int n_threads = 1);

}  // namespace hsl
