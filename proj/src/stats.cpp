#include "hsl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "hsl/sphere.hpp"

namespace hsl {

namespace {

double factorial(int q) {
  double f = 1.0;
  for (int i = 2; i <= q; ++i) f *= i;
  return f;
}

}  // namespace

AnalyticMoments analytic_moments(int d, int ell, const ChaosSpec& spec,
                                 double tail_tol) {
  if (spec.tail_rel > tail_tol)
    throw std::domain_error("analytic_moments: chaos truncation not certified");
  if (d < 1 || ell < 1) throw std::domain_error("analytic_moments: need d >= 1, ell >= 1");
  const double mu = sphere_measure(d);
  AnalyticMoments out;
  out.mean = spec.coeff(0) * mu;
  out.shares.assign(spec.Q() + 1, 0.0);
  double sigma_num = 0.0;
  for (int q = 2; q <= spec.Q(); ++q) {
    const double bq = spec.coeff(q);
    if (bq == 0.0) continue;
    const double mq = sphere_moment(d, ell, q);
    const double share = bq * bq / factorial(q) * mu * mq;
    out.shares[q] = share;
    out.variance += share;
    sigma_num += bq * bq / factorial(q - 1) * mu * mq;
  }
  if (out.variance > 0.0) out.sigma_mean = sigma_num / out.variance;
  const double l = static_cast<double>(ell);
  if (d == 2)
    out.eta_rate = (spec.coeff(4) != 0.0) ? std::log(l) / l : 1.0 / l;
  else
    out.eta_rate = 1.0 / l;
  return out;
}

double integrate_functional(const FieldRealization& realization,
                            const ChaosSpec& spec) {
  const SphereGrid& g = *realization.grid;
  double acc = 0.0;
  for (int i = 0; i < g.n_nodes; ++i)
    acc += g.weights[i] * chaos_phi_eval(spec, realization.values[i]);
  return acc;
}

double integrate_functional(const FieldRealization& realization,
                            const std::function<double(double)>& phi) {
  const SphereGrid& g = *realization.grid;
  double acc = 0.0;
  for (int i = 0; i < g.n_nodes; ++i)
    acc += g.weights[i] * phi(realization.values[i]);
  return acc;
}

double chaos_projection(const FieldRealization& realization, const ChaosSpec& spec,
                        int q) {
  if (q < 0) throw std::domain_error("chaos_projection: q must be >= 0");
  const double bq = spec.coeff(q);
  if (bq == 0.0) return 0.0;
  const SphereGrid& g = *realization.grid;
  double acc = 0.0;
  for (int i = 0; i < g.n_nodes; ++i)
    acc += g.weights[i] * hermite_eval(q, realization.values[i]);
  return bq / factorial(q) * acc;
}

double sigma_sample(const FieldRealization& realization, const ChaosSpec& spec,
                    const AnalyticMoments& moments, SigmaPath path) {
  const SphereGrid& g = *realization.grid;
  const double v2 = moments.variance;
  if (v2 <= 0.0) throw std::domain_error("sigma_sample: zero analytic variance");
  if (path == SigmaPath::Auto)
    path = g.has_rings() ? SigmaPath::Spectral : SigmaPath::Dense;
  std::vector<double> psi(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i)
    psi[i] = sigma_kernel_eval(spec, realization.values[i]);
  if (path == SigmaPath::Spectral) {
    if (!g.has_rings() || g.d != 2)
      throw std::domain_error("sigma_sample: spectral path needs a d=2 ring grid");
    const double energy = sh_project_values(g, psi, realization.ell);
    const double n = eigenspace_dim(g.d, realization.ell);
    return sphere_measure(g.d) / (n * v2) * energy;
  }
  if (g.n_nodes > 600)
    throw std::domain_error("sigma_sample: dense path node budget exceeded");
  const int dim = g.d + 1;
  double acc = 0.0;
  for (int i = 0; i < g.n_nodes; ++i) {
    const double* xi = g.node(i);
    acc += g.weights[i] * g.weights[i] * psi[i] * psi[i];  // t = 1 diagonal
    for (int j = i + 1; j < g.n_nodes; ++j) {
      const double* xj = g.node(j);
      double t = 0.0;
      for (int k = 0; k < dim; ++k) t += xi[k] * xj[k];
      t = std::min(1.0, std::max(-1.0, t));
      acc += 2.0 * g.weights[i] * g.weights[j] * psi[i] * psi[j] *
             gegenbauer_eval(g.d, realization.ell, t);
    }
  }
  return acc / v2;
}

double sigma_sample(const FieldRealization& realization, const ChaosSpec& spec,
                    SigmaPath path) {
  return sigma_sample(realization, spec,
                      analytic_moments(realization.d, realization.ell, spec), path);
}

std::vector<StatSample> run_replicates(int d, int ell, const ChaosSpec& spec,
                                       int reps, std::uint64_t seed, bool want_sigma,
                                       int oversample, int n_threads,
                                       BackendChoice backend) {
  if (reps < 1) throw std::domain_error("run_replicates: reps must be >= 1");
  if (n_threads < 1) n_threads = 1;
  const SphereGrid grid =
      (d == 2) ? make_grid_s2(ell, oversample) : make_grid_product(d, ell);
  FieldBackend fb;
  switch (backend) {
    case BackendChoice::Synthesis:
      fb = FieldBackend::Synthesis;
      break;
    case BackendChoice::Cholesky:
      fb = FieldBackend::Cholesky;
      break;
    default:
      fb = grid.has_rings() ? FieldBackend::Synthesis : FieldBackend::Cholesky;
  }
  const FieldSampler sampler(grid, ell, fb);
  const AnalyticMoments moments = analytic_moments(d, ell, spec);
  const double sd = std::sqrt(moments.variance);

  std::vector<StatSample> rows(reps);
  auto work = [&](int thread_id) {
    for (int r = thread_id; r < reps; r += n_threads) {
      const FieldRealization f = sampler.draw(seed, static_cast<std::uint64_t>(r));
      StatSample& row = rows[r];
      row.ell = ell;
      row.seed = seed;
      row.replicate = static_cast<std::uint64_t>(r);
      row.X = integrate_functional(f, spec);
      row.Xtilde = (row.X - moments.mean) / sd;
      row.sigma = want_sigma ? sigma_sample(f, spec, moments)
                             : std::numeric_limits<double>::quiet_NaN();
    }
  };
  if (n_threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return rows;
}

void RunningMoments::add(double x) {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

void RunningMoments::merge(const RunningMoments& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count), nb = static_cast<double>(other.count);
  const double delta = other.mean - mean;
  const double n = na + nb;
  mean += delta * nb / n;
  m2 += other.m2 + delta * delta * na * nb / n;
  count += other.count;
}

double RunningMoments::variance() const {
  if (count < 2) throw std::domain_error("RunningMoments: need count >= 2");
  return m2 / static_cast<double>(count - 1);
}

double RunningMoments::mean_std_error() const {
  return std::sqrt(variance() / static_cast<double>(count));
}

double jackknife_variance_se(const std::vector<double>& sample) {
  const size_t n = sample.size();
  if (n < 3) throw std::domain_error("jackknife_variance_se: need n >= 3");
  double s1 = 0.0, s2 = 0.0;
  for (double x : sample) {
    s1 += x;
    s2 += x * x;
  }
  // theta_(i): unbiased variance of the sample with x_i removed.
  const double nm1 = static_cast<double>(n - 1), nm2 = static_cast<double>(n - 2);
  std::vector<double> theta(n);
  double theta_bar = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double m = (s1 - sample[i]) / nm1;
    theta[i] = (s2 - sample[i] * sample[i] - nm1 * m * m) / nm2;
    theta_bar += theta[i];
  }
  theta_bar /= static_cast<double>(n);
  double ss = 0.0;
  for (double t : theta) ss += (t - theta_bar) * (t - theta_bar);
  return std::sqrt(nm1 / static_cast<double>(n) * ss);
}

RateSeries sigma_variance_scan(int d, const std::vector<int>& ell_list,
                               const ChaosSpec& spec, int reps, std::uint64_t seed,
                               int n_threads) {
  if (reps < 500) throw std::domain_error("sigma_variance_scan: reps must be >= 500");
  if (ell_list.size() < 4)
    throw std::domain_error("sigma_variance_scan: need at least 4 degrees");
  int prev = 0;
  for (int ell : ell_list) {
    if (ell % 2 != 0 || ell <= prev)
      throw std::domain_error("sigma_variance_scan: degrees must be even and increasing");
    prev = ell;
  }
  RateSeries series;
  for (int ell : ell_list) {
    const auto rows = run_replicates(d, ell, spec, reps, seed, true, 1, n_threads);
    std::vector<double> sig(rows.size());
    RunningMoments acc;
    for (size_t i = 0; i < rows.size(); ++i) {
      sig[i] = rows[i].sigma;
      acc.add(rows[i].sigma);
    }
    series.points.push_back({ell, acc.variance(), jackknife_variance_se(sig)});
  }
  rate_fit(series);
  series.theory_slope = (d == 2) ? -1.0 : -(d - 1) / 2.0;
  return series;
}

}  // namespace hsl
