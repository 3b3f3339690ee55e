#include "hsl/field.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "hsl/errors.hpp"
#include "hsl/rng.hpp"
#include "hsl/sphere.hpp"

namespace hsl {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

SphereGrid make_grid_s2(int ell, int oversample) {
  if (ell < 0 || oversample < 1) throw std::domain_error("make_grid_s2: bad arguments");
  SphereGrid g;
  g.d = 2;
  g.ell = ell;
  g.n_rings = oversample * (ell + 1);
  g.n_az = oversample * (2 * ell + 2);
  const QuadratureRule1D rule = make_jacobi_rule(2, g.n_rings);
  g.ring_t = rule.nodes;
  g.ring_w = rule.weights;
  g.n_nodes = g.n_rings * g.n_az;
  g.positions.resize(static_cast<size_t>(g.n_nodes) * 3);
  g.weights.resize(g.n_nodes);
  const double w_az = kTwoPi / g.n_az;
  for (int r = 0; r < g.n_rings; ++r) {
    const double t = g.ring_t[r];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (int j = 0; j < g.n_az; ++j) {
      const double phi = kTwoPi * j / g.n_az;
      const int i = r * g.n_az + j;
      g.positions[3 * i + 0] = s * std::cos(phi);
      g.positions[3 * i + 1] = s * std::sin(phi);
      g.positions[3 * i + 2] = t;
      g.weights[i] = g.ring_w[r] * w_az;
    }
  }
  return g;
}

SphereGrid make_grid_product(int d, int ell) {
  if (d < 1 || ell < 0) throw std::domain_error("make_grid_product: bad arguments");
  if (d == 1) {
    SphereGrid g;
    g.d = 1;
    g.ell = ell;
    g.n_nodes = 2 * ell + 2;
    g.positions.resize(static_cast<size_t>(g.n_nodes) * 2);
    g.weights.assign(g.n_nodes, kTwoPi / g.n_nodes);
    for (int j = 0; j < g.n_nodes; ++j) {
      const double phi = kTwoPi * j / g.n_nodes;
      g.positions[2 * j] = std::cos(phi);
      g.positions[2 * j + 1] = std::sin(phi);
    }
    return g;
  }
  if (d == 2) return make_grid_s2(ell);
  const SphereGrid sub = make_grid_product(d - 1, ell);
  const QuadratureRule1D rule = make_jacobi_rule(d, ell + 1);
  const long count = static_cast<long>(rule.nodes.size()) * sub.n_nodes;
  if (count > 2000)
    throw std::domain_error("make_grid_product: node cap of 2000 exceeded at this degree");
  SphereGrid g;
  g.d = d;
  g.ell = ell;
  g.n_nodes = static_cast<int>(count);
  g.positions.resize(static_cast<size_t>(count) * (d + 1));
  g.weights.resize(count);
  int i = 0;
  for (size_t a = 0; a < rule.nodes.size(); ++a) {
    const double t = rule.nodes[a];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (int b = 0; b < sub.n_nodes; ++b, ++i) {
      double* x = &g.positions[static_cast<size_t>(i) * (d + 1)];
      x[0] = t;
      const double* y = sub.node(b);
      for (int c = 0; c < d; ++c) x[1 + c] = s * y[c];
      g.weights[i] = rule.weights[a] * sub.weights[b];
    }
  }
  return g;
}

void sh_legendre_row(int ell, double t, double* out) {
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  double pmm = std::sqrt(1.0 / (4.0 * M_PI));
  for (int m = 0; m <= ell; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    if (m == ell) {
      out[m] = pmm;
      break;
    }
    double p_prev = pmm;                                  // degree m
    double p = std::sqrt(2.0 * m + 3.0) * t * pmm;        // degree m+1
    for (int L = m + 2; L <= ell; ++L) {
      const double a = std::sqrt((4.0 * L * L - 1.0) / (static_cast<double>(L) * L - m * m));
      const double ap = std::sqrt((4.0 * (L - 1.0) * (L - 1.0) - 1.0) /
                                  ((L - 1.0) * (L - 1.0) - m * m));
      const double p_next = a * (t * p - p_prev / ap);
      p_prev = p;
      p = p_next;
    }
    out[m] = p;
  }
}

FieldSampler::FieldSampler(const SphereGrid& grid, int ell, FieldBackend backend)
    : grid_(&grid), ell_(ell), backend_(backend) {
  if (ell < 0) throw std::domain_error("FieldSampler: negative degree");
  if (backend == FieldBackend::Synthesis) {
    if (grid.d != 2 || !grid.has_rings())
      throw std::domain_error("FieldSampler: synthesis needs a d=2 ring grid");
    if (grid.n_rings < ell + 1 || grid.n_az < 2 * ell + 1)
      throw std::domain_error("FieldSampler: grid resolution below degree");
    plm_.resize(static_cast<size_t>(grid.n_rings) * (ell + 1));
    for (int r = 0; r < grid.n_rings; ++r)
      sh_legendre_row(ell, grid.ring_t[r], &plm_[static_cast<size_t>(r) * (ell + 1)]);
    cos_table_.resize(static_cast<size_t>(ell) * grid.n_az);
    sin_table_.resize(static_cast<size_t>(ell) * grid.n_az);
    for (int m = 1; m <= ell; ++m)
      for (int j = 0; j < grid.n_az; ++j) {
        const double a = kTwoPi * m * j / grid.n_az;
        cos_table_[static_cast<size_t>(m - 1) * grid.n_az + j] = std::cos(a);
        sin_table_[static_cast<size_t>(m - 1) * grid.n_az + j] = std::sin(a);
      }
  } else {
    const int N = grid.n_nodes;
    if (N > 2000)
      throw std::domain_error("FieldSampler: factorization capped at 2000 nodes");
    Eigen::MatrixXd C(N, N);
    for (int i = 0; i < N; ++i) {
      const double* xi = grid.node(i);
      for (int j = 0; j <= i; ++j) {
        const double* xj = grid.node(j);
        double t = 0.0;
        for (int c = 0; c <= grid.d; ++c) t += xi[c] * xj[c];
        t = std::min(1.0, std::max(-1.0, t));
        const double v = gegenbauer_eval(grid.d, ell, t);
        C(i, j) = v;
        C(j, i) = v;
      }
    }
    bool done = false;
    for (double jitter : {0.0, 1e-14, 1e-12, 1e-10}) {
      Eigen::MatrixXd Cj = C + jitter * Eigen::MatrixXd::Identity(N, N);
      Eigen::LLT<Eigen::MatrixXd> llt(Cj);
      if (llt.info() == Eigen::Success) {
        Eigen::MatrixXd L = llt.matrixL();
        chol_.resize(static_cast<size_t>(N) * N);
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) chol_[static_cast<size_t>(i) * N + j] = L(i, j);
        jitter_used_ = jitter;
        done = true;
        break;
      }
    }
    if (!done)
      throw ConvergenceError("FieldSampler: covariance factorization failed at max jitter");
  }
}

FieldRealization FieldSampler::draw(std::uint64_t master_seed, std::uint64_t replicate) const {
  const SphereGrid& grid = *grid_;
  FieldRealization out;
  out.grid = grid_;
  out.ell = ell_;
  out.d = grid.d;
  out.backend = backend_;
  out.seed = master_seed;
  out.replicate = replicate;
  out.values.assign(grid.n_nodes, 0.0);
  RandomStream rng(master_seed, replicate);
  if (backend_ == FieldBackend::Synthesis) {
    const int ell = ell_;
    const double scale = std::sqrt(sphere_measure(2) / (2.0 * ell + 1.0));
    const double a0 = rng.normal();
    std::vector<double> ac(ell + 1, 0.0), as(ell + 1, 0.0);
    for (int m = 1; m <= ell; ++m) {
      ac[m] = rng.normal();
      as[m] = rng.normal();
    }
    const double sqrt2 = std::sqrt(2.0);
    std::vector<double> cc(ell + 1), cs(ell + 1);
    for (int r = 0; r < grid.n_rings; ++r) {
      const double* p = &plm_[static_cast<size_t>(r) * (ell + 1)];
      const double base = scale * a0 * p[0];
      for (int m = 1; m <= ell; ++m) {
        cc[m] = scale * sqrt2 * p[m] * ac[m];
        cs[m] = scale * sqrt2 * p[m] * as[m];
      }
      double* row = &out.values[static_cast<size_t>(r) * grid.n_az];
      for (int j = 0; j < grid.n_az; ++j) row[j] = base;
      for (int m = 1; m <= ell; ++m) {
        const double* ct = &cos_table_[static_cast<size_t>(m - 1) * grid.n_az];
        const double* st = &sin_table_[static_cast<size_t>(m - 1) * grid.n_az];
        const double am = cc[m], bm = cs[m];
        for (int j = 0; j < grid.n_az; ++j) row[j] += am * ct[j] + bm * st[j];
      }
    }
  } else {
    const int N = grid.n_nodes;
    std::vector<double> z(N);
    for (int i = 0; i < N; ++i) z[i] = rng.normal();
    for (int i = 0; i < N; ++i) {
      const double* Li = &chol_[static_cast<size_t>(i) * N];
      double acc = 0.0;
      for (int j = 0; j <= i; ++j) acc += Li[j] * z[j];
      out.values[i] = acc;
    }
  }
  return out;
}

FieldRealization sample_field(int d, int ell, const SphereGrid& grid, std::uint64_t seed,
                              std::uint64_t replicate) {
  const FieldBackend backend = (d == 2 && grid.has_rings()) ? FieldBackend::Synthesis
                                                            : FieldBackend::Cholesky;
  return FieldSampler(grid, ell, backend).draw(seed, replicate);
}

double sh_project_values(const SphereGrid& grid, const std::vector<double>& transformed,
                         int ell_project, std::vector<double>* coeffs) {
  if (!grid.has_rings() || grid.d != 2)
    throw std::domain_error("sh_project: needs a d=2 ring grid");
  if (grid.n_az < 2 * ell_project + 1)
    throw std::domain_error("sh_project: azimuth count below projection degree");
  if (static_cast<int>(transformed.size()) != grid.n_nodes)
    throw std::domain_error("sh_project: value count does not match grid");
  const int L = ell_project;
  const double w_az = kTwoPi / grid.n_az;
  std::vector<double> c(2 * L + 1, 0.0);  // [m=0, cos1, sin1, cos2, sin2, ...]
  std::vector<double> p(L + 1), sc(L + 1), ss(L + 1);
  const double sqrt2 = std::sqrt(2.0);
  for (int r = 0; r < grid.n_rings; ++r) {
    sh_legendre_row(L, grid.ring_t[r], p.data());
    const double* row = &transformed[static_cast<size_t>(r) * grid.n_az];
    double s0 = 0.0;
    for (int j = 0; j < grid.n_az; ++j) s0 += row[j];
    for (int m = 1; m <= L; ++m) sc[m] = ss[m] = 0.0;
    for (int j = 0; j < grid.n_az; ++j) {
      const double phi = kTwoPi * j / grid.n_az;
      const double c1 = std::cos(phi), s1 = std::sin(phi);
      double cm = 1.0, sm = 0.0;
      const double v = row[j];
      for (int m = 1; m <= L; ++m) {
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
        sc[m] += v * cm;
        ss[m] += v * sm;
      }
    }
    const double wr = grid.ring_w[r] * w_az;
    c[0] += wr * p[0] * s0;
    for (int m = 1; m <= L; ++m) {
      c[2 * m - 1] += wr * sqrt2 * p[m] * sc[m];
      c[2 * m] += wr * sqrt2 * p[m] * ss[m];
    }
  }
  double energy = 0.0;
  for (double v : c) energy += v * v;
  if (coeffs) *coeffs = std::move(c);
  return energy;
}

double sh_project(const FieldRealization& realization, double (*psi)(double), int ell_project,
                  std::vector<double>* coeffs) {
  if (ell_project < 0) ell_project = realization.ell;
  std::vector<double> transformed(realization.values.size());
  for (size_t i = 0; i < transformed.size(); ++i) transformed[i] = psi(realization.values[i]);
  return sh_project_values(*realization.grid, transformed, ell_project, coeffs);
}

}  // namespace hsl
