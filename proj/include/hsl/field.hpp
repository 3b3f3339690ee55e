#pragma once

// Gaussian eigenfunction realizations on sphere grids. d = 2 uses harmonic
// synthesis from 2l+1 normal coefficients (associated Legendre recurrences
// per ring, tabulated trigonometric sums in azimuth); general d factorizes
// the covariance matrix. Harmonic analysis on the d = 2 grid yields the
// degree-l projection energy used by the Malliavin statistic.

#include <cstdint>
#include <vector>

namespace hsl {

struct SphereGrid {
  int d = 2;
  int ell = 0;       // degree the quadrature is sized for
  int n_nodes = 0;
  std::vector<double> positions;  // n_nodes x (d+1), unit vectors, row-major
  std::vector<double> weights;    // positive, sum to mu_d
  // Ring structure, present for the d = 2 latitude x azimuth grids.
  int n_rings = 0, n_az = 0;
  std::vector<double> ring_t;  // Gauss-Legendre latitudes cos(theta_r)
  std::vector<double> ring_w;
  bool has_rings() const { return n_rings > 0; }
  const double* node(int i) const { return &positions[static_cast<size_t>(i) * (d + 1)]; }
};

// Gauss-Legendre latitudes x equispaced azimuths, exact for polynomial
// integrands of degree 2*ell+1; oversample scales both counts for nonlinear
// integrands.
SphereGrid make_grid_s2(int ell, int oversample = 1);

// Product rule [-1,1] x S^(d-1), recursive, exact to degree 2*ell+1.
// Throws when the node count would exceed 2000.
SphereGrid make_grid_product(int d, int ell);

enum class FieldBackend { Synthesis, Cholesky };

struct FieldRealization {
  const SphereGrid* grid = nullptr;
  std::vector<double> values;
  int ell = 0;
  int d = 2;
  FieldBackend backend = FieldBackend::Synthesis;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

// Normalized associated Legendre values Pbar_{ell,m}(t), m = 0..ell, in the
// convention with Pbar_{ell,0}(t)^2 + 2*sum_{m>=1} Pbar_{ell,m}(t)^2
// = (2*ell+1)/(4*pi) (real harmonics addition theorem on S^2).
void sh_legendre_row(int ell, double t, double* out);

// Immutable per-(grid, ell, backend) tables; draws are independent streams
// keyed by (master seed, replicate).
class FieldSampler {
 public:
  FieldSampler(const SphereGrid& grid, int ell, FieldBackend backend);
  FieldRealization draw(std::uint64_t master_seed, std::uint64_t replicate = 0) const;
  int ell() const { return ell_; }
  FieldBackend backend() const { return backend_; }

 private:
  const SphereGrid* grid_;
  int ell_;
  FieldBackend backend_;
  // Synthesis tables.
  std::vector<double> plm_;       // n_rings x (ell+1)
  std::vector<double> cos_table_; // ell x n_az
  std::vector<double> sin_table_;
  // Covariance factor (lower triangular, n_nodes x n_nodes row-major).
  std::vector<double> chol_;
  double jitter_used_ = 0.0;
};

// Convenience wrapper: synthesis for d = 2 grids with rings, factorization
// otherwise.
FieldRealization sample_field(int d, int ell, const SphereGrid& grid, std::uint64_t seed,
                              std::uint64_t replicate = 0);

// Squared norm of the degree-ell_project projection of psi(T): computes the
// 2*ell_project+1 analysis coefficients integral psi(T(x)) Y_m(x) dx by grid
// quadrature and returns the sum of their squares (optionally the
// coefficients themselves). ell_project defaults to the realization degree.
double sh_project(const FieldRealization& realization, double (*psi)(double),
                  int ell_project = -1, std::vector<double>* coeffs = nullptr);

// Same with an arbitrary callable on the node values.
double sh_project_values(const SphereGrid& grid, const std::vector<double>& transformed,
                         int ell_project, std::vector<double>* coeffs = nullptr);

}  // namespace hsl
