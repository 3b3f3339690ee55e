#pragma once

// Zonal analysis on the unit sphere S^d embedded in R^{d+1}:
//   - eigenspace dimensions n_{l;d} of the Laplacian,
//   - Gegenbauer/ultraspherical polynomials G_{l;d} normalized to G(1)=1
//     (covariance functions of unit-variance random harmonics),
//   - Gauss rules for the projected measure (1-t^2)^{(d-2)/2} dt on [-1,1],
//   - single-sphere moments of G^q, their large-l asymptotes, and the
//     moment constants c_{q;d} defined by an oscillatory Bessel integral.

#include <iosfwd>
#include <vector>

namespace hsl {

// Total measure of S^d: mu_d = 2 pi^{(d+1)/2} / Gamma((d+1)/2).
double sphere_measure(int d);

// dim of the degree-l eigenspace, n_{l;d}. Exact integer value computed in
// 128-bit arithmetic and returned as double (exact below 2^53, correctly
// rounded above; n_{10^4;10} ~ 5e30 does not fit any built-in integer).
double eigenspace_dim(int d, int ell);

// G_{l;d}(t) with G(1)=1; equals Legendre P_l for d=2. Ratio-normalized
// three-term recurrence, |G|<=1 on [-1,1], stable at large l.
double gegenbauer_eval(int d, int ell, double t);

// All degrees 0..ell_max at one point, same recurrence. out[j] = G_{j;d}(t).
void gegenbauer_eval_upto(int d, int ell_max, double t, double* out);

// Gauss rule for integrals  int_{-1}^{1} f(t) (1-t^2)^{(d-2)/2} dt.
struct QuadratureRule1D {
  int d = 2;
  int exact_degree = 0;  // polynomial degree integrated exactly
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Rule with the canonical node count ceil((degree+2)/2)+5; cached per (d,n),
// safe for concurrent use after first construction.
const QuadratureRule1D& jacobi_rule(int d, int degree);

// Uncached construction with an explicit node count.
QuadratureRule1D make_jacobi_rule(int d, int n_nodes);

// m_q = int_{S^d} G_{l;d}(<x,y>)^q dx  (independent of y).
double sphere_moment(int d, int ell, int q);

// c_{q;d}: (d-1)! mu_d/(4 mu_{d-1}) for q=2; for q>=3 the Bessel moment
// (2^{d/2-1} Gamma(d/2))^q int_0^inf J_{d/2-1}(u)^q u^{-q(d/2-1)+d-1} du,
// evaluated between consecutive Bessel zeros with tail acceleration.
// Throws std::domain_error for the divergent case (d=2, q=4).
double asymptotic_constant(int d, int q);

// Max relative defect of the spherical convolution identity
// int G_l(<x,z>) G_l(<z,y>) dz = (mu_d/n_{l;d}) G_l(<x,y>), with the left
// side computed by projection to the Gegenbauer basis and re-synthesis.
double reproducing_check(int d, int ell);

// Leading-order prediction for sphere_moment: 2 mu_{d-1} c_{2;d}/l^{d-1}
// (q=2); 2 mu_{d-1} c_{q;d}/l^d (q>=3, except the d=2,q=4 log case which
// returns 12 log(l)/(pi l^2)).
double moment_asymptote(int d, int q, int ell);

// nodes/weights as CSV (header "node,weight", RFC 4180).
void export_rule_csv(const QuadratureRule1D& rule, std::ostream& os);

}  // namespace hsl
