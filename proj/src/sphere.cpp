#include "hsl/sphere.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>

namespace hsl {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Compensated (Kahan) accumulator; the reproducing check needs ~1e-12
// relative sums at d=4, l=64 where n_{l;d} amplifies roundoff.
struct Kahan {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace

double sphere_measure(int d) {
  require(d >= 0, "sphere_measure: d must be >= 0");
  return 2.0 * std::pow(kPi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

double eigenspace_dim(int d, int ell) {
  require(d >= 2, "eigenspace_dim: d must be >= 2");
  require(ell >= 0, "eigenspace_dim: ell must be >= 0");
  if (ell == 0) return 1.0;
  // (2l+d-1)/l * C(l+d-2, d-1), exact in 128-bit (fits for l<=1e4, d<=10).
  unsigned __int128 binom = 1;
  for (int i = 1; i <= d - 1; ++i) {
    binom = binom * static_cast<unsigned>(ell - 1 + i) / static_cast<unsigned>(i);
  }
  unsigned __int128 num = binom * static_cast<unsigned>(2 * ell + d - 1);
  num /= static_cast<unsigned>(ell);
  return static_cast<double>(num);
}

void gegenbauer_eval_upto(int d, int ell_max, double t, double* out) {
  require(d >= 2, "gegenbauer_eval: d must be >= 2");
  require(ell_max >= 0, "gegenbauer_eval: ell must be >= 0");
  // Recurrence for g_l = C^(a)_l(t)/C^(a)_l(1), a=(d-1)/2:
  //   g_{l+1} = (2(l+a) t g_l - l g_{l-1})/(l+2a),  g_0=1, g_1=t.
  const double a = 0.5 * (d - 1);
  out[0] = 1.0;
  if (ell_max == 0) return;
  out[1] = t;
  for (int l = 1; l < ell_max; ++l) {
    out[l + 1] = (2.0 * (l + a) * t * out[l] - l * out[l - 1]) / (l + 2.0 * a);
  }
}

double gegenbauer_eval(int d, int ell, double t) {
  require(d >= 2, "gegenbauer_eval: d must be >= 2");
  require(ell >= 0, "gegenbauer_eval: ell must be >= 0");
  const double a = 0.5 * (d - 1);
  double gm = 1.0, g = t;
  if (ell == 0) return gm;
  for (int l = 1; l < ell; ++l) {
    const double gp = (2.0 * (l + a) * t * g - l * gm) / (l + 2.0 * a);
    gm = g;
    g = gp;
  }
  return g;
}

namespace {

// d=2: Gauss-Legendre by Newton iteration on the recurrence; O(n^2), fine
// for the ~5e3-node rules needed by high-degree moment sums.
QuadratureRule1D legendre_rule(int n) {
  QuadratureRule1D r;
  r.d = 2;
  r.exact_degree = 2 * n - 1;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int l = 1; l < n; ++l) {
        const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

// d=3: Gauss-Chebyshev second kind, closed form.
QuadratureRule1D chebyshev2_rule(int n) {
  QuadratureRule1D r;
  r.d = 3;
  r.exact_degree = 2 * n - 1;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int k = 1; k <= n; ++k) {
    const double th = kPi * k / (n + 1.0);
    r.nodes[n - k] = std::cos(th);
    r.weights[n - k] = kPi / (n + 1.0) * std::sin(th) * std::sin(th);
  }
  return r;
}

// General d: Golub-Welsch on the monic ultraspherical recurrence for the
// weight (1-t^2)^lambda, lambda=(d-2)/2:
//   b_k = k(k+2*lambda) / ((2k+2*lambda+1)(2k+2*lambda-1)),
//   mu0 = sqrt(pi) Gamma(lambda+1)/Gamma(lambda+3/2).
QuadratureRule1D golub_welsch_rule(int d, int n) {
  const double lam = 0.5 * (d - 2);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1 > 0 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) {
    const double bk =
        k * (k + 2.0 * lam) / ((2.0 * k + 2.0 * lam + 1.0) * (2.0 * k + 2.0 * lam - 1.0));
    sub[k - 1] = std::sqrt(bk);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const double mu0 = std::sqrt(kPi) * std::tgamma(lam + 1.0) / std::tgamma(lam + 1.5);
  QuadratureRule1D r;
  r.d = d;
  r.exact_degree = 2 * n - 1;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  return r;
}

}  // namespace

QuadratureRule1D make_jacobi_rule(int d, int n_nodes) {
  require(d >= 2, "make_jacobi_rule: d must be >= 2");
  require(n_nodes >= 1, "make_jacobi_rule: need at least one node");
  if (d == 2) return legendre_rule(n_nodes);
  if (d == 3) return chebyshev2_rule(n_nodes);
  return golub_welsch_rule(d, n_nodes);
}

const QuadratureRule1D& jacobi_rule(int d, int degree) {
  require(degree >= 0, "jacobi_rule: degree must be >= 0");
  const int n = (degree + 3) / 2 + 5;  // ceil((degree+2)/2) + 5
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule1D>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = cache[{d, n}];
  if (!slot) slot = std::make_unique<QuadratureRule1D>(make_jacobi_rule(d, n));
  return *slot;
}

double sphere_moment(int d, int ell, int q) {
  require(d >= 2, "sphere_moment: d must be >= 2");
  require(ell >= 0 && q >= 0, "sphere_moment: ell and q must be >= 0");
  const QuadratureRule1D& r = jacobi_rule(d, q * ell);
  const double mu_low = sphere_measure(d - 1);
  Kahan acc;
  std::vector<double> g(ell + 1);
  for (size_t i = 0; i < r.nodes.size(); ++i) {
    gegenbauer_eval_upto(d, ell, r.nodes[i], g.data());
    acc.add(r.weights[i] * std::pow(g[ell], q));
  }
  return mu_low * acc.s;
}

namespace {

double bessel_j(double nu, double x) { return std::cyl_bessel_j(nu, x); }

double bessel_j_prime(double nu, double x) {
  // nu/x J_nu - J_{nu+1}: avoids negative orders, which std rejects.
  return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x);
}

// k-th positive zero of J_nu: McMahon expansion plus Newton.
double bessel_zero(double nu, int k) {
  const double beta = (k + 0.5 * nu - 0.25) * kPi;
  double x = beta - (4.0 * nu * nu - 1.0) / (8.0 * beta);
  for (int it = 0; it < 50; ++it) {
    const double f = bessel_j(nu, x);
    const double fp = bessel_j_prime(nu, x);
    const double dx = f / fp;
    x -= dx;
    if (std::abs(dx) < 1e-14 * x) break;
  }
  return x;
}

// Integral of f over [a,b] with a fixed 32-point Gauss-Legendre panel.
template <class F>
double panel_integral(const QuadratureRule1D& gl, double a, double b, F&& f) {
  const double h = 0.5 * (b - a);
  const double m = 0.5 * (a + b);
  double s = 0.0;
  for (size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * f(m + h * gl.nodes[i]);
  return h * s;
}

// Iterated mean acceleration for a sequence with (eventually) alternating
// remainder: repeatedly replace S by adjacent averages, read off the last.
double iterated_average(std::vector<double> s, double* spread) {
  double prev = s.back();
  while (s.size() > 1) {
    for (size_t i = 0; i + 1 < s.size(); ++i) s[i] = 0.5 * (s[i] + s[i + 1]);
    s.pop_back();
    if (spread) *spread = std::abs(s.back() - prev);
    prev = s.back();
  }
  return prev;
}

// int_0^inf J_nu(u)^q u^pw du by between-zeros segmentation. Odd q leaves a
// purely oscillatory tail (handled by averaging); even q also carries a
// monotone u^{pw-q/2} component whose tail is added from a local power fit.
double bessel_moment(double nu, int q, double pw) {
  const QuadratureRule1D gl = make_jacobi_rule(2, 32);
  auto f = [&](double u) { return std::pow(bessel_j(nu, u), q) * std::pow(u, pw); };
  const int K = 240;
  std::vector<double> seg(K), psum(K);
  double z_prev = 0.0, run = 0.0;
  for (int k = 0; k < K; ++k) {
    const double z = bessel_zero(nu, k + 1);
    seg[k] = panel_integral(gl, z_prev, z, f);
    run += seg[k];
    psum[k] = run;
    z_prev = z;
  }
  const int M = 40;  // trailing window entering the accelerator
  std::vector<double> tailsums(psum.end() - M, psum.end());
  if (q % 2 == 0) {
    // power tail: segment sums behave like c*u^beta per unit length,
    // beta = pw - q/2 (from J^q ~ (2/pi u)^{q/2} times the cos^q DC part).
    const double beta = pw - 0.5 * q;
    if (beta >= -1.0) throw std::domain_error("bessel_moment: divergent tail");
    for (int j = 0; j < M; ++j) {
      const int k = K - M + j;
      const int kp = std::min(k + 1, K - 1);
      const double sbar = 0.5 * (seg[k] + seg[kp]);  // kills the alternating part
      const double u_end = bessel_zero(nu, std::min(k + 2, K));
      const double u_mid = u_end - 0.5 * kPi;
      const double c = sbar / (std::pow(u_mid, beta) * kPi);
      const double tail = c * std::pow(u_end, beta + 1.0) / (-beta - 1.0);
      tailsums[j] = psum[std::min(k + 1, K - 1)] + tail;
    }
  }
  double spread = 0.0;
  const double val = iterated_average(tailsums, &spread);
  if (!(spread < 1e-7 * std::max(1.0, std::abs(val)))) {
    throw std::runtime_error("bessel_moment: tail acceleration did not converge");
  }
  return val;
}

}  // namespace

double asymptotic_constant(int d, int q) {
  require(d >= 2, "asymptotic_constant: d must be >= 2");
  require(q >= 2, "asymptotic_constant: q must be >= 2");
  if (q == 2) {
    double fact = 1.0;
    for (int i = 2; i <= d - 1; ++i) fact *= i;
    return fact * sphere_measure(d) / (4.0 * sphere_measure(d - 1));
  }
  // Even q has a non-oscillatory tail u^{(d-1)(1-q/2)}; it integrates iff
  // (d-1)(q/2-1) > 1. The only divergent case with q>=3 is d=2, q=4.
  if (q % 2 == 0 && (d - 1) * (q - 2) <= 2) {
    throw std::domain_error("asymptotic_constant: integral diverges (log case d=2,q=4)");
  }
  const double nu = 0.5 * d - 1.0;
  const double pw = -q * nu + d - 1.0;
  const double pref = std::pow(std::pow(2.0, nu) * std::tgamma(0.5 * d), q);
  return pref * bessel_moment(nu, q, pw);
}

double reproducing_check(int d, int ell) {
  require(d >= 2, "reproducing_check: d must be >= 2");
  require(ell >= 0, "reproducing_check: ell must be >= 0");
  const double mu = sphere_measure(d);
  const double mu_low = sphere_measure(d - 1);
  const QuadratureRule1D& r = jacobi_rule(d, 2 * ell);
  // Project G_l onto degrees 0..l, push through the convolution diagonal
  // (each degree-j coefficient picks up mu/n_j), re-synthesize, compare.
  std::vector<double> g(ell + 1);
  std::vector<Kahan> proj(ell + 1);
  for (size_t i = 0; i < r.nodes.size(); ++i) {
    gegenbauer_eval_upto(d, ell, r.nodes[i], g.data());
    const double wg = r.weights[i] * g[ell];
    for (int j = 0; j <= ell; ++j) proj[j].add(wg * g[j]);
  }
  std::vector<double> hcoef(ell + 1);
  for (int j = 0; j <= ell; ++j) {
    const double nj = eigenspace_dim(d, j);
    const double fj = nj * (mu_low / mu) * proj[j].s;  // == delta_{j,l} exactly
    hcoef[j] = fj * fj * mu / nj;
  }
  const double scale = mu / eigenspace_dim(d, ell);
  double defect = 0.0;
  for (int p = 0; p <= 200; ++p) {
    const double t = -1.0 + 2.0 * p / 200.0;
    gegenbauer_eval_upto(d, ell, t, g.data());
    Kahan lhs;
    for (int j = 0; j <= ell; ++j) lhs.add(hcoef[j] * g[j]);
    defect = std::max(defect, std::abs(lhs.s - scale * g[ell]));
  }
  return defect / scale;
}

double moment_asymptote(int d, int q, int ell) {
  require(d >= 2, "moment_asymptote: d must be >= 2");
  require(q >= 2, "moment_asymptote: q must be >= 2");
  require(ell >= 1, "moment_asymptote: ell must be >= 1");
  const double mu_low = sphere_measure(d - 1);
  if (q == 2) return 2.0 * mu_low * asymptotic_constant(d, 2) / std::pow(ell, d - 1);
  if (d == 2 && q == 4) return 12.0 * std::log(static_cast<double>(ell)) / (kPi * ell * ell);
  return 2.0 * mu_low * asymptotic_constant(d, q) / std::pow(ell, d);
}

void export_rule_csv(const QuadratureRule1D& rule, std::ostream& os) {
  os << "node,weight\r\n";
  os.precision(17);
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    os << rule.nodes[i] << "," << rule.weights[i] << "\r\n";
  }
}

}  // namespace hsl
