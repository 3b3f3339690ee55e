#include "hsl/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "hsl/errors.hpp"
#include "json.hpp"

namespace hsl {

double hermite_eval(int q, double x) {
  if (q < 0) throw std::domain_error("hermite_eval: q < 0");
  double hm = 1.0, h = x;
  if (q == 0) return hm;
  for (int k = 1; k < q; ++k) {
    const double hp = x * h - static_cast<double>(k) * hm;
    hm = h;
    h = hp;
  }
  return h;
}

void hermite_eval_upto(int q_max, double x, double* out) {
  out[0] = 1.0;
  if (q_max == 0) return;
  out[1] = x;
  for (int k = 1; k < q_max; ++k)
    out[k + 1] = x * out[k] - static_cast<double>(k) * out[k - 1];
}

namespace {

double factorial_d(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Orthonormal Hermite p_k = H_k/sqrt(k!): out[k] for k = 0..k_max.
void hermite_orthonormal_upto(int k_max, double x, double* out) {
  out[0] = 1.0;
  if (k_max == 0) return;
  out[1] = x;
  for (int k = 1; k < k_max; ++k)
    out[k + 1] =
        (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
        std::sqrt(static_cast<double>(k + 1));
}

// Gauss quadrature for the standard normal measure. Eigenvalues of the
// Jacobi matrix (diag 0, offdiag sqrt(k)) seed the nodes; Newton steps on
// p_n polish them and weights come from the Christoffel sum 1/sum p_k^2.
// Eigenvector-based weights lose too much absolute accuracy at the extreme
// nodes once they multiply H_q values growing like x^q.
void gauss_hermite_rule(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("gauss_hermite_rule: eigensolver failed");
  nodes.resize(n);
  weights.resize(n);
  std::vector<double> p(n + 1);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    for (int it = 0; it < 4; ++it) {
      hermite_orthonormal_upto(n, x, p.data());
      const double deriv = std::sqrt(static_cast<double>(n)) * p[n - 1];
      if (deriv == 0.0) break;
      const double step = p[n] / deriv;
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    hermite_orthonormal_upto(n - 1, x, p.data());
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += p[k] * p[k];
    nodes[i] = x;
    weights[i] = 1.0 / s;
  }
}

// Coefficients against the orthonormal basis, c_q = b_q/sqrt(q!). These are
// the well-conditioned quantities; the raw b_q only ever enter downstream in
// b_q/q! or b_q^2/q! combinations.
std::vector<double> quad_coeffs_normalized(const std::function<double(double)>& phi, int Q,
                                           int n) {
  std::vector<double> nodes, weights;
  gauss_hermite_rule(n, nodes, weights);
  std::vector<double> c(Q + 1, 0.0), p(Q + 1);
  for (int i = 0; i < n; ++i) {
    const double f = weights[i] * phi(nodes[i]);
    hermite_orthonormal_upto(Q, nodes[i], p.data());
    for (int q = 0; q <= Q; ++q) c[q] += f * p[q];
  }
  return c;
}

// Default truncation: smallest Q >= 4 whose certified tail energy is below
// 1e-12 of the total, capped at 64.
int default_Q_exponential(double t) {
  const double t2 = t * t;
  const double total = std::exp(2.0 * t2);
  double partial = std::exp(t2);  // q = 0 term of exp(t^2) * sum t^{2q}/q!
  double term = std::exp(t2);
  for (int q = 1; q <= 64; ++q) {
    term *= t2 / q;
    partial += term;
    if (q >= 4 && total - partial <= 1e-12 * total) return q;
  }
  return 64;
}

}  // namespace

ChaosSpec chaos_exponential(double t, int Q) {
  if (Q < 0) Q = default_Q_exponential(t);
  ChaosSpec s;
  s.kind = ChaosKind::Exponential;
  s.t = t;
  s.b.resize(Q + 1);
  const double pref = std::exp(t * t / 2.0);
  double p = 1.0;
  for (int q = 0; q <= Q; ++q) {
    s.b[q] = pref * p;
    p *= t;
  }
  const double total = std::exp(2.0 * t * t);
  double partial = 0.0, term = std::exp(t * t);
  for (int q = 0; q <= Q; ++q) {
    partial += term;
    term *= t * t / (q + 1);
  }
  s.tail_rel = std::max(0.0, (total - partial) / total);
  return s;
}

ChaosSpec chaos_hermite(int p) {
  if (p < 0) throw std::domain_error("chaos_hermite: p < 0");
  ChaosSpec s;
  s.kind = ChaosKind::Hermite;
  s.hermite_q = p;
  s.b.assign(p + 1, 0.0);
  s.b[p] = factorial_d(p);
  return s;
}

ChaosSpec chaos_polynomial(const std::vector<double>& monomial_coeffs) {
  ChaosSpec s;
  s.kind = ChaosKind::Polynomial;
  s.poly = monomial_coeffs;
  const int M = static_cast<int>(monomial_coeffs.size()) - 1;
  if (M < 0) throw std::domain_error("chaos_polynomial: empty coefficient list");
  s.b.assign(M + 1, 0.0);
  // E[z^m H_q] = m! / (2^j j!) when m = q + 2j, zero otherwise.
  for (int m = 0; m <= M; ++m) {
    const double a = monomial_coeffs[m];
    if (a == 0.0) continue;
    for (int q = m; q >= 0; q -= 2) {
      const int j = (m - q) / 2;
      double w = factorial_d(m);
      for (int i = 1; i <= j; ++i) w /= 2.0 * i;
      s.b[q] += a * w;
    }
  }
  return s;
}

ChaosSpec chaos_coeffs(const std::function<double(double)>& phi, int Q) {
  if (Q < 0) throw std::domain_error("chaos_coeffs: Q < 0");
  const int n = std::max(Q + 16, 24);
  const std::vector<double> c1 = quad_coeffs_normalized(phi, Q, n);
  const std::vector<double> c2 = quad_coeffs_normalized(phi, Q, 2 * n);
  for (int q = 0; q <= Q; ++q) {
    const double scale = std::max(1.0, std::abs(c2[q]));
    if (std::abs(c1[q] - c2[q]) > 1e-9 * scale)
      throw ConvergenceError("chaos_coeffs: node doubling disagrees at q=" + std::to_string(q));
  }
  ChaosSpec s;
  s.kind = ChaosKind::Tabulated;
  s.b = c2;
  double rq = 1.0;  // sqrt(q!)
  for (int q = 1; q <= Q; ++q) {
    rq *= std::sqrt(static_cast<double>(q));
    s.b[q] *= rq;
  }
  return s;
}

AbsChaosSpec abs_spec(const ChaosSpec& spec) {
  AbsChaosSpec a;
  const int Q = spec.Q();
  if (Q >= 2) {
    a.abs_b.resize(Q - 1);
    for (int q = 2; q <= Q; ++q) a.abs_b[q - 2] = std::abs(spec.b[q]);
  }
  return a;
}

namespace {

template <typename Coeff>
double derivative_series_impl(const Coeff& coeff, int Q, int q_lo, int k, double x,
                              bool l_composed) {
  if (k < 0) throw std::domain_error("derivative_series: k < 0");
  const int q0 = std::max(k, q_lo);
  if (q0 > Q) return 0.0;
  std::vector<double> h(Q - k + 1);
  hermite_eval_upto(Q - k, x, h.data());
  double sum = 0.0, inv_fact = 1.0 / factorial_d(q0 - k);
  for (int q = q0; q <= Q; ++q) {
    double term = coeff(q) * h[q - k] * inv_fact;
    if (l_composed) term *= -static_cast<double>(q);
    sum += term;
    inv_fact /= (q - k + 1);
  }
  return sum;
}

}  // namespace

double derivative_series(const ChaosSpec& spec, int k, double x, bool l_composed) {
  return derivative_series_impl([&](int q) { return spec.coeff(q); }, spec.Q(), 0, k, x,
                                l_composed);
}

double derivative_series(const AbsChaosSpec& spec, int k, double x, bool l_composed) {
  return derivative_series_impl([&](int q) { return spec.coeff(q); }, spec.Q(), 2, k, x,
                                l_composed);
}

double chaos_phi_eval(const ChaosSpec& spec, double x) {
  switch (spec.kind) {
    case ChaosKind::Exponential:
      return std::exp(spec.t * x);
    case ChaosKind::Hermite:
      return hermite_eval(spec.hermite_q, x);
    case ChaosKind::Polynomial: {
      double v = 0.0;
      for (int m = static_cast<int>(spec.poly.size()) - 1; m >= 0; --m)
        v = v * x + spec.poly[m];
      return v;
    }
    case ChaosKind::Tabulated:
      return chaos_series_eval(spec, x);
  }
  return 0.0;
}

double chaos_series_eval(const ChaosSpec& spec, double x) {
  return derivative_series_impl([&](int q) { return spec.coeff(q); }, spec.Q(), 0, 0, x,
                                false);
}

double sigma_kernel_eval(const ChaosSpec& spec, double u) {
  const int Q = spec.Q();
  if (Q < 2) return 0.0;
  std::vector<double> h(Q);
  hermite_eval_upto(Q - 1, u, h.data());
  double sum = 0.0, inv_fact = 1.0;  // 1/(q-1)! at q = 2
  for (int q = 2; q <= Q; ++q) {
    sum += spec.b[q] * h[q - 1] * inv_fact;
    inv_fact /= q;
  }
  return sum;
}

double chaos_l2(const ChaosSpec& spec, int q_min) {
  double sum = 0.0;
  for (int q = std::max(q_min, 0); q <= spec.Q(); ++q)
    sum += spec.b[q] * spec.b[q] / factorial_d(q);
  return sum;
}

AssumptionReport check_assumption(const ChaosSpec& spec) {
  AssumptionReport r;
  const int Q = spec.Q();
  // Scale comparisons by the rms-normalized coefficients |b_q|/sqrt(q!):
  // raw magnitudes can grow like sqrt(q!) for jump-type phi.
  double mmax = 0.0, rq = 1.0;
  for (int q = 0; q <= Q; ++q) {
    if (q > 0) rq *= std::sqrt(static_cast<double>(q));
    mmax = std::max(mmax, std::abs(spec.coeff(q)) / rq);
  }
  r.b2_nonzero =
      Q >= 2 && std::abs(spec.b[2]) / std::sqrt(2.0) > 1e-12 * std::max(mmax, 1e-300);

  // Geometric envelope |b_q| <= C R^q fitted on the nonzero coefficients.
  std::vector<int> nz;
  for (int q = 0; q <= Q; ++q)
    if (std::abs(spec.coeff(q)) > 1e-300) nz.push_back(q);
  if (nz.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int q : nz) {
      const double y = std::log(std::abs(spec.b[q]));
      sx += q;
      sy += y;
      sxx += static_cast<double>(q) * q;
      sxy += q * y;
    }
    const double n = static_cast<double>(nz.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    r.R = std::exp(slope);
    double C = 0.0;
    for (int q : nz) C = std::max(C, std::abs(spec.b[q]) / std::pow(r.R, q));
    r.C = C;
  } else if (nz.size() == 1) {
    r.R = 1.0;
    r.C = std::abs(spec.b[nz[0]]);
  }

  // Envelope acceptability: exact finite expansions qualify outright; long
  // numerical tails must show decay of b_q^2 q^4 / q!, which a jump-type
  // phi (coefficients ~ q^{-3/4} in rms) fails.
  std::vector<int> tail;
  for (int q : nz)
    if (q >= 2) tail.push_back(q);
  if (spec.kind != ChaosKind::Tabulated || tail.size() <= 3) {
    r.envelope_ok = true;
  } else {
    // Mean log-energy of the two tail halves; oscillation in individual b_q
    // (jump-type phi) averages out while the q^{5/2} growth does not.
    const size_t mid = tail.size() / 2;
    double s1 = 0.0, s2 = 0.0;
    for (size_t i = 0; i < tail.size(); ++i) {
      const int q = tail[i];
      const double term =
          spec.b[q] * spec.b[q] * std::pow(static_cast<double>(q), 4) / factorial_d(q);
      const double y = std::log(std::max(term, 1e-300));
      (i < mid ? s1 : s2) += y;
    }
    s1 /= static_cast<double>(mid);
    s2 /= static_cast<double>(tail.size() - mid);
    r.envelope_ok = s2 < s1;
    if (!r.envelope_ok) r.note = "weighted coefficient energy grows along the tail; ";
  }

  r.pass = r.b2_nonzero && r.envelope_ok;
  if (!r.b2_nonzero) r.note += "b_2 vanishes; ";
  if (r.pass) r.note = "ok";
  return r;
}

std::string chaos_to_json(const ChaosSpec& spec) {
  nlohmann::json j;
  switch (spec.kind) {
    case ChaosKind::Exponential:
      j["kind"] = "exponential";
      j["params"] = {{"t", spec.t}};
      break;
    case ChaosKind::Hermite:
      j["kind"] = "hermite";
      j["params"] = {{"p", spec.hermite_q}};
      break;
    case ChaosKind::Polynomial:
      j["kind"] = "polynomial";
      j["params"] = {{"monomials", spec.poly}};
      break;
    case ChaosKind::Tabulated:
      j["kind"] = "tabulated";
      j["params"] = nlohmann::json::object();
      break;
  }
  j["coeffs"] = spec.b;
  j["Q"] = spec.Q();
  if (spec.has_growth) j["growth"] = {{"C", spec.C}, {"R", spec.R}};
  return j.dump(2);
}

ChaosSpec chaos_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  ChaosSpec s;
  if (kind == "exponential") {
    s.kind = ChaosKind::Exponential;
    s.t = j.at("params").at("t").get<double>();
  } else if (kind == "hermite") {
    s.kind = ChaosKind::Hermite;
    s.hermite_q = j.at("params").at("p").get<int>();
  } else if (kind == "polynomial") {
    s.kind = ChaosKind::Polynomial;
    s.poly = j.at("params").at("monomials").get<std::vector<double>>();
  } else if (kind == "tabulated") {
    s.kind = ChaosKind::Tabulated;
  } else {
    throw std::domain_error("chaos_from_json: unknown kind " + kind);
  }
  s.b = j.at("coeffs").get<std::vector<double>>();
  if (j.contains("growth")) {
    s.has_growth = true;
    s.C = j["growth"].at("C").get<double>();
    s.R = j["growth"].at("R").get<double>();
  }
  return s;
}

}  // namespace hsl
