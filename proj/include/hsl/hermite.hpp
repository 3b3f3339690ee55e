#pragma once

// Probabilists' Hermite polynomials and Hermite-chaos coefficient series
// b_q = E[phi(Z) H_q(Z)] of a test function phi, with the companion
// absolute-coefficient series and the regularity checks the downstream
// statistics rely on (b_2 != 0, geometric coefficient envelope).

#include <functional>
#include <string>
#include <vector>

namespace hsl {

double hermite_eval(int q, double x);
// out[j] = H_j(x) for j = 0..q_max.
void hermite_eval_upto(int q_max, double x, double* out);

enum class ChaosKind { Exponential, Hermite, Polynomial, Tabulated };

struct ChaosSpec {
  ChaosKind kind = ChaosKind::Tabulated;
  double t = 0.0;              // exponential parameter
  int hermite_q = 0;           // single-Hermite index
  std::vector<double> poly;    // monomial coefficients, ascending degree
  std::vector<double> b;       // b_0..b_Q
  bool has_growth = false;     // |b_q| <= C R^q envelope fitted
  double C = 0.0, R = 0.0;
  double tail_rel = 0.0;       // certified Sum_{q>Q} b_q^2/q! relative to total

  int Q() const { return static_cast<int>(b.size()) - 1; }
  double coeff(int q) const {
    return (q >= 0 && q < static_cast<int>(b.size())) ? b[q] : 0.0;
  }
};

// Absolute-coefficient companion: coefficients |b_q| for q >= 2.
struct AbsChaosSpec {
  std::vector<double> abs_b;  // index 0 holds |b_2|
  double coeff(int q) const {
    const int i = q - 2;
    return (i >= 0 && i < static_cast<int>(abs_b.size())) ? abs_b[i] : 0.0;
  }
  int Q() const { return static_cast<int>(abs_b.size()) + 1; }
};

// Constructors. Q = -1 selects the default truncation: smallest Q >= 4 with
// certified tail <= 1e-12 of the total chaos energy (cap 64).
ChaosSpec chaos_exponential(double t, int Q = -1);
ChaosSpec chaos_hermite(int p);
ChaosSpec chaos_polynomial(const std::vector<double>& monomial_coeffs);
// Numerical path: Gauss-Hermite quadrature with node-doubling verification;
// throws ConvergenceError when the two estimates disagree beyond 1e-9.
ChaosSpec chaos_coeffs(const std::function<double(double)>& phi, int Q);

AbsChaosSpec abs_spec(const ChaosSpec& spec);

// Sum_{q >= max(k, q_min)} b_q H_{q-k}(x)/(q-k)!. l_composed multiplies each
// term by -q (the generator-composed series). For the abs variant q_min = 2.
double derivative_series(const ChaosSpec& spec, int k, double x, bool l_composed = false);
double derivative_series(const AbsChaosSpec& spec, int k, double x, bool l_composed = false);

// phi evaluated the closed-form way when the kind has one, else the series.
double chaos_phi_eval(const ChaosSpec& spec, double x);
// Always the truncated Hermite series.
double chaos_series_eval(const ChaosSpec& spec, double x);
// psi(u) = Sum_{q>=2} b_q H_{q-1}(u)/(q-1)!  (the collapsed sigma kernel).
double sigma_kernel_eval(const ChaosSpec& spec, double u);
// Sum_{q >= q_min} b_q^2/q!.
double chaos_l2(const ChaosSpec& spec, int q_min);

struct AssumptionReport {
  bool b2_nonzero = false;
  bool envelope_ok = false;
  double C = 0.0, R = 0.0;
  bool pass = false;
  std::string note;
};
AssumptionReport check_assumption(const ChaosSpec& spec);

std::string chaos_to_json(const ChaosSpec& spec);
ChaosSpec chaos_from_json(const std::string& text);

}  // namespace hsl
