#pragma once

// Multi-point integrals int_{(S^d)^n} prod_e f_e(<x_u,x_v>) dx for graphs
// whose edges carry powers of the degree-l Gegenbauer kernel. A spectral
// reducer contracts series-parallel graphs exactly through the reproducing
// identity; a shared-sample Monte Carlo oracle covers the rest (the 4-clique
// is not series-parallel). On top of these: the gamma coefficients of kernel
// powers, the three convolution-identity checks recovering the constants
// c_d, the augmented 4-node integrals frak_I, and their l^3-scaling scan.

#include <cstdint>
#include <string>
#include <vector>

#include "hsl/diagram.hpp"

namespace hsl {

// f(<x,y>) = sum_j coeffs[j] G_{j;d}(<x,y>).
struct SpectralEdge {
  std::vector<double> coeffs;
  int bandwidth() const { return static_cast<int>(coeffs.size()) - 1; }
  double eval(int d, double t) const;
};

// Coefficient vector gamma_{j,ell;r} of G_{ell;d}^r, j = 0..r*ell. Cached.
SpectralEdge expand_power(int d, int ell, int r);

// gamma_hat_{ell;r} = (n_{ell;d}/mu_d) * sphere_moment(d, ell, r+1).
double gamma_hat(int d, int ell, int r);

struct GraphEdge {
  int u = 0, v = 0;
  int exponent = 1;
};

struct GraphIntegralSpec {
  int n = 0;
  int d = 2;
  int ell = 1;
  std::vector<GraphEdge> edges;
};

// Exact value by repeated elimination: isolated node (factor mu_d), leaf
// (factor mu_d*c_0), degree-2 node (coefficient product with mu_d/n_j),
// parallel merge (pointwise product re-projected), self-loop (factor
// sum_j c_j). Throws NotSeriesParallelError when stuck. The optional trace
// records one line per rule application.
double graph_integral(const GraphIntegralSpec& spec,
                      std::vector<std::string>* trace = nullptr);

// Same value under a caller-chosen node elimination preference (a
// permutation; lower rank eliminated first). Exposed for the
// order-independence property.
double graph_integral_ordered(const GraphIntegralSpec& spec,
                              const std::vector<int>& node_rank,
                              std::vector<std::string>* trace = nullptr);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

// Plain average of prod_e G^{k_e} * mu_d^n over uniform node tuples,
// deterministic in (seed); whole shards of fixed size keep the result
// independent of scheduling and of how the total was split across calls.
// Sample counts round up to a shard multiple.
McEstimate mc_graph_integral(const GraphIntegralSpec& spec, long samples, uint64_t seed);

// One shared point stream prices every edge set at once (same n, d, ell).
std::vector<McEstimate> mc_graph_integral_batch(int n, int d, int ell,
                                                const std::vector<std::vector<GraphEdge>>& edge_sets,
                                                long samples, uint64_t seed);

// Resumable version of the batch: extend() adds whole shards, so growing a
// run in steps reproduces the single-shot result bit for bit.
class McBatchAccumulator {
 public:
  McBatchAccumulator(int n, int d, int ell,
                     const std::vector<std::vector<GraphEdge>>& edge_sets, uint64_t seed);
  void extend(long add_samples);
  long samples() const { return samples_; }
  std::vector<McEstimate> estimates() const;

 private:
  int n_, d_, ell_;
  uint64_t seed_;
  long samples_ = 0;
  long next_shard_ = 0;
  std::vector<std::vector<int>> expo_;
  std::vector<bool> pair_used_;
  std::vector<double> sum_, sumsq_;
};

// The three convolution-identity topologies. LHS by spectral reduction, RHS
// the product of two-point moments from the statements; ratio = LHS/RHS is
// the recovered constant (1/mu_d for A1, 1/mu_d^2 for B and C).
enum class GauntCase { A1, B, C };
struct GauntReport {
  double lhs = 0.0;
  double rhs_product = 0.0;
  double ratio = 0.0;
};
// A1 uses (e1,e2) = (p,q), e3 ignored; B uses (q1,q2,q3); C uses (p1,p2,p3).
GauntReport gaunt_identity_check(int d, int ell, GauntCase which, int e1, int e2, int e3 = 0);

// Augmented 4-node integral: kappa edges plus one extra unit exponent on
// (1,2) and (3,4). kappa.q are the reduced row targets (original q_i - 1).
struct FrakIResult {
  double value = 0.0;
  double std_error = 0.0;  // 0 for the spectral path
  bool spectral = true;
};
FrakIResult frak_I(int ell, const DiagramIndex& kappa, long mc_samples, uint64_t seed);

struct PropIRow {
  int ell = 0;
  std::vector<int> q;        // original q_i (>= 2)
  std::vector<int> kappa_upper;  // upper-triangle row-major
  int R = 0;
  int N = 0;
  double value = 0.0;        // frak_I
  double scaled = 0.0;       // ell^3 * |value|
  double std_error = 0.0;
  bool spectral = true;
};

// All q_i in [2, q_max], kappa in A_{q-1} minus the excluded split family.
// MC cells share one resumable sample stream per ell; the count doubles from
// mc_samples until every cell meets the 10% relative std error target or the
// per-ell cap is reached (mc_cap <= 0 means 64 * mc_samples).
std::vector<PropIRow> prop_I_scan(const std::vector<int>& ell_list, int q_max,
                                  long mc_samples, uint64_t seed, long mc_cap = 0);

}  // namespace hsl
