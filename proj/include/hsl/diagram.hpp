#pragma once

// Exact combinatorics behind products of Hermite-subordinated fields: the
// admissible index set A of symmetric non-negative integer matrices with
// prescribed row sums, the joint Hermite moment it generates, an independent
// Wick-pairing oracle, graph extraction, and the spanning-tree constant.

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hsl/rational.hpp"

namespace hsl {

struct DiagramIndex {
  int n = 0;
  std::vector<int> q;  // row targets q_1..q_n
  std::vector<int> k;  // n*n row-major, symmetric, zero diagonal
  int at(int i, int j) const { return k[i * n + j]; }
};

struct ExtractedGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // i < j with k_ij != 0
  std::vector<int> component_of;           // node -> component id (0-based)
  int n_components = 0;
  std::vector<bool> is_tree_per_component;
  int R = 0;         // count of nonzero upper-triangle entries
  bool is_N = false; // n = 4 split shape: full (1,2) and (3,4) rows, no cross edges
};

// Emits every symmetric matrix with zero diagonal and row sums q exactly
// once, lexicographic on the upper triangle read row-major.
void enumerate_A(const std::vector<int>& q,
                 const std::function<void(const DiagramIndex&)>& visit);
std::vector<DiagramIndex> enumerate_A_all(const std::vector<int>& q);

// prod q_r! * Sum_{kappa in A} prod_{i<j} cov_ij^{k_ij}/k_ij!, the joint
// moment E[prod H_{q_r}(Z_r)] for unit-variance jointly Gaussian Z. The
// evaluation is formal in cov: no positive-definiteness is required, which
// lets equality sweeps cover sign grids that are not valid covariances.
BigRational joint_hermite_moment(const std::vector<int>& q,
                                 const std::vector<BigRational>& cov);
double joint_hermite_moment(const std::vector<int>& q, const std::vector<double>& cov);

// Independent route: expand each H_q in monomials and evaluate the Gaussian
// moment by Isserlis pairing recursion (memoized). Budget: sum q_i <= 24.
BigRational wick_oracle(const std::vector<int>& q, const std::vector<BigRational>& cov);

ExtractedGraph extract_graph(const DiagramIndex& kappa);

// Both moment routes as exact polynomials in the n(n-1)/2 off-diagonal
// covariance entries (exponent vector over upper-triangle pairs, row-major).
// Map equality is equality for every covariance assignment at once, which
// subsumes any finite evaluation grid.
using PairPoly = std::map<std::vector<int>, BigRational>;
PairPoly diagram_polynomial(const std::vector<int>& q);

// Symbolic Isserlis table, reusable across row-target vectors of fixed n.
class WickTable {
 public:
  explicit WickTable(int n);
  // E[prod z_i^{m_i}] as a polynomial in the cross covariances; self
  // pairings carry scalar weight (unit variances).
  const PairPoly& moment(const std::vector<int>& m);
  // E[prod H_{q_i}(z_i)] assembled from the monomial expansion.
  PairPoly hermite_product(const std::vector<int>& q);

 private:
  int n_;
  std::map<std::vector<int>, PairPoly> memo_;
};

// Exact evaluation of a pair polynomial at rational covariances.
BigRational evaluate_pair_poly(const PairPoly& poly, const std::vector<BigRational>& x);

// C_d(N)/ell^{(d-1)(n-N)} with C_d(N) = (8 mu_d mu_{d-1} c_{2;d})^{n-N} mu_d^N,
// N the component count of the extracted graph.
double spanning_tree_bound(int d, int ell, const DiagramIndex& kappa);
// Companion constant for connected pairings of 2p nodes:
// (2 (d-1)! mu_d^2)^{2p} mu_d^p.
double connected_pairing_bound(int d, int p);

std::string kappa_to_json(const DiagramIndex& kappa);

}  // namespace hsl
