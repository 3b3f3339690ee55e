#include "hsl/diagram.hpp"

#include <iterator>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hsl/sphere.hpp"

namespace hsl {

namespace {

struct Enumerator {
  int n;
  const std::vector<int>& q;
  std::vector<int> rem;   // remaining row budgets
  std::vector<int> k;     // n*n
  const std::function<void(const DiagramIndex&)>& visit;

  Enumerator(const std::vector<int>& q_in,
             const std::function<void(const DiagramIndex&)>& v)
      : n(static_cast<int>(q_in.size())), q(q_in), rem(q_in), k(n * n, 0), visit(v) {}

  // Upper-triangle cells in row-major order.
  void step(int i, int j) {
    if (i == n - 1) {
      if (rem[n - 1] == 0) {
        DiagramIndex out;
        out.n = n;
        out.q = q;
        out.k = k;
        visit(out);
      }
      return;
    }
    if (j == n) {
      if (rem[i] != 0) return;  // row i fully decided and off target
      step(i + 1, i + 2);
      return;
    }
    // Feasibility: the rest of row i can absorb at most sum of partner budgets.
    int cap = 0;
    for (int j2 = j; j2 < n; ++j2) cap += std::min(rem[i], rem[j2]);
    if (rem[i] > cap) return;
    const int hi = std::min(rem[i], rem[j]);
    for (int v = 0; v <= hi; ++v) {
      k[i * n + j] = v;
      k[j * n + i] = v;
      rem[i] -= v;
      rem[j] -= v;
      step(i, j + 1);
      rem[i] += v;
      rem[j] += v;
    }
    k[i * n + j] = 0;
    k[j * n + i] = 0;
  }
};

// Integer coefficient of x^m in H_q: (-1)^j q!/(j! (q-2j)! 2^j), m = q-2j.
BigInt hermite_monomial_coeff(int q, int m) {
  if (m > q || (q - m) % 2 != 0) return 0;
  const int j = (q - m) / 2;
  BigInt c = factorial_big(q) / (factorial_big(j) * factorial_big(m));
  for (int i = 0; i < j; ++i) c /= 2;
  if (j % 2 == 1) c = -c;
  return c;
}

// E[prod z_i^{m_i}] for jointly Gaussian z with covariance cov (unit
// diagonal assumed irrelevant: cov[i][i] is used for self-pairings).
class IsserlisTable {
 public:
  IsserlisTable(int n, const std::vector<BigRational>& cov) : n_(n), cov_(cov) {}

  BigRational moment(std::vector<int> m) {
    int total = std::accumulate(m.begin(), m.end(), 0);
    if (total % 2 != 0) return BigRational(0);
    if (total == 0) return BigRational(1);
    auto it = memo_.find(m);
    if (it != memo_.end()) return it->second;
    int i = 0;
    while (m[i] == 0) ++i;
    // Pair one copy of z_i with each possible partner.
    BigRational sum(0);
    m[i] -= 1;
    for (int j = 0; j < n_; ++j) {
      if (m[j] == 0) continue;
      BigRational c = cov_[i * n_ + j] * BigRational(m[j]);
      if (c == BigRational(0)) continue;
      m[j] -= 1;
      sum += c * moment(m);
      m[j] += 1;
    }
    m[i] += 1;
    memo_.emplace(std::move(m), sum);
    return sum;
  }

 private:
  int n_;
  const std::vector<BigRational>& cov_;
  std::map<std::vector<int>, BigRational> memo_;
};

struct DSU {
  std::vector<int> parent;
  explicit DSU(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void enumerate_A(const std::vector<int>& q,
                 const std::function<void(const DiagramIndex&)>& visit) {
  if (q.size() < 2) throw std::domain_error("enumerate_A: need n >= 2");
  for (int v : q)
    if (v < 0) throw std::domain_error("enumerate_A: negative row target");
  Enumerator e(q, visit);
  e.step(0, 1);
}

std::vector<DiagramIndex> enumerate_A_all(const std::vector<int>& q) {
  std::vector<DiagramIndex> out;
  enumerate_A(q, [&](const DiagramIndex& k) { out.push_back(k); });
  return out;
}

BigRational joint_hermite_moment(const std::vector<int>& q,
                                 const std::vector<BigRational>& cov) {
  const int n = static_cast<int>(q.size());
  BigRational sum(0);
  enumerate_A(q, [&](const DiagramIndex& kappa) {
    BigRational term(1);
    for (int i = 0; i < n && term != BigRational(0); ++i)
      for (int j = i + 1; j < n; ++j) {
        const int kij = kappa.at(i, j);
        if (kij == 0) continue;
        term *= cov[i * n + j].pow(kij) / BigRational(factorial_big(kij));
      }
    sum += term;
  });
  BigRational pref(1);
  for (int r = 0; r < n; ++r) pref *= BigRational(factorial_big(q[r]));
  return pref * sum;
}

double joint_hermite_moment(const std::vector<int>& q, const std::vector<double>& cov) {
  const int n = static_cast<int>(q.size());
  double sum = 0.0;
  enumerate_A(q, [&](const DiagramIndex& kappa) {
    double term = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const int kij = kappa.at(i, j);
        for (int c = 1; c <= kij; ++c) term *= cov[i * n + j] / c;
      }
    sum += term;
  });
  double pref = 1.0;
  for (int r = 0; r < n; ++r)
    for (int c = 2; c <= q[r]; ++c) pref *= c;
  return pref * sum;
}

BigRational wick_oracle(const std::vector<int>& q, const std::vector<BigRational>& cov) {
  const int n = static_cast<int>(q.size());
  const int total = std::accumulate(q.begin(), q.end(), 0);
  if (total > 24) throw std::domain_error("wick_oracle: sum q_i exceeds pairing budget 24");
  // Unit-variance self-covariance for the monomial expansion.
  std::vector<BigRational> c2(cov);
  for (int i = 0; i < n; ++i) c2[i * n + i] = BigRational(1);
  IsserlisTable table(n, c2);

  // Expand prod_i H_{q_i}(z_i) = sum over monomial degrees m_i.
  BigRational sum(0);
  std::vector<int> m(n, 0);
  std::function<void(int, const BigRational&)> rec = [&](int i, const BigRational& coeff) {
    if (i == n) {
      sum += coeff * table.moment(m);
      return;
    }
    for (int mi = q[i] % 2; mi <= q[i]; mi += 2) {
      const BigInt c = hermite_monomial_coeff(q[i], mi);
      m[i] = mi;
      rec(i + 1, coeff * BigRational(c));
    }
    m[i] = 0;
  };
  rec(0, BigRational(1));
  return sum;
}

PairPoly diagram_polynomial(const std::vector<int>& q) {
  const int n = static_cast<int>(q.size());
  BigRational pref(1);
  for (int r = 0; r < n; ++r) pref *= BigRational(factorial_big(q[r]));
  PairPoly poly;
  enumerate_A(q, [&](const DiagramIndex& kappa) {
    std::vector<int> key;
    key.reserve(n * (n - 1) / 2);
    BigInt kfact = 1;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        key.push_back(kappa.at(i, j));
        kfact *= factorial_big(kappa.at(i, j));
      }
    poly.emplace(std::move(key), pref / BigRational(kfact));
  });
  return poly;
}

WickTable::WickTable(int n) : n_(n) {}

const PairPoly& WickTable::moment(const std::vector<int>& m) {
  auto it = memo_.find(m);
  if (it != memo_.end()) return it->second;
  PairPoly result;
  const int total = std::accumulate(m.begin(), m.end(), 0);
  if (total == 0) {
    result[std::vector<int>(n_ * (n_ - 1) / 2, 0)] = BigRational(1);
  } else if (total % 2 == 0) {
    int i = 0;
    while (m[i] == 0) ++i;
    std::vector<int> m2(m);
    m2[i] -= 1;
    for (int j = 0; j < n_; ++j) {
      if (m2[j] == 0) continue;
      const BigRational scale(m2[j]);
      m2[j] -= 1;
      const PairPoly& sub = moment(m2);
      m2[j] += 1;
      if (j == i) {
        for (const auto& [key, c] : sub) result[key] += scale * c;
      } else {
        // Multiply by the (i,j) covariance variable.
        const int a = std::min(i, j), b = std::max(i, j);
        const int pair_idx = a * n_ - a * (a + 1) / 2 + (b - a - 1);
        for (const auto& [key, c] : sub) {
          std::vector<int> key2(key);
          key2[pair_idx] += 1;
          result[key2] += scale * c;
        }
      }
    }
    for (auto it2 = result.begin(); it2 != result.end();)
      it2 = (it2->second == BigRational(0)) ? result.erase(it2) : std::next(it2);
  }
  return memo_.emplace(m, std::move(result)).first->second;
}

PairPoly WickTable::hermite_product(const std::vector<int>& q) {
  PairPoly sum;
  std::vector<int> m(n_, 0);
  std::function<void(int, const BigRational&)> rec = [&](int i, const BigRational& coeff) {
    if (i == n_) {
      for (const auto& [key, c] : moment(m)) {
        sum[key] += coeff * c;
      }
      return;
    }
    for (int mi = q[i] % 2; mi <= q[i]; mi += 2) {
      m[i] = mi;
      rec(i + 1, coeff * BigRational(hermite_monomial_coeff(q[i], mi)));
    }
    m[i] = 0;
  };
  rec(0, BigRational(1));
  for (auto it = sum.begin(); it != sum.end();)
    it = (it->second == BigRational(0)) ? sum.erase(it) : std::next(it);
  return sum;
}

BigRational evaluate_pair_poly(const PairPoly& poly, const std::vector<BigRational>& x) {
  BigRational total(0);
  for (const auto& [key, c] : poly) {
    BigRational term(c);
    for (size_t p = 0; p < key.size(); ++p)
      if (key[p] > 0) term *= x[p].pow(key[p]);
    total += term;
  }
  return total;
}

ExtractedGraph extract_graph(const DiagramIndex& kappa) {
  const int n = kappa.n;
  ExtractedGraph g;
  g.n = n;
  DSU dsu(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (kappa.at(i, j) != 0) {
        g.edges.emplace_back(i, j);
        dsu.unite(i, j);
      }
  g.R = static_cast<int>(g.edges.size());

  g.component_of.assign(n, -1);
  std::vector<int> root_to_id;
  for (int i = 0; i < n; ++i) {
    const int r = dsu.find(i);
    int id = -1;
    for (size_t c = 0; c < root_to_id.size(); ++c)
      if (root_to_id[c] == r) id = static_cast<int>(c);
    if (id < 0) {
      id = static_cast<int>(root_to_id.size());
      root_to_id.push_back(r);
    }
    g.component_of[i] = id;
  }
  g.n_components = static_cast<int>(root_to_id.size());

  std::vector<int> comp_nodes(g.n_components, 0), comp_edges(g.n_components, 0);
  for (int i = 0; i < n; ++i) comp_nodes[g.component_of[i]]++;
  for (const auto& e : g.edges) comp_edges[g.component_of[e.first]]++;
  g.is_tree_per_component.resize(g.n_components);
  for (int c = 0; c < g.n_components; ++c)
    g.is_tree_per_component[c] = (comp_edges[c] == comp_nodes[c] - 1);

  if (n == 4) {
    const int k12 = kappa.at(0, 1), k34 = kappa.at(2, 3);
    const bool no_cross = kappa.at(0, 2) == 0 && kappa.at(0, 3) == 0 &&
                          kappa.at(1, 2) == 0 && kappa.at(1, 3) == 0;
    g.is_N = no_cross && k12 >= 1 && k34 >= 1 && k12 == kappa.q[0] &&
             k12 == kappa.q[1] && k34 == kappa.q[2] && k34 == kappa.q[3];
  }
  return g;
}

double spanning_tree_bound(int d, int ell, const DiagramIndex& kappa) {
  if (ell < 1) throw std::domain_error("spanning_tree_bound: ell < 1");
  const ExtractedGraph g = extract_graph(kappa);
  const int n = kappa.n, N = g.n_components;
  const double mu_d = sphere_measure(d);
  const double mu_dm1 = sphere_measure(d - 1);
  const double c2 = asymptotic_constant(d, 2);
  const double base = 8.0 * mu_d * mu_dm1 * c2;
  return std::pow(base, n - N) * std::pow(mu_d, N) /
         std::pow(static_cast<double>(ell), (d - 1.0) * (n - N));
}

double connected_pairing_bound(int d, int p) {
  const double mu_d = sphere_measure(d);
  double dfact = 1.0;
  for (int i = 2; i <= d - 1; ++i) dfact *= i;
  return std::pow(2.0 * dfact * mu_d * mu_d, 2 * p) * std::pow(mu_d, p);
}

std::string kappa_to_json(const DiagramIndex& kappa) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < kappa.n; ++i) {
    os << (i ? "," : "") << "[";
    for (int j = 0; j < kappa.n; ++j) os << (j ? "," : "") << kappa.at(i, j);
    os << "]";
  }
  os << "]";
  return os.str();
}

}  // namespace hsl
