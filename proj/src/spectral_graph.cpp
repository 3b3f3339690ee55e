#include "hsl/spectral_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hsl/errors.hpp"
#include "hsl/rng.hpp"
#include "hsl/sphere.hpp"

namespace hsl {

double SpectralEdge::eval(int d, double t) const {
  const int J = bandwidth();
  std::vector<double> g(J + 1);
  gegenbauer_eval_upto(d, J, t, g.data());
  double s = 0.0;
  for (int j = 0; j <= J; ++j) s += coeffs[j] * g[j];
  return s;
}

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

void trim_edge(SpectralEdge& e) {
  for (double& c : e.coeffs)
    if (std::abs(c) < 1e-14) c = 0.0;
  while (e.coeffs.size() > 1 && e.coeffs.back() == 0.0) e.coeffs.pop_back();
}

}  // namespace

SpectralEdge expand_power(int d, int ell, int r) {
  if (r < 0) throw std::domain_error("expand_power: negative exponent");
  static std::map<std::tuple<int, int, int>, SpectralEdge> cache;
  static std::mutex mu;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({d, ell, r});
    if (it != cache.end()) return it->second;
  }
  SpectralEdge e;
  if (r == 0) {
    e.coeffs = {1.0};
  } else if (r == 1) {
    e.coeffs.assign(ell + 1, 0.0);
    e.coeffs[ell] = 1.0;
  } else {
    const int J = r * ell;
    const QuadratureRule1D& rule = jacobi_rule(d, 2 * J);
    const double ratio = sphere_measure(d - 1) / sphere_measure(d);
    e.coeffs.assign(J + 1, 0.0);
    std::vector<double> g(J + 1);
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      const double t = rule.nodes[i];
      gegenbauer_eval_upto(d, J, t, g.data());
      const double f = rule.weights[i] * ipow(g[ell], r);
      for (int j = 0; j <= J; ++j) e.coeffs[j] += f * g[j];
    }
    for (int j = 0; j <= J; ++j) e.coeffs[j] *= eigenspace_dim(d, j) * ratio;
    trim_edge(e);
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(std::make_tuple(d, ell, r), e).first->second;
}

double gamma_hat(int d, int ell, int r) {
  if (r < 0) throw std::domain_error("gamma_hat: r < 0");
  return eigenspace_dim(d, ell) / sphere_measure(d) * sphere_moment(d, ell, r + 1);
}

namespace {

struct RedEdge {
  int u, v;
  SpectralEdge f;
};

// Pointwise product of two band-limited kernels, re-projected exactly.
SpectralEdge merge_product(int d, const SpectralEdge& a, const SpectralEdge& b) {
  const int J = a.bandwidth() + b.bandwidth();
  const QuadratureRule1D& rule = jacobi_rule(d, 2 * J);
  const double ratio = sphere_measure(d - 1) / sphere_measure(d);
  SpectralEdge h;
  h.coeffs.assign(J + 1, 0.0);
  std::vector<double> g(J + 1);
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double t = rule.nodes[i];
    gegenbauer_eval_upto(d, J, t, g.data());
    double fa = 0.0, fb = 0.0;
    for (int j = 0; j <= a.bandwidth(); ++j) fa += a.coeffs[j] * g[j];
    for (int j = 0; j <= b.bandwidth(); ++j) fb += b.coeffs[j] * g[j];
    const double w = rule.weights[i] * fa * fb;
    for (int j = 0; j <= J; ++j) h.coeffs[j] += w * g[j];
  }
  for (int j = 0; j <= J; ++j) h.coeffs[j] *= eigenspace_dim(d, j) * ratio;
  trim_edge(h);
  return h;
}

double reduce_graph(const GraphIntegralSpec& spec, const std::vector<int>& node_rank,
                    std::vector<std::string>* trace) {
  const int n = spec.n, d = spec.d;
  const double mu_d = sphere_measure(d);
  auto note = [&](const std::string& line) {
    if (trace) trace->push_back(line);
  };

  // Pre-merge parallel input edges by exponent addition, then expand.
  std::map<std::pair<int, int>, int> expo;
  for (const GraphEdge& e : spec.edges) {
    if (e.u == e.v) throw std::domain_error("graph_integral: self-loop in input");
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n)
      throw std::domain_error("graph_integral: node out of range");
    if (e.exponent < 1) throw std::domain_error("graph_integral: exponent < 1");
    expo[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.exponent;
  }
  std::vector<RedEdge> edges;
  for (const auto& [pair, k] : expo)
    edges.push_back({pair.first, pair.second, expand_power(d, spec.ell, k)});

  std::vector<bool> alive(n, true);
  int n_alive = n;
  double acc = 1.0;

  auto degree_of = [&](int x) {
    int deg = 0;
    for (const RedEdge& e : edges) deg += (e.u == x) + (e.v == x);
    return deg;
  };

  while (n_alive > 0) {
    // Self-loops contract to scalars (defensive; inputs cannot create them).
    bool changed = false;
    for (size_t i = 0; i < edges.size(); ++i) {
      if (edges[i].u != edges[i].v) continue;
      const double factor =
          std::accumulate(edges[i].f.coeffs.begin(), edges[i].f.coeffs.end(), 0.0);
      acc *= factor;
      note("loop node " + std::to_string(edges[i].u) + " factor " + std::to_string(factor));
      edges.erase(edges.begin() + i);
      changed = true;
      break;
    }
    if (changed) continue;

    // Parallel pairs merge before any node elimination.
    for (size_t i = 0; i < edges.size() && !changed; ++i)
      for (size_t j = i + 1; j < edges.size() && !changed; ++j)
        if (edges[i].u == edges[j].u && edges[i].v == edges[j].v) {
          edges[i].f = merge_product(d, edges[i].f, edges[j].f);
          note("parallel " + std::to_string(edges[i].u) + "-" + std::to_string(edges[i].v) +
               " J=" + std::to_string(edges[i].f.bandwidth()));
          edges.erase(edges.begin() + j);
          changed = true;
        }
    if (changed) continue;

    // Lowest-rank node in the lowest feasible degree class.
    int pick = -1, pick_deg = 3;
    for (int x = 0; x < n; ++x) {
      if (!alive[x]) continue;
      const int deg = degree_of(x);
      if (deg < pick_deg || (deg == pick_deg && pick >= 0 && node_rank[x] < node_rank[pick])) {
        if (deg <= 2) {
          pick = x;
          pick_deg = deg;
        }
      }
    }
    if (pick < 0)
      throw NotSeriesParallelError("graph_integral: no node of degree <= 2 remains");

    if (pick_deg == 0) {
      acc *= mu_d;
      alive[pick] = false;
      --n_alive;
      note("isolated node " + std::to_string(pick));
    } else if (pick_deg == 1) {
      for (size_t i = 0; i < edges.size(); ++i)
        if (edges[i].u == pick || edges[i].v == pick) {
          const double factor = mu_d * edges[i].f.coeffs[0];
          acc *= factor;
          note("leaf node " + std::to_string(pick) + " factor " + std::to_string(factor));
          edges.erase(edges.begin() + i);
          break;
        }
      alive[pick] = false;
      --n_alive;
    } else {
      // Series: contract the two incident edges through the reproducing rule.
      int ia = -1, ib = -1;
      for (size_t i = 0; i < edges.size(); ++i)
        if (edges[i].u == pick || edges[i].v == pick) {
          if (ia < 0)
            ia = static_cast<int>(i);
          else
            ib = static_cast<int>(i);
        }
      const int x = edges[ia].u == pick ? edges[ia].v : edges[ia].u;
      const int z = edges[ib].u == pick ? edges[ib].v : edges[ib].u;
      const SpectralEdge& fa = edges[ia].f;
      const SpectralEdge& fb = edges[ib].f;
      SpectralEdge h;
      const int J = std::min(fa.bandwidth(), fb.bandwidth());
      h.coeffs.assign(J + 1, 0.0);
      for (int j = 0; j <= J; ++j)
        h.coeffs[j] = fa.coeffs[j] * fb.coeffs[j] * mu_d / eigenspace_dim(d, j);
      trim_edge(h);
      note("series node " + std::to_string(pick) + " -> edge " + std::to_string(x) + "-" +
           std::to_string(z));
      RedEdge ne{std::min(x, z), std::max(x, z), std::move(h)};
      edges.erase(edges.begin() + std::max(ia, ib));
      edges.erase(edges.begin() + std::min(ia, ib));
      edges.push_back(std::move(ne));
      alive[pick] = false;
      --n_alive;
    }
  }
  return acc;
}

}  // namespace

double graph_integral(const GraphIntegralSpec& spec, std::vector<std::string>* trace) {
  std::vector<int> rank(spec.n);
  std::iota(rank.begin(), rank.end(), 0);
  return reduce_graph(spec, rank, trace);
}

double graph_integral_ordered(const GraphIntegralSpec& spec, const std::vector<int>& node_rank,
                              std::vector<std::string>* trace) {
  if (static_cast<int>(node_rank.size()) != spec.n)
    throw std::domain_error("graph_integral_ordered: rank size mismatch");
  return reduce_graph(spec, node_rank, trace);
}

namespace {
constexpr long kShardSize = 1L << 16;
}

McBatchAccumulator::McBatchAccumulator(int n, int d, int ell,
                                       const std::vector<std::vector<GraphEdge>>& edge_sets,
                                       uint64_t seed)
    : n_(n), d_(d), ell_(ell), seed_(seed) {
  const int n_sets = static_cast<int>(edge_sets.size());
  const int n_pairs = n * (n - 1) / 2;
  auto pair_index = [n](int u, int v) {
    const int a = std::min(u, v), b = std::max(u, v);
    return a * n - a * (a + 1) / 2 + (b - a - 1);
  };
  expo_.assign(n_sets, std::vector<int>(n_pairs, 0));
  pair_used_.assign(n_pairs, false);
  for (int s = 0; s < n_sets; ++s)
    for (const GraphEdge& e : edge_sets[s]) {
      if (e.u == e.v || e.exponent < 1)
        throw std::domain_error("mc_graph_integral: bad edge");
      expo_[s][pair_index(e.u, e.v)] += e.exponent;
      pair_used_[pair_index(e.u, e.v)] = true;
    }
  sum_.assign(n_sets, 0.0);
  sumsq_.assign(n_sets, 0.0);
}

void McBatchAccumulator::extend(long add_samples) {
  if (add_samples <= 0) return;
  const int n = n_, d = d_;
  const int n_sets = static_cast<int>(expo_.size());
  const int n_pairs = n * (n - 1) / 2;
  const long add_shards = (add_samples + kShardSize - 1) / kShardSize;
  std::vector<double> pts(static_cast<size_t>(n) * (d + 1));
  std::vector<double> gval(n_pairs, 1.0);
  for (long si = 0; si < add_shards; ++si) {
    RandomStream rng(seed_, static_cast<uint64_t>(next_shard_ + si));
    for (long it = 0; it < kShardSize; ++it) {
      for (int i = 0; i < n; ++i) {
        double norm2 = 0.0;
        do {
          norm2 = 0.0;
          for (int c = 0; c <= d; ++c) {
            const double z = rng.normal();
            pts[i * (d + 1) + c] = z;
            norm2 += z * z;
          }
        } while (norm2 < 1e-12);
        const double inv = 1.0 / std::sqrt(norm2);
        for (int c = 0; c <= d; ++c) pts[i * (d + 1) + c] *= inv;
      }
      int p = 0;
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v, ++p) {
          if (!pair_used_[p]) continue;
          double t = 0.0;
          for (int c = 0; c <= d; ++c) t += pts[u * (d + 1) + c] * pts[v * (d + 1) + c];
          t = std::clamp(t, -1.0, 1.0);
          gval[p] = gegenbauer_eval(d, ell_, t);
        }
      for (int s = 0; s < n_sets; ++s) {
        double prod = 1.0;
        for (int pp = 0; pp < n_pairs; ++pp)
          if (expo_[s][pp] > 0) prod *= ipow(gval[pp], expo_[s][pp]);
        sum_[s] += prod;
        sumsq_[s] += prod * prod;
      }
    }
  }
  next_shard_ += add_shards;
  samples_ += add_shards * kShardSize;
}

std::vector<McEstimate> McBatchAccumulator::estimates() const {
  const double scale = std::pow(sphere_measure(d_), n_);
  const long N = samples_;
  std::vector<McEstimate> out(sum_.size());
  for (size_t s = 0; s < sum_.size(); ++s) {
    const double mean = sum_[s] / N;
    const double var =
        N > 1 ? std::max(0.0, (sumsq_[s] - N * mean * mean) / (N - 1)) : 0.0;
    out[s].estimate = scale * mean;
    out[s].std_error = scale * std::sqrt(var / N);
    out[s].samples = N;
  }
  return out;
}

McEstimate mc_graph_integral(const GraphIntegralSpec& spec, long samples, uint64_t seed) {
  return mc_graph_integral_batch(spec.n, spec.d, spec.ell, {spec.edges}, samples, seed)[0];
}

std::vector<McEstimate> mc_graph_integral_batch(
    int n, int d, int ell, const std::vector<std::vector<GraphEdge>>& edge_sets, long samples,
    uint64_t seed) {
  McBatchAccumulator acc(n, d, ell, edge_sets, seed);
  acc.extend(samples);
  return acc.estimates();
}

GauntReport gaunt_identity_check(int d, int ell, GauntCase which, int e1, int e2, int e3) {
  auto m = [&](int r) { return sphere_measure(d) * sphere_moment(d, ell, r); };
  GraphIntegralSpec spec;
  spec.d = d;
  spec.ell = ell;
  GauntReport rep;
  switch (which) {
    case GauntCase::A1:
      if (e1 < 2 || e2 < 2) throw std::domain_error("gaunt A1: exponents must be >= 2");
      spec.n = 3;
      spec.edges = {{0, 1, 1}, {0, 2, e1}, {1, 2, e2}};
      rep.rhs_product = m(e2 + 1) * m(e1 + 1);
      break;
    case GauntCase::B:
      if (e1 < 2 || e2 < 2 || e3 < 1) throw std::domain_error("gaunt B: bad exponents");
      spec.n = 4;
      spec.edges = {{0, 1, 1}, {0, 3, e1}, {1, 2, e2}, {2, 3, e3}};
      rep.rhs_product = m(e1 + 1) * m(e2 + 1) * m(e3 + 1);
      break;
    case GauntCase::C:
      if (e1 < 2 || e2 < 2 || e3 < 0) throw std::domain_error("gaunt C: bad exponents");
      spec.n = 4;
      spec.edges = {{0, 1, 1}, {0, 3, e1}, {1, 2, e2}, {2, 3, 1}};
      if (e3 >= 1) spec.edges.push_back({1, 3, e3});
      rep.rhs_product = m(e1 + 1) * m(e2 + 1) * m(e3 + 2);
      break;
  }
  rep.lhs = graph_integral(spec);
  rep.ratio = rep.lhs / rep.rhs_product;
  return rep;
}

namespace {

std::vector<GraphEdge> augmented_edges(const DiagramIndex& kappa) {
  std::vector<GraphEdge> edges;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      int k = kappa.at(i, j);
      if ((i == 0 && j == 1) || (i == 2 && j == 3)) k += 1;
      if (k > 0) edges.push_back({i, j, k});
    }
  return edges;
}

bool augmented_is_clique(const DiagramIndex& kappa) {
  return kappa.at(0, 2) > 0 && kappa.at(0, 3) > 0 && kappa.at(1, 2) > 0 &&
         kappa.at(1, 3) > 0;
}

}  // namespace

FrakIResult frak_I(int ell, const DiagramIndex& kappa, long mc_samples, uint64_t seed) {
  if (kappa.n != 4) throw std::domain_error("frak_I: kappa must have 4 nodes");
  GraphIntegralSpec spec;
  spec.n = 4;
  spec.d = 2;
  spec.ell = ell;
  spec.edges = augmented_edges(kappa);
  FrakIResult r;
  try {
    r.value = graph_integral(spec);
    r.spectral = true;
  } catch (const NotSeriesParallelError&) {
    const McEstimate est = mc_graph_integral(spec, mc_samples, seed);
    r.value = est.estimate;
    r.std_error = est.std_error;
    r.spectral = false;
  }
  return r;
}

std::vector<PropIRow> prop_I_scan(const std::vector<int>& ell_list, int q_max,
                                  long mc_samples, uint64_t seed, long mc_cap) {
  if (mc_cap <= 0) mc_cap = mc_samples * 64;
  struct Cell {
    std::vector<int> q;
    DiagramIndex kappa;
    std::vector<int> upper;
    int R, N;
    bool clique;
    std::vector<int> key;  // canonical augmented exponents
  };
  // Relabelings preserving the augmented structure: swap within (0,1),
  // within (2,3), and swap the two blocks.
  static const int perms[8][4] = {{0, 1, 2, 3}, {1, 0, 2, 3}, {0, 1, 3, 2}, {1, 0, 3, 2},
                                  {2, 3, 0, 1}, {3, 2, 0, 1}, {2, 3, 1, 0}, {3, 2, 1, 0}};
  auto canonical_key = [](const DiagramIndex& kappa) {
    std::vector<int> best;
    for (const auto& p : perms) {
      std::vector<int> key;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
          int k = kappa.at(p[i], p[j]);
          if ((i == 0 && j == 1) || (i == 2 && j == 3)) k += 1;
          key.push_back(k);
        }
      if (best.empty() || key < best) best = key;
    }
    return best;
  };

  std::vector<Cell> cells;
  std::vector<int> q(4);
  for (q[0] = 2; q[0] <= q_max; ++q[0])
    for (q[1] = 2; q[1] <= q_max; ++q[1])
      for (q[2] = 2; q[2] <= q_max; ++q[2])
        for (q[3] = 2; q[3] <= q_max; ++q[3]) {
          const std::vector<int> qm1 = {q[0] - 1, q[1] - 1, q[2] - 1, q[3] - 1};
          enumerate_A(qm1, [&](const DiagramIndex& kappa) {
            const ExtractedGraph g = extract_graph(kappa);
            if (g.is_N) return;
            Cell c;
            c.q = q;
            c.kappa = kappa;
            for (int i = 0; i < 4; ++i)
              for (int j = i + 1; j < 4; ++j) c.upper.push_back(kappa.at(i, j));
            c.R = g.R;
            c.N = g.n_components;
            c.clique = augmented_is_clique(kappa);
            c.key = canonical_key(kappa);
            cells.push_back(std::move(c));
          });
        }

  std::vector<PropIRow> rows;
  for (int ell : ell_list) {
    // Value cache shared across cells with the same canonical exponents.
    std::map<std::vector<int>, std::pair<double, double>> cache;  // key -> (value, stderr)
    std::vector<const Cell*> mc_cells;
    for (const Cell& c : cells) {
      if (cache.count(c.key)) continue;
      if (c.clique) {
        cache[c.key] = {0.0, -1.0};  // placeholder, filled by the batch below
        mc_cells.push_back(&c);
      } else {
        GraphIntegralSpec spec;
        spec.n = 4;
        spec.d = 2;
        spec.ell = ell;
        spec.edges = augmented_edges(c.kappa);
        cache[c.key] = {graph_integral(spec), 0.0};
      }
    }
    if (!mc_cells.empty()) {
      std::vector<std::vector<GraphEdge>> sets;
      sets.reserve(mc_cells.size());
      for (const Cell* c : mc_cells) sets.push_back(augmented_edges(c->kappa));
      // Grow the shared sample pool until every cell meets the relative
      // error target or the cap is hit. extend() resumes the stream, so the
      // result matches a single run at the final count.
      McBatchAccumulator acc(4, 2, ell, sets, seed + static_cast<uint64_t>(ell));
      acc.extend(mc_samples);
      std::vector<McEstimate> est;
      for (;;) {
        est = acc.estimates();
        bool ok = true;
        for (const McEstimate& e : est)
          if (e.std_error > 0.1 * std::abs(e.estimate)) ok = false;
        if (ok || acc.samples() >= mc_cap) break;
        acc.extend(std::min(acc.samples(), mc_cap - acc.samples()));
      }
      for (size_t i = 0; i < mc_cells.size(); ++i)
        cache[mc_cells[i]->key] = {est[i].estimate, est[i].std_error};
    }
    for (const Cell& c : cells) {
      const auto& [value, err] = cache[c.key];
      PropIRow row;
      row.ell = ell;
      row.q = c.q;
      row.kappa_upper = c.upper;
      row.R = c.R;
      row.N = c.N;
      row.value = value;
      row.scaled = std::pow(ell, 3) * std::abs(value);
      row.std_error = err;
      row.spectral = !c.clique;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace hsl
