#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsl/errors.hpp"
#include "hsl/field.hpp"
#include "hsl/rng.hpp"
#include "hsl/sphere.hpp"

#include <cmath>
#include <vector>

using namespace hsl;

namespace {

double psi_identity(double x) { return x; }
double psi_one(double) { return 1.0; }

double dot3(const double* a, const double* b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace

TEST_CASE("counter-based generator matches the published test vectors") {
  auto r0 = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(r0[0] == 0x6627e8d5u);
  CHECK(r0[1] == 0xe169c58du);
  CHECK(r0[2] == 0xbc57ac4cu);
  CHECK(r0[3] == 0x9b00dbd8u);
  auto r1 = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                       {0xffffffffu, 0xffffffffu});
  CHECK(r1[0] == 0x408f276du);
  CHECK(r1[1] == 0x41c83b0eu);
  CHECK(r1[2] == 0xa20bc7c6u);
  CHECK(r1[3] == 0x6d5451fdu);
  auto r2 = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                       {0xa4093822u, 0x299f31d0u});
  CHECK(r2[0] == 0xd16cfe09u);
  CHECK(r2[1] == 0x94fdccebu);
  CHECK(r2[2] == 0x5001e420u);
  CHECK(r2[3] == 0x24126ea1u);
}

TEST_CASE("random streams are deterministic and separate") {
  RandomStream a(42, 0), b(42, 0), c(42, 1);
  bool all_equal = true, any_equal_cross = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.raw32();
    all_equal = all_equal && (va == b.raw32());
    any_equal_cross = any_equal_cross || (va == c.raw32());
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_cross);
  RandomStream u(7, 7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("normalized Legendre rows satisfy the addition theorem") {
  for (int ell : {0, 1, 3, 8, 33, 120}) {
    std::vector<double> p(ell + 1);
    for (double t : {-0.95, -0.4, 0.0, 0.33, 0.87}) {
      sh_legendre_row(ell, t, p.data());
      double s = p[0] * p[0];
      for (int m = 1; m <= ell; ++m) s += 2.0 * p[m] * p[m];
      CHECK(s == doctest::Approx((2.0 * ell + 1.0) / (4.0 * M_PI)).epsilon(1e-11));
      CHECK(p[0] == doctest::Approx(std::sqrt((2.0 * ell + 1.0) / (4.0 * M_PI)) *
                                    gegenbauer_eval(2, ell, t))
                        .epsilon(1e-10));
    }
  }
}

TEST_CASE("latitude-azimuth grid quadrature") {
  SphereGrid g = make_grid_s2(6);
  CHECK(g.n_rings == 7);
  CHECK(g.n_az == 14);
  double wsum = 0.0;
  bool positive = true;
  for (double w : g.weights) {
    wsum += w;
    positive = positive && (w > 0.0);
  }
  CHECK(positive);
  CHECK(wsum == doctest::Approx(sphere_measure(2)).epsilon(1e-13));
  // Degree-6 kernel against any fixed pole integrates to zero.
  const double poles[3][3] = {{0, 0, 1}, {0.6, 0.8, 0}, {-0.36, 0.48, 0.8}};
  for (const double* pole : poles) {
    double acc = 0.0;
    for (int i = 0; i < g.n_nodes; ++i)
      acc += g.weights[i] * gegenbauer_eval(2, 6, dot3(g.node(i), pole));
    CHECK(std::abs(acc) < 1e-8 * sphere_measure(2));
  }
  SphereGrid g2 = make_grid_s2(6, 2);
  CHECK(g2.n_rings == 14);
  CHECK(g2.n_az == 28);
}

TEST_CASE("product grids for general dimension") {
  SphereGrid g1 = make_grid_product(1, 3);
  double s1 = 0.0;
  for (double w : g1.weights) s1 += w;
  CHECK(s1 == doctest::Approx(sphere_measure(1)).epsilon(1e-13));

  SphereGrid g3 = make_grid_product(3, 4);
  double s3 = 0.0;
  for (double w : g3.weights) s3 += w;
  CHECK(s3 == doctest::Approx(sphere_measure(3)).epsilon(1e-12));
  const double pole[4] = {0.5, 0.5, 0.5, 0.5};
  double acc = 0.0;
  for (int i = 0; i < g3.n_nodes; ++i) {
    const double* x = g3.node(i);
    double t = 0.0;
    for (int c = 0; c < 4; ++c) t += x[c] * pole[c];
    acc += g3.weights[i] * gegenbauer_eval(3, 4, t);
  }
  CHECK(std::abs(acc) < 1e-8 * sphere_measure(3));
  // Unit-norm nodes.
  for (int i = 0; i < g3.n_nodes; i += 97) {
    const double* x = g3.node(i);
    double n2 = 0.0;
    for (int c = 0; c < 4; ++c) n2 += x[c] * x[c];
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_grid_product(3, 20), std::domain_error);
}

TEST_CASE("synthesis draws: determinism and degenerate degree") {
  SphereGrid g = make_grid_s2(5);
  FieldSampler sampler(g, 5, FieldBackend::Synthesis);
  FieldRealization u = sampler.draw(11, 3);
  FieldRealization v = sampler.draw(11, 3);
  CHECK(u.values == v.values);
  FieldRealization w = sampler.draw(11, 4);
  CHECK(u.values != w.values);

  SphereGrid g0 = make_grid_s2(0);
  FieldSampler s0(g0, 0, FieldBackend::Synthesis);
  FieldRealization z = s0.draw(123, 0);
  RandomStream ref(123, 0);
  const double expected = ref.normal();
  for (double x : z.values) CHECK(x == doctest::Approx(expected).epsilon(1e-15));

  CHECK_THROWS_AS(FieldSampler(g, 9, FieldBackend::Synthesis), std::domain_error);
}

TEST_CASE("synthesis draws reproduce unit variance and the kernel covariance") {
  const int ell = 8, reps = 10000;
  SphereGrid g = make_grid_s2(ell);
  FieldSampler sampler(g, ell, FieldBackend::Synthesis);
  const int node_a = 3 * g.n_az + 5;
  // 20 deterministic node pairs.
  RandomStream pick(2718, 0);
  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < 20; ++k) {
    const int i = static_cast<int>(pick.raw32() % g.n_nodes);
    const int j = static_cast<int>(pick.raw32() % g.n_nodes);
    pairs.push_back({i, j});
  }
  std::vector<double> prod(pairs.size(), 0.0);
  double sum_a = 0.0, sumsq_a = 0.0;
  for (int r = 0; r < reps; ++r) {
    FieldRealization f = sampler.draw(31415, static_cast<uint64_t>(r));
    const double va = f.values[node_a];
    sum_a += va;
    sumsq_a += va * va;
    for (size_t k = 0; k < pairs.size(); ++k)
      prod[k] += f.values[pairs[k].first] * f.values[pairs[k].second];
  }
  const double mean_a = sum_a / reps;
  const double var_a = sumsq_a / reps - mean_a * mean_a;
  CHECK(std::abs(var_a - 1.0) < 3.0 * std::sqrt(2.0 / reps));
  for (size_t k = 0; k < pairs.size(); ++k) {
    const double rho = gegenbauer_eval(2, ell, dot3(g.node(pairs[k].first),
                                                    g.node(pairs[k].second)));
    const double chat = prod[k] / reps;
    const double se = std::sqrt((1.0 + rho * rho) / reps);
    CHECK(std::abs(chat - rho) < 3.0 * se);
  }
}

TEST_CASE("projection energy: identity, constants, and cross-degree") {
  const int ell = 6;
  SphereGrid g = make_grid_s2(ell);
  FieldSampler sampler(g, ell, FieldBackend::Synthesis);
  FieldRealization f = sampler.draw(99, 0);

  SUBCASE("identity projection equals the double kernel integral") {
    const double energy = sh_project(f, &psi_identity);
    // Independent route: quadrature of T(x) T(z) G(<x,z>) over both nodes.
    double direct = 0.0;
    for (int i = 0; i < g.n_nodes; ++i) {
      double inner = 0.0;
      for (int j = 0; j < g.n_nodes; ++j)
        inner += g.weights[j] * f.values[j] *
                 gegenbauer_eval(2, ell, dot3(g.node(i), g.node(j)));
      direct += g.weights[i] * f.values[i] * inner;
    }
    // Reproducing identity: integral T Y_m dx squared sums to
    // (n/mu) * double integral.
    const double n_dim = eigenspace_dim(2, ell);
    CHECK(energy == doctest::Approx(direct * n_dim / sphere_measure(2)).epsilon(1e-8));
  }
  SUBCASE("constants have no degree-l component") {
    CHECK(sh_project(f, &psi_one) < 1e-20);
  }
  SUBCASE("degree mismatch projections vanish to quadrature exactness") {
    double total = 0.0;
    for (int i = 0; i < g.n_nodes; ++i)
      total += g.weights[i] * f.values[i] * f.values[i];
    for (int lp : {ell - 1, ell - 2, 2}) {
      const double off = sh_project(f, &psi_identity, lp);
      CHECK(off < 1e-6 * total);
    }
  }
  SUBCASE("projection degree above the azimuth resolution throws") {
    CHECK_THROWS_AS(sh_project(f, &psi_identity, ell + 4), std::domain_error);
  }
}

TEST_CASE("factorization backend on a general-dimension grid") {
  SphereGrid g = make_grid_product(3, 2);
  FieldSampler sampler(g, 2, FieldBackend::Cholesky);
  FieldRealization u = sampler.draw(5, 0);
  FieldRealization v = sampler.draw(5, 0);
  CHECK(u.values == v.values);
  CHECK(u.backend == FieldBackend::Cholesky);

  const int reps = 10000;
  const int node_a = g.n_nodes / 3, node_b = 2 * g.n_nodes / 3;
  double sumsq = 0.0, sumprod = 0.0;
  for (int r = 0; r < reps; ++r) {
    FieldRealization f = sampler.draw(777, static_cast<uint64_t>(r));
    sumsq += f.values[node_a] * f.values[node_a];
    sumprod += f.values[node_a] * f.values[node_b];
  }
  const double var_a = sumsq / reps;
  CHECK(std::abs(var_a - 1.0) < 3.0 * std::sqrt(2.0 / reps));
  const double* xa = g.node(node_a);
  const double* xb = g.node(node_b);
  double t = 0.0;
  for (int c = 0; c < 4; ++c) t += xa[c] * xb[c];
  const double rho = gegenbauer_eval(3, 2, t);
  CHECK(std::abs(sumprod / reps - rho) < 3.0 * std::sqrt((1.0 + rho * rho) / reps));
}

TEST_CASE("synthesis and factorization backends agree on a 200-node grid") {
  // ell=9 latitude grid has exactly 10 x 20 = 200 nodes.
  const int ell = 9, reps = 10000;
  SphereGrid g = make_grid_s2(ell);
  REQUIRE(g.n_nodes == 200);
  FieldSampler syn(g, ell, FieldBackend::Synthesis);
  FieldSampler cho(g, ell, FieldBackend::Cholesky);
  const int probes[5] = {0, 57, 101, 149, 199};
  double m1[2][5] = {{0}}, m2[2][5] = {{0}};
  for (int r = 0; r < reps; ++r) {
    FieldRealization a = syn.draw(60601, static_cast<uint64_t>(r));
    FieldRealization b = cho.draw(60602, static_cast<uint64_t>(r));
    for (int k = 0; k < 5; ++k) {
      m1[0][k] += a.values[probes[k]];
      m2[0][k] += a.values[probes[k]] * a.values[probes[k]];
      m1[1][k] += b.values[probes[k]];
      m2[1][k] += b.values[probes[k]] * b.values[probes[k]];
    }
  }
  for (int k = 0; k < 5; ++k) {
    const double mean_se = 1.0 / std::sqrt(static_cast<double>(reps));
    const double var_se = std::sqrt(2.0 / reps);
    const double mean_gap = std::abs(m1[0][k] / reps - m1[1][k] / reps);
    const double va = m2[0][k] / reps - std::pow(m1[0][k] / reps, 2);
    const double vb = m2[1][k] / reps - std::pow(m1[1][k] / reps, 2);
    CHECK(mean_gap < 4.0 * std::sqrt(2.0) * mean_se);
    CHECK(std::abs(va - vb) < 4.0 * std::sqrt(2.0) * var_se);
  }
}

TEST_CASE("dispatch wrapper picks the right backend") {
  SphereGrid g2 = make_grid_s2(3);
  FieldRealization a = sample_field(2, 3, g2, 8);
  CHECK(a.backend == FieldBackend::Synthesis);
  SphereGrid g3 = make_grid_product(3, 2);
  FieldRealization b = sample_field(3, 2, g3, 8);
  CHECK(b.backend == FieldBackend::Cholesky);
}
