#include <doctest.h>

#include <random>

#include "oplab/elliptic.hpp"
#include "oplab/measure.hpp"
#include "oracle.hpp"

using namespace oplab;

namespace {

GridPtr interval(int level) {
  DomainSpec s;
  s.dim = 1;
  s.lo = {0, 0, 0};
  s.hi = {1, 1, 1};
  return build_grid(s, level);
}

GridPtr square(int level) {
  DomainSpec s;
  s.dim = 2;
  s.lo = {0, 0, 0};
  s.hi = {1, 1, 1};
  return build_grid(s, level);
}

}  // namespace

TEST_CASE("jordan decomposition splits signs and is minimal") {
  const NodalMeasure m(std::vector<double>{2.0, -3.0, 0.0});
  const auto [p, q] = jordan_decompose(m);
  CHECK(p.masses == std::vector<double>{2.0, 0.0, 0.0});
  CHECK(q.masses == std::vector<double>{0.0, 3.0, 0.0});
  CHECK(total_variation(m) == doctest::Approx(5.0));

  const NodalMeasure pos(std::vector<double>{1.0, 2.0});
  const auto [pp, pq] = jordan_decompose(pos);
  CHECK(pp.masses == pos.masses);
  CHECK(pq.masses == std::vector<double>{0.0, 0.0});

  // minimality: any a - b split with a, b >= 0 dominates componentwise
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> a(7), b(7);
    for (std::size_t i = 0; i < 7; ++i) {
      a[i] = U(rng);
      b[i] = U(rng);
    }
    std::vector<double> mm(7);
    for (std::size_t i = 0; i < 7; ++i) mm[i] = a[i] - b[i];
    const auto [mp, mq] = jordan_decompose(NodalMeasure(mm));
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(mp[i] <= a[i] + 1e-15);
      CHECK(mq[i] <= b[i] + 1e-15);
      CHECK(std::min(mp[i], mq[i]) == 0.0);
    }
  }
}

TEST_CASE("total variation of grid measures") {
  const auto g = square(4);
  GridMeasure single(g);
  single.add_atom({0.5, 0.5, 0.0}, -1.0);
  CHECK(total_variation(single) == doctest::Approx(1.0));

  GridMeasure dens(g);
  dens.set_density(GridFunction(static_cast<std::size_t>(g->interior_count()), 1.0));
  CHECK(total_variation(dens) == doctest::Approx(225.0 / 256.0).epsilon(1e-14));

  CHECK(total_variation(GridMeasure::zero(g)) == 0.0);
}

TEST_CASE("atom loads: at a node, at a midpoint, and misplaced") {
  const auto g = interval(2);
  GridMeasure at_node(g);
  at_node.add_atom({0.5, 0, 0}, -1.0);
  const auto l1 = load_vector(at_node, *g);
  CHECK(l1.masses == std::vector<double>{0.0, -1.0, 0.0});

  GridMeasure mid(g);
  mid.add_atom({0.375, 0, 0}, 1.0);
  const auto l2 = load_vector(mid, *g);
  CHECK(l2[0] == doctest::Approx(0.5));
  CHECK(l2[1] == doctest::Approx(0.5));
  CHECK(l2[2] == 0.0);

  GridMeasure bad(g);
  CHECK_THROWS_AS(bad.add_atom({2.0, 0, 0}, 1.0), PlacementError);

  // atom inside a fully exterior cell
  DomainSpec masked;
  masked.dim = 2;
  masked.lo = {0, 0, 0};
  masked.hi = {1, 1, 1};
  masked.alpha = 0.1;
  masked.mask = [](const std::array<double, 3>& x) {
    return std::sqrt(x[0] * x[0] + x[1] * x[1]) - 0.5;
  };
  const auto mg = build_grid(masked, 5);
  GridMeasure outside(mg);
  CHECK_THROWS_AS(outside.add_atom({0.05, 0.05, 0.0}, 1.0), PlacementError);
}

TEST_CASE("constant edge flux telescopes to a zero interior load") {
  const auto g = interval(3);
  std::array<ScalarField, 3> gf{};
  gf[0] = [](const std::array<double, 3>&) { return 1.0; };
  GridMeasure m(g);
  m.set_flux(EdgeFluxField(g, gf));
  const auto l = load_vector(m, *g);
  for (std::size_t i = 0; i < l.size(); ++i) CHECK(l[i] == doctest::Approx(0.0));
}

TEST_CASE("loads redistribute but never create mass") {
  const auto g = square(3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  std::uniform_real_distribution<double> W(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    GridMeasure m(g);
    for (int a = 0; a < 3; ++a) m.add_atom({U(rng), U(rng), 0.0}, W(rng));
    GridFunction f(static_cast<std::size_t>(g->interior_count()));
    for (auto& v : f.values) v = W(rng);
    m.set_density(f);
    const auto load = load_vector(m, *g);
    CHECK(load.total_variation() <= total_variation(m) + 1e-12);
  }
}

TEST_CASE("load_vector is linear in the measure") {
  const auto g = square(3);
  const double alpha = 0.7, beta = -1.3;
  GridMeasure m1(g), m2(g), combo(g);
  m1.add_atom({0.3, 0.4, 0.0}, 1.0);
  m2.add_atom({0.6, 0.7, 0.0}, -2.0);
  combo.add_atom({0.3, 0.4, 0.0}, alpha * 1.0);
  combo.add_atom({0.6, 0.7, 0.0}, beta * -2.0);
  GridFunction f1(static_cast<std::size_t>(g->interior_count()), 0.5);
  GridFunction f2(static_cast<std::size_t>(g->interior_count()));
  for (Index r = 0; r < g->interior_count(); ++r)
    f2[static_cast<std::size_t>(r)] = g->row_coord(r)[0];
  m1.set_density(f1);
  m2.set_density(f2);
  GridFunction fc(static_cast<std::size_t>(g->interior_count()));
  for (std::size_t i = 0; i < fc.size(); ++i)
    fc[i] = alpha * f1[i] + beta * f2[i];
  combo.set_density(fc);

  const auto l1 = load_vector(m1, *g);
  const auto l2 = load_vector(m2, *g);
  const auto lc = load_vector(combo, *g);
  double scale = 0.0;
  for (std::size_t i = 0; i < lc.size(); ++i)
    scale = std::max(scale, std::abs(lc[i]));
  for (std::size_t i = 0; i < lc.size(); ++i)
    CHECK(std::abs(lc[i] - (alpha * l1[i] + beta * l2[i])) <= 1e-12 * std::max(1.0, scale));
}

TEST_CASE("weak-star pairing is the nodal dot product") {
  const NodalMeasure m(std::vector<double>{0.0, -1.0, 0.0});
  CHECK(weak_star_pairing(m, GridFunction(3, 1.0)) == doctest::Approx(-1.0));
  CHECK(weak_star_pairing(m, GridFunction(3, 0.0)) == 0.0);
  const GridFunction phi(std::vector<double>{1.0, 2.0, 3.0});
  const GridFunction psi(std::vector<double>{-1.0, 0.5, 2.0});
  GridFunction lin(3);
  for (int i = 0; i < 3; ++i) lin[static_cast<std::size_t>(i)] =
      2.0 * phi[static_cast<std::size_t>(i)] - 0.5 * psi[static_cast<std::size_t>(i)];
  CHECK(weak_star_pairing(m, lin) ==
        doctest::Approx(2.0 * weak_star_pairing(m, phi) - 0.5 * weak_star_pairing(m, psi)));
}

TEST_CASE("regularization by truncation: inactive, binding, zero") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0, 0}, -1.0);

  const auto inactive = regularize_by_truncation(mu, 10.0, op);
  CHECK(inactive[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(inactive[1] == doctest::Approx(-1.0));
  CHECK(inactive[2] == doctest::Approx(0.0).epsilon(1e-12));

  const auto binding = regularize_by_truncation(mu, 0.1, op);
  CHECK(binding[0] == doctest::Approx(-0.4));
  CHECK(binding[1] == doctest::Approx(0.0));
  CHECK(binding[2] == doctest::Approx(-0.4));
  CHECK(binding.total_variation() == doctest::Approx(0.8));
  CHECK(binding.total_variation() <= total_variation(mu));

  const auto zero = regularize_by_truncation(GridMeasure::zero(g), 0.5, op);
  for (std::size_t i = 0; i < zero.size(); ++i)
    CHECK(zero[i] == doctest::Approx(0.0));

  CHECK_THROWS_AS(regularize_by_truncation(mu, 0.0, op), ArgumentError);
}

TEST_CASE("truncated data masses never exceed the original mass") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  std::uniform_real_distribution<double> W(-2.0, 2.0);
  std::uniform_real_distribution<double> C(0.5, 3.0);
  for (int rep = 0; rep < 25; ++rep) {
    const bool one_d = rep % 2 == 0;
    const auto g = one_d ? interval(3) : square(3);
    // random positive diagonal coefficients keep the operator monotone
    const double c0 = C(rng), c1 = C(rng);
    std::array<ScalarField, 3> a{};
    a[0] = [c0](const std::array<double, 3>& x) { return c0 + 0.3 * x[0]; };
    a[1] = [c1](const std::array<double, 3>& x) { return c1 + 0.2 * x[1]; };
    const auto op = assemble(g, CoefficientField::diagonal(std::move(a), 0.4));
    REQUIRE(validate_monotone(op).passed);

    GridMeasure mu(g);
    for (int at = 0; at < 2; ++at) {
      std::array<double, 3> x{U(rng), 0.0, 0.0};
      if (!one_d) x[1] = U(rng);
      mu.add_atom(x, W(rng));
    }
    GridFunction f(static_cast<std::size_t>(g->interior_count()));
    for (auto& v : f.values) v = W(rng);
    mu.set_density(f);

    const double tv = load_vector(mu, *g).total_variation();
    for (double k : {0.001, 0.01, 0.1, 1.0}) {
      const auto reg = regularize_by_truncation(mu, k, op);
      CHECK(reg.total_variation() <= tv * (1.0 + 1e-10));
    }
  }
}
