#include <doctest.h>

#include <random>

#include "oplab/capacity.hpp"
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

GridPtr cube(int level) {
  DomainSpec s;
  s.dim = 3;
  s.lo = {0, 0, 0};
  s.hi = {1, 1, 1};
  return build_grid(s, level);
}

GridSet random_set(const GridPtr& g, std::mt19937_64& rng, std::size_t max_nodes) {
  std::uniform_int_distribution<Index> pick(0, g->interior_count() - 1);
  std::vector<Index> rows;
  const std::size_t count = 1 + rng() % max_nodes;
  for (std::size_t i = 0; i < count; ++i) rows.push_back(pick(rng));
  return GridSet(g, std::move(rows));
}

}  // namespace

TEST_CASE("the point capacitary potential on the interval is the hat") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  const GridSet E = GridSet::points(g, {{0.5, 0, 0}});
  const ViSolution pot = capacitary_potential(op, E);
  CHECK(pot.u[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pot.u[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pot.u[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(capacity(op, E) == doctest::Approx(4.0).epsilon(1e-12));
  // reaction supported in E, mass = capacity
  CHECK(std::abs(pot.lambda[0]) <= 1e-10);
  CHECK(std::abs(pot.lambda[2]) <= 1e-10);
  CHECK(pot.lambda[1] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("whole-domain sets give the constant potential") {
  const auto g = square(3);
  const auto op = assemble(g, CoefficientField::identity());
  std::vector<Index> all(static_cast<std::size_t>(g->interior_count()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  const ViSolution pot = capacitary_potential(op, GridSet(g, all));
  for (std::size_t i = 0; i < pot.u.size(); ++i) CHECK(pot.u[i] == 1.0);
  const auto rs = op.row_sums();
  for (std::size_t i = 0; i < pot.u.size(); ++i)
    CHECK(pot.lambda[i] == doctest::Approx(rs[i]).epsilon(1e-12));
}

TEST_CASE("the empty set has zero potential and capacity") {
  const auto g = square(3);
  const auto op = assemble(g, CoefficientField::identity());
  const GridSet E(g, {});
  const ViSolution pot = capacitary_potential(op, E);
  CHECK(pot.u.max_abs() == 0.0);
  CHECK(capacity(op, E) == 0.0);
}

TEST_CASE("potentials stay in [0,1]; capacity equals the reaction mass") {
  const auto g = square(4);
  const auto op = assemble(g, CoefficientField::identity());
  std::mt19937_64 rng(2718);
  for (int rep = 0; rep < 25; ++rep) {
    const GridSet E = random_set(g, rng, 12);
    const ViSolution pot = capacitary_potential(op, E);
    for (double v : pot.u.values) {
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
    const double cap = capacity(op, E);
    const double mass = pot.lambda.total_mass();
    CHECK(cap == doctest::Approx(mass).epsilon(1e-8));
  }
}

TEST_CASE("capacity is monotone and subadditive") {
  const auto g = square(4);
  const auto op = assemble(g, CoefficientField::identity());
  std::mt19937_64 rng(3141);
  for (int rep = 0; rep < 20; ++rep) {
    const GridSet E1 = random_set(g, rng, 8);
    const GridSet E2 = E1.unite(random_set(g, rng, 8));
    REQUIRE(E1.subset_of(E2));
    const double c1 = capacity(op, E1);
    const double c2 = capacity(op, E2);
    CHECK(c1 <= c2 + 1e-10);

    const GridSet F = random_set(g, rng, 8);
    CHECK(capacity(op, E1.unite(F)) <=
          c1 + capacity(op, F) + 1e-8 * std::max(1.0, c1));
  }
}

TEST_CASE("capacity requires symmetry") {
  const auto g = square(3);
  std::array<std::array<ScalarField, 3>, 3> full{};
  full[0][0] = [](const std::array<double, 3>&) { return 1.0; };
  full[1][1] = [](const std::array<double, 3>&) { return 1.0; };
  full[0][1] = [](const std::array<double, 3>& x) { return 0.2 * x[0]; };
  full[1][0] = [](const std::array<double, 3>& x) { return -0.2 * x[0]; };
  AssembleOptions opts;
  opts.allow_nonmonotone = true;
  const auto op = assemble(g, CoefficientField::full(std::move(full), 0.5, false), opts);
  CHECK_THROWS_AS(capacity(op, GridSet::points(g, {{0.5, 0.5, 0}})), SymmetryError);
}

TEST_CASE("point capacities decay at the dimensional rates") {
  // 1-D points have positive capacity: the decay table refuses them
  {
    const auto g = interval(2);
    const auto op = assemble(g, CoefficientField::identity());
    std::vector<const AssembledOperator*> fam{&op};
    CHECK_THROWS_AS(point_capacity_decay(fam, {0.5, 0, 0}), ArgumentError);
  }
  {
    std::vector<AssembledOperator> ops;
    for (int level : {3, 4, 5, 6}) {
      ops.push_back(assemble(square(level), CoefficientField::identity()));
    }
    std::vector<const AssembledOperator*> fam;
    for (const auto& op : ops) fam.push_back(&op);
    const auto table = point_capacity_decay(fam, {0.5, 0.5, 0});
    CHECK(table.strictly_decreasing);
    CHECK(table.decay_model_ok);
  }
  {
    std::vector<AssembledOperator> ops;
    for (int level : {3, 4, 5}) {
      ops.push_back(assemble(cube(level), CoefficientField::identity()));
    }
    std::vector<const AssembledOperator*> fam;
    for (const auto& op : ops) fam.push_back(&op);
    const auto table = point_capacity_decay(fam, {0.5, 0.5, 0.5});
    CHECK(table.strictly_decreasing);
    CHECK(table.decay_model_ok);
  }
}

TEST_CASE("tiled two-ball generator: radii, balance, resolution guard") {
  CHECK(cm_required_level(1) == 4);  // h < 1/8 needs level 4
  CHECK(cm_required_level(2) == 7);  // h < 1/64 needs level 7

  const auto g = cube(4);
  const auto op = assemble(g, CoefficientField::identity());
  const auto cm1 = cm_scenario(op, 1);
  CHECK(cm1.r_inner == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(cm1.resolved);
  // balanced data: near-zero pairing with the constant
  CHECK(std::abs(cm1.mu.total_mass()) <= 1e-6 * cm1.mu.total_variation());
  // psi is the inner-ball indicator
  Index ones = 0;
  for (std::size_t i = 0; i < cm1.psi.size(); ++i)
    if (cm1.psi[i] == 1.0) ++ones;
  CHECK(ones > 0);

  CHECK_THROWS_AS(cm_scenario(op, 2), ResolutionError);
  try {
    cm_scenario(op, 2);
  } catch (const ResolutionError& e) {
    CHECK(e.required_level == 7);
  }
  CmOptions opts;
  opts.allow_degenerate = true;
  const auto cm2 = cm_scenario(op, 2, opts);
  CHECK(cm2.r_inner == doctest::Approx(0.015625).epsilon(1e-15));
  CHECK_FALSE(cm2.resolved);
  CHECK(cm2.mu.total_variation() > 0.0);

  const auto gsq = square(3);
  const auto opsq = assemble(gsq, CoefficientField::identity());
  CHECK_THROWS_AS(cm_scenario(opsq, 1), ArgumentError);
}

TEST_CASE("pairings of the tiled data shrink while their mass persists") {
  const auto g = cube(5);
  const auto op = assemble(g, CoefficientField::identity());
  const auto panel = bump_panel(*g);
  CmOptions opts;
  opts.allow_degenerate = true;
  const auto cm1 = cm_scenario(op, 1, opts);
  const auto cm3 = cm_scenario(op, 3, opts);
  for (const auto& phi : panel) {
    const double p1 = std::abs(weak_star_pairing(cm1.mu, phi));
    const double p3 = std::abs(weak_star_pairing(cm3.mu, phi));
    CHECK(p3 < p1);
  }
  CHECK(cm1.mu.total_variation() > 0.5);
  CHECK(cm3.mu.total_variation() > 0.5);
}

TEST_CASE("named obstacles: log closed form, Green pole, constants") {
  {
    DomainSpec s;
    s.dim = 1;
    s.lo = {-1, 0, 0};
    s.hi = {1, 1, 1};
    const auto g = build_grid(s, 3);
    const auto res = named_obstacle_log_1d(g);
    REQUIRE(res.has_reference);
    const Index mid = g->node_to_row[static_cast<std::size_t>(g->nearest_node({0, 0, 0}))];
    CHECK(res.psi[static_cast<std::size_t>(mid)] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res.reference_density[static_cast<std::size_t>(mid)] ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(named_obstacle_log_1d(square(3)), ArgumentError);
  }
  {
    const auto g = interval(2);
    const auto op = assemble(g, CoefficientField::identity());
    const auto res = named_obstacle_green_pole(op, {0.5, 0, 0});
    CHECK(res.psi[0] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(res.psi[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(res.psi[2] == doctest::Approx(0.125).epsilon(1e-12));
  }
  {
    const auto g = interval(2);
    const auto res = named_obstacle_constant(g, -1.0);
    for (std::size_t i = 0; i < res.psi.size(); ++i) CHECK(res.psi[i] == -1.0);
  }
}

TEST_CASE("grid set literals parse") {
  const auto g = square(3);
  const auto ball = GridSet::parse(g, "ball(0.5 0.5, 0.2)");
  CHECK_FALSE(ball.empty());
  const auto box = GridSet::parse(g, "box(0.25 0.25, 0.75 0.75)");
  CHECK_FALSE(box.empty());
  const auto pts = GridSet::parse(g, "points((0.5 0.5) (0.25 0.75))");
  CHECK(pts.rows().size() == 2);
  const auto uni = GridSet::parse(g, "union(ball(0.5 0.5, 0.2); points((0.125 0.125)))");
  CHECK(ball.subset_of(uni));
  CHECK_THROWS_AS(GridSet::parse(g, "blob(1 2)"), ParseError);
  CHECK_THROWS_AS(GridSet::parse(g, "ball(0.5, 0.2)"), ParseError);
}

TEST_CASE("the bump panel is a five-bump partition of widths") {
  const auto g = square(4);
  const auto panel = bump_panel(*g);
  REQUIRE(panel.size() == 5);
  const Index c = g->node_to_row[static_cast<std::size_t>(g->nearest_node({0.5, 0.5, 0}))];
  for (const auto& phi : panel) {
    CHECK(phi[static_cast<std::size_t>(c)] == doctest::Approx(1.0));
    for (double v : phi.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
  // widths shrink: strictly nested supports
  for (std::size_t k = 1; k < 5; ++k) {
    double mass_prev = 0.0, mass_cur = 0.0;
    for (std::size_t i = 0; i < panel[k].size(); ++i) {
      mass_prev += panel[k - 1][i];
      mass_cur += panel[k][i];
    }
    CHECK(mass_cur < mass_prev);
  }
}
