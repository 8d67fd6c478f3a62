#include <doctest.h>

#include <random>

#include "oplab/obstacle.hpp"
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

ViConfig psor_cfg() {
  ViConfig c;
  c.method = ViMethod::psor;
  return c;
}

ViConfig pdas_cfg() {
  ViConfig c;
  c.method = ViMethod::active_set;
  return c;
}

struct RandomInstance {
  GridMeasure mu;
  ExtendedGridFunction psi;
};

RandomInstance random_instance(const GridPtr& g, std::mt19937_64& rng,
                               bool allow_unconstrained_nodes = false) {
  std::uniform_real_distribution<double> U(0.05, 0.95);
  std::uniform_real_distribution<double> W(-2.0, 2.0);
  std::uniform_real_distribution<double> P(0.0, 0.15);
  GridMeasure mu(g);
  const int atoms = 1 + static_cast<int>(U(rng) * 3);
  for (int a = 0; a < atoms; ++a) {
    std::array<double, 3> x{U(rng), 0.0, 0.0};
    if (g->dim >= 2) x[1] = U(rng);
    mu.add_atom(x, W(rng));
  }
  GridFunction f(static_cast<std::size_t>(g->interior_count()));
  for (auto& v : f.values) v = W(rng);
  mu.set_density(f);
  std::vector<double> psi(static_cast<std::size_t>(g->interior_count()));
  for (auto& p : psi) p = -P(rng) - 0.002;
  if (allow_unconstrained_nodes)
    for (std::size_t i = 0; i < psi.size(); i += 3) psi[i] = kNegInf;
  return {std::move(mu), ExtendedGridFunction(std::move(psi))};
}

void check_vi_invariants(const AssembledOperator& op, const NodalMeasure& b,
                         const ViSolution& sol) {
  // positivity, feasibility, complementarity, consistency
  for (std::size_t i = 0; i < sol.lambda.size(); ++i)
    CHECK(sol.lambda[i] >= -1e-10 * sol.scale);
  CHECK(sol.feas_residual <= 1e-10 * std::max(1.0, sol.scale));
  CHECK(std::abs(sol.compl_residual) <= 1e-8 * std::max(1.0, sol.scale));
  const auto Ku = op.apply(sol.u);
  for (std::size_t i = 0; i < sol.lambda.size(); ++i)
    CHECK(std::abs(Ku[i] - b[i] - sol.lambda[i]) <= 1e-8 * std::max(1.0, sol.scale));
  for (std::size_t i = 0; i < sol.lambda.size(); ++i)
    if (!std::isfinite(sol.psi[i]))
      CHECK(std::abs(sol.lambda[i]) <= 1e-10 * std::max(1.0, sol.scale));
}

}  // namespace

TEST_CASE("the 3-node atom fixture solves exactly with both methods") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0, 0}, -1.0);
  const ExtendedGridFunction psi(3, -0.1);

  for (const auto& cfg : {psor_cfg(), pdas_cfg()}) {
    const ViSolution sol = solve_vi(op, mu, psi, cfg);
    CHECK(sol.u[0] == doctest::Approx(-0.05).epsilon(1e-10));
    CHECK(sol.u[1] == doctest::Approx(-0.1).epsilon(1e-10));
    CHECK(sol.u[2] == doctest::Approx(-0.05).epsilon(1e-10));
    CHECK(sol.lambda[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.lambda[1] == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(sol.lambda[2] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.mass_lambda() == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(sol.contact_count == 1);
    check_vi_invariants(op, load_vector(mu, *g), sol);
  }

  // independent enumeration oracle
  const auto K = oracle::dense_from(op);
  const auto o = oracle::vi_enumerate(K, {0, -1, 0}, {-0.1, -0.1, -0.1});
  REQUIRE(o.found);
  CHECK(o.u[0] == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(o.u[1] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(o.lambda[1] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("zero data against a deep obstacle stay at rest") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  const ViSolution sol =
      solve_vi(op, GridMeasure::zero(g), ExtendedGridFunction(3, -1.0), pdas_cfg());
  CHECK(sol.u.max_abs() == doctest::Approx(0.0));
  CHECK(sol.lambda.total_variation() == doctest::Approx(0.0));
  CHECK(sol.contact_count == 0);
}

TEST_CASE("both methods agree on random instances (uniqueness)") {
  std::mt19937_64 rng(404);
  for (int rep = 0; rep < 15; ++rep) {
    const auto g = square(3);
    const auto op = assemble(g, CoefficientField::identity());
    const auto inst = random_instance(g, rng, rep % 3 == 0);
    const auto b = load_vector(inst.mu, *g);
    const ViSolution s1 = solve_vi(op, b, inst.psi, psor_cfg());
    const ViSolution s2 = solve_vi(op, b, inst.psi, pdas_cfg());
    for (std::size_t i = 0; i < s1.u.size(); ++i)
      CHECK(std::abs(s1.u[i] - s2.u[i]) <= 1e-7);
    check_vi_invariants(op, b, s1);
    check_vi_invariants(op, b, s2);
  }
}

TEST_CASE("random 1-D fixtures match exhaustive enumeration") {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> W(-2.0, 2.0);
  std::uniform_real_distribution<double> P(0.01, 0.2);
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  const auto K = oracle::dense_from(op);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> b{W(rng), W(rng), W(rng)};
    std::vector<double> psi{-P(rng), -P(rng), -P(rng)};
    const auto o = oracle::vi_enumerate(K, b, psi);
    REQUIRE(o.found);
    for (const auto& cfg : {psor_cfg(), pdas_cfg()}) {
      const ViSolution sol =
          solve_vi(op, NodalMeasure(b), ExtendedGridFunction(psi), cfg);
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::abs(sol.u[i] - o.u[i]) <= 1e-10);
    }
  }
}

TEST_CASE("reaction is the residual of the solve") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0, 0}, -1.0);

  const ViSolution sol = solve_vi(op, mu, ExtendedGridFunction(3, -0.1), pdas_cfg());
  const auto lam = reaction(op, sol.u, mu);
  CHECK(lam[1] == doctest::Approx(0.6).epsilon(1e-9));

  // no obstacle active: reaction vanishes
  const auto u_free = solve_linear(op, load_vector(mu, *g), {});
  const auto lam0 = reaction(op, u_free, mu);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(lam0[i]) <= 1e-8);
}

TEST_CASE("mass bound: fixture, no-contact case, and a random sweep") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0, 0}, -1.0);
  const ViSolution sol = solve_vi(op, mu, ExtendedGridFunction(3, -0.1), pdas_cfg());
  const auto rep = check_mass_bound(sol, mu, GridMeasure::zero(g));
  CHECK(rep.pass);
  CHECK(rep.mass_lambda == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(rep.tv_bound == doctest::Approx(1.0));

  GridMeasure pos(g);
  pos.add_atom({0.25, 0, 0}, 0.7);
  const ViSolution sp = solve_vi(op, pos, ExtendedGridFunction(3, -0.1), pdas_cfg());
  const auto rp = check_mass_bound(sp, pos, GridMeasure::zero(g));
  CHECK(rp.pass);
  CHECK(rp.mass_lambda == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(rp.tv_bound == doctest::Approx(0.0));

  std::mt19937_64 rng(808);
  const auto g2 = square(3);
  const auto op2 = assemble(g2, CoefficientField::identity());
  for (int r = 0; r < 50; ++r) {
    const auto inst = random_instance(g2, rng);
    const ViSolution s = solve_vi(op2, inst.mu, inst.psi, pdas_cfg());
    CHECK(check_mass_bound(s, inst.mu, GridMeasure::zero(g2)).pass);
  }
}

TEST_CASE("minimality against sampled competitors") {
  const auto g = square(3);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0.5, 0.0}, -1.0);
  const ExtendedGridFunction psi(static_cast<std::size_t>(g->interior_count()), -0.05);
  const ViSolution sol = solve_vi(op, mu, psi, pdas_cfg());

  std::vector<GridMeasure> samples;
  GridMeasure lam_as_measure(g);
  GridFunction lam_density(sol.lambda.size());
  const double vol = g->cell_volume();
  for (std::size_t i = 0; i < sol.lambda.size(); ++i)
    lam_density[i] = std::max(sol.lambda[i], 0.0) / vol;
  lam_as_measure.set_density(lam_density);
  samples.push_back(lam_as_measure);

  GridMeasure padded(g);
  GridFunction pad(lam_density);
  for (auto& v : pad.values) v += 0.05;
  padded.set_density(pad);
  samples.push_back(padded);

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> U(0.0, 0.3);
  for (int r = 0; r < 20; ++r) {
    GridMeasure nu(g);
    GridFunction f(static_cast<std::size_t>(g->interior_count()));
    for (auto& v : f.values) v = U(rng);
    nu.set_density(f);
    samples.push_back(nu);
  }

  const auto rep = check_minimality(sol, op, mu, psi, samples);
  CHECK(rep.pass);
  CHECK(rep.checked >= 2);  // the reaction competitor is always feasible
  CHECK(rep.max_violation <= 1e-8 * std::max(1.0, sol.scale));

  GridMeasure negative(g);
  negative.add_atom({0.5, 0.5, 0.0}, -1.0);
  CHECK_THROWS_AS(check_minimality(sol, op, mu, psi, {negative}), ArgumentError);
}

TEST_CASE("ordered data give ordered reactions and solutions") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu1(g), mu2(g);
  mu1.add_atom({0.5, 0, 0}, -1.0);
  mu2.add_atom({0.5, 0, 0}, -0.5);
  const ExtendedGridFunction psi(3, -0.1);

  // second fixture derived by enumeration
  const auto K = oracle::dense_from(op);
  const auto o2 = oracle::vi_enumerate(K, {0, -0.5, 0}, {-0.1, -0.1, -0.1});
  REQUIRE(o2.found);
  CHECK(o2.u[0] == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(o2.u[1] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(o2.lambda[1] == doctest::Approx(0.1).epsilon(1e-12));

  const auto rep = compare_reactions(op, mu1, mu2, psi, pdas_cfg());
  CHECK(rep.pass);

  // identical data give identical reactions
  const auto same = compare_reactions(op, mu1, mu1, psi, pdas_cfg());
  CHECK(same.pass);
  CHECK(same.max_lambda_violation <= 1e-10);

  // violated precondition
  CHECK_THROWS_AS(compare_reactions(op, mu2, mu1, psi, pdas_cfg()), ArgumentError);

  // random ordered pairs, mu1 = mu2 - positive density
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> U(0.0, 1.5);
  const auto g2 = square(3);
  const auto op2 = assemble(g2, CoefficientField::identity());
  for (int r = 0; r < 15; ++r) {
    GridMeasure m2(g2);
    GridFunction f2(static_cast<std::size_t>(g2->interior_count()));
    for (auto& v : f2.values) v = U(rng) - 1.0;
    m2.set_density(f2);
    GridMeasure m1(g2);
    GridFunction f1(f2);
    for (auto& v : f1.values) v -= U(rng);
    m1.set_density(f1);
    const ExtendedGridFunction p(static_cast<std::size_t>(g2->interior_count()), -0.03);
    CHECK(compare_reactions(op2, m1, m2, p, pdas_cfg()).pass);
  }

  // positive obstacle rejected
  CHECK_THROWS_AS(
      compare_reactions(op, mu1, mu2, ExtendedGridFunction(3, 0.5), pdas_cfg()),
      ArgumentError);
}

TEST_CASE("truncation scheme: inactive schedules reproduce the direct solve") {
  const auto g = interval(2);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0, 0}, -1.0);
  const ExtendedGridFunction psi(3, -0.1);
  const auto direct = solve_vi(op, mu, psi, pdas_cfg());

  // first entry already dominates max|u_mu| = 0.25
  const auto ts = solve_op_by_truncation(op, mu, psi, GridMeasure::zero(g), {0.3, 1.0},
                                         pdas_cfg());
  for (const auto& row : ts.trace)
    CHECK(row.mass_lambda == doctest::Approx(0.6).epsilon(1e-9));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::abs(ts.final.u[i] - direct.u[i]) <= 1e-10);

  // canonical schedule: masses 0, 0, 0.4, 0.6 nondecreasing toward the limit
  const auto full = solve_op_by_truncation(op, mu, psi, GridMeasure::zero(g),
                                           {0.05, 0.1, 0.2, 1.0}, pdas_cfg());
  const double expected[] = {0.0, 0.0, 0.4, 0.6};
  for (std::size_t t = 0; t < 4; ++t)
    CHECK(full.trace[t].mass_lambda == doctest::Approx(expected[t]).epsilon(1e-8));
  CHECK(full.trace.back().w1q_gap == doctest::Approx(0.0).epsilon(1e-10));

  CHECK_THROWS_AS(solve_op_by_truncation(op, mu, psi, GridMeasure::zero(g),
                                         {0.2, 0.1}, pdas_cfg()),
                  ArgumentError);
}

TEST_CASE("truncation scheme with a dominating measure and signed obstacle") {
  const auto g = square(3);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure rho(g);
  rho.set_density(GridFunction(static_cast<std::size_t>(g->interior_count()), 2.0));
  const auto u_rho = solve_linear(op, load_vector(rho, *g), {});
  // obstacle below u_rho but positive in the middle
  std::vector<double> psi_vals(u_rho.values);
  for (auto& v : psi_vals) v -= 0.01;
  const ExtendedGridFunction psi(psi_vals);

  GridMeasure mu(g);
  mu.add_atom({0.4, 0.6, 0.0}, -0.8);
  const auto direct = solve_vi(op, mu, psi, pdas_cfg());

  const NodalMeasure b = load_vector(mu, *g);
  NodalMeasure diff(b.size());
  const auto lr = load_vector(rho, *g);
  for (std::size_t i = 0; i < b.size(); ++i) diff[i] = b[i] - lr[i];
  const double m = solve_linear(op, diff, {}).max_abs();
  const auto ts = solve_op_by_truncation(op, mu, psi, rho,
                                         {m / 8, m / 2, 1.5 * m}, pdas_cfg());
  for (std::size_t i = 0; i < direct.u.size(); ++i)
    CHECK(std::abs(ts.final.u[i] - direct.u[i]) <= 1e-6 * std::max(1.0, direct.scale));
}

TEST_CASE("entropy residuals: zero test function, constant lift, feasibility") {
  const auto g = square(3);
  const auto op = assemble(g, CoefficientField::identity());
  const auto n = static_cast<std::size_t>(g->interior_count());
  GridFunction f(n);
  for (Index r = 0; r < g->interior_count(); ++r)
    f[static_cast<std::size_t>(r)] = -1.5 - g->row_coord(r)[0];
  GridMeasure mu(g);
  mu.set_density(f);
  const ExtendedGridFunction psi(n, -0.04);
  const ViSolution sol = solve_vi(op, mu, psi, pdas_cfg());

  CHECK(entropy_residual(op, sol, f, nullptr, sol.u, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));

  GridFunction lifted(sol.u);
  const double c = 0.02;
  for (auto& v : lifted.values) v += c;
  const double r = entropy_residual(op, sol, f, nullptr, lifted, 1.0);
  CHECK(r == doctest::Approx(c * sol.mass_lambda()).epsilon(1e-8));
  CHECK(r >= 0.0);

  GridFunction infeasible(sol.u);
  infeasible[0] = psi[0] - 1.0;
  CHECK_THROWS_AS(entropy_residual(op, sol, f, nullptr, infeasible, 1.0),
                  ArgumentError);
  CHECK_THROWS_AS(entropy_residual(op, sol, f, nullptr, lifted, 0.0), ArgumentError);
}

TEST_CASE("solutions respond monotonically to the obstacle") {
  const auto g = square(3);
  const auto op = assemble(g, CoefficientField::identity());
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> U(0.0, 0.1);
  const auto inst = random_instance(g, rng);
  const auto b = load_vector(inst.mu, *g);
  std::vector<double> lower(inst.psi.values);
  for (auto& v : lower)
    if (std::isfinite(v)) v -= U(rng);
  const ViSolution s_low =
      solve_vi(op, b, ExtendedGridFunction(lower), pdas_cfg());
  const ViSolution s_high = solve_vi(op, b, inst.psi, pdas_cfg());
  for (std::size_t i = 0; i < s_low.u.size(); ++i)
    CHECK(s_low.u[i] <= s_high.u[i] + 1e-8);
}

TEST_CASE("unconstrained nodes carry no reaction") {
  const auto g = interval(3);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0, 0}, -1.0);
  std::vector<double> psi(7, kNegInf);
  psi[3] = -0.05;  // only the center is constrained
  const ViSolution sol = solve_vi(op, mu, ExtendedGridFunction(psi), pdas_cfg());
  for (std::size_t i = 0; i < 7; ++i)
    if (i != 3) CHECK(std::abs(sol.lambda[i]) <= 1e-10 * std::max(1.0, sol.scale));
  CHECK(sol.u[3] == doctest::Approx(-0.05).epsilon(1e-9));
}

TEST_CASE("solver caps surface as convergence errors with residuals") {
  const auto g = square(3);
  const auto op = assemble(g, CoefficientField::identity());
  GridMeasure mu(g);
  mu.add_atom({0.5, 0.5, 0.0}, -1.0);
  ViConfig cfg = psor_cfg();
  cfg.max_iter = 2;
  CHECK_THROWS_AS(
      solve_vi(op, mu, ExtendedGridFunction(static_cast<std::size_t>(op.n), -0.01), cfg),
      SolverError);
}

TEST_CASE("config validation") {
  ViConfig cfg;
  cfg.omega = 2.5;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg.omega = 1.5;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("reaction share classifier") {
  CHECK(max_nodal_share(NodalMeasure(std::vector<double>{0.0, 0.0})) == 0.0);
  CHECK(max_nodal_share(NodalMeasure(std::vector<double>{0.5, 0.5})) ==
        doctest::Approx(0.5));
  const auto rep = reaction_class_check(
      {{3, 0.5, 1.0}, {4, 0.25, 1.0}, {5, 0.12, 1.0}}, true);
  CHECK(rep.pass);
  CHECK(rep.share_decreasing);
  CHECK_FALSE(rep.atomic_flag);
  const auto atomic = reaction_class_check(
      {{3, 0.98, 1.0}, {4, 0.99, 1.0}, {5, 1.0, 1.0}}, false);
  CHECK(atomic.pass);
  CHECK(atomic.atomic_flag);
  CHECK(atomic.verdict == "atomic reaction");
}
