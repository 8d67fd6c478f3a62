#include "oplab/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace oplab {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

double parse_num(const std::string& t, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + t + "'", line);
  }
}

void parse_measure_line(MeasureSpec& m, const std::vector<std::string>& tok, int dim,
                        int line) {
  // tok[0] is "mu" or "rho"
  if (tok.size() < 2) throw ParseError("measure line needs a kind", line);
  const std::string& kind = tok[1];
  if (kind == "atom") {
    if (static_cast<int>(tok.size()) != 2 + dim + 1)
      throw ParseError("atom needs " + std::to_string(dim) + " coordinates and a weight",
                       line);
    std::array<double, 4> a{0, 0, 0, 0};
    for (int d = 0; d < dim; ++d) a[static_cast<std::size_t>(d)] = parse_num(tok[2 + d], line);
    a[3] = parse_num(tok[2 + dim], line);
    m.atoms.push_back(a);
  } else if (kind == "density") {
    if (tok.size() != 3) throw ParseError("density needs one whitespace-free expression", line);
    Expression::parse(tok[2]);  // validate now
    m.density_expr = tok[2];
  } else if (kind == "flux") {
    if (static_cast<int>(tok.size()) != 2 + dim)
      throw ParseError("flux needs one expression per axis", line);
    m.flux_exprs.assign(tok.begin() + 2, tok.end());
    for (const auto& e : m.flux_exprs) Expression::parse(e);
  } else if (kind == "vi-reaction") {
    m.vi_reaction = true;
  } else if (kind == "zero") {
    // explicit zero measure
  } else {
    throw ParseError("unknown measure kind '" + kind + "'", line);
  }
}

}  // namespace

bool Scenario::operator==(const Scenario& other) const {
  return serialize_scenario(*this) == serialize_scenario(other);
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  bool have_rho = false;
  MeasureSpec rho;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  bool seen_dimension = false;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const auto tok = split_ws(raw);
    if (tok.empty()) continue;
    const std::string& key = tok[0];

    if (key == "name") {
      if (tok.size() != 2) throw ParseError("name takes one token", line);
      s.name = tok[1];
    } else if (key == "dimension") {
      if (tok.size() != 2) throw ParseError("dimension takes one value", line);
      s.dim = static_cast<int>(parse_num(tok[1], line));
      if (s.dim < 1 || s.dim > 3) throw ParseError("dimension must be 1, 2 or 3", line);
      seen_dimension = true;
    } else if (key == "box") {
      if (!seen_dimension) throw ParseError("dimension must precede box", line);
      if (static_cast<int>(tok.size()) != 1 + 2 * s.dim)
        throw ParseError("box needs lo hi per axis", line);
      for (int d = 0; d < s.dim; ++d) {
        s.lo[d] = parse_num(tok[1 + 2 * d], line);
        s.hi[d] = parse_num(tok[2 + 2 * d], line);
      }
    } else if (key == "mask") {
      if (tok[1] == "none") {
        s.mask.kind = MaskSpec::Kind::none;
      } else if (tok[1] == "minus-ball" || tok[1] == "inside-ball") {
        if (static_cast<int>(tok.size()) != 2 + s.dim + 1)
          throw ParseError("mask ball needs center and radius", line);
        s.mask.kind = tok[1] == "minus-ball" ? MaskSpec::Kind::minus_ball
                                             : MaskSpec::Kind::inside_ball;
        for (int d = 0; d < s.dim; ++d) s.mask.center[d] = parse_num(tok[2 + d], line);
        s.mask.radius = parse_num(tok[2 + s.dim], line);
      } else {
        throw ParseError("unknown mask kind '" + tok[1] + "'", line);
      }
    } else if (key == "alpha") {
      s.alpha = parse_num(tok[1], line);
    } else if (key == "levels") {
      s.levels.clear();
      for (std::size_t i = 1; i < tok.size(); ++i)
        s.levels.push_back(static_cast<int>(parse_num(tok[i], line)));
      if (s.levels.empty()) throw ParseError("levels list is empty", line);
      for (std::size_t i = 1; i < s.levels.size(); ++i)
        if (s.levels[i] <= s.levels[i - 1])
          throw ParseError("levels must be strictly increasing", line);
    } else if (key == "coeff") {
      if (tok.size() < 2) throw ParseError("coeff needs a kind", line);
      if (tok[1] == "identity") {
        s.coeff.kind = CoeffSpec::Kind::identity;
      } else if (tok[1] == "diag") {
        if (static_cast<int>(tok.size()) != 2 + s.dim)
          throw ParseError("coeff diag needs one expression per axis", line);
        s.coeff.kind = CoeffSpec::Kind::diagonal;
        s.coeff.exprs.assign(tok.begin() + 2, tok.end());
      } else if (tok[1] == "full") {
        if (static_cast<int>(tok.size()) != 2 + s.dim * s.dim)
          throw ParseError("coeff full needs N*N expressions", line);
        s.coeff.kind = CoeffSpec::Kind::full;
        s.coeff.exprs.assign(tok.begin() + 2, tok.end());
      } else {
        throw ParseError("unknown coeff kind '" + tok[1] + "'", line);
      }
      for (const auto& e : s.coeff.exprs) Expression::parse(e);
    } else if (key == "gamma") {
      s.coeff.gamma = parse_num(tok[1], line);
    } else if (key == "mu") {
      parse_measure_line(s.mu, tok, s.dim, line);
      if (s.mu.vi_reaction) throw ParseError("vi-reaction is only valid for rho", line);
    } else if (key == "rho") {
      parse_measure_line(rho, tok, s.dim, line);
      have_rho = true;
    } else if (key == "psi") {
      if (tok.size() < 2) throw ParseError("psi needs a kind", line);
      if (tok[1] == "const") {
        if (tok.size() != 3) throw ParseError("psi const needs a value", line);
        s.psi.kind = ObstacleSpec::Kind::constant;
        s.psi.value = parse_num(tok[2], line);
      } else if (tok[1] == "expr") {
        if (tok.size() != 3) throw ParseError("psi expr needs one expression", line);
        s.psi.kind = ObstacleSpec::Kind::expr;
        s.psi.expr = tok[2];
        Expression::parse(tok[2]);
      } else if (tok[1] == "green-pole") {
        if (static_cast<int>(tok.size()) != 2 + s.dim)
          throw ParseError("psi green-pole needs pole coordinates", line);
        s.psi.kind = ObstacleSpec::Kind::green_pole;
        for (int d = 0; d < s.dim; ++d) s.psi.pole[d] = parse_num(tok[2 + d], line);
      } else if (tok[1] == "log-obstacle-1d") {
        s.psi.kind = ObstacleSpec::Kind::log_obstacle_1d;
      } else {
        throw ParseError("unknown psi kind '" + tok[1] + "'", line);
      }
    } else if (key == "method") {
      if (tok[1] == "psor") s.method = ViMethod::psor;
      else if (tok[1] == "activeset") s.method = ViMethod::active_set;
      else throw ParseError("unknown method '" + tok[1] + "'", line);
    } else if (key == "tol") {
      s.tol = parse_num(tok[1], line);
    } else if (key == "omega") {
      s.omega = parse_num(tok[1], line);
    } else if (key == "maxiter") {
      s.max_iter = static_cast<Index>(parse_num(tok[1], line));
    } else if (key == "q") {
      s.q = parse_num(tok[1], line);
    } else if (key == "out") {
      s.out_dir = tok[1];
    } else if (key == "experiment") {
      s.experiment = tok[1];
    } else {
      throw ParseError("unknown key '" + key + "'", line);
    }
  }
  if (have_rho) s.rho = std::move(rho);
  if (!s.psi.certainly_nonpositive() && !s.rho)
    throw ParseError("dominating measure required: psi is not certainly nonpositive");
  return s;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open scenario file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_scenario(os.str());
}

namespace {

void serialize_measure(std::ostream& os, const std::string& key, const MeasureSpec& m,
                       int dim) {
  for (const auto& a : m.atoms) {
    os << key << " atom";
    for (int d = 0; d < dim; ++d) os << " " << fmt(a[static_cast<std::size_t>(d)]);
    os << " " << fmt(a[3]) << "\n";
  }
  if (m.density_expr) os << key << " density " << *m.density_expr << "\n";
  if (!m.flux_exprs.empty()) {
    os << key << " flux";
    for (const auto& e : m.flux_exprs) os << " " << e;
    os << "\n";
  }
  if (m.vi_reaction) os << key << " vi-reaction\n";
  if (m.trivially_zero()) os << key << " zero\n";
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  os << "name " << s.name << "\n";
  os << "dimension " << s.dim << "\n";
  os << "box";
  for (int d = 0; d < s.dim; ++d) os << " " << fmt(s.lo[d]) << " " << fmt(s.hi[d]);
  os << "\n";
  switch (s.mask.kind) {
    case MaskSpec::Kind::none:
      os << "mask none\n";
      break;
    case MaskSpec::Kind::minus_ball:
    case MaskSpec::Kind::inside_ball:
      os << "mask " << (s.mask.kind == MaskSpec::Kind::minus_ball ? "minus-ball" : "inside-ball");
      for (int d = 0; d < s.dim; ++d) os << " " << fmt(s.mask.center[d]);
      os << " " << fmt(s.mask.radius) << "\n";
      break;
  }
  os << "alpha " << fmt(s.alpha) << "\n";
  os << "levels";
  for (int l : s.levels) os << " " << l;
  os << "\n";
  switch (s.coeff.kind) {
    case CoeffSpec::Kind::identity: os << "coeff identity\n"; break;
    case CoeffSpec::Kind::diagonal: {
      os << "coeff diag";
      for (const auto& e : s.coeff.exprs) os << " " << e;
      os << "\n";
      break;
    }
    case CoeffSpec::Kind::full: {
      os << "coeff full";
      for (const auto& e : s.coeff.exprs) os << " " << e;
      os << "\n";
      break;
    }
  }
  os << "gamma " << fmt(s.coeff.gamma) << "\n";
  serialize_measure(os, "mu", s.mu, s.dim);
  switch (s.psi.kind) {
    case ObstacleSpec::Kind::none: break;
    case ObstacleSpec::Kind::constant:
      os << "psi const " << fmt(s.psi.value) << "\n";
      break;
    case ObstacleSpec::Kind::expr:
      os << "psi expr " << s.psi.expr << "\n";
      break;
    case ObstacleSpec::Kind::green_pole:
      os << "psi green-pole";
      for (int d = 0; d < s.dim; ++d) os << " " << fmt(s.psi.pole[d]);
      os << "\n";
      break;
    case ObstacleSpec::Kind::log_obstacle_1d:
      os << "psi log-obstacle-1d\n";
      break;
  }
  if (s.rho) serialize_measure(os, "rho", *s.rho, s.dim);
  os << "method " << (s.method == ViMethod::psor ? "psor" : "activeset") << "\n";
  os << "tol " << fmt(s.tol) << "\n";
  os << "omega " << fmt(s.omega) << "\n";
  os << "maxiter " << s.max_iter << "\n";
  os << "q " << fmt(s.q) << "\n";
  if (!s.out_dir.empty()) os << "out " << s.out_dir << "\n";
  if (!s.experiment.empty()) os << "experiment " << s.experiment << "\n";
  return os.str();
}

std::string scenario_hash(const Scenario& s) {
  const std::string text = serialize_scenario(s);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GridPtr scenario_grid(const Scenario& s, int level) {
  DomainSpec spec;
  spec.dim = s.dim;
  spec.lo = s.lo;
  spec.hi = s.hi;
  spec.alpha = s.alpha;
  if (s.mask.kind == MaskSpec::Kind::minus_ball) {
    const auto c = s.mask.center;
    const double r = s.mask.radius;
    const int dim = s.dim;
    spec.mask = [c, r, dim](const std::array<double, 3>& x) {
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) d2 += (x[d] - c[d]) * (x[d] - c[d]);
      return std::sqrt(d2) - r;  // negative inside the removed ball
    };
  } else if (s.mask.kind == MaskSpec::Kind::inside_ball) {
    const auto c = s.mask.center;
    const double r = s.mask.radius;
    const int dim = s.dim;
    spec.mask = [c, r, dim](const std::array<double, 3>& x) {
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) d2 += (x[d] - c[d]) * (x[d] - c[d]);
      return r - std::sqrt(d2);  // positive inside the kept ball
    };
  }
  return build_grid(spec, level);
}

CoefficientField scenario_coeff(const Scenario& s) {
  switch (s.coeff.kind) {
    case CoeffSpec::Kind::identity:
      return CoefficientField::identity();
    case CoeffSpec::Kind::diagonal: {
      std::array<ScalarField, 3> a{};
      for (int d = 0; d < s.dim; ++d) {
        auto e = Expression::parse(s.coeff.exprs[static_cast<std::size_t>(d)]);
        a[d] = [e](const std::array<double, 3>& x) { return e.eval(x); };
      }
      return CoefficientField::diagonal(std::move(a), s.coeff.gamma);
    }
    case CoeffSpec::Kind::full: {
      std::array<std::array<ScalarField, 3>, 3> a{};
      bool symmetric = true;
      for (int i = 0; i < s.dim; ++i)
        for (int j = 0; j < s.dim; ++j) {
          const auto& ta = s.coeff.exprs[static_cast<std::size_t>(i * s.dim + j)];
          const auto& tb = s.coeff.exprs[static_cast<std::size_t>(j * s.dim + i)];
          if (ta != tb) symmetric = false;
          auto e = Expression::parse(ta);
          a[i][j] = [e](const std::array<double, 3>& x) { return e.eval(x); };
        }
      return CoefficientField::full(std::move(a), s.coeff.gamma, symmetric);
    }
  }
  throw ArgumentError("unreachable coeff kind");
}

GridMeasure scenario_measure(const MeasureSpec& m, const GridPtr& grid) {
  GridMeasure out(grid);
  for (const auto& a : m.atoms)
    out.add_atom({a[0], a[1], a[2]}, a[3]);
  if (m.density_expr) {
    const auto e = Expression::parse(*m.density_expr);
    GridFunction f(static_cast<std::size_t>(grid->interior_count()));
    for (Index row = 0; row < grid->interior_count(); ++row)
      f[static_cast<std::size_t>(row)] = e.eval(grid->row_coord(row));
    out.set_density(std::move(f));
  }
  if (!m.flux_exprs.empty()) {
    std::array<ScalarField, 3> g{};
    for (int d = 0; d < grid->dim; ++d) {
      auto e = Expression::parse(m.flux_exprs[static_cast<std::size_t>(d)]);
      g[d] = [e](const std::array<double, 3>& x) { return e.eval(x); };
    }
    out.set_flux(EdgeFluxField(grid, g));
  }
  return out;
}

ExtendedGridFunction scenario_obstacle(const Scenario& s, const GridPtr& grid,
                                       const AssembledOperator& op) {
  const auto n = static_cast<std::size_t>(grid->interior_count());
  switch (s.psi.kind) {
    case ObstacleSpec::Kind::none:
      return ExtendedGridFunction(n, kNegInf);
    case ObstacleSpec::Kind::constant:
      return ExtendedGridFunction(n, s.psi.value);
    case ObstacleSpec::Kind::expr: {
      const auto e = Expression::parse(s.psi.expr);
      std::vector<double> v(n);
      for (Index row = 0; row < grid->interior_count(); ++row)
        v[static_cast<std::size_t>(row)] = e.eval(grid->row_coord(row));
      return ExtendedGridFunction(std::move(v));
    }
    case ObstacleSpec::Kind::green_pole: {
      LinearSolveConfig cfg;
      cfg.rel_tol = std::min(s.tol, 1e-10);
      return named_obstacle_green_pole(op, s.psi.pole, cfg).psi;
    }
    case ObstacleSpec::Kind::log_obstacle_1d:
      return named_obstacle_log_1d(grid).psi;
  }
  throw ArgumentError("unreachable obstacle kind");
}

NodalMeasure scenario_rho_load(const Scenario& s, const GridPtr& grid,
                               const AssembledOperator& op,
                               const ExtendedGridFunction& psi) {
  if (!s.rho) return NodalMeasure(static_cast<std::size_t>(grid->interior_count()));
  if (s.rho->vi_reaction) {
    ViConfig cfg = s.vi_config();
    const ViSolution sol =
        solve_vi(op, GridMeasure::zero(grid), psi, cfg);
    return sol.lambda;
  }
  return load_vector(scenario_measure(*s.rho, grid), *grid);
}

}  // namespace oplab
