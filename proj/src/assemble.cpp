#include "oplab/assemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace oplab {

void AssembledOperator::apply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      s += val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(i)] = s;
  }
}

std::vector<double> AssembledOperator::apply(const std::vector<double>& x) const {
  std::vector<double> y;
  apply(x, y);
  return y;
}

NodalMeasure AssembledOperator::apply(const GridFunction& u) const {
  return NodalMeasure(apply(u.values));
}

double AssembledOperator::diag(Index i) const { return coeff(i, i); }

double AssembledOperator::max_diag() const {
  double m = 0.0;
  for (Index i = 0; i < n; ++i) m = std::max(m, std::abs(diag(i)));
  return m;
}

double AssembledOperator::coeff(Index i, Index j) const {
  const auto b = row_ptr[static_cast<std::size_t>(i)], e = row_ptr[static_cast<std::size_t>(i) + 1];
  auto first = col.begin() + b, last = col.begin() + e;
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return val[static_cast<std::size_t>(b + (it - first))];
}

std::vector<double> AssembledOperator::row_sums() const {
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      s[static_cast<std::size_t>(i)] += val[static_cast<std::size_t>(k)];
  return s;
}

std::vector<double> AssembledOperator::col_sums() const {
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      s[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])] += val[static_cast<std::size_t>(k)];
  return s;
}

bool AssembledOperator::same_pattern_and_values(const AssembledOperator& o) const {
  return n == o.n && row_ptr == o.row_ptr && col == o.col && val == o.val;
}

namespace {

double harmonic_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0)
    throw EllipticityError("nonpositive diagonal coefficient sample");
  return 2.0 * a * b / (a + b);
}

struct RowAccumulator {
  std::vector<std::pair<Index, double>> entries;  // (col, weight); -1 = eliminated
  void add(Index c, double w) { entries.emplace_back(c, w); }
};

}  // namespace

AssembledOperator assemble(const GridPtr& grid, const CoefficientField& coeff,
                           const AssembleOptions& opts) {
  const DomainGrid& g = *grid;
  const int dim = g.dim;
  const double scale = g.measure_scale();

  AssembledOperator op;
  op.grid = grid;
  op.n = g.interior_count();
  op.symmetric = coeff.declared_symmetric();
  op.row_ptr.assign(static_cast<std::size_t>(op.n) + 1, 0);
  op.row_eliminated.assign(static_cast<std::size_t>(op.n), 0.0);

  double worst_pos = 0.0;
  Index worst_row = -1, worst_col = -1;

  RowAccumulator acc;
  for (Index row = 0; row < op.n; ++row) {
    const Index id = g.row_to_node[static_cast<std::size_t>(row)];
    const auto x = g.node_coord(id);
    acc.entries.clear();
    double diag = 0.0;
    double eliminated = 0.0;

    // Second-order part: per edge, conductance from the harmonic mean of the
    // two half-edge samples; minus direction first, then plus.
    for (int d = 0; d < dim; ++d) {
      for (int dir : {-1, +1}) {
        std::array<double, 3> s1 = x, s2 = x;
        s1[d] += dir * 0.25 * g.h;
        s2[d] += dir * 0.75 * g.h;
        coeff.check_ellipticity_at(s1, dim);
        coeff.check_ellipticity_at(s2, dim);
        const double c = scale * harmonic_mean(coeff.entry(d, d, s1), coeff.entry(d, d, s2));
        diag += c;
        const Index nb = g.neighbor(id, d, dir);
        if (g.node_class(nb) == NodeClass::interior)
          acc.add(g.node_to_row[static_cast<std::size_t>(nb)], -c);
        else
          eliminated += -c;
      }
    }

    // Cross part -d_d(a_de d_e u): conservative flux with centered transverse
    // differences at the two d-edge midpoints.
    if (coeff.has_cross_terms()) {
      auto add_at = [&](std::array<Index, 3> ijk, double w) {
        const Index nid = g.node_id(ijk);
        if (g.node_class(nid) == NodeClass::interior)
          acc.add(g.node_to_row[static_cast<std::size_t>(nid)], w);
        else
          eliminated += w;
      };
      const auto ijk0 = g.node_ijk(id);
      for (int d = 0; d < dim; ++d)
        for (int e = 0; e < dim; ++e) {
          if (d == e) continue;
          std::array<double, 3> mp = x, mm = x;
          mp[d] += 0.5 * g.h;
          mm[d] -= 0.5 * g.h;
          const double wp = coeff.entry(d, e, mp) * scale / 4.0;
          const double wm = coeff.entry(d, e, mm) * scale / 4.0;
          if (wp == 0.0 && wm == 0.0) continue;
          auto shift = [&](int dd, int sd, int de, int se) {
            auto ijk = ijk0;
            ijk[dd] += sd;
            ijk[de] += se;
            return ijk;
          };
          // -phi(m+):  D_e at m+ couples x+e_e, x+e_d+e_e (+) and x-e_e, x+e_d-e_e (-)
          add_at(shift(d, 0, e, +1), -wp);
          add_at(shift(d, +1, e, +1), -wp);
          add_at(shift(d, 0, e, -1), +wp);
          add_at(shift(d, +1, e, -1), +wp);
          // +phi(m-)
          add_at(shift(d, -1, e, +1), +wm);
          add_at(shift(d, 0, e, +1), +wm);
          add_at(shift(d, -1, e, -1), -wm);
          add_at(shift(d, 0, e, -1), -wm);
        }
    }

    acc.add(row, diag);
    std::sort(acc.entries.begin(), acc.entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // merge duplicates
    std::size_t w = 0;
    for (std::size_t r = 0; r < acc.entries.size(); ++r) {
      if (w > 0 && acc.entries[w - 1].first == acc.entries[r].first)
        acc.entries[w - 1].second += acc.entries[r].second;
      else
        acc.entries[w++] = acc.entries[r];
    }
    acc.entries.resize(w);

    for (const auto& [c, v] : acc.entries) {
      if (c != row && v > worst_pos) {
        worst_pos = v;
        worst_row = row;
        worst_col = c;
      }
      op.col.push_back(c);
      op.val.push_back(v);
    }
    op.row_eliminated[static_cast<std::size_t>(row)] = eliminated;
    op.row_ptr[static_cast<std::size_t>(row) + 1] = static_cast<Index>(op.col.size());
  }

  const double tol = 1e-12 * op.max_diag();
  if (!opts.allow_nonmonotone && worst_pos > tol) {
    const auto xi = g.row_coord(worst_row);
    const auto xj = g.row_coord(worst_col);
    std::ostringstream os;
    os << "non-monotone assembly: off-diagonal +" << worst_pos << " on edge ("
       << xi[0] << "," << xi[1] << "," << xi[2] << ") -> (" << xj[0] << ","
       << xj[1] << "," << xj[2] << ")";
    throw MonotonicityError(os.str());
  }
  return op;
}

AssembledOperator adjoint(const AssembledOperator& a) {
  AssembledOperator t;
  t.grid = a.grid;
  t.n = a.n;
  t.symmetric = a.symmetric;
  t.row_eliminated = a.row_eliminated;  // diagnostic of the primal assembly
  t.row_ptr.assign(static_cast<std::size_t>(a.n) + 1, 0);
  t.col.resize(a.col.size());
  t.val.resize(a.val.size());
  for (Index j : a.col) ++t.row_ptr[static_cast<std::size_t>(j) + 1];
  for (Index i = 0; i < a.n; ++i)
    t.row_ptr[static_cast<std::size_t>(i) + 1] += t.row_ptr[static_cast<std::size_t>(i)];
  std::vector<Index> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (Index i = 0; i < a.n; ++i)
    for (Index k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const Index j = a.col[static_cast<std::size_t>(k)];
      const Index pos = next[static_cast<std::size_t>(j)]++;
      t.col[static_cast<std::size_t>(pos)] = i;
      t.val[static_cast<std::size_t>(pos)] = a.val[static_cast<std::size_t>(k)];
    }
  return t;
}

MonotoneReport validate_monotone(const AssembledOperator& op) {
  MonotoneReport rep;
  rep.tolerance = 1e-12 * op.max_diag();
  for (Index i = 0; i < op.n; ++i)
    for (Index k = op.row_ptr[static_cast<std::size_t>(i)]; k < op.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      const Index j = op.col[static_cast<std::size_t>(k)];
      const double v = op.val[static_cast<std::size_t>(k)];
      if (j == i) {
        if (v <= 0.0) ++rep.diag_sign_violations;
      } else if (v > rep.worst_positive_offdiag) {
        rep.worst_positive_offdiag = v;
        rep.offdiag_row = i;
        rep.offdiag_col = j;
      }
    }
  const auto cs = op.col_sums();
  for (Index j = 0; j < op.n; ++j)
    if (cs[static_cast<std::size_t>(j)] < rep.worst_negative_colsum) {
      rep.worst_negative_colsum = cs[static_cast<std::size_t>(j)];
      rep.colsum_col = j;
    }
  rep.passed = rep.diag_sign_violations == 0 &&
               rep.worst_positive_offdiag <= rep.tolerance &&
               rep.worst_negative_colsum >= -rep.tolerance;
  return rep;
}

void write_operator_text(const AssembledOperator& op, std::ostream& os) {
  const DomainGrid& g = *op.grid;
  os << "oplab-operator " << g.dim << " " << g.level << " " << g.alpha;
  for (int d = 0; d < g.dim; ++d) os << " " << g.lo[d] << " " << g.hi[d];
  os << " " << op.n << " " << op.val.size() << " " << (op.symmetric ? 1 : 0) << "\n";
  char buf[64];
  for (Index i = 0; i < op.n; ++i)
    for (Index k = op.row_ptr[static_cast<std::size_t>(i)]; k < op.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(i),
                    static_cast<long long>(op.col[static_cast<std::size_t>(k)]),
                    op.val[static_cast<std::size_t>(k)]);
      os << buf;
    }
}

}  // namespace oplab
