#include "oplab/grid.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace oplab {

namespace {

// Exterior volume fraction of the ball B_rho(x0), estimated by counting
// sample cells of side `spacing`. "Exterior" = outside the box or excluded
// by the mask (mask <= 0).
double exterior_fraction(const DomainSpec& spec, const std::array<double, 3>& x0,
                         double rho, double spacing) {
  const int n = std::max<int>(2, static_cast<int>(std::ceil(2.0 * rho / spacing)));
  const double step = 2.0 * rho / n;
  long total = 0, outside = 0;
  std::array<int, 3> it{0, 0, 0};
  const int dim = spec.dim;
  std::array<int, 3> nmax{1, 1, 1};
  for (int d = 0; d < dim; ++d) nmax[d] = n;
  for (it[2] = 0; it[2] < nmax[2]; ++it[2])
    for (it[1] = 0; it[1] < nmax[1]; ++it[1])
      for (it[0] = 0; it[0] < nmax[0]; ++it[0]) {
        std::array<double, 3> y{0, 0, 0};
        double r2 = 0.0;
        for (int d = 0; d < dim; ++d) {
          y[d] = x0[d] - rho + (it[d] + 0.5) * step;
          r2 += (y[d] - x0[d]) * (y[d] - x0[d]);
        }
        if (r2 > rho * rho) continue;
        ++total;
        bool in_domain = true;
        for (int d = 0; d < dim; ++d)
          if (y[d] <= spec.lo[d] || y[d] >= spec.hi[d]) in_domain = false;
        if (in_domain && spec.mask && spec.mask(y) <= 0.0) in_domain = false;
        if (!in_domain) ++outside;
      }
  if (total == 0) return 1.0;
  return static_cast<double>(outside) / static_cast<double>(total);
}

void density_check(const DomainSpec& spec, const DomainGrid& g) {
  // Boundary balls at three dyadic radii; sample cells of side h/2.
  // Large boundaries are subsampled with a deterministic stride.
  std::vector<Index> bnodes;
  for (Index id = 0; id < g.lattice_count(); ++id)
    if (g.classes[static_cast<std::size_t>(id)] == NodeClass::boundary)
      bnodes.push_back(id);
  const std::size_t cap = 1024;
  const std::size_t stride = bnodes.size() > cap ? bnodes.size() / cap : 1;
  for (std::size_t b = 0; b < bnodes.size(); b += stride) {
    const auto x0 = g.node_coord(bnodes[b]);
    for (double rho : {2.0 * g.h, 4.0 * g.h, 8.0 * g.h}) {
      const double frac = exterior_fraction(spec, x0, rho, g.h / 2.0);
      if (frac <= g.alpha) {
        std::ostringstream os;
        os << "boundary density check failed at node (" << x0[0];
        for (int d = 1; d < g.dim; ++d) os << ", " << x0[d];
        os << "), rho = " << rho << ": exterior fraction " << frac
           << " <= alpha = " << g.alpha;
        throw RegularityError(os.str());
      }
    }
  }
}

}  // namespace

Index DomainGrid::nearest_node(const std::array<double, 3>& x) const {
  std::array<Index, 3> ijk{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    auto i = static_cast<Index>(std::llround((x[d] - lo[d]) / h));
    ijk[d] = std::clamp<Index>(i, 0, cells[d]);
  }
  return node_id(ijk);
}

GridPtr build_grid(const DomainSpec& spec, int level) {
  if (level < 0) throw ArgumentError("refinement level must be >= 0");
  if (spec.dim < 1 || spec.dim > 3) throw ArgumentError("dimension must be 1, 2 or 3");
  if (spec.alpha <= 0.0 || spec.alpha >= 1.0)
    throw ArgumentError("alpha must lie in (0, 1)");
  for (int d = 0; d < spec.dim; ++d)
    if (!(spec.extent(d) > 0.0)) throw ArgumentError("box extents must be positive");

  auto g = std::make_shared<DomainGrid>();
  g->dim = spec.dim;
  g->lo = spec.lo;
  g->hi = spec.hi;
  g->level = level;
  g->alpha = spec.alpha;
  g->h = spec.extent(0) / static_cast<double>(Index{1} << level);
  for (int d = 0; d < spec.dim; ++d) {
    const double m = spec.extent(d) / g->h;
    const auto mi = static_cast<Index>(std::llround(m));
    if (std::abs(m - static_cast<double>(mi)) > 1e-9 || mi < 1)
      throw ArgumentError("box extents must be integer multiples of the spacing");
    g->cells[d] = mi;
  }

  Index total = 1;
  for (int d = 0; d < spec.dim; ++d) total *= g->cells[d] + 1;
  g->classes.resize(static_cast<std::size_t>(total));
  g->node_to_row.assign(static_cast<std::size_t>(total), -1);

  for (Index id = 0; id < total; ++id) {
    const auto ijk = g->node_ijk(id);
    bool on_face = false;
    for (int d = 0; d < spec.dim; ++d)
      if (ijk[d] == 0 || ijk[d] == g->cells[d]) on_face = true;
    NodeClass cls;
    if (on_face) {
      cls = NodeClass::boundary;
    } else if (!spec.mask) {
      cls = NodeClass::interior;
    } else {
      const double phi = spec.mask(g->node_coord(id));
      cls = phi > 0.0 ? NodeClass::interior
            : phi < 0.0 ? NodeClass::exterior
                        : NodeClass::boundary;
    }
    g->classes[static_cast<std::size_t>(id)] = cls;
    if (cls == NodeClass::interior) {
      g->node_to_row[static_cast<std::size_t>(id)] = static_cast<Index>(g->row_to_node.size());
      g->row_to_node.push_back(id);
    }
  }

  if (g->row_to_node.empty())
    throw EmptyDomainError("mask leaves no interior nodes at level " + std::to_string(level));
  if (spec.mask) density_check(spec, *g);
  return g;
}

GridFunction truncate(const GridFunction& v, double k) {
  return GridFunction(truncate(v.values, k));
}

std::vector<double> truncate(const std::vector<double>& v, double k) {
  if (k < 0.0) throw ArgumentError("truncation level k must be >= 0");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i], -k, k);
  return out;
}

void DomainGrid::write_text(std::ostream& os) const {
  os << "oplab-grid " << dim << " " << level << " " << alpha;
  for (int d = 0; d < dim; ++d) os << " " << lo[d] << " " << hi[d];
  os << "\n";
  for (Index id = 0; id < lattice_count(); ++id) {
    switch (classes[static_cast<std::size_t>(id)]) {
      case NodeClass::interior: os << 'I'; break;
      case NodeClass::boundary: os << 'B'; break;
      case NodeClass::exterior: os << 'E'; break;
    }
  }
  os << "\n";
}

DomainGrid DomainGrid::read_text(std::istream& is) {
  std::string tag;
  DomainGrid g;
  is >> tag;
  if (tag != "oplab-grid") throw ParseError("bad grid header '" + tag + "'");
  is >> g.dim >> g.level >> g.alpha;
  for (int d = 0; d < g.dim; ++d) is >> g.lo[d] >> g.hi[d];
  if (!is) throw ParseError("truncated grid header");
  g.h = (g.hi[0] - g.lo[0]) / static_cast<double>(Index{1} << g.level);
  Index total = 1;
  for (int d = 0; d < g.dim; ++d) {
    g.cells[d] = static_cast<Index>(std::llround((g.hi[d] - g.lo[d]) / g.h));
    total *= g.cells[d] + 1;
  }
  std::string body;
  is >> body;
  if (static_cast<Index>(body.size()) != total)
    throw ParseError("grid classification length mismatch");
  g.classes.resize(static_cast<std::size_t>(total));
  g.node_to_row.assign(static_cast<std::size_t>(total), -1);
  for (Index id = 0; id < total; ++id) {
    const char c = body[static_cast<std::size_t>(id)];
    NodeClass cls = c == 'I'   ? NodeClass::interior
                    : c == 'B' ? NodeClass::boundary
                    : c == 'E' ? NodeClass::exterior
                               : throw ParseError("bad classification char");
    g.classes[static_cast<std::size_t>(id)] = cls;
    if (cls == NodeClass::interior) {
      g.node_to_row[static_cast<std::size_t>(id)] = static_cast<Index>(g.row_to_node.size());
      g.row_to_node.push_back(id);
    }
  }
  return g;
}

}  // namespace oplab
