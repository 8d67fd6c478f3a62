#pragma once

// Masked uniform grids: domain discretization, node classification,
// the boundary-density regularity check, and the truncation T_k.

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>

#include "oplab/types.hpp"

namespace oplab {

enum class NodeClass : std::uint8_t { interior = 0, boundary = 1, exterior = 2 };

/// Signed mask: positive inside the domain, negative outside, zero on the
/// mask boundary (ties classify as boundary). Null mask means the full box.
using MaskFn = std::function<double(const std::array<double, 3>&)>;

struct DomainSpec {
  int dim = 2;                       // 1 permitted for oracle tests
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{1, 1, 1};
  MaskFn mask;                       // null -> whole box
  double alpha = 0.25;               // boundary density constant in (0,1)

  double extent(int d) const { return hi[d] - lo[d]; }
};

class DomainGrid {
 public:
  int dim = 0;
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{1, 1, 1};
  int level = 0;
  double h = 0.0;                    // base_extent / 2^level, equal on all axes
  double alpha = 0.0;
  std::array<Index, 3> cells{1, 1, 1};       // cells per axis; nodes = cells+1
  std::vector<NodeClass> classes;            // all lattice nodes, x fastest
  std::vector<Index> node_to_row;            // -1 for non-interior
  std::vector<Index> row_to_node;

  Index interior_count() const { return static_cast<Index>(row_to_node.size()); }
  Index lattice_count() const { return static_cast<Index>(classes.size()); }
  Index nodes_per_axis(int d) const { return cells[d] + 1; }

  Index node_id(const std::array<Index, 3>& ijk) const {
    Index id = 0;
    for (int d = dim - 1; d >= 0; --d) id = id * (cells[d] + 1) + ijk[d];
    return id;
  }
  std::array<Index, 3> node_ijk(Index id) const {
    std::array<Index, 3> ijk{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
      ijk[d] = id % (cells[d] + 1);
      id /= (cells[d] + 1);
    }
    return ijk;
  }
  std::array<double, 3> node_coord(Index id) const {
    auto ijk = node_ijk(id);
    std::array<double, 3> x{0, 0, 0};
    for (int d = 0; d < dim; ++d) x[d] = lo[d] + h * static_cast<double>(ijk[d]);
    return x;
  }
  std::array<double, 3> row_coord(Index row) const {
    return node_coord(row_to_node[static_cast<std::size_t>(row)]);
  }

  /// Lattice neighbor along axis d (dir = +1/-1); -1 when off the lattice.
  Index neighbor(Index id, int d, int dir) const {
    auto ijk = node_ijk(id);
    ijk[d] += dir;
    if (ijk[d] < 0 || ijk[d] > cells[d]) return -1;
    return node_id(ijk);
  }

  NodeClass node_class(Index id) const { return classes[static_cast<std::size_t>(id)]; }
  bool contains_point(const std::array<double, 3>& x) const {
    for (int d = 0; d < dim; ++d)
      if (x[d] < lo[d] - 1e-12 * h || x[d] > hi[d] + 1e-12 * h) return false;
    return true;
  }

  double cell_volume() const {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= h;
    return v;
  }
  /// Measure-form operator scale h^(N-2).
  double measure_scale() const {
    double s = 1.0;
    for (int d = 0; d < dim - 2; ++d) s *= h;
    for (int d = dim; d < 2; ++d) s /= h;
    return s;
  }

  /// Nearest lattice node to x, clamped into the lattice.
  Index nearest_node(const std::array<double, 3>& x) const;

  void write_text(std::ostream& os) const;
  static DomainGrid read_text(std::istream& is);
};

using GridPtr = std::shared_ptr<const DomainGrid>;

/// Builds the grid at the given refinement level. Spacing is
/// extent(axis 0)/2^level; the remaining extents must be integer multiples of
/// it. Throws EmptyDomainError when the mask leaves no interior node and
/// RegularityError when the boundary density check fails.
GridPtr build_grid(const DomainSpec& spec, int level);

/// Clamp to [-k, k] componentwise. k < 0 is an argument error.
GridFunction truncate(const GridFunction& v, double k);
std::vector<double> truncate(const std::vector<double>& v, double k);

}  // namespace oplab
