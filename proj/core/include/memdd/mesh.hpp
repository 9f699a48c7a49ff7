#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace memdd {

enum class Side { left, right, bottom, top };

std::string to_string(Side side);
Side side_from_string(const std::string& name);

struct Cell {
  std::array<double, 2> center{};
  double volume = 0.0;
};

/// Face between two axis-adjacent cells; `left` has the smaller coordinate.
struct InteriorFace {
  std::size_t left = 0;
  std::size_t right = 0;
  int axis = 0;
  double area = 0.0;
  double dist = 0.0;
};

/// Boundary face of a cell. `dist` is the centre-to-face distance (half a cell).
struct BoundaryFace {
  std::size_t cell = 0;
  int axis = 0;
  Side side = Side::left;
  double area = 0.0;
  double dist = 0.0;
  std::array<double, 2> center{};
  std::size_t segment = 0;
};

struct Segment {
  std::string name;
  std::vector<std::size_t> faces; // indices into Mesh::boundary_faces
};

/// Assigns the boundary faces of `side` whose tangential coordinate lies in
/// [lo, hi] to segment `name`. Faces not claimed by any rule fall into a
/// default segment named after their side.
struct SegmentRule {
  std::string name;
  Side side = Side::left;
  double lo = -1e300;
  double hi = 1e300;
};

using SegmentLayout = std::vector<SegmentRule>;

/// Uniform tensor-product mesh in 1D or 2D with cell-centred unknowns.
struct Mesh {
  int dim = 1;
  std::array<std::size_t, 2> cell_counts{1, 1};
  std::array<double, 2> lengths{1.0, 1.0};
  std::array<double, 2> cell_size{1.0, 1.0};
  std::vector<Cell> cells;
  std::vector<InteriorFace> interior_faces;
  std::vector<BoundaryFace> boundary_faces;
  std::vector<Segment> segments;

  std::size_t num_cells() const { return cells.size(); }
  double measure() const;
  std::size_t cell_index(std::size_t i, std::size_t j = 0) const { return j * cell_counts[0] + i; }

  std::optional<std::size_t> find_segment(const std::string& name) const;
  /// Throws ConfigError when the segment does not exist.
  std::size_t segment_index(const std::string& name) const;
};

/// Builds a uniform mesh. `counts` and `lengths` hold one entry per axis.
Mesh build_uniform_mesh(int dim, const std::vector<double>& lengths,
                        const std::vector<std::size_t>& counts,
                        const SegmentLayout& layout = {});

} // namespace memdd
