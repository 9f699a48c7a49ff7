#include "memdd/mesh.hpp"

#include <cmath>
#include <sstream>

#include "memdd/errors.hpp"

namespace memdd {

std::string to_string(Side side) {
  switch (side) {
  case Side::left: return "left";
  case Side::right: return "right";
  case Side::bottom: return "bottom";
  case Side::top: return "top";
  }
  return "?";
}

Side side_from_string(const std::string& name) {
  if (name == "left") return Side::left;
  if (name == "right") return Side::right;
  if (name == "bottom") return Side::bottom;
  if (name == "top") return Side::top;
  throw ConfigError("unknown boundary side '" + name + "'");
}

double Mesh::measure() const {
  return dim == 1 ? lengths[0] : lengths[0] * lengths[1];
}

std::optional<std::size_t> Mesh::find_segment(const std::string& name) const {
  for (std::size_t s = 0; s < segments.size(); ++s)
    if (segments[s].name == name) return s;
  return std::nullopt;
}

std::size_t Mesh::segment_index(const std::string& name) const {
  if (auto s = find_segment(name)) return *s;
  throw ConfigError("unknown boundary segment '" + name + "'");
}

namespace {

std::size_t segment_slot(Mesh& mesh, const std::string& name) {
  if (auto s = mesh.find_segment(name)) return *s;
  mesh.segments.push_back(Segment{name, {}});
  return mesh.segments.size() - 1;
}

double tangential_coordinate(const BoundaryFace& face) {
  return face.axis == 0 ? face.center[1] : face.center[0];
}

void assign_segments(Mesh& mesh, const SegmentLayout& layout) {
  for (const auto& rule : layout) {
    if (rule.name.empty()) throw ConfigError("segment rule without a name");
    if (mesh.dim == 1 && (rule.side == Side::bottom || rule.side == Side::top))
      throw ConfigError("segment '" + rule.name + "' uses side " + to_string(rule.side) +
                        " on a 1D mesh");
    segment_slot(mesh, rule.name);
  }
  std::vector<std::size_t> claims(layout.size(), 0);
  for (std::size_t f = 0; f < mesh.boundary_faces.size(); ++f) {
    auto& face = mesh.boundary_faces[f];
    const double t = tangential_coordinate(face);
    std::optional<std::size_t> owner;
    for (std::size_t r = 0; r < layout.size(); ++r) {
      const auto& rule = layout[r];
      if (rule.side != face.side || t < rule.lo || t > rule.hi) continue;
      if (owner && layout[*owner].name != rule.name) {
        std::ostringstream msg;
        msg << "boundary face " << f << " is claimed by segments '" << layout[*owner].name
            << "' and '" << rule.name << "'";
        throw ConfigError(msg.str());
      }
      owner = r;
      ++claims[r];
    }
    const std::string& name = owner ? layout[*owner].name : to_string(face.side);
    face.segment = segment_slot(mesh, name);
    mesh.segments[face.segment].faces.push_back(f);
  }
  for (std::size_t r = 0; r < layout.size(); ++r)
    if (claims[r] == 0) throw ConfigError("segment '" + layout[r].name + "' contains no boundary face");
}

} // namespace

Mesh build_uniform_mesh(int dim, const std::vector<double>& lengths,
                        const std::vector<std::size_t>& counts, const SegmentLayout& layout) {
  if (dim != 1 && dim != 2) throw ConfigError("mesh dimension must be 1 or 2");
  if (lengths.size() != static_cast<std::size_t>(dim) || counts.size() != static_cast<std::size_t>(dim))
    throw ConfigError("mesh needs one length and one cell count per axis");
  for (int a = 0; a < dim; ++a) {
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
      throw ConfigError("mesh lengths must be positive");
    if (counts[a] < 2) throw ConfigError("mesh needs at least 2 cells per axis");
  }

  Mesh mesh;
  mesh.dim = dim;
  for (int a = 0; a < dim; ++a) {
    mesh.lengths[a] = lengths[a];
    mesh.cell_counts[a] = counts[a];
    mesh.cell_size[a] = lengths[a] / static_cast<double>(counts[a]);
  }
  const std::size_t nx = mesh.cell_counts[0];
  const std::size_t ny = mesh.cell_counts[1];
  const double hx = mesh.cell_size[0];
  const double hy = mesh.cell_size[1];
  const double area_x = dim == 1 ? 1.0 : hy; // faces normal to x
  const double area_y = hx;                  // faces normal to y

  mesh.cells.resize(nx * ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      auto& cell = mesh.cells[mesh.cell_index(i, j)];
      cell.center = {(static_cast<double>(i) + 0.5) * hx,
                     dim == 1 ? 0.0 : (static_cast<double>(j) + 0.5) * hy};
      cell.volume = dim == 1 ? hx : hx * hy;
    }

  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i + 1 < nx; ++i)
      mesh.interior_faces.push_back({mesh.cell_index(i, j), mesh.cell_index(i + 1, j), 0, area_x, hx});
  if (dim == 2)
    for (std::size_t j = 0; j + 1 < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i)
        mesh.interior_faces.push_back({mesh.cell_index(i, j), mesh.cell_index(i, j + 1), 1, area_y, hy});

  for (std::size_t j = 0; j < ny; ++j) {
    const double y = dim == 1 ? 0.0 : mesh.cells[mesh.cell_index(0, j)].center[1];
    mesh.boundary_faces.push_back({mesh.cell_index(0, j), 0, Side::left, area_x, 0.5 * hx, {0.0, y}, 0});
    mesh.boundary_faces.push_back(
        {mesh.cell_index(nx - 1, j), 0, Side::right, area_x, 0.5 * hx, {lengths[0], y}, 0});
  }
  if (dim == 2)
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = mesh.cells[mesh.cell_index(i, 0)].center[0];
      mesh.boundary_faces.push_back({mesh.cell_index(i, 0), 1, Side::bottom, area_y, 0.5 * hy, {x, 0.0}, 0});
      mesh.boundary_faces.push_back(
          {mesh.cell_index(i, ny - 1), 1, Side::top, area_y, 0.5 * hy, {x, lengths[1]}, 0});
    }

  assign_segments(mesh, layout);
  return mesh;
}

} // namespace memdd
