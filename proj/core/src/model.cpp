#include "memdd/model.hpp"

#include <cmath>
#include <sstream>

#include "memdd/errors.hpp"

namespace memdd {

void ModelParams::validate_for_solver(std::size_t num_cells) const {
  const std::pair<const char*, double> alphas[] = {{"alpha_n", alpha_n}, {"alpha_p", alpha_p}, {"alpha_d", alpha_d}};
  for (const auto& [name, value] : alphas) {
    if (!(value > 1.0)) throw ParameterError(std::string(name) + " must exceed 1");
    if (value > 2.0) throw ParameterError(std::string(name) + " must not exceed 2");
  }
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (cutoff_k && !(*cutoff_k >= 2.0)) throw ParameterError("cutoff_k must be at least 2");
  if (static_cast<std::size_t>(doping.size()) != num_cells)
    throw ParameterError("doping profile size does not match the cell count");
}

const Contact* BoundarySpec::contact_for_segment(const Mesh& mesh, std::size_t segment) const {
  auto it = contacts.find(mesh.segments.at(segment).name);
  return it == contacts.end() ? nullptr : &it->second;
}

void BoundarySpec::validate(const Mesh& mesh) const {
  for (const auto& [name, contact] : contacts) {
    const auto seg = mesh.find_segment(name);
    if (!seg) throw ConfigError("contact on unknown segment '" + name + "'");
    const std::size_t faces = mesh.segments[*seg].faces.size();
    const std::pair<const char*, const ContactValue*> values[] = {
        {"n", &contact.n}, {"p", &contact.p}, {"v", &contact.v}};
    for (const auto& [label, value] : values) {
      if (!value->per_face.empty() && value->per_face.size() != faces)
        throw ConfigError("contact '" + name + "': per-face " + label + " data has wrong length");
    }
    for (std::size_t f = 0; f < faces; ++f) {
      if (contact.n.at(f) < 0.0 || contact.p.at(f) < 0.0)
        throw DataError("contact '" + name + "': Dirichlet densities must be nonnegative");
    }
  }
  if (!has_contacts() && !gauge_mode)
    throw ConfigError("no Dirichlet contact for V and gauge mode disabled: Poisson problem is singular");
  if (has_contacts() && gauge_mode)
    throw ConfigError("gauge mode is only valid without Dirichlet contacts");
}

State initial_state(const Mesh& mesh, const CellInitializer& n0, const CellInitializer& p0,
                    const CellInitializer& d0) {
  const auto nc = static_cast<Eigen::Index>(mesh.num_cells());
  State s;
  s.n.resize(nc);
  s.p.resize(nc);
  s.d.resize(nc);
  for (Eigen::Index c = 0; c < nc; ++c) {
    const auto& x = mesh.cells[static_cast<std::size_t>(c)].center;
    s.n[c] = n0(x[0], x[1]);
    s.p[c] = p0(x[0], x[1]);
    s.d[c] = d0(x[0], x[1]);
    if (!(s.n[c] >= 0.0) || !(s.p[c] >= 0.0) || !(s.d[c] >= 0.0)) {
      std::ostringstream msg;
      msg << "initial densities must be nonnegative (cell " << c << ": n=" << s.n[c] << ", p=" << s.p[c]
          << ", d=" << s.d[c] << ")";
      throw DataError(msg.str());
    }
  }
  return s;
}

CellInitializer constant_profile(double value) {
  return [value](double, double) { return value; };
}

} // namespace memdd
