#include "memdd/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "memdd/errors.hpp"

namespace memdd::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool parse_plain_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Accepts decimal numbers and simple fractions such as 5/3.
double to_double(const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  double value = 0.0;
  const auto slash = s.find('/');
  if (slash == std::string::npos) {
    if (parse_plain_double(s, value)) return value;
  } else {
    double num = 0.0, den = 0.0;
    if (parse_plain_double(trim(s.substr(0, slash)), num) && parse_plain_double(trim(s.substr(slash + 1)), den) &&
        den != 0.0)
      return num / den;
  }
  throw ConfigError(key + ": expected a number, got '" + s + "'");
}

long to_integer(const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return value;
}

bool to_bool(const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<double> to_doubles(const std::string& raw, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : split(raw, ", \t")) out.push_back(to_double(tok, key));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

// Key-value pairs of one INI section; tracks which keys were consumed.
class Section {
public:
  Section(std::string name, const boost::property_tree::ptree& tree) : name_(std::move(name)) {
    for (const auto& [key, child] : tree) {
      if (!child.empty()) throw ConfigError("[" + name_ + "] " + key + ": nested values are not supported");
      values_[key] = child.data();
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }
  std::string key(const std::string& k) const { return name_ + "." + k; }

  void take_double(const std::string& k, double& out) {
    if (auto v = take(k)) out = to_double(*v, key(k));
  }
  void take_int(const std::string& k, int& out) {
    if (auto v = take(k)) out = static_cast<int>(to_integer(*v, key(k)));
  }
  void take_bool(const std::string& k, bool& out) {
    if (auto v = take(k)) out = to_bool(*v, key(k));
  }
  void take_string(const std::string& k, std::string& out) {
    if (auto v = take(k)) out = trim(*v);
  }
  void take_doubles(const std::string& k, std::vector<double>& out) {
    if (auto v = take(k)) out = to_doubles(*v, key(k));
  }

  void reject_unknown() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ConfigError("unknown key '" + k + "' in section [" + name_ + "]");
  }

private:
  std::string name_;
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

ScenarioKind kind_from_string(const std::string& s) {
  if (s == "relax") return ScenarioKind::relax;
  if (s == "sweep") return ScenarioKind::sweep;
  if (s == "convergence") return ScenarioKind::convergence;
  if (s == "insulated-energy-test") return ScenarioKind::insulated_energy_test;
  throw ConfigError("scenario.kind: unknown scenario kind '" + s + "'");
}

std::vector<std::string> default_monitors(ScenarioKind kind) {
  switch (kind) {
  case ScenarioKind::relax:
  case ScenarioKind::insulated_energy_test:
    return {"energy", "d_mass", "nonnegativity"};
  case ScenarioKind::sweep:
    return {"d_mass", "nonnegativity"};
  case ScenarioKind::convergence:
    return {};
  }
  return {};
}

template <class F>
void rethrow_as_config(const std::string& where, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

} // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
  case ScenarioKind::relax: return "relax";
  case ScenarioKind::sweep: return "sweep";
  case ScenarioKind::convergence: return "convergence";
  case ScenarioKind::insulated_energy_test: return "insulated-energy-test";
  }
  return "?";
}

ProfileSpec parse_profile(const std::string& text) {
  const auto tokens = split(text, ", \t");
  if (tokens.empty()) throw ConfigError("empty profile");
  ProfileSpec p;
  std::size_t first = 1;
  double probe = 0.0;
  if (parse_plain_double(tokens[0], probe) || tokens[0].find('/') != std::string::npos) {
    p.kind = "const"; // bare number
    first = 0;
  } else {
    p.kind = tokens[0];
  }
  p.args.clear();
  for (std::size_t i = first; i < tokens.size(); ++i) p.args.push_back(to_double(tokens[i], "profile '" + text + "'"));
  const std::size_t n = p.args.size();
  bool ok = false;
  if (p.kind == "const") ok = n == 1;
  else if (p.kind == "linear") ok = n == 2;
  else if (p.kind == "cos" || p.kind == "sin") ok = n == 3 || n == 4;
  else if (p.kind == "bump") ok = (n == 3 || n == 4) && p.args.back() > 0.0;
  else if (p.kind == "table") ok = n >= 1;
  else throw ConfigError("unknown profile kind '" + p.kind + "'");
  if (!ok) throw ConfigError("profile '" + text + "': wrong number of arguments for '" + p.kind + "'");
  return p;
}

std::string format_profile(const ProfileSpec& profile) {
  std::string out = profile.kind;
  for (double a : profile.args) out += " " + fmt(a);
  return out;
}

Field sample_profile(const ProfileSpec& p, const Mesh& mesh) {
  const auto nc = mesh.num_cells();
  Field out(static_cast<Eigen::Index>(nc));
  if (p.kind == "table") {
    if (p.args.size() != nc)
      throw DataError("table profile has " + std::to_string(p.args.size()) + " entries, mesh has " +
                      std::to_string(nc) + " cells");
    for (std::size_t c = 0; c < nc; ++c) out[static_cast<Eigen::Index>(c)] = p.args[c];
    return out;
  }
  const double pi = std::acos(-1.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const double x = mesh.cells[c].center[0];
    const double y = mesh.cells[c].center[1];
    const auto& a = p.args;
    double v = 0.0;
    if (p.kind == "const") {
      v = a[0];
    } else if (p.kind == "linear") {
      v = a[0] + a[1] * x;
    } else if (p.kind == "cos" || p.kind == "sin") {
      const double ex = p.kind == "cos" ? std::cos(pi * a[2] * x) : std::sin(pi * a[2] * x);
      const double ey = a.size() == 4 ? std::cos(pi * a[3] * y) : 1.0;
      v = a[0] + a[1] * ex * ey;
    } else if (p.kind == "bump") {
      const double r = a.size() == 3 ? std::abs(x - a[1]) : std::hypot(x - a[1], y - a[2]);
      const double s = r / a.back();
      v = a[0] * std::max(0.0, 1.0 - s * s);
    }
    out[static_cast<Eigen::Index>(c)] = v;
  }
  return out;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source_name) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source_name + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  ScenarioConfig c;
  std::optional<std::string> gauge_text;
  std::optional<std::string> monitors_text;
  std::optional<std::string> sweep_contact;
  bool have_output = false;

  auto stem = std::filesystem::path(source_name).stem().string();
  if (stem.empty() || stem == "<string>") stem = "scenario";

  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty())
      throw ConfigError("key '" + name + "' must appear inside a section");
    Section s(name, child);
    if (name == "scenario") {
      if (auto v = s.take("kind")) c.kind = kind_from_string(trim(*v));
      if (auto v = s.take("output")) {
        c.output = trim(*v);
        have_output = true;
      }
      s.take_double("t_end", c.t_end);
      s.take_int("record_every", c.record_every);
      s.take_doubles("snapshot_times", c.snapshot_times);
      s.take_doubles("lq", c.lq);
      monitors_text = s.take("monitors");
      s.take_double("energy_tolerance", c.energy_tolerance);
      s.take_double("mass_tolerance", c.mass_tolerance);
      s.take_double("negativity_tolerance", c.negativity_tolerance);
    } else if (name == "mesh") {
      s.take_int("dim", c.mesh.dim);
      s.take_doubles("lengths", c.mesh.lengths);
      if (auto v = s.take("cells")) {
        c.mesh.cells.clear();
        for (const auto& tok : split(*v, ", \t")) {
          const long n = to_integer(tok, s.key("cells"));
          if (n < 0) throw ConfigError("mesh.cells: cell counts must be nonnegative");
          c.mesh.cells.push_back(static_cast<std::size_t>(n));
        }
      }
    } else if (name.rfind("segment.", 0) == 0) {
      SegmentSpec seg;
      seg.name = name.substr(8);
      if (seg.name.empty()) throw ConfigError("[segment.] needs a name");
      s.take_string("side", seg.side);
      s.take_double("from", seg.from);
      s.take_double("to", seg.to);
      if (seg.side.empty()) throw ConfigError(s.key("side") + ": missing");
      c.mesh.segments.push_back(seg);
    } else if (name == "model") {
      s.take_double("alpha_n", c.model.alpha_n);
      s.take_double("alpha_p", c.model.alpha_p);
      s.take_double("alpha_d", c.model.alpha_d);
      s.take_double("lambda", c.model.lambda);
      if (auto v = s.take("doping")) rethrow_as_config(s.key("doping"), [&] { c.model.doping = parse_profile(*v); });
      if (auto v = s.take("cutoff_k")) {
        const auto t = trim(*v);
        if (t == "none") c.model.cutoff_k.reset();
        else c.model.cutoff_k = to_double(t, s.key("cutoff_k"));
      }
      s.take_bool("drift", c.model.drift);
    } else if (name == "boundary") {
      gauge_text = s.take("gauge");
      s.take_double("v_multiplier", c.v_multiplier);
    } else if (name.rfind("contact.", 0) == 0) {
      ContactSpec contact;
      contact.segment = name.substr(8);
      if (contact.segment.empty()) throw ConfigError("[contact.] needs a segment name");
      s.take_doubles("n", contact.n);
      s.take_doubles("p", contact.p);
      s.take_doubles("v", contact.v);
      c.contacts.push_back(contact);
    } else if (name == "initial") {
      if (auto v = s.take("n")) rethrow_as_config(s.key("n"), [&] { c.initial_n = parse_profile(*v); });
      if (auto v = s.take("p")) rethrow_as_config(s.key("p"), [&] { c.initial_p = parse_profile(*v); });
      if (auto v = s.take("d")) rethrow_as_config(s.key("d"), [&] { c.initial_d = parse_profile(*v); });
    } else if (name == "stepper") {
      s.take_double("dt", c.stepper.dt);
      s.take_double("newton_tol", c.stepper.newton_tol);
      s.take_int("newton_max_iter", c.stepper.newton_max_iter);
      s.take_int("max_damping_halvings", c.stepper.max_damping_halvings);
      s.take_double("dt_floor", c.stepper.dt_floor);
      s.take_string("mobility", c.stepper.mobility);
      if (auto v = s.take("floor_epsilon")) {
        const auto t = trim(*v);
        if (t == "auto") c.stepper.floor_epsilon.reset();
        else c.stepper.floor_epsilon = to_double(t, s.key("floor_epsilon"));
      }
      s.take_string("linear_solver", c.stepper.linear_solver);
    } else if (name == "sweep") {
      if (auto v = s.take("schedule")) {
        for (const auto& tok : split(*v, ", \t")) {
          const auto colon = tok.find(':');
          if (colon == std::string::npos)
            throw ConfigError("sweep.schedule: breakpoints are written time:multiplier, got '" + tok + "'");
          c.sweep.schedule.push_back({to_double(tok.substr(0, colon), "sweep.schedule"),
                                      to_double(tok.substr(colon + 1), "sweep.schedule")});
        }
      }
      sweep_contact = s.take("contact");
    } else if (name == "convergence") {
      s.take_string("reference", c.convergence.reference);
      s.take_int("levels", c.convergence.levels);
      s.take_int("reference_factor", c.convergence.reference_factor);
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
    s.reject_unknown();
  }

  if (!have_output) c.output = (std::filesystem::path("out") / stem).string();
  if (monitors_text) {
    c.monitors.clear();
    for (const auto& m : split(*monitors_text, ", \t"))
      if (m != "none") c.monitors.push_back(m);
  } else {
    c.monitors = default_monitors(c.kind);
  }
  if (!gauge_text || trim(*gauge_text) == "auto") c.gauge = c.contacts.empty();
  else c.gauge = to_bool(*gauge_text, "boundary.gauge");
  if (sweep_contact) c.sweep.contact = trim(*sweep_contact);
  else if (c.kind == ScenarioKind::sweep && !c.contacts.empty()) c.sweep.contact = c.contacts.front().segment;

  validate_config(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void validate_config(const ScenarioConfig& c) {
  if (!(c.t_end > 0.0)) throw ConfigError("scenario.t_end must be positive");
  if (c.record_every < 1) throw ConfigError("scenario.record_every must be at least 1");
  for (double t : c.snapshot_times)
    if (!(t >= 0.0 && t <= c.t_end)) throw ConfigError("scenario.snapshot_times: " + fmt(t) + " outside [0, t_end]");
  for (double q : c.lq)
    if (!(q >= 1.0)) throw ConfigError("scenario.lq: exponents must be at least 1");
  static const std::set<std::string> known_monitors{"energy", "d_mass", "nonnegativity"};
  for (const auto& m : c.monitors)
    if (!known_monitors.count(m)) throw ConfigError("scenario.monitors: unknown monitor '" + m + "'");
  if (!(c.energy_tolerance >= 0.0)) throw ConfigError("scenario.energy_tolerance must be nonnegative");
  if (!(c.mass_tolerance >= 0.0)) throw ConfigError("scenario.mass_tolerance must be nonnegative");
  if (!(c.negativity_tolerance >= 0.0)) throw ConfigError("scenario.negativity_tolerance must be nonnegative");
  if (c.output.empty()) throw ConfigError("scenario.output must not be empty");

  Mesh mesh;
  rethrow_as_config("mesh", [&] { mesh = build_mesh(c); });
  rethrow_as_config("model", [&] { build_params(c, mesh).validate_for_solver(mesh.num_cells()); });
  rethrow_as_config("boundary", [&] { build_boundary(c).validate(mesh); });
  for (const auto& contact : c.contacts)
    for (double v : contact.n)
      if (!(v >= 0.0)) throw ConfigError("contact." + contact.segment + ".n: densities must be nonnegative");
  rethrow_as_config("initial", [&] { build_initial_state(c, mesh); });

  if (c.stepper.mobility != "arithmetic" && c.stepper.mobility != "upwind")
    throw ConfigError("stepper.mobility: expected arithmetic or upwind, got '" + c.stepper.mobility + "'");
  if (c.stepper.linear_solver != "direct" && c.stepper.linear_solver != "cg")
    throw ConfigError("stepper.linear_solver: expected direct or cg, got '" + c.stepper.linear_solver + "'");
  rethrow_as_config("stepper", [&] { build_stepper(c).validate(); });

  switch (c.kind) {
  case ScenarioKind::insulated_energy_test:
    if (!c.contacts.empty()) throw ConfigError("scenario.kind: insulated-energy-test admits no contacts");
    if (std::find(c.monitors.begin(), c.monitors.end(), "energy") == c.monitors.end())
      throw ConfigError("scenario.monitors: insulated-energy-test requires the energy monitor");
    break;
  case ScenarioKind::sweep: {
    if (c.sweep.schedule.empty()) throw ConfigError("sweep.schedule: a sweep needs at least one breakpoint");
    for (std::size_t i = 1; i < c.sweep.schedule.size(); ++i)
      if (!(c.sweep.schedule[i].time > c.sweep.schedule[i - 1].time))
        throw ConfigError("sweep.schedule: breakpoint times must increase");
    const bool found = std::any_of(c.contacts.begin(), c.contacts.end(),
                                   [&](const ContactSpec& k) { return k.segment == c.sweep.contact; });
    if (!found) throw ConfigError("sweep.contact: '" + c.sweep.contact + "' is not a contact segment");
    break;
  }
  case ScenarioKind::convergence: {
    static const std::set<std::string> refs{"poisson-sin", "poisson-mixed", "poisson-2d", "porous-medium"};
    if (!refs.count(c.convergence.reference))
      throw ConfigError("convergence.reference: unknown reference '" + c.convergence.reference + "'");
    if (c.convergence.levels < 2) throw ConfigError("convergence.levels must be at least 2");
    if (c.convergence.reference_factor < 2) throw ConfigError("convergence.reference_factor must be at least 2");
    const int want_dim = c.convergence.reference == "poisson-2d" ? 2 : 1;
    if (c.mesh.dim != want_dim)
      throw ConfigError("mesh.dim: reference '" + c.convergence.reference + "' needs dim = " + std::to_string(want_dim));
    break;
  }
  case ScenarioKind::relax:
    break;
  }
}

Mesh build_mesh(const ScenarioConfig& c) {
  if (c.mesh.dim != 1 && c.mesh.dim != 2) throw ConfigError("dim must be 1 or 2");
  const auto dim = static_cast<std::size_t>(c.mesh.dim);
  if (c.mesh.lengths.size() != dim) throw ConfigError("lengths needs " + std::to_string(dim) + " entries");
  if (c.mesh.cells.size() != dim) throw ConfigError("cells needs " + std::to_string(dim) + " entries");
  SegmentLayout layout;
  for (const auto& s : c.mesh.segments) {
    SegmentRule rule;
    rule.name = s.name;
    rule.side = side_from_string(s.side);
    rule.lo = s.from;
    rule.hi = s.to;
    layout.push_back(rule);
  }
  return build_uniform_mesh(c.mesh.dim, c.mesh.lengths, c.mesh.cells, layout);
}

ModelParams build_params(const ScenarioConfig& c, const Mesh& mesh) {
  ModelParams p;
  p.alpha_n = c.model.alpha_n;
  p.alpha_p = c.model.alpha_p;
  p.alpha_d = c.model.alpha_d;
  p.lambda = c.model.lambda;
  p.doping = sample_profile(c.model.doping, mesh);
  p.cutoff_k = c.model.cutoff_k;
  p.drift = c.model.drift;
  return p;
}

BoundarySpec build_boundary(const ScenarioConfig& c) {
  BoundarySpec bc;
  bc.gauge_mode = c.gauge;
  bc.v_multiplier = c.v_multiplier;
  auto value = [](const std::vector<double>& v) {
    ContactValue out;
    if (v.size() == 1) out.constant = v[0];
    else out.per_face = v;
    return out;
  };
  for (const auto& k : c.contacts) {
    if (bc.contacts.count(k.segment)) throw ConfigError("duplicate contact on segment '" + k.segment + "'");
    bc.contacts[k.segment] = Contact{value(k.n), value(k.p), value(k.v)};
  }
  return bc;
}

TimeStepper build_stepper(const ScenarioConfig& c) {
  TimeStepper t;
  t.dt = c.stepper.dt;
  t.newton_tol = c.stepper.newton_tol;
  t.newton_max_iter = c.stepper.newton_max_iter;
  t.max_damping_halvings = c.stepper.max_damping_halvings;
  t.dt_floor = c.stepper.dt_floor;
  t.flux.mobility = c.stepper.mobility == "upwind" ? MobilityAverage::upwind : MobilityAverage::arithmetic;
  t.flux.floor_epsilon = c.stepper.floor_epsilon;
  return t;
}

PoissonOptions build_poisson_options(const ScenarioConfig& c) {
  PoissonOptions o;
  o.solver = c.stepper.linear_solver == "cg" ? LinearSolverKind::conjugate_gradient : LinearSolverKind::direct;
  return o;
}

State build_initial_state(const ScenarioConfig& c, const Mesh& mesh) {
  State st;
  st.n = sample_profile(c.initial_n, mesh);
  st.p = sample_profile(c.initial_p, mesh);
  st.d = sample_profile(c.initial_d, mesh);
  const char* names[] = {"n", "p", "d"};
  const Field* fields[] = {&st.n, &st.p, &st.d};
  for (int i = 0; i < 3; ++i)
    for (Eigen::Index k = 0; k < fields[i]->size(); ++k)
      if (!((*fields[i])[k] >= 0.0))
        throw DataError(std::string(names[i]) + ": negative initial density in cell " + std::to_string(k));
  return st;
}

double schedule_multiplier(const std::vector<Breakpoint>& schedule, double t) {
  if (schedule.empty()) return 1.0;
  if (t <= schedule.front().time) return schedule.front().multiplier;
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (t <= schedule[i].time) {
      const auto& a = schedule[i - 1];
      const auto& b = schedule[i];
      const double s = (t - a.time) / (b.time - a.time);
      return a.multiplier + s * (b.multiplier - a.multiplier);
    }
  }
  return schedule.back().multiplier;
}

std::string echo_config(const ScenarioConfig& c) {
  std::ostringstream os;
  auto list_str = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out.empty() ? std::string("none") : out;
  };
  os << "[scenario]\n"
     << "kind = " << to_string(c.kind) << "\n"
     << "output = " << c.output << "\n"
     << "t_end = " << fmt(c.t_end) << "\n"
     << "record_every = " << c.record_every << "\n"
     << "snapshot_times = " << fmt_list(c.snapshot_times) << "\n"
     << "lq = " << fmt_list(c.lq) << "\n"
     << "monitors = " << list_str(c.monitors) << "\n"
     << "energy_tolerance = " << fmt(c.energy_tolerance) << "\n"
     << "mass_tolerance = " << fmt(c.mass_tolerance) << "\n"
     << "negativity_tolerance = " << fmt(c.negativity_tolerance) << "\n\n";
  os << "[mesh]\n"
     << "dim = " << c.mesh.dim << "\n"
     << "lengths = " << fmt_list(c.mesh.lengths) << "\n"
     << "cells = ";
  for (std::size_t i = 0; i < c.mesh.cells.size(); ++i) os << (i ? ", " : "") << c.mesh.cells[i];
  os << "\n\n";
  for (const auto& s : c.mesh.segments)
    os << "[segment." << s.name << "]\nside = " << s.side << "\nfrom = " << fmt(s.from) << "\nto = " << fmt(s.to)
       << "\n\n";
  os << "[model]\n"
     << "alpha_n = " << fmt(c.model.alpha_n) << "\n"
     << "alpha_p = " << fmt(c.model.alpha_p) << "\n"
     << "alpha_d = " << fmt(c.model.alpha_d) << "\n"
     << "lambda = " << fmt(c.model.lambda) << "\n"
     << "doping = " << format_profile(c.model.doping) << "\n"
     << "cutoff_k = " << (c.model.cutoff_k ? fmt(*c.model.cutoff_k) : std::string("none")) << "\n"
     << "drift = " << (c.model.drift ? "true" : "false") << "\n\n";
  os << "[boundary]\n"
     << "gauge = " << (c.gauge ? "true" : "false") << "\n"
     << "v_multiplier = " << fmt(c.v_multiplier) << "\n\n";
  for (const auto& k : c.contacts)
    os << "[contact." << k.segment << "]\nn = " << fmt_list(k.n) << "\np = " << fmt_list(k.p)
       << "\nv = " << fmt_list(k.v) << "\n\n";
  os << "[initial]\n"
     << "n = " << format_profile(c.initial_n) << "\n"
     << "p = " << format_profile(c.initial_p) << "\n"
     << "d = " << format_profile(c.initial_d) << "\n\n";
  os << "[stepper]\n"
     << "dt = " << fmt(c.stepper.dt) << "\n"
     << "newton_tol = " << fmt(c.stepper.newton_tol) << "\n"
     << "newton_max_iter = " << c.stepper.newton_max_iter << "\n"
     << "max_damping_halvings = " << c.stepper.max_damping_halvings << "\n"
     << "dt_floor = " << fmt(c.stepper.dt_floor) << "\n"
     << "mobility = " << c.stepper.mobility << "\n"
     << "floor_epsilon = " << (c.stepper.floor_epsilon ? fmt(*c.stepper.floor_epsilon) : std::string("auto")) << "\n"
     << "linear_solver = " << c.stepper.linear_solver << "\n";
  if (!c.sweep.schedule.empty() || !c.sweep.contact.empty()) {
    os << "\n[sweep]\nschedule = ";
    for (std::size_t i = 0; i < c.sweep.schedule.size(); ++i)
      os << (i ? ", " : "") << fmt(c.sweep.schedule[i].time) << ":" << fmt(c.sweep.schedule[i].multiplier);
    os << "\n";
    if (!c.sweep.contact.empty()) os << "contact = " << c.sweep.contact << "\n";
  }
  os << "\n[convergence]\n"
     << "reference = " << c.convergence.reference << "\n"
     << "levels = " << c.convergence.levels << "\n"
     << "reference_factor = " << c.convergence.reference_factor << "\n";
  return os.str();
}

} // namespace memdd::harness
