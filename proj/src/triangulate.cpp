#include "ffq/triangulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "ffq/types.hpp"

namespace ffq {

using nlohmann::json;

namespace {

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  const double cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
  const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
  if (std::abs(cross) > 1e-9 * std::max(1.0, len)) return false;
  return p[0] >= std::min(a[0], b[0]) - 1e-9 && p[0] <= std::max(a[0], b[0]) + 1e-9 &&
         p[1] >= std::min(a[1], b[1]) - 1e-9 && p[1] <= std::max(a[1], b[1]) + 1e-9;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw InvalidArgument(where + ": unknown key '" + k + "'");
  }
}

Electrode electrode_from_json(const json& j, const std::string& where) {
  check_keys(j, {"name", "polygon", "z_range_nm"}, where);
  Electrode e;
  e.name = j.at("name").get<std::string>();
  for (const auto& p : j.at("polygon")) e.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  e.z_min_nm = j.at("z_range_nm").at(0).get<double>();
  e.z_max_nm = j.at("z_range_nm").at(1).get<double>();
  return e;
}

json electrode_to_json(const Electrode& e) {
  json poly = json::array();
  for (const auto& p : e.polygon) poly.push_back({p[0], p[1]});
  return {{"name", e.name}, {"polygon", poly}, {"z_range_nm", {e.z_min_nm, e.z_max_nm}}};
}

// Node labels: -1 free, otherwise the conductor index (gates first, then grounded).
std::vector<int> label_nodes(const DeviceGeometry& g, const Grid& grid) {
  std::vector<int> label(grid.size(), -1);
  std::vector<const Electrode*> all;
  for (const auto& e : g.gates) all.push_back(&e);
  for (const auto& e : g.grounded) all.push_back(&e);
  std::vector<int> hits(all.size(), 0);
  for (int k = 0; k < grid.nz; ++k) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        const Point3 p = grid.position(i, j, k);
        for (std::size_t c = 0; c < all.size(); ++c) {
          if (all[c]->contains(p)) {
            label[grid.index(i, j, k)] = static_cast<int>(c);
            ++hits[c];
            break;
          }
        }
      }
    }
  }
  for (std::size_t c = 0; c < all.size(); ++c) {
    if (hits[c] == 0) throw InvalidArgument("conductor '" + all[c]->name + "' covers no grid node");
  }
  return label;
}

struct Stencil {
  const Grid& g;
  // Zero normal derivative: the missing neighbour mirrors the inner one.
  int reflect(int i, int n) const { return i < 0 ? 1 : (i >= n ? n - 2 : i); }
  double neighbours(const std::vector<double>& u, int i, int j, int k) const {
    auto at = [&](int a, int b, int c) {
      return u[g.index(reflect(a, g.nx), reflect(b, g.ny), reflect(c, g.nz))];
    };
    return at(i - 1, j, k) + at(i + 1, j, k) + at(i, j - 1, k) + at(i, j + 1, k) + at(i, j, k - 1) +
           at(i, j, k + 1);
  }
};

double residual_norm(const Grid& grid, const std::vector<int>& label, const std::vector<double>& u) {
  const Stencil st{grid};
  double s = 0;
  for (int k = 0; k < grid.nz; ++k) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        const std::size_t n = grid.index(i, j, k);
        if (label[n] >= 0) continue;
        const double r = st.neighbours(u, i, j, k) - 6.0 * u[n];
        s += r * r;
      }
    }
  }
  return std::sqrt(s);
}

std::vector<double> conductor_values(const DeviceGeometry& g,
                                     const std::vector<std::pair<std::string, double>>& volts) {
  std::vector<double> v(g.gates.size() + g.grounded.size(), 0.0);
  for (const auto& [name, value] : volts) {
    bool found = false;
    for (std::size_t c = 0; c < g.gates.size(); ++c) {
      if (g.gates[c].name == name) {
        v[c] = value;
        found = true;
      }
    }
    if (!found) throw InvalidArgument("unknown gate '" + name + "'");
  }
  return v;
}

struct SolveOutcome {
  std::vector<double> u;
  double relative_residual = 0;
  int iterations = 0;
};

SolveOutcome sor(const DeviceGeometry& g, const Grid& grid, const std::vector<int>& label,
                 const std::vector<double>& conductor, const SolverOptions& opt) {
  SolveOutcome out;
  out.u.assign(grid.size(), 0.0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (label[n] >= 0) out.u[n] = conductor[label[n]];
  }
  const double r0 = residual_norm(grid, label, out.u);
  if (r0 == 0) return out;
  const int longest = 2 * std::max({grid.nx, grid.ny, grid.nz});
  const double omega = opt.omega ? *opt.omega : 2.0 / (1.0 + std::sin(kPi / longest));
  const Stencil st{grid};
  for (int it = 1; it <= opt.max_iterations; ++it) {
    for (int colour = 0; colour < 2; ++colour) {
      for (int k = 0; k < grid.nz; ++k) {
        for (int j = 0; j < grid.ny; ++j) {
          for (int i = (j + k + colour) % 2; i < grid.nx; i += 2) {
            const std::size_t n = grid.index(i, j, k);
            if (label[n] >= 0) continue;
            out.u[n] += omega * (st.neighbours(out.u, i, j, k) / 6.0 - out.u[n]);
          }
        }
      }
    }
    if (it % 10 == 0 || it == opt.max_iterations) {
      out.relative_residual = residual_norm(grid, label, out.u) / r0;
      out.iterations = it;
      if (out.relative_residual < opt.tolerance) return out;
    }
  }
  (void)g;
  throw ConvergenceError("Laplace solver did not reach the residual tolerance");
}

}  // namespace

bool Electrode::contains(const Point3& p) const {
  if (p[2] < z_min_nm - 1e-9 || p[2] > z_max_nm + 1e-9) return false;
  const Point2 q{p[0], p[1]};
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[j];
    if (on_segment(q, a, b)) return true;
    if ((a[1] > q[1]) != (b[1] > q[1]) && q[0] < (b[0] - a[0]) * (q[1] - a[1]) / (b[1] - a[1]) + a[0]) {
      inside = !inside;
    }
  }
  return inside;
}

void DeviceGeometry::validate() const {
  if (!(spacing_nm > 0)) throw InvalidArgument("spacing_nm must be > 0");
  for (double e : extent_nm) {
    if (!(e >= 2 * spacing_nm)) throw InvalidArgument("extent_nm must cover at least two grid spacings");
  }
  if (gates.empty()) throw InvalidArgument("geometry needs at least one gate");
  std::set<std::string> names;
  auto check = [&](const Electrode& e) {
    if (e.name.empty()) throw InvalidArgument("electrode name must be non-empty");
    if (!names.insert(e.name).second) throw InvalidArgument("duplicate electrode name '" + e.name + "'");
    if (e.polygon.size() < 3) throw InvalidArgument("electrode '" + e.name + "' polygon needs >= 3 vertices");
    if (!(e.z_max_nm >= e.z_min_nm)) throw InvalidArgument("electrode '" + e.name + "' has an empty z range");
    for (const auto& p : e.polygon) {
      if (p[0] < -1e-9 || p[1] < -1e-9 || p[0] > extent_nm[0] + 1e-9 || p[1] > extent_nm[1] + 1e-9) {
        throw InvalidArgument("electrode '" + e.name + "' polygon leaves the domain");
      }
    }
    if (e.z_min_nm < -1e-9 || e.z_max_nm > extent_nm[2] + 1e-9) {
      throw InvalidArgument("electrode '" + e.name + "' z range leaves the domain");
    }
  };
  for (const auto& e : gates) check(e);
  for (const auto& e : grounded) check(e);
}

DeviceGeometry DeviceGeometry::from_json(const json& j) {
  check_keys(j, {"extent_nm", "spacing_nm", "gates", "grounded"}, "geometry");
  DeviceGeometry g;
  for (int a = 0; a < 3; ++a) g.extent_nm[a] = j.at("extent_nm").at(a).get<double>();
  if (j.contains("spacing_nm")) g.spacing_nm = j.at("spacing_nm").get<double>();
  int n = 0;
  for (const auto& e : j.at("gates")) g.gates.push_back(electrode_from_json(e, "geometry.gates[" + std::to_string(n++) + "]"));
  n = 0;
  if (j.contains("grounded")) {
    for (const auto& e : j.at("grounded")) {
      g.grounded.push_back(electrode_from_json(e, "geometry.grounded[" + std::to_string(n++) + "]"));
    }
  }
  g.validate();
  return g;
}

json DeviceGeometry::to_json() const {
  json gs = json::array(), gr = json::array();
  for (const auto& e : gates) gs.push_back(electrode_to_json(e));
  for (const auto& e : grounded) gr.push_back(electrode_to_json(e));
  return {{"extent_nm", {extent_nm[0], extent_nm[1], extent_nm[2]}},
          {"spacing_nm", spacing_nm},
          {"gates", gs},
          {"grounded", gr}};
}

Grid::Grid(const DeviceGeometry& g) : h(g.spacing_nm) {
  nx = static_cast<int>(std::lround(g.extent_nm[0] / h)) + 1;
  ny = static_cast<int>(std::lround(g.extent_nm[1] / h)) + 1;
  nz = static_cast<int>(std::lround(g.extent_nm[2] / h)) + 1;
}

double PotentialResponse::at(const Point3& r) const {
  const int n[3] = {grid.nx, grid.ny, grid.nz};
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double x = std::clamp(r[a] / grid.h, 0.0, static_cast<double>(n[a] - 1));
    i0[a] = std::min(static_cast<int>(std::floor(x)), n[a] - 2);
    f[a] = x - i0[a];
  }
  double s = 0;
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    const double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
    s += w * values[grid.index(i0[0] + di, i0[1] + dj, i0[2] + dk)];
  }
  return s;
}

std::vector<double> solve_potential(const DeviceGeometry& g,
                                    const std::vector<std::pair<std::string, double>>& gate_volts,
                                    const SolverOptions& options) {
  g.validate();
  const Grid grid(g);
  const auto label = label_nodes(g, grid);
  return sor(g, grid, label, conductor_values(g, gate_volts), options).u;
}

double laplace_residual(const DeviceGeometry& g, const std::vector<double>& values,
                        const std::vector<std::pair<std::string, double>>& gate_volts) {
  const Grid grid(g);
  const auto label = label_nodes(g, grid);
  std::vector<double> start(grid.size(), 0.0);
  const auto cv = conductor_values(g, gate_volts);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (label[n] >= 0) start[n] = cv[label[n]];
  }
  const double r0 = residual_norm(grid, label, start);
  return r0 == 0 ? 0.0 : residual_norm(grid, label, values) / r0;
}

PotentialResponse solve_response(const DeviceGeometry& g, const std::string& gate,
                                 const SolverOptions& options) {
  g.validate();
  const Grid grid(g);
  const auto label = label_nodes(g, grid);
  auto outcome = sor(g, grid, label, conductor_values(g, {{gate, 1.0}}), options);
  PotentialResponse r;
  r.gate = gate;
  r.grid = grid;
  r.values = std::move(outcome.u);
  r.relative_residual = outcome.relative_residual;
  r.iterations = outcome.iterations;
  return r;
}

std::vector<PotentialResponse> solve_responses(const DeviceGeometry& g, const SolverOptions& options) {
  std::vector<PotentialResponse> out;
  for (const auto& gate : g.gates) out.push_back(solve_response(g, gate.name, options));
  return out;
}

namespace {

const PotentialResponse& find_response(const std::vector<PotentialResponse>& rs, const std::string& name) {
  for (const auto& r : rs) {
    if (r.gate == name) return r;
  }
  throw InvalidArgument("no response for gate '" + name + "'");
}

double slope_from(double swept, double reference) {
  if (std::abs(reference) < 1e-12) {
    throw InvalidArgument("reference gate response vanishes at this point (fully screened)");
  }
  return -swept / reference;
}

}  // namespace

double predicted_slope(const std::vector<PotentialResponse>& responses, const GatePair& pair,
                       const Point3& r) {
  return slope_from(find_response(responses, pair.swept).at(r), find_response(responses, pair.reference).at(r));
}

double SlopeMeasurement::sigma() const {
  if (slope == 0) return std::numeric_limits<double>::infinity();
  return 1.0 + 1.0 / (slope * slope);
}

Point3 LikelihoodMap::position(std::size_t cell) const {
  const auto& c = cells.at(cell);
  return grid.position(c[0], c[1], c[2]);
}

LikelihoodMap likelihood_map(const std::vector<SlopeMeasurement>& measurements,
                             const std::vector<PotentialResponse>& responses, const SearchBox& box,
                             const PriorMask& prior) {
  if (measurements.size() < 2) throw InvalidArgument("likelihood map needs at least 2 gate pairs");
  if (responses.empty()) throw InvalidArgument("likelihood map needs potential responses");
  LikelihoodMap map;
  map.grid = responses.front().grid;
  const Grid& g = map.grid;
  struct Term {
    const std::vector<double>* swept;
    const std::vector<double>* reference;
    double slope;
    double sigma;
  };
  std::vector<Term> terms;
  for (const auto& m : measurements) {
    terms.push_back({&find_response(responses, m.pair.swept).values,
                     &find_response(responses, m.pair.reference).values, m.slope, m.sigma()});
  }
  std::vector<double> logp;
  for (int k = 0; k < g.nz; ++k) {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const Point3 p = g.position(i, j, k);
        bool in = true;
        for (int a = 0; a < 3; ++a) in = in && p[a] >= box.min_nm[a] - 1e-9 && p[a] <= box.max_nm[a] + 1e-9;
        if (!in || (prior && !prior(p))) continue;
        const std::size_t n = g.index(i, j, k);
        double chi2 = 0;
        bool screened = false;
        for (const auto& t : terms) {
          const double ref = (*t.reference)[n];
          if (std::abs(ref) < 1e-12) {
            screened = true;
            break;
          }
          const double z = (-(*t.swept)[n] / ref - t.slope) / t.sigma;
          chi2 += z * z;
        }
        map.cells.push_back({i, j, k});
        logp.push_back(screened ? -std::numeric_limits<double>::infinity() : -0.5 * chi2);
      }
    }
  }
  if (map.cells.empty()) throw InvalidArgument("search box contains no grid node");
  const double top = *std::max_element(logp.begin(), logp.end());
  if (!std::isfinite(top)) throw InvalidArgument("every cell of the search box is screened");
  double z = 0;
  for (double l : logp) z += std::exp(l - top);
  map.probability.resize(logp.size());
  for (std::size_t c = 0; c < logp.size(); ++c) map.probability[c] = std::exp(logp[c] - top) / z;
  return map;
}

CredibleRegion argmax_region(const LikelihoodMap& map, double mass) {
  if (!(mass > 0 && mass <= 1)) throw InvalidArgument("credible mass must lie in (0, 1]");
  const auto& p = map.probability;
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  CredibleRegion r;
  r.argmax_cell = order.front();
  r.argmax = map.position(r.argmax_cell);
  // Highest-density set; cells tied with the threshold density are all kept.
  double acc = 0;
  double threshold = 0;
  for (std::size_t c : order) {
    if (acc >= mass - 1e-12 && p[c] < threshold * (1 - 1e-12)) break;
    r.cells.push_back(c);
    acc += p[c];
    threshold = p[c];
  }
  r.mass = acc;
  for (int a = 0; a < 3; ++a) {
    std::vector<std::pair<double, double>> marginal;  // (coordinate, probability)
    for (std::size_t c = 0; c < p.size(); ++c) marginal.push_back({map.position(c)[a], p[c]});
    std::sort(marginal.begin(), marginal.end());
    const double tail = 0.5 * (1 - mass);
    double cum = 0;
    r.axis[a].lo = marginal.front().first;
    r.axis[a].hi = marginal.back().first;
    bool lo_set = false;
    for (const auto& [x, w] : marginal) {
      cum += w;
      if (!lo_set && cum > tail + 1e-12) {
        r.axis[a].lo = x;
        lo_set = true;
      }
      if (cum >= 1 - tail - 1e-12) {
        r.axis[a].hi = x;
        break;
      }
    }
  }
  return r;
}

}  // namespace ffq

namespace ffq {

namespace {

Electrode box_electrode(std::string name, double x0, double x1, double y0, double y1, double z0, double z1) {
  return {std::move(name), {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, z0, z1};
}

}  // namespace

DeviceGeometry reduced_device_geometry(double spacing_nm) {
  DeviceGeometry g;
  g.extent_nm = {160, 160, 40};
  g.spacing_nm = spacing_nm;
  g.gates = {
      box_electrode("FD", 70, 90, 90, 160, 22, 28),
      box_electrode("LS", 20, 55, 40, 120, 22, 28),
      box_electrode("RS", 105, 140, 40, 120, 22, 28),
      box_electrode("SET", 50, 110, 0, 30, 22, 28),
  };
  g.grounded = {box_electrode("2DEG", 55, 105, 0, 28, 18, 20)};
  return g;
}

SearchBox reduced_device_search_box() { return {{50, 40, 6}, {110, 100, 16}}; }

std::vector<GatePair> reduced_device_pairs() { return {{"LS", "FD"}, {"RS", "FD"}, {"SET", "FD"}}; }

}  // namespace ffq
