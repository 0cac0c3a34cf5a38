#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ffq {

using Point2 = std::array<double, 2>;
using Point3 = std::array<double, 3>;

// Prism: polygon footprint (nm, x-y plane) extruded over [z_min, z_max].
struct Electrode {
  std::string name;
  std::vector<Point2> polygon;
  double z_min_nm = 0;
  double z_max_nm = 0;

  bool contains(const Point3& p) const;
};

struct DeviceGeometry {
  Point3 extent_nm{0, 0, 0};  // domain is [0, extent] on each axis
  double spacing_nm = 2.0;
  std::vector<Electrode> gates;
  std::vector<Electrode> grounded;

  void validate() const;
  static DeviceGeometry from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Regular node grid over the domain.
struct Grid {
  int nx = 0, ny = 0, nz = 0;
  double h = 1;

  explicit Grid(const DeviceGeometry& g);
  Grid() = default;
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  Point3 position(int i, int j, int k) const { return {i * h, j * h, k * h}; }
};

// dV(r)/dV_gate on the grid: unit potential on the gate, zero on every other
// conductor, zero normal derivative on the outer boundary.
struct PotentialResponse {
  std::string gate;
  Grid grid;
  std::vector<double> values;
  double relative_residual = 0;
  int iterations = 0;

  double at(const Point3& r) const;  // trilinear interpolation
};

struct SolverOptions {
  double tolerance = 1e-6;  // relative residual
  int max_iterations = 20000;
  std::optional<double> omega;  // over-relaxation factor; near-optimal when unset
};

PotentialResponse solve_response(const DeviceGeometry& g, const std::string& gate,
                                 const SolverOptions& options = {});
std::vector<PotentialResponse> solve_responses(const DeviceGeometry& g,
                                               const SolverOptions& options = {});

// Conductor potentials set explicitly (name -> volts); superposition checks.
std::vector<double> solve_potential(const DeviceGeometry& g,
                                    const std::vector<std::pair<std::string, double>>& gate_volts,
                                    const SolverOptions& options = {});

// Relative discrete residual of a solution on the free nodes.
double laplace_residual(const DeviceGeometry& g, const std::vector<double>& values,
                        const std::vector<std::pair<std::string, double>>& gate_volts);

struct GatePair {
  std::string swept;
  std::string reference;
};

// Transition slope dV_reference/dV_swept = -R_swept(r) / R_reference(r).
double predicted_slope(const std::vector<PotentialResponse>& responses, const GatePair& pair,
                       const Point3& r);

struct SlopeMeasurement {
  GatePair pair;
  double slope = 0;
  double sigma() const;  // 1 + 1/s^2
};

// Cells of the search box (node positions) on which P(r) is evaluated.
struct SearchBox {
  Point3 min_nm{0, 0, 0};
  Point3 max_nm{0, 0, 0};
};

struct LikelihoodMap {
  Grid grid;
  std::vector<std::array<int, 3>> cells;
  std::vector<double> probability;  // sums to 1 over cells
  Point3 position(std::size_t cell) const;
};

using PriorMask = std::function<bool(const Point3&)>;

LikelihoodMap likelihood_map(const std::vector<SlopeMeasurement>& measurements,
                             const std::vector<PotentialResponse>& responses, const SearchBox& box,
                             const PriorMask& prior = nullptr);

struct AxisInterval {
  double lo = 0, hi = 0;
};

struct CredibleRegion {
  Point3 argmax{0, 0, 0};
  std::size_t argmax_cell = 0;
  std::vector<std::size_t> cells;  // smallest set holding >= mass
  double mass = 0;
  std::array<AxisInterval, 3> axis;  // central marginal intervals at the same mass
};

CredibleRegion argmax_region(const LikelihoodMap& map, double mass = 0.9);

// Reduced four-gate layout (FD reference, LS, RS, SET over a grounded 2DEG strip)
// and the donor search box below the oxide. Used by the runner defaults and tests.
DeviceGeometry reduced_device_geometry(double spacing_nm = 2.0);
SearchBox reduced_device_search_box();
std::vector<GatePair> reduced_device_pairs();

}  // namespace ffq
