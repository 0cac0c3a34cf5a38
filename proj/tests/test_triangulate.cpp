#include <gtest/gtest.h>

#include <cmath>

#include "ffq/rng.hpp"
#include "ffq/triangulate.hpp"
#include "ffq/types.hpp"

using namespace ffq;

namespace {

const std::vector<PotentialResponse>& device_responses() {
  static const auto rs = solve_responses(reduced_device_geometry());
  return rs;
}

std::vector<SlopeMeasurement> exact_slopes(const Point3& r) {
  std::vector<SlopeMeasurement> ms;
  for (const auto& p : reduced_device_pairs()) ms.push_back({p, predicted_slope(device_responses(), p, r)});
  return ms;
}

Point3 posterior_mean(const LikelihoodMap& map) {
  Point3 m{0, 0, 0};
  for (std::size_t c = 0; c < map.cells.size(); ++c) {
    const auto p = map.position(c);
    for (int a = 0; a < 3; ++a) m[a] += map.probability[c] * p[a];
  }
  return m;
}

double distance(const Point3& a, const Point3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

Electrode slab(std::string name, double x0, double x1, double y0, double y1, double z0, double z1) {
  return {std::move(name), {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, z0, z1};
}

}  // namespace

TEST(Electrostatics, ParallelPlateIsLinear) {
  DeviceGeometry g;
  g.extent_nm = {20, 20, 40};
  g.gates = {slab("TOP", 0, 20, 0, 20, 36, 40)};
  g.grounded = {slab("BOTTOM", 0, 20, 0, 20, 0, 4)};
  const auto r = solve_response(g, "TOP");
  EXPECT_LT(r.relative_residual, 1e-6);
  for (double z = 4; z <= 36; z += 2) {
    EXPECT_NEAR(r.at({10, 10, z}), (z - 4) / 32, 0.01) << "z=" << z;
    EXPECT_NEAR(r.at({0, 20, z}), (z - 4) / 32, 0.01) << "corner z=" << z;
  }
}

TEST(Electrostatics, Superposition) {
  const auto g = reduced_device_geometry();
  SolverOptions tight;
  tight.tolerance = 1e-10;
  tight.max_iterations = 100000;
  const auto ls = solve_response(g, "LS", tight);
  const auto rs = solve_response(g, "RS", tight);
  const auto both = solve_potential(g, {{"LS", 1.0}, {"RS", 1.0}}, tight);
  double worst = 0;
  for (std::size_t n = 0; n < both.size(); ++n) worst = std::max(worst, std::abs(both[n] - ls.values[n] - rs.values[n]));
  EXPECT_LT(worst, 1e-6);
}

TEST(Electrostatics, BoundaryValuesExactAndResidualBound) {
  const auto g = reduced_device_geometry();
  for (const auto& r : device_responses()) {
    EXPECT_LT(r.relative_residual, 1e-6);
    EXPECT_LT(laplace_residual(g, r.values, {{r.gate, 1.0}}), 1e-6);
    const Grid& grid = r.grid;
    for (int k = 0; k < grid.nz; ++k) {
      for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
          const auto p = grid.position(i, j, k);
          const double v = r.values[grid.index(i, j, k)];
          bool on_other = false;
          for (const auto& e : g.gates) {
            if (e.contains(p)) {
              ASSERT_EQ(v, e.name == r.gate ? 1.0 : 0.0);
              on_other = true;
              break;
            }
          }
          if (!on_other && g.grounded.front().contains(p)) ASSERT_EQ(v, 0.0);
        }
      }
    }
  }
}

TEST(Electrostatics, MaximumPrinciple) {
  for (const auto& r : device_responses()) {
    for (double v : r.values) {
      ASSERT_GE(v, -1e-6);
      ASSERT_LE(v, 1 + 1e-6);
    }
  }
}

TEST(Electrostatics, NonConvergenceReported) {
  SolverOptions few;
  few.max_iterations = 5;
  EXPECT_THROW(solve_response(reduced_device_geometry(), "FD", few), ConvergenceError);
}

TEST(Geometry, JsonRoundTripAndValidation) {
  const auto g = reduced_device_geometry();
  const auto back = DeviceGeometry::from_json(g.to_json());
  EXPECT_EQ(back.to_json(), g.to_json());

  auto bad = g.to_json();
  bad["colour"] = "red";
  EXPECT_THROW(DeviceGeometry::from_json(bad), InvalidArgument);
  auto outside = g.to_json();
  outside["gates"][0]["polygon"][0] = {-30, 0};
  EXPECT_THROW(DeviceGeometry::from_json(outside), InvalidArgument);
  auto spacing = g.to_json();
  spacing["spacing_nm"] = 0;
  EXPECT_THROW(DeviceGeometry::from_json(spacing), InvalidArgument);
}

TEST(Slope, SymmetricTwinGatesGiveMinusOne) {
  DeviceGeometry g;
  g.extent_nm = {80, 40, 30};
  g.gates = {slab("A", 10, 30, 10, 30, 20, 24), slab("B", 50, 70, 10, 30, 20, 24)};
  g.grounded = {slab("GND", 0, 80, 0, 40, 0, 2)};
  SolverOptions tight;
  tight.tolerance = 1e-10;
  tight.max_iterations = 100000;
  const std::vector<PotentialResponse> rs{solve_response(g, "A", tight), solve_response(g, "B", tight)};
  EXPECT_NEAR(predicted_slope(rs, {"A", "B"}, {40, 20, 12}), -1.0, 1e-6);
}

TEST(Slope, CouplingDominance) {
  const double s = predicted_slope(device_responses(), {"SET", "LS"}, {38, 80, 20});
  EXPECT_LT(std::abs(s), 0.1);
}

TEST(Slope, ScreenedPointReported) {
  EXPECT_THROW(predicted_slope(device_responses(), {"LS", "FD"}, {80, 10, 19}), InvalidArgument);
}

TEST(Slope, SigmaLimits) {
  EXPECT_DOUBLE_EQ((SlopeMeasurement{{"a", "b"}, 1.0}.sigma()), 2.0);
  EXPECT_DOUBLE_EQ((SlopeMeasurement{{"a", "b"}, -1.0}.sigma()), 2.0);
  EXPECT_NEAR((SlopeMeasurement{{"a", "b"}, 1e6}.sigma()), 1.0, 1e-11);
  EXPECT_NEAR((SlopeMeasurement{{"a", "b"}, 0.5}.sigma()), 5.0, 1e-12);
}

TEST(Likelihood, ExactSlopesPeakAtPlantedPoint) {
  for (Point3 r0 : {Point3{80, 70, 10}, Point3{60, 50, 8}, Point3{100, 90, 14}, Point3{70, 44, 16}}) {
    const auto map = likelihood_map(exact_slopes(r0), device_responses(), reduced_device_search_box());
    const auto region = argmax_region(map);
    EXPECT_LE(distance(region.argmax, r0), 2 * map.grid.h + 1e-9);
  }
}

TEST(Likelihood, Normalized) {
  auto ms = exact_slopes({80, 70, 10});
  ms[0].slope *= 1.3;
  const auto map = likelihood_map(ms, device_responses(), reduced_device_search_box());
  double sum = 0;
  for (double p : map.probability) {
    EXPECT_GE(p, 0);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Likelihood, ConstantPairLeavesMapUnchanged) {
  auto ms = exact_slopes({60, 50, 8});
  ms[1].slope *= 0.9;
  const auto before = likelihood_map(ms, device_responses(), reduced_device_search_box());
  ms.push_back({{"FD", "FD"}, -1.0});
  const auto after = likelihood_map(ms, device_responses(), reduced_device_search_box());
  EXPECT_EQ(argmax_region(before).argmax_cell, argmax_region(after).argmax_cell);
  for (std::size_t c = 0; c < before.probability.size(); ++c) {
    EXPECT_NEAR(before.probability[c], after.probability[c], 1e-12);
  }
}

TEST(Likelihood, LargeSlopeCarriesMoreWeight) {
  const Point3 r0{100, 90, 14};
  const auto base = exact_slopes(r0);
  // LS slope is small here (heavily de-weighted), RS slope is large.
  ASSERT_LT(std::abs(base[0].slope), 0.5);
  ASSERT_GT(std::abs(base[1].slope), 1.5);
  const Point3 m0 = posterior_mean(likelihood_map(base, device_responses(), reduced_device_search_box()));
  auto shift = [&](int which) {
    auto ms = base;
    ms[which].slope += 0.3;
    return distance(posterior_mean(likelihood_map(ms, device_responses(), reduced_device_search_box())), m0);
  };
  EXPECT_GT(shift(1), shift(0));
}

TEST(Likelihood, NeedsTwoPairs) {
  auto ms = exact_slopes({80, 70, 10});
  ms.resize(1);
  EXPECT_THROW(likelihood_map(ms, device_responses(), reduced_device_search_box()), InvalidArgument);
}

TEST(Likelihood, PriorMaskRestrictsCells) {
  const auto ms = exact_slopes({80, 70, 10});
  const auto map = likelihood_map(ms, device_responses(), reduced_device_search_box(),
                                  [](const Point3& p) { return p[0] >= 80; });
  for (std::size_t c = 0; c < map.cells.size(); ++c) EXPECT_GE(map.position(c)[0], 80);
  EXPECT_LE(distance(argmax_region(map).argmax, {80, 70, 10}), 1e-9);
}

TEST(Region, DeltaAndUniform) {
  LikelihoodMap map;
  map.grid = device_responses().front().grid;
  for (int i = 0; i < 10; ++i) map.cells.push_back({i, 3, 4});
  map.probability.assign(10, 0.0);
  map.probability[6] = 1.0;
  auto r = argmax_region(map);
  EXPECT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.argmax_cell, 6u);

  map.probability.assign(10, 0.1);
  r = argmax_region(map);
  EXPECT_EQ(r.cells.size(), 10u);
  EXPECT_NEAR(r.mass, 1.0, 1e-12);
}

TEST(Region, SmallestSetReachesMass) {
  auto ms = exact_slopes({80, 70, 10});
  ms[2].slope *= 1.1;
  const auto map = likelihood_map(ms, device_responses(), reduced_device_search_box());
  const auto r = argmax_region(map, 0.5);
  EXPECT_GE(r.mass, 0.5);
  double without_last = r.mass - map.probability[r.cells.back()];
  EXPECT_LT(without_last, 0.5 + 1e-12);
  for (int a = 0; a < 3; ++a) EXPECT_LE(r.axis[a].lo, r.axis[a].hi);
}

TEST(Region, CoverageUnderSlopeNoise) {
  const Point3 r0{80, 70, 10};
  const auto exact = exact_slopes(r0);
  const auto box = reduced_device_search_box();
  Rng rng(20240611);
  int covered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto ms = exact;
    for (auto& m : ms) m.slope *= 1 + 0.05 * rng.normal();
    const auto map = likelihood_map(ms, device_responses(), box);
    const auto region = argmax_region(map, 0.9);
    for (std::size_t c : region.cells) {
      if (distance(map.position(c), r0) < 1e-9) {
        ++covered;
        break;
      }
    }
  }
  EXPECT_GE(covered, 90);
}
