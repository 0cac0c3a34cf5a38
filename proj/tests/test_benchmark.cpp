#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "ffq/benchmark.hpp"

using namespace ffq;

namespace {

SimulatorConfig ideal_config() {
  SimulatorConfig c;
  c.readout = ReadoutParams::ideal();
  return c;
}

Matrix2c compose(const std::vector<NativeGateKind>& word) {
  Matrix2c u = Matrix2c::Identity();
  for (auto g : word) u = native_unitary(g) * u;
  return u;
}

std::vector<RbPoint> synthetic(double a, double p, double b) {
  std::vector<RbPoint> pts;
  for (int m : {1, 5, 10, 20, 35, 50, 65}) {
    RbPoint pt;
    pt.m = m;
    pt.mean = a * std::pow(p, m) + b;
    pt.sem = 0.01;
    pts.push_back(pt);
  }
  return pts;
}

}  // namespace

TEST(Clifford, TableHas24DistinctElements) {
  const auto& t = clifford_table();
  ASSERT_EQ(t.size(), 24u);
  for (std::size_t i = 0; i < 24; ++i) {
    for (std::size_t j = i + 1; j < 24; ++j) EXPECT_FALSE(equal_up_to_phase(t[i].unitary, t[j].unitary));
  }
  EXPECT_TRUE(t[0].decomposition.empty());
  EXPECT_TRUE(equal_up_to_phase(t[0].unitary, Matrix2c::Identity()));
}

TEST(Clifford, DecompositionsComposeToUnitary) {
  for (const auto& e : clifford_table()) {
    EXPECT_TRUE(equal_up_to_phase(compose(e.decomposition), e.unitary)) << e.index;
  }
}

TEST(Clifford, ClosureAndInverses) {
  const auto& t = clifford_table();
  for (const auto& a : t) {
    const Matrix2c inv = t[clifford_inverse(a.index)].unitary;
    EXPECT_TRUE(equal_up_to_phase(inv * a.unitary, Matrix2c::Identity()));
    for (const auto& b : t) {
      const Matrix2c prod = b.unitary * a.unitary;
      bool found = false;
      for (const auto& c : t) found = found || equal_up_to_phase(c.unitary, prod);
      EXPECT_TRUE(found);
    }
  }
}

TEST(Clifford, MeanNativeGateCount) {
  EXPECT_NEAR(mean_native_gates_per_clifford(), 2.233, 0.05);
}

TEST(Clifford, ConjugatesPauliGroup) {
  // Every element maps each Pauli to a signed Pauli.
  Matrix2c x, y, z;
  x << 0, 1, 1, 0;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  z << 1, 0, 0, -1;
  for (const auto& e : clifford_table()) {
    for (const Matrix2c& p : {x, y, z}) {
      const Matrix2c q = e.unitary * p * e.unitary.adjoint();
      bool pauli = false;
      for (const Matrix2c& r : {x, y, z}) pauli = pauli || equal_up_to_phase(q, r);
      EXPECT_TRUE(pauli);
    }
  }
}

TEST(RbSequence, SingleElementRecoveryIsInverse) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto s = rb_sequence(1, rng);
    EXPECT_EQ(s.recovery, clifford_inverse(s.cliffords[0]));
  }
  EXPECT_THROW(rb_sequence(0, rng), InvalidArgument);
}

TEST(RbSequence, RandomSequencesComposeToIdentity) {
  Rng rng(2);
  const auto& t = clifford_table();
  for (int i = 0; i < 100; ++i) {
    const int m = 1 + static_cast<int>(rng.uniform_int(0, 64));
    const auto s = rb_sequence(m, rng);
    Matrix2c u = Matrix2c::Identity();
    for (int c : s.cliffords) u = compose(t[c].decomposition) * u;
    u = compose(t[s.recovery].decomposition) * u;
    EXPECT_TRUE(equal_up_to_phase(u, Matrix2c::Identity()));
  }
}

TEST(RbSequence, PulsesReturnToStartWithoutNoise) {
  const SpinSystem sys(DonorParameters{});
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto s = rb_sequence(20, rng);
    const auto pulses = rb_pulses(sys, s, NativeGateDurations{});
    QuantumState st = QuantumState::basis(Level::DownUp);
    for (const auto& seg : pulses.segments) {
      if (!std::holds_alternative<ReadMarker>(seg)) st = propagate(sys, st, seg, NoiseRealization::noiseless(), EvolutionConfig{});
    }
    EXPECT_GT(st.population(Level::DownUp), 1 - 1e-9);
  }
}

TEST(RbSequence, GateDurations) {
  const SpinSystem sys(DonorParameters{});
  RbSequence s;
  s.cliffords = {clifford_index(native_unitary(NativeGateKind::X))};
  s.recovery = s.cliffords[0];
  const auto pulses = rb_pulses(sys, s, NativeGateDurations{});
  ASSERT_EQ(pulses.segments.size(), 3u);
  EXPECT_DOUBLE_EQ(std::get<Tone>(pulses.segments[0]).duration_us, 6.13);
}

TEST(RunRb, NoiselessSurvivalIsFlat) {
  Simulator sim(ideal_config(), 1);
  RbConfig cfg;
  cfg.lengths = {1, 10, 40};
  cfg.sequences_per_length = 3;
  cfg.shots = 10;
  const auto run = run_rb(sim, cfg, 5);
  for (const auto& p : run.points) EXPECT_NEAR(p.mean, 1.0, 1e-12);
  const auto fit = fit_rb(run.points);
  EXPECT_NEAR(fit.f_clifford, 1.0, 1e-4);
}

TEST(RunRb, DepolarizingSurvivalMatchesChannelAlgebra) {
  SimulatorConfig c = ideal_config();
  const double r = 0.02;
  c.env.gate_depolarizing = r;
  Simulator sim(c, 2);
  Rng rng(4);
  const auto seq = rb_sequence(15, rng);
  const auto pulses = rb_pulses(sim.system(), seq, NativeGateDurations{});
  int gates = 0;
  for (const auto& s : pulses.segments) gates += std::holds_alternative<Tone>(s) ? 1 : 0;
  const double expected = 0.5 * (1 + std::pow(1 - 2 * r, gates));
  const int n = 4000;
  int up = 0;
  for (int i = 0; i < n; ++i) {
    const auto res = sim.run_sequence(QuantumState::basis(Level::DownUp), pulses, rng);
    up += res.log.nuclear.back().state == NuclearSpin::Up;
  }
  EXPECT_NEAR(static_cast<double>(up) / n, expected, 3 * std::sqrt(expected * (1 - expected) / n));
}

TEST(RunRb, SpamChangesOffsetsNotDecay) {
  SimulatorConfig c = ideal_config();
  c.env.gate_depolarizing = 0.0161;
  RbConfig cfg;
  cfg.lengths = {1, 8, 20, 40, 65};
  cfg.sequences_per_length = 15;
  cfg.shots = 40;
  Simulator a(c, 3), b(c, 3);
  const auto clean = fit_rb(run_rb(a, cfg, 11).points);
  cfg.prep_error = 0.1;
  const auto spam = fit_rb(run_rb(b, cfg, 11).points);
  EXPECT_LT(spam.a, clean.a);
  EXPECT_LT(std::abs(spam.p - clean.p), 1.96 * std::hypot(spam.p_sigma, clean.p_sigma));
}

TEST(RunRb, FrequencyCheckDiscardsBlocks) {
  SimulatorConfig c = ideal_config();
  c.env.si29.couplings_khz = {260, 85, 85};
  c.env.si29.flip_rate_hz = 0.05;
  Simulator sim(c, 4);
  RbConfig cfg;
  cfg.lengths = {1, 2, 3};
  cfg.sequences_per_length = 4;
  cfg.shots = 20;
  const auto run = run_rb(sim, cfg, 1);
  EXPECT_GT(run.blocks_discarded, 0);
  EXPECT_EQ(run.blocks_measured, 12 + run.blocks_discarded);
  for (const auto& p : run.points) EXPECT_GT(p.mean, 0.95);
}

TEST(FitRb, SyntheticDecay) {
  const auto r = fit_rb(synthetic(0.45, 0.9282, 0.5));
  EXPECT_NEAR(r.p, 0.9282, 1e-6);
  EXPECT_NEAR(r.f_clifford, 0.9641, 1e-6);
  EXPECT_NEAR(native_fidelity(0.964), 0.9839, 5e-5);
  EXPECT_DOUBLE_EQ(clifford_fidelity(1.0), 1.0);
  auto two = synthetic(0.45, 0.9, 0.5);
  two.resize(2);
  EXPECT_THROW(fit_rb(two), InvalidArgument);
}

TEST(FitRb, DepolarizingOracle) {
  // (1 - 2r)^n averaged over the table; close to (1 - 2r)^mean for small r.
  const double p = depolarizing_clifford_decay(0.0161);
  EXPECT_NEAR(p, std::pow(1 - 2 * 0.0161, mean_native_gates_per_clifford()), 2e-3);
  EXPECT_DOUBLE_EQ(depolarizing_clifford_decay(0), 1.0);
}
