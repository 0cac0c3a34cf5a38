#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ffq/noise.hpp"
#include "ffq/state.hpp"

using namespace ffq;

namespace {

RelaxationRates paper_rates() { return RelaxationRates{6.45, 173.0, kInfinity}; }

// Rate equations integrated with small RK4 steps; independent of the
// closed-form transfer matrix.
Vector4d integrate_rates(Vector4d p, double t, const RelaxationRates& r) {
  const double ge = 1 / r.t1e_s, gf = 1 / r.t1ff_s, gn = std::isinf(r.t1n_s) ? 0 : 1 / r.t1n_s;
  auto f = [&](const Vector4d& x) {
    Vector4d d;
    d(0) = -ge * x(0);
    d(1) = -(ge + gf) * x(1);
    d(3) = ge * x(1) - gn * x(3);
    d(2) = ge * x(0) + gf * x(1) + gn * x(3);
    return d;
  };
  const int n = 20000;
  const double h = t / n;
  for (int i = 0; i < n; ++i) {
    const Vector4d k1 = f(p), k2 = f(p + 0.5 * h * k1), k3 = f(p + 0.5 * h * k2), k4 = f(p + h * k3);
    p += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return p;
}

}  // namespace

TEST(Si29, OffsetExamples) {
  const std::vector<double> c{260, 85, 85};
  EXPECT_DOUBLE_EQ(si29_offset({1, 1, 1}, c), 215.0);
  EXPECT_DOUBLE_EQ(si29_offset({1, 1, 1}, {0, 0, 0}), 0.0);
  EXPECT_THROW(si29_offset({1, 1}, c), InvalidArgument);
}

TEST(Si29, EnumerationGivesSixOffsets) {
  const auto v = si29_offsets_enumerated({260, 85, 85});
  const std::vector<double> expected{-215, -130, -45, 45, 130, 215};
  ASSERT_EQ(v.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(v[i], expected[i], 1e-12);
  for (std::size_t i = 1; i < 6; ++i) {
    EXPECT_GE(v[i] - v[i - 1], 85.0 - 1e-12);
    EXPECT_LE(v[i] - v[i - 1], 90.0 + 1e-12);
  }
}

TEST(Pirs, EdsrShift) {
  const PirsModel m;
  EXPECT_NEAR(pirs_edsr_shift(1.84, 0, m), 2.1, 1e-12);
  EXPECT_NEAR(pirs_edsr_shift(1.84, 1e9, m), 96.9, 1e-9);
  EXPECT_NEAR(pirs_edsr_shift(1.84, 284, m), 2.1 + 94.8 * (1 - std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(pirs_edsr_shift(0.97, 0, m), -4.7, 1e-12);
  EXPECT_THROW(pirs_edsr_shift(1.5, 10, m), InvalidArgument);
  PirsModel interp = m;
  interp.interpolate = true;
  const double mid = pirs_edsr_shift(1.405, 0, interp);
  EXPECT_NEAR(mid, 0.5 * (2.1 - 4.7), 1e-9);
  EXPECT_THROW(pirs_edsr_shift(2.5, 0, interp), InvalidArgument);
}

TEST(Pirs, EsrShift) {
  const PirsModel m;
  EXPECT_NEAR(pirs_esr_shift(1, 0, m), 50.5, 1e-12);
  EXPECT_NEAR(pirs_esr_shift(0, 100, m), 21.9, 1e-12);
  EXPECT_DOUBLE_EQ(pirs_esr_shift(0, 0, m), 0.0);
}

TEST(Relaxation, CombinedT1) {
  EXPECT_NEAR(combined_t1(paper_rates()), 6.218, 5e-4);
  EXPECT_DOUBLE_EQ(combined_t1({6.45, kInfinity, kInfinity}), 6.45);
  EXPECT_DOUBLE_EQ(combined_t1({10, 10, kInfinity}), 5.0);
}

TEST(Relaxation, ZeroTimeIsIdentity) {
  Rng rng(1);
  const auto s = QuantumState::basis(Level::UpDown);
  const auto out = apply_relaxation(s, 0.0, paper_rates(), rng);
  EXPECT_EQ(out.vector(), s.vector());
}

TEST(Relaxation, TransferMatrixMatchesRateEquations) {
  for (const auto& r : {paper_rates(), RelaxationRates{6.45, 173, 400}, RelaxationRates{10, 10, 20}}) {
    for (double t : {0.5, 6.218, 40.0}) {
      for (int k = 0; k < 4; ++k) {
        Vector4d p0 = Vector4d::Zero();
        p0(k) = 1;
        const Vector4d a = relaxation_transfer(t, r) * p0;
        const Vector4d b = integrate_rates(p0, t, r);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
      }
    }
  }
}

TEST(Relaxation, SurvivalAtCombinedT1) {
  Rng rng(11);
  const int n = 10000;
  int survived = 0;
  const double t = combined_t1(paper_rates());
  for (int i = 0; i < n; ++i) {
    const auto s = apply_relaxation(QuantumState::basis(Level::UpDown), t, paper_rates(), rng);
    survived += s.population(Level::UpDown) > 0.5 ? 1 : 0;
  }
  const double p = static_cast<double>(survived) / n;
  const double sigma = std::sqrt(std::exp(-1.0) * (1 - std::exp(-1.0)) / n);
  EXPECT_NEAR(p, std::exp(-1.0), 3 * sigma);
}

TEST(Relaxation, TrajectoriesMatchMasterEquation) {
  const RelaxationRates r{6.45, 30.0, 50.0};
  Rng rng(5);
  const int n = 10000;
  for (double t : {2.0, 10.0}) {
    Vector4d counts = Vector4d::Zero();
    for (int i = 0; i < n; ++i) {
      const auto s = apply_relaxation(QuantumState::basis(Level::UpDown), t, r, rng);
      counts += s.populations();
    }
    counts /= n;
    Vector4d p0 = Vector4d::Zero();
    p0(idx(Level::UpDown)) = 1;
    const Vector4d expected = integrate_rates(p0, t, r);
    for (int k = 0; k < 4; ++k) {
      const double sigma = std::sqrt(expected(k) * (1 - expected(k)) / n) + 1e-12;
      EXPECT_NEAR(counts(k), expected(k), 3 * sigma + 1e-9) << "level " << k << " t " << t;
    }
  }
}

TEST(Relaxation, SuperpositionTrajectoriesMatchDensityChannel) {
  const RelaxationRates r{6.45, 20.0, kInfinity};
  Vector4c psi = Vector4c::Zero();
  psi(idx(Level::UpDown)) = std::sqrt(0.7);
  psi(idx(Level::DownDown)) = std::sqrt(0.3);
  const auto pure = QuantumState::pure(psi);
  Rng rng(8);
  const auto exact = apply_relaxation(pure.to_mixed(), 4.0, r, rng).populations();
  Vector4d mean = Vector4d::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i) mean += apply_relaxation(pure, 4.0, r, rng).populations();
  mean /= n;
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(mean(k), exact(k), 3 * std::sqrt(exact(k) * (1 - exact(k)) / n) + 1e-9);
  }
}

TEST(Relaxation, PumpingScheduleOscillation) {
  // Half inversion, then 98% inversions every 5 s with T1e = 6.45 s only.
  const RelaxationRates r{6.45, kInfinity, kInfinity};
  const double f = 0.98;
  Matrix4c rho = Matrix4c::Zero();
  rho(idx(Level::UpDown), idx(Level::UpDown)) = 0.5;
  rho(idx(Level::DownDown), idx(Level::DownDown)) = 0.5;
  auto s = QuantumState::mixed(rho);
  Rng rng(1);
  double lo = 1, hi = 0, sum = 0;
  int count = 0;
  const double dt = 0.01;
  for (int cycle = 0; cycle < 6; ++cycle) {
    for (int i = 0; i < 500; ++i) {
      const double p = s.population(Level::UpDown);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      sum += p;
      ++count;
      s = apply_relaxation(s, dt, r, rng);
    }
    // Incoherent inversion of ESR1 with probability f.
    Vector4d pop = s.populations();
    const double up = pop(idx(Level::UpDown)), dn = pop(idx(Level::DownDown));
    Matrix4c next = Matrix4c::Zero();
    next(idx(Level::UpDown), idx(Level::UpDown)) = f * dn + (1 - f) * up;
    next(idx(Level::DownDown), idx(Level::DownDown)) = f * up + (1 - f) * dn;
    s = QuantumState::mixed(next);
  }
  EXPECT_NEAR(lo, 0.23, 0.01);
  EXPECT_NEAR(hi, 0.76, 0.01);
  EXPECT_NEAR(sum / count, 0.46, 0.01);
}

TEST(Sampling, NoNoiseGivesZeroOffsets) {
  NoiseEnvironment env;
  Rng rng(3);
  const auto r = sample_realization(env, rng);
  EXPECT_EQ(r.electron_offset_mhz, 0.0);
  EXPECT_EQ(r.nuclear_offset_mhz, 0.0);
  EXPECT_EQ(r.si29_offset_khz, 0.0);
}

TEST(Sampling, GaussianMoments) {
  NoiseEnvironment env;
  env.dephasing.quasi_static_sigma_khz = 20.0;
  Rng rng(17);
  NoiseSampler sampler(env, rng);
  const int n = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sampler.sample(rng).electron_offset_mhz * 1e3;
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  const double sigma2 = 400.0;
  EXPECT_NEAR(mean, 0.0, 3 * std::sqrt(sigma2 / n));
  EXPECT_NEAR(var, sigma2, 3 * sigma2 * std::sqrt(2.0 / n));
}

TEST(Sampling, FrozenBathNeverFlips) {
  NoiseEnvironment env;
  env.si29.couplings_khz = {260, 85, 85};
  env.si29.current_config = {1, -1, 1};
  env.si29.flip_rate_hz = 0;
  Rng rng(4);
  NoiseSampler sampler(env, rng);
  for (int i = 0; i < 1000; ++i) {
    const auto r = sampler.sample_after(1e3, rng);
    EXPECT_EQ(r.si29_config, env.si29.current_config);
    EXPECT_DOUBLE_EQ(r.si29_offset_khz, 130.0);
  }
}

TEST(Sampling, BathVisitsAllSixOffsets) {
  NoiseEnvironment env;
  env.si29.couplings_khz = {260, 85, 85};
  env.si29.flip_rate_hz = 0.05;
  Rng rng(4);
  NoiseSampler sampler(env, rng);
  std::set<long> seen;
  for (int i = 0; i < 5000; ++i) seen.insert(std::lround(sampler.sample_after(2.0, rng).si29_offset_khz));
  EXPECT_EQ(seen, (std::set<long>{-215, -130, -45, 45, 130, 215}));
}

TEST(Sampling, TelegraphSwitchProbability) {
  NoiseEnvironment env;
  env.dephasing.telegraph = {{10.0, 2.0}};
  Rng rng(9);
  NoiseSampler sampler(env, rng);
  double prev = sampler.sample_after(0.0, rng).electron_offset_mhz;
  int changes = 0;
  const int n = 40000;
  const double dt = 0.1;
  for (int i = 0; i < n; ++i) {
    const double x = sampler.sample_after(dt, rng).electron_offset_mhz;
    changes += x != prev ? 1 : 0;
    prev = x;
  }
  const double p = 0.5 * (1 - std::exp(-2 * 2.0 * dt));
  EXPECT_NEAR(static_cast<double>(changes) / n, p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(Environment, Validation) {
  NoiseEnvironment env;
  env.rates.t1e_s = -1;
  EXPECT_THROW(env.validate(), InvalidArgument);
  NoiseEnvironment env2;
  env2.si29.couplings_khz = {1, 2};
  env2.si29.current_config = {1};
  EXPECT_THROW(env2.validate(), InvalidArgument);
}
