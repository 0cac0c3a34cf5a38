#include <gtest/gtest.h>

#include <cmath>

#include "ffq/propagator.hpp"
#include "ffq/sequences.hpp"

using namespace ffq;

namespace {

QuantumState run_segments(const SpinSystem& sys, QuantumState s, const PulseSequence& seq,
                          const NoiseRealization& r, const EvolutionConfig& cfg) {
  for (const auto& seg : seq.segments) {
    if (std::holds_alternative<ReadMarker>(seg)) continue;
    s = propagate(sys, s, seg, r, cfg);
  }
  return s;
}

// Two-level Rabi formula with Rabi frequency and detuning in MHz.
double chevron(double rabi, double detuning, double t) {
  const double w = std::sqrt(rabi * rabi + detuning * detuning);
  const double s = std::sin(kPi * w * t);
  return rabi * rabi / (w * w) * s * s;
}

Chirp lz_chirp(const SpinSystem& sys, double rate_mhz_per_us, double amp_mt = 0.01) {
  const double centre = sys.transition_mhz(Level::UpDown, Level::DownDown);
  const double span = 40.0;
  Chirp c;
  c.f_start_ghz = (centre - span / 2) * 1e-3;
  c.f_end_ghz = (centre + span / 2) * 1e-3;
  c.amplitude = amp_mt;
  c.duration_us = span / rate_mhz_per_us;
  c.channel = Channel::EsrMagnetic;
  return c;
}

}  // namespace

TEST(Propagate, DelayWithoutNoiseIsIdentity) {
  const SpinSystem sys(DonorParameters{});
  Vector4c psi;
  psi << 0.5, Complex(0, 0.5), -0.5, 0.5;
  const auto s = QuantumState::pure(psi);
  const auto out = propagate(sys, s, Delay{12.5}, NoiseRealization::noiseless(), EvolutionConfig{});
  EXPECT_LT((out.vector() - psi).norm(), 1e-12);
}

TEST(Propagate, ResonantPiPulseTransfersFlipFlop) {
  const SpinSystem sys(DonorParameters{});
  const Tone pi = flipflop_rotation(sys, kPi, 0, 0.4);
  const auto out = propagate(sys, QuantumState::basis(Level::DownUp), pi,
                             NoiseRealization::noiseless(), EvolutionConfig{});
  EXPECT_GE(out.population(Level::UpDown), 0.999);
}

TEST(Propagate, ChevronMatchesTwoLevelFormula) {
  const SpinSystem sys(DonorParameters{});
  const double rabi = tone_rabi_mhz(sys, Channel::EdsrElectric, 0.4, Level::UpDown, Level::DownUp);
  for (double det_khz : {-300.0, -120.0, -40.0, 0.0, 25.0, 90.0, 250.0}) {
    for (double t : {1.0, 3.3, 7.9, 15.0}) {
      Tone tone = flipflop_rotation(sys, kPi, 0, 0.4, det_khz * 1e-3);
      tone.duration_us = t;
      const auto out = propagate(sys, QuantumState::basis(Level::DownUp), tone,
                                 NoiseRealization::noiseless(), EvolutionConfig{});
      EXPECT_NEAR(out.population(Level::UpDown), chevron(rabi, det_khz * 1e-3, t), 1e-3)
          << det_khz << " kHz, " << t << " us";
    }
  }
}

TEST(Propagate, ChevronEnvelope) {
  const SpinSystem sys(DonorParameters{});
  const double rabi = tone_rabi_mhz(sys, Channel::EdsrElectric, 0.4, Level::UpDown, Level::DownUp);
  for (double det : {0.05, 0.1, 0.2}) {
    const double w = std::sqrt(rabi * rabi + det * det);
    Tone tone = flipflop_rotation(sys, kPi, 0, 0.4, det);
    tone.duration_us = 1 / (2 * w);
    const auto out = propagate(sys, QuantumState::basis(Level::DownUp), tone,
                               NoiseRealization::noiseless(), EvolutionConfig{});
    EXPECT_NEAR(out.population(Level::UpDown), rabi * rabi / (w * w), 1e-3);
  }
}

TEST(Propagate, RamseyFringe) {
  const SpinSystem sys(DonorParameters{});
  NoiseRealization r;
  r.electron_offset_mhz = 0.002;
  SequenceOptions o;
  o.edsr_amplitude_v = 10.0;
  for (double tau : {0.0, 20.0, 60.0, 125.0, 190.0, 250.0}) {
    o.tau_us = tau;
    const auto seq = build_standard_sequence(SequenceKind::Ramsey, sys, o);
    const auto out = run_segments(sys, QuantumState::basis(Level::DownUp), seq, r, EvolutionConfig{});
    const double c = std::cos(kPi * r.electron_offset_mhz * tau);
    EXPECT_NEAR(out.population(Level::UpDown), c * c, 1e-3) << "tau " << tau;
  }
}

TEST(Propagate, HahnEchoRefocusesStaticDetuning) {
  const SpinSystem sys(DonorParameters{});
  SequenceOptions o;
  o.edsr_amplitude_v = 40.0;
  o.tau_us = 200;
  const auto seq = build_standard_sequence(SequenceKind::HahnEcho, sys, o);
  for (double off_khz : {-2.0, 0.0, 1.5}) {
    NoiseRealization r;
    r.electron_offset_mhz = off_khz * 1e-3;
    const auto out = run_segments(sys, QuantumState::basis(Level::DownUp), seq, r, EvolutionConfig{});
    EXPECT_GT(out.population(Level::UpDown), 1 - 1e-4);
  }
}

TEST(Propagate, UnitarityPureAndMixed) {
  const SpinSystem sys(DonorParameters{});
  const auto pulses = default_adiabatic_pulses(sys);
  Rng rng(3);
  Vector4c psi;
  for (int i = 0; i < 4; ++i) psi(i) = Complex(rng.normal(), rng.normal());
  psi.normalize();
  auto pure = QuantumState::pure(psi);
  auto mixed = QuantumState::mixed(0.3 * pure.density() + 0.7 * QuantumState::basis(Level::DownDown).density());
  NoiseRealization r;
  r.electron_offset_mhz = 0.013;
  r.nuclear_offset_mhz = -0.002;
  std::vector<PulseSegment> segs{flipflop_rotation(sys, 1.1, 0.3, 0.4, 0.05), Delay{3.0},
                                 pulses.aesr1, pulses.anmr1};
  for (const auto& seg : segs) {
    pure = propagate(sys, pure, seg, r, EvolutionConfig{});
    mixed = propagate(sys, mixed, seg, r, EvolutionConfig{});
    EXPECT_LT(std::abs(pure.vector().norm() - 1), 1e-9);
    EXPECT_LT(std::abs(mixed.density().trace() - 1.0), 1e-9);
    EXPECT_NO_THROW(mixed.validate(1e-9));
  }
}

TEST(Adiabatic, LandauZenerAgreement) {
  const SpinSystem sys(DonorParameters{});
  const double rabi = chirp_rabi_mhz(sys, lz_chirp(sys, 1.0));
  int n = 0;
  for (double rate : {0.05, 0.08, 0.12, 0.18, 0.25, 0.35, 0.5, 0.7, 1.0, 1.5}) {
    const Chirp c = lz_chirp(sys, rate);
    const double sim = adiabatic_inversion_probability(sys, c, {}, EvolutionConfig{});
    const double lz = 1 - std::exp(-kPi * kPi * rabi * rabi / rate);
    EXPECT_NEAR(landau_zener_inversion(rabi, rate), lz, 1e-12);
    EXPECT_NEAR(sim, lz, 0.02) << "rate " << rate;
    ++n;
  }
  EXPECT_EQ(n, 10);
}

TEST(Adiabatic, SlowSweepInverts) {
  const SpinSystem sys(DonorParameters{});
  const auto p = default_adiabatic_pulses(sys);
  for (const Chirp& c : {p.aesr1, p.aesr2, p.anmr1, p.anmr2}) {
    EXPECT_GT(adiabatic_inversion_probability(sys, c, {}, EvolutionConfig{}), 0.98);
  }
}

TEST(Adiabatic, OffResonantSweepDoesNothing) {
  const SpinSystem sys(DonorParameters{});
  Chirp c = default_adiabatic_pulses(sys).aesr1;
  c.f_start_ghz += 0.03;
  c.f_end_ghz += 0.03;
  EXPECT_LT(adiabatic_inversion_probability(sys, c, {}, EvolutionConfig{}), 0.01);
}

TEST(Adiabatic, FasterSweepLowersInversion) {
  const SpinSystem sys(DonorParameters{});
  double prev = 1.1;
  for (double rate : {0.06, 0.2, 0.6, 2.0, 6.0}) {
    const double p = adiabatic_inversion_probability(sys, lz_chirp(sys, rate), {}, EvolutionConfig{});
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Adiabatic, CalibrateHalfInversion) {
  const DonorParameters params;
  const Chirp c = calibrate_half_adiabatic(0.5, params, EvolutionConfig{});
  EXPECT_NEAR(adiabatic_inversion_probability(c, params, NoiseEnvironment{}, EvolutionConfig{}), 0.5, 0.01);
  EXPECT_THROW(calibrate_half_adiabatic(1.0, params, EvolutionConfig{}), InvalidArgument);
  EXPECT_THROW(calibrate_half_adiabatic(0.0, params, EvolutionConfig{}), InvalidArgument);
}

TEST(Propagate, CoarseStepIsReported) {
  const SpinSystem sys(DonorParameters{});
  EvolutionConfig cfg;
  cfg.dt_max_us = 5.0;
  EXPECT_THROW(propagate(sys, QuantumState::basis(Level::DownDown), default_adiabatic_pulses(sys).aesr1,
                         NoiseRealization::noiseless(), cfg),
               StepSizeError);
  EvolutionConfig bad;
  bad.dt_max_us = -1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Propagate, FrameEquivalence) {
  DonorParameters params;
  params.b0_t = 0.005;
  const SpinSystem sys(params);
  const Tone t1 = flipflop_rotation(sys, kPi / 2, 0.0, 20.0);
  Tone t2 = flipflop_rotation(sys, kPi / 3, 1.0, 20.0, 0.5);
  std::vector<PulseSegment> segs{t1, Delay{0.37}, t2};

  EvolutionConfig rot;
  rot.rwa = false;
  rot.dt_max_us = 2e-5;
  EvolutionConfig lab = rot;
  lab.frame = Frame::Lab;

  auto a = QuantumState::basis(Level::DownUp);
  auto b = sys.to_frame(a, Frame::Lab);
  for (const auto& s : segs) {
    a = propagate(sys, a, s, NoiseRealization::noiseless(), rot);
    b = propagate(sys, b, s, NoiseRealization::noiseless(), lab);
  }
  const Vector4d pa = a.populations();
  const Vector4d pb = sys.to_frame(b, Frame::Rotating).populations();
  EXPECT_LT((pa - pb).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GT(pa(idx(Level::UpDown)), 0.1);
}

TEST(Propagate, RwaConsistency) {
  DonorParameters params;
  params.b0_t = 0.1;
  const SpinSystem sys(params);
  const double carrier = flipflop_frequency_ghz(sys) * 1e3;
  const double amp = 4.0;
  ASSERT_LT(tone_rabi_mhz(sys, Channel::EdsrElectric, amp, Level::UpDown, Level::DownUp), 1e-3 * carrier);
  EvolutionConfig full;
  full.rwa = false;
  for (double angle : {kPi / 2, kPi, 1.3 * kPi}) {
    const Tone t = flipflop_rotation(sys, angle, 0.0, amp);
    const auto a = propagate(sys, QuantumState::basis(Level::DownUp), t, NoiseRealization::noiseless(), EvolutionConfig{});
    const auto b = propagate(sys, QuantumState::basis(Level::DownUp), t, NoiseRealization::noiseless(), full);
    EXPECT_LT((a.populations() - b.populations()).cwiseAbs().maxCoeff(), 0.01);
  }
}

TEST(Propagate, IntegratorsAgree) {
  const SpinSystem sys(DonorParameters{});
  EvolutionConfig a, b;
  b.integrator = Integrator::FixedStepExpansion;
  const Chirp c = lz_chirp(sys, 0.3);
  const double pa = adiabatic_inversion_probability(sys, c, {}, a);
  const double pb = adiabatic_inversion_probability(sys, c, {}, b);
  EXPECT_NEAR(pa, pb, 1e-4);
}

TEST(Sequences, HahnStructure) {
  const SpinSystem sys(DonorParameters{});
  SequenceOptions o;
  o.tau_us = 100;
  const auto seq = build_standard_sequence(SequenceKind::HahnEcho, sys, o);
  ASSERT_EQ(seq.segments.size(), 6u);
  const auto& h1 = std::get<Tone>(seq.segments[0]);
  EXPECT_DOUBLE_EQ(std::get<Delay>(seq.segments[1]).duration_us, 50.0);
  const auto& pi = std::get<Tone>(seq.segments[2]);
  EXPECT_DOUBLE_EQ(std::get<Delay>(seq.segments[3]).duration_us, 50.0);
  const auto& h2 = std::get<Tone>(seq.segments[4]);
  EXPECT_TRUE(std::holds_alternative<ReadMarker>(seq.segments[5]));
  EXPECT_NEAR(pi.duration_us, 2 * h1.duration_us, 1e-12);
  EXPECT_NEAR(h2.duration_us, h1.duration_us, 1e-12);
}

TEST(Sequences, PumpContainsSixInversions) {
  const SpinSystem sys(DonorParameters{});
  const auto pulses = default_adiabatic_pulses(sys);
  SequenceOptions o;
  o.wait_s = 30;
  o.pump_period_s = 5;
  Chirp half = pulses.aesr1;
  half.duration_us = 7;
  o.half_aesr1 = half;
  const auto seq = build_standard_sequence(SequenceKind::T1ffPump, sys, o);
  int full = 0, halves = 0;
  for (const auto& s : seq.segments) {
    if (const auto* c = std::get_if<Chirp>(&s)) {
      (c->duration_us == pulses.aesr1.duration_us ? full : halves)++;
    }
  }
  EXPECT_EQ(full, 6);
  EXPECT_EQ(halves, 1);
  EXPECT_TRUE(std::holds_alternative<Chirp>(seq.segments.front()));
  EXPECT_TRUE(std::holds_alternative<ReadMarker>(seq.segments.back()));
  o.half_aesr1.reset();
  EXPECT_THROW(build_standard_sequence(SequenceKind::T1ffPump, sys, o), InvalidArgument);
}

TEST(Sequences, EndorStructure) {
  const SpinSystem sys(DonorParameters{});
  const auto pulses = default_adiabatic_pulses(sys);
  const auto seq = build_standard_sequence(SequenceKind::EndorInit, sys);
  ASSERT_EQ(seq.segments.size(), 3u);
  EXPECT_EQ(std::get<Chirp>(seq.segments[0]).f_start_ghz, pulses.aesr2.f_start_ghz);
  EXPECT_EQ(std::get<Chirp>(seq.segments[1]).f_start_ghz, pulses.anmr1.f_start_ghz);
  EXPECT_EQ(std::get<ReadMarker>(seq.segments[2]).kind, ReadKind::Electron);
}

TEST(Sequences, MissingParameterNamed) {
  const SpinSystem sys(DonorParameters{});
  try {
    build_standard_sequence(SequenceKind::Ramsey, sys);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("tau_us"), std::string::npos);
  }
}

TEST(Pulses, SegmentValidation) {
  EXPECT_THROW(validate_segment(Delay{0}), InvalidArgument);
  EXPECT_THROW(validate_segment(Chirp{1, 1, 1, 1}), InvalidArgument);
  EXPECT_THROW(PulseSequence{}.validate(), InvalidArgument);
  EXPECT_EQ(channel_from_name(channel_name(Channel::NmrMagnetic)), Channel::NmrMagnetic);
}

