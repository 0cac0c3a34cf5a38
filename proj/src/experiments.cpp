#include "ffq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ffq {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

// Shot-level work is split into a fixed number of independently seeded
// blocks so the result does not depend on the thread count.
constexpr int kWorkBlocks = 16;

void finish(ScanPoint& p, int hits, double expected_sum, int shots) {
  p.shots = shots;
  p.p_measured = static_cast<double>(hits) / shots;
  p.p_expected = expected_sum / shots;
  p.sem = std::sqrt(std::max(p.p_measured * (1 - p.p_measured), 0.25 / shots) / shots);
}

double nuclear_down(const QuantumState& s) { return s.population(Level::UpDown) + s.population(Level::DownDown); }

void require_positive_shots(int shots) {
  if (shots < 1) throw InvalidArgument("shots must be >= 1");
}

EvolutionConfig rwa_rotating(const SimulatorConfig& c) {
  EvolutionConfig ec = c.evolution;
  ec.frame = Frame::Rotating;
  ec.rwa = true;
  return ec;
}

// Electron coherence is lost over second-scale waits: a uniformly random
// phase on the electron-up levels unravels complete dephasing.
void randomize_electron_phase(QuantumState& s, Rng& rng) {
  const Complex ph = std::polar(1.0, kTwoPi * rng.uniform());
  Vector4c psi = s.vector();
  psi(idx(Level::UpUp)) *= ph;
  psi(idx(Level::UpDown)) *= ph;
  s.set_vector(psi);
}

}  // namespace

double chevron_probability(double rabi_mhz, double detuning_mhz, double t_us) {
  const double w2 = rabi_mhz * rabi_mhz + detuning_mhz * detuning_mhz;
  if (w2 == 0) return 0;
  const double s = std::sin(kPi * std::sqrt(w2) * t_us);
  return rabi_mhz * rabi_mhz / w2 * s * s;
}

ChevronGrid simulate_chevron(const SimulatorConfig& config, const std::vector<double>& detunings_mhz,
                             const std::vector<double>& durations_us, double amplitude_v, int jobs) {
  config.validate();
  if (detunings_mhz.empty() || durations_us.empty()) throw InvalidArgument("chevron sweep axes must be non-empty");
  const SpinSystem sys(config.params, config.constants);
  ChevronGrid g;
  g.detunings_mhz = detunings_mhz;
  g.durations_us = durations_us;
  g.rabi_mhz = tone_rabi_mhz(sys, Channel::EdsrElectric, amplitude_v, Level::UpDown, Level::DownUp);
  const std::size_t nd = durations_us.size();
  g.simulated.assign(detunings_mhz.size() * nd, 0.0);
  g.analytic.assign(g.simulated.size(), 0.0);
  parallel_for(detunings_mhz.size(), jobs, [&](std::size_t i) {
    for (std::size_t j = 0; j < nd; ++j) {
      const double t = durations_us[j];
      double p = 0;
      if (t > 0) {
        Tone tone = flipflop_rotation(sys, kPi, 0.0, amplitude_v, detunings_mhz[i]);
        tone.duration_us = t;
        const auto out = propagate(sys, QuantumState::basis(Level::DownUp), tone,
                                   NoiseRealization::noiseless(), config.evolution);
        p = out.population(Level::UpDown);
      }
      g.simulated[i * nd + j] = p;
      g.analytic[i * nd + j] = chevron_probability(g.rabi_mhz, detunings_mhz[i], t);
    }
  });
  for (std::size_t k = 0; k < g.simulated.size(); ++k) {
    g.max_abs_error = std::max(g.max_abs_error, std::abs(g.simulated[k] - g.analytic[k]));
  }
  return g;
}

std::vector<ScanPoint> run_flipflop_scan(const SimulatorConfig& config, const FlipFlopScanOptions& o,
                                         const std::vector<double>& x, int shots, std::uint64_t seed,
                                         int jobs) {
  require_positive_shots(shots);
  config.validate();
  std::vector<ScanPoint> out(x.size());
  parallel_for(x.size(), jobs, [&](std::size_t i) {
    Simulator sim(config, derive_seed(seed, "scan-bath", i));
    Rng rng(derive_seed(seed, "scan-shots", i));
    const SpinSystem& sys = sim.system();
    SequenceOptions so;
    so.edsr_amplitude_v = o.amplitude_v;
    so.detuning_mhz = o.detuning_mhz;
    SequenceKind kind = SequenceKind::EdsrRabi;
    switch (o.kind) {
      case FlipFlopScan::Spectrum: {
        so.detuning_mhz = x[i];
        const double rabi = tone_rabi_mhz(sys, Channel::EdsrElectric, o.amplitude_v, Level::UpDown, Level::DownUp);
        so.duration_us = o.duration_us > 0 ? o.duration_us : 1.0 / (2.0 * rabi);
        break;
      }
      case FlipFlopScan::Rabi: so.duration_us = x[i]; break;
      case FlipFlopScan::Ramsey: kind = SequenceKind::Ramsey; so.tau_us = x[i]; break;
      case FlipFlopScan::Hahn: kind = SequenceKind::HahnEcho; so.tau_us = x[i]; break;
    }
    PulseSequence seq;
    if (!(kind == SequenceKind::EdsrRabi && *so.duration_us <= 0)) {
      seq = build_standard_sequence(kind, sys, so);
      seq.segments.pop_back();  // read separately to keep the pre-read populations
    }
    int hits = 0;
    double expected = 0;
    for (int s = 0; s < shots; ++s) {
      QuantumState state = QuantumState::basis(Level::DownUp);
      if (!seq.segments.empty()) state = sim.run_sequence(state, seq, rng).state;
      expected += nuclear_down(state);
      const auto [read, after] = sim.nuclear_read(state, rng);
      hits += read.state == NuclearSpin::Down;
    }
    finish(out[i], hits, expected, shots);
  });
  return out;
}

std::vector<ScanPoint> run_t1_decay(const SimulatorConfig& config, const std::vector<double>& waits_s, int shots,
                                    std::uint64_t seed, int jobs) {
  require_positive_shots(shots);
  config.validate();
  std::vector<ScanPoint> out(waits_s.size());
  parallel_for(waits_s.size(), jobs, [&](std::size_t i) {
    if (waits_s[i] < 0) throw InvalidArgument("wait times must be >= 0");
    Simulator sim(config, derive_seed(seed, "t1-bath", i));
    Rng rng(derive_seed(seed, "t1-shots", i));
    PulseSequence seq;
    if (waits_s[i] > 0) seq.add(Delay{waits_s[i] * 1e6});
    int hits = 0;
    double expected = 0;
    for (int s = 0; s < shots; ++s) {
      QuantumState state = QuantumState::basis(Level::UpDown);
      if (!seq.segments.empty()) state = sim.run_sequence(state, seq, rng).state;
      expected += state.population(Level::UpUp) + state.population(Level::UpDown);
      const auto [rec, after] = electron_single_shot(state, config.readout, rng, s);
      hits += rec.electron_up_inferred;
    }
    finish(out[i], hits, expected, shots);
  });
  return out;
}

PumpingPulses calibrate_pumping_pulses(const SimulatorConfig& config, const PumpingSchedule& schedule) {
  config.validate();
  if (!(schedule.inversion_fidelity > 0 && schedule.inversion_fidelity < 1) ||
      !(schedule.half_fidelity > 0 && schedule.half_fidelity < 1)) {
    throw InvalidArgument("pump fidelities must lie in (0, 1)");
  }
  const SpinSystem sys(config.params, config.constants);
  const EvolutionConfig ec = rwa_rotating(config);
  const Chirp base = default_adiabatic_pulses(sys, config.adiabatic).aesr1;
  PumpingPulses p;
  p.pump = calibrate_adiabatic(base, schedule.inversion_fidelity, sys, ec);
  p.half = calibrate_adiabatic(base, schedule.half_fidelity, sys, ec);
  p.pump_probability = adiabatic_inversion_probability(sys, p.pump, {}, ec);
  p.half_probability = adiabatic_inversion_probability(sys, p.half, {}, ec);
  return p;
}

PumpingTrace pumping_trace(const SimulatorConfig& config, const PumpingSchedule& schedule,
                           const PumpingPulses& pulses) {
  if (!(schedule.period_s > 0) || !(schedule.trace_duration_s > 0) || schedule.samples_per_period < 2) {
    throw InvalidArgument("pump period, trace duration and sampling must be positive");
  }
  const SpinSystem sys(config.params, config.constants);
  const EvolutionConfig ec = rwa_rotating(config);
  const RelaxationRates& rates = config.env.rates;
  const Matrix4c u_half = compile_chirp(sys, pulses.half, {}, ec).u0;
  const Matrix4c u_pump = compile_chirp(sys, pulses.pump, {}, ec).u0;
  auto pulse = [](const Vector4d& p, const Matrix4c& u) {
    Vector4d q = Vector4d::Zero();
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) q(r) += std::norm(u(r, c)) * p(c);
    }
    return q;
  };
  auto fraction = [](const Vector4d& p) {
    const double m = p(idx(Level::UpDown)) + p(idx(Level::DownDown));
    return m > 0 ? p(idx(Level::UpDown)) / m : 0.0;
  };
  Vector4d start = Vector4d::Zero();
  start(idx(Level::DownDown)) = 1;
  start = pulse(start, u_half);

  PumpingTrace tr;
  const double dt = schedule.period_s / schedule.samples_per_period;
  const Eigen::Matrix4d step = relaxation_transfer(dt, rates);
  const Eigen::Matrix4d half_step = relaxation_transfer(dt / 2, rates);
  Vector4d p = start;
  double acc = 0;
  long count = 0;
  tr.min = tr.max = fraction(p);
  const int periods = static_cast<int>(std::ceil(schedule.trace_duration_s / schedule.period_s - 1e-12));
  for (int k = 0; k < periods; ++k) {
    for (int j = 0; j < schedule.samples_per_period; ++j) {
      const double t = (k * schedule.samples_per_period + j) * dt;
      if (t > schedule.trace_duration_s + 1e-12) break;
      tr.times_s.push_back(t);
      tr.up_down_fraction.push_back(fraction(p));
      acc += fraction(half_step * p);
      ++count;
      p = step * p;
    }
    tr.min = std::min(tr.min, fraction(p));
    if ((k + 1) * schedule.period_s <= schedule.trace_duration_s + 1e-12) {
      tr.times_s.push_back((k + 1) * schedule.period_s);
      tr.up_down_fraction.push_back(fraction(p));
      p = pulse(p, u_pump);
    }
  }
  for (double x : tr.up_down_fraction) {
    tr.min = std::min(tr.min, x);
    tr.max = std::max(tr.max, x);
  }
  tr.mean = acc / count;

  // Periodic steady state of the within-manifold fraction.
  Vector4d q = start;
  const Eigen::Matrix4d period = relaxation_transfer(schedule.period_s, rates);
  double prev = -1;
  for (int k = 0; k < 10000; ++k) {
    q = pulse(period * q, u_pump);
    const double m = q(idx(Level::UpDown)) + q(idx(Level::DownDown));
    q(idx(Level::UpDown)) /= m;
    q(idx(Level::DownDown)) /= m;
    q(idx(Level::UpUp)) = q(idx(Level::DownUp)) = 0;
    if (std::abs(q(idx(Level::UpDown)) - prev) < 1e-14) break;
    prev = q(idx(Level::UpDown));
  }
  double sum = 0;
  for (int j = 0; j < schedule.samples_per_period; ++j) {
    sum += fraction(relaxation_transfer((j + 0.5) * dt, rates) * q);
  }
  tr.steady_mean = sum / schedule.samples_per_period;
  return tr;
}

PumpDecay run_t1ff_pump(const SimulatorConfig& config, const PumpingSchedule& schedule,
                        const std::vector<double>& waits_s, int trajectories, std::uint64_t seed, int jobs) {
  require_positive_shots(trajectories);
  if (waits_s.size() < 3) throw InvalidArgument("t1ff-pump needs at least 3 wait times");
  PumpDecay d;
  d.waits_s = waits_s;
  d.pulses = calibrate_pumping_pulses(config, schedule);
  d.trace = pumping_trace(config, schedule, d.pulses);
  d.x_mean = d.trace.steady_mean;
  const SpinSystem sys(config.params, config.constants);
  const EvolutionConfig ec = rwa_rotating(config);
  const Matrix4c u_half = compile_chirp(sys, d.pulses.half, {}, ec).u0;
  const Matrix4c u_pump = compile_chirp(sys, d.pulses.pump, {}, ec).u0;
  const RelaxationRates rates = config.env.rates;
  d.points.resize(waits_s.size());
  parallel_for(waits_s.size(), jobs, [&](std::size_t i) {
    const double wait = waits_s[i];
    if (wait < 0) throw InvalidArgument("wait times must be >= 0");
    Simulator sim(config, derive_seed(seed, "pump-bath", i));
    Rng rng(derive_seed(seed, "pump-trajectories", i));
    const int pumps = static_cast<int>(std::floor(wait / schedule.period_s + 1e-9));
    const double rest = wait - pumps * schedule.period_s;
    int hits = 0;
    double expected = 0;
    for (int t = 0; t < trajectories; ++t) {
      QuantumState s = QuantumState::basis(Level::DownDown);
      s.apply(u_half);
      for (int k = 0; k < pumps; ++k) {
        s = apply_relaxation(s, schedule.period_s, rates, rng);
        randomize_electron_phase(s, rng);
        s.apply(u_pump);
      }
      if (rest > 1e-12) s = apply_relaxation(s, rest, rates, rng);
      expected += nuclear_down(s);
      const auto [read, after] = sim.nuclear_read(s, rng);
      hits += read.state == NuclearSpin::Down;
    }
    finish(d.points[i], hits, expected, trajectories);
  });
  Dataset data;
  data.x = waits_s;
  std::vector<double> err;
  for (const auto& p : d.points) {
    data.y.push_back(p.p_measured);
    err.push_back(p.sem);
  }
  data.y_err = err;
  d.fit = fit_exponential(data);
  d.tau_s = d.fit.value("tau");
  d.tau_sigma_s = d.fit.sigma("tau");
  d.t1ff_s = d.tau_s * d.x_mean;
  d.t1ff_sigma_s = d.tau_sigma_s * d.x_mean;
  return d;
}

EndorFidelity run_endor_fidelity(const SimulatorConfig& config, double pulse_fidelity, int repetitions,
                                 std::uint64_t seed, int jobs) {
  require_positive_shots(repetitions);
  config.validate();
  const SpinSystem sys(config.params, config.constants);
  const EvolutionConfig ec = rwa_rotating(config);
  AdiabaticPulses pulses = default_adiabatic_pulses(sys, config.adiabatic);
  if (pulse_fidelity > 0) {
    if (!(pulse_fidelity < 1)) throw InvalidArgument("pulse fidelity must lie in (0, 1)");
    pulses.aesr2 = calibrate_adiabatic(pulses.aesr2, pulse_fidelity, sys, ec);
    pulses.anmr1 = calibrate_adiabatic(pulses.anmr1, pulse_fidelity, sys, ec);
  }
  EndorFidelity f;
  f.repetitions = repetitions;
  f.aesr2_probability = adiabatic_inversion_probability(sys, pulses.aesr2, {}, ec);
  f.anmr1_probability = adiabatic_inversion_probability(sys, pulses.anmr1, {}, ec);

  const int blocks = kWorkBlocks;
  std::vector<int> hits(blocks, 0);
  std::vector<double> expected(blocks, 0.0);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    Simulator sim(config, derive_seed(seed, "endor-bath", b));
    Rng rng(derive_seed(seed, "endor-shots", b));
    const CompiledPulse a = sim.compiled(pulses.aesr2);
    const CompiledPulse n = sim.compiled(pulses.anmr1);
    for (int r = static_cast<int>(b); r < repetitions; r += blocks) {
      const bool electron_up = rng.bernoulli(config.readout.reload_error);
      const bool nucleus_up = rng.bernoulli(0.5);
      const Level start = electron_up ? (nucleus_up ? Level::UpUp : Level::UpDown)
                                      : (nucleus_up ? Level::DownUp : Level::DownDown);
      const QuantumState s = endor_initialize(QuantumState::basis(start), a, n, config.readout, rng);
      expected[b] += s.population(Level::UpUp) + s.population(Level::DownUp);
      const auto [read, after] = sim.nuclear_read(s, rng);
      hits[b] += read.state == NuclearSpin::Up;
    }
  });
  ScanPoint p;
  double e = 0;
  int h = 0;
  for (int b = 0; b < blocks; ++b) {
    h += hits[b];
    e += expected[b];
  }
  finish(p, h, e, repetitions);
  f.fidelity = p.p_measured;
  f.sem = p.sem;
  f.expected = p.p_expected;
  return f;
}

QndReadout run_qnd_readout(const SimulatorConfig& config, long reads, std::uint64_t seed, int jobs) {
  if (reads < 2) throw InvalidArgument("QND readout needs at least 2 reads");
  config.validate();
  const SpinSystem sys(config.params, config.constants);
  const EvolutionConfig ec = rwa_rotating(config);
  const AdiabaticPulses pulses = default_adiabatic_pulses(sys, config.adiabatic);
  const bool esr2 = config.nuclear.transition == ReadTransition::Esr2;
  const double q = adiabatic_inversion_probability(sys, esr2 ? pulses.aesr2 : pulses.aesr1, {}, ec);
  const double b_up = config.readout.blip_probability_up();
  const double b_down = config.readout.blip_probability_down();
  const int n = config.nuclear.n_shots;
  const double thr = config.nuclear.threshold;
  QndReadout out;
  out.reads = reads;
  out.oracle = 0.5 * (binomial_misclassification(q * b_up + (1 - q) * b_down, n, thr, true) +
                      binomial_misclassification(b_down, n, thr, false));

  const int blocks = kWorkBlocks;
  std::vector<long> wrong(blocks, 0);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    Simulator sim(config, derive_seed(seed, "qnd-bath", b));
    Rng rng(derive_seed(seed, "qnd-shots", b));
    for (long r = static_cast<long>(b); r < reads; r += blocks) {
      const bool up = r % 2 == 0;
      const auto [read, after] = sim.nuclear_read(QuantumState::basis(up ? Level::DownUp : Level::DownDown), rng);
      wrong[b] += (read.state == NuclearSpin::Up) != up;
    }
  });
  for (long w : wrong) out.misclassified += w;
  out.rate = static_cast<double>(out.misclassified) / reads;
  return out;
}

Si29Monitor run_si29_monitor(const SimulatorConfig& config, const Si29MonitorOptions& o, std::uint64_t seed,
                             int jobs) {
  config.validate();
  if (o.spectra < 1 || !(o.step_khz > 0) || !(o.span_khz > 2 * o.step_khz) || !(o.amplitude_v > 0) ||
      o.interval_s < 0) {
    throw InvalidArgument("si29 monitor needs spectra >= 1, step > 0, span > 2 steps and amplitude > 0");
  }
  Simulator sim(config, derive_seed(seed, "si29-bath"));
  Rng rng(derive_seed(seed, "si29-shots"));
  std::vector<NoiseRealization> realizations;
  for (int k = 0; k < o.spectra; ++k) realizations.push_back(sim.sampler().sample_after(o.interval_s, rng));

  const SpinSystem& sys = sim.system();
  const double rabi = tone_rabi_mhz(sys, Channel::EdsrElectric, o.amplitude_v, Level::UpDown, Level::DownUp);
  std::vector<double> offsets_khz;
  for (double f = -o.span_khz / 2; f <= o.span_khz / 2 + 1e-9; f += o.step_khz) offsets_khz.push_back(f);

  Si29Monitor m;
  m.true_offsets_khz.resize(o.spectra);
  m.fitted_offsets_khz.resize(o.spectra);
  parallel_for(realizations.size(), jobs, [&](std::size_t k) {
    Dataset spectrum;
    for (double f : offsets_khz) {
      Tone tone = flipflop_rotation(sys, kPi, 0.0, o.amplitude_v, f * 1e-3);
      tone.duration_us = 1.0 / (2.0 * rabi);
      const auto out = propagate(sys, QuantumState::basis(Level::DownUp), tone, realizations[k], config.evolution);
      spectrum.x.push_back(f);
      spectrum.y.push_back(out.population(Level::UpDown));
    }
    const FitResult fit = fit_gaussian_mixture(spectrum, 1);
    m.true_offsets_khz[k] = realizations[k].si29_offset_khz;
    m.fitted_offsets_khz[k] = fit.value("mu1");
  });
  m.clusters = cluster_frequencies(m.fitted_offsets_khz, o.cluster_separation_khz);
  return m;
}

}  // namespace ffq
