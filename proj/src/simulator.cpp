#include "ffq/simulator.hpp"

namespace ffq {

namespace {
Rng bath_rng(std::uint64_t seed) { return Rng(derive_seed(seed, "bath-init")); }
}  // namespace

void SimulatorConfig::validate() const {
  params.validate();
  constants.validate();
  env.validate();
  evolution.validate();
  readout.validate();
  nuclear.validate();
}

Simulator::Simulator(const SimulatorConfig& config, std::uint64_t seed)
    : config_(config),
      sys_(config.params, config.constants),
      pulses_(default_adiabatic_pulses(sys_, config.adiabatic)),
      sampler_([&] {
        config.validate();
        Rng r = bath_rng(seed);
        return NoiseSampler(config.env, r);
      }()) {}

const CompiledPulse& Simulator::compiled(const Chirp& c) {
  const auto key = std::make_tuple(static_cast<int>(c.channel), c.f_start_ghz, c.f_end_ghz,
                                   c.amplitude, c.duration_us, c.phase_rad);
  auto it = chirp_cache_.find(key);
  if (it != chirp_cache_.end()) return it->second;
  EvolutionConfig ec = config_.evolution;
  ec.frame = Frame::Rotating;
  ec.rwa = true;
  return chirp_cache_.emplace(key, compile_chirp(sys_, c, StaticShift{}, ec, 0.0)).first->second;
}

const CompiledPulse& Simulator::cx_pulse() {
  return compiled(config_.nuclear.transition == ReadTransition::Esr2 ? pulses_.aesr2 : pulses_.aesr1);
}

std::pair<NuclearReadResult, QuantumState> Simulator::nuclear_read(const QuantumState& state,
                                                                   Rng& rng,
                                                                   std::vector<ShotRecord>* log) {
  QuantumState s = sys_.to_frame(state, Frame::Rotating);
  auto out = ffq::nuclear_read(s, config_.nuclear.n_shots, config_.nuclear.threshold,
                               config_.nuclear.transition, cx_pulse(), config_.readout, rng, log);
  out.second = sys_.to_frame(out.second, state.frame);
  return out;
}

QuantumState Simulator::endor_initialize(const QuantumState& state, Rng& rng) {
  QuantumState s = sys_.to_frame(state, Frame::Rotating);
  const CompiledPulse& a = compiled(pulses_.aesr2);
  const CompiledPulse& b = compiled(pulses_.anmr1);
  s = ffq::endor_initialize(s, a, b, config_.readout, rng);
  return sys_.to_frame(s, state.frame);
}

SequenceResult Simulator::run_sequence(const QuantumState& state, const PulseSequence& sequence,
                                       Rng& rng) {
  const NoiseRealization r = sampler_.sample(rng);
  return run_sequence(state, sequence, r, rng);
}

SequenceResult Simulator::run_sequence(const QuantumState& state, const PulseSequence& sequence,
                                       const NoiseRealization& realization, Rng& rng) {
  sequence.validate();
  const EvolutionConfig& ec = config_.evolution;
  const bool cache_chirps = ec.frame == Frame::Rotating && ec.rwa;
  SequenceResult res;
  res.realization = realization;
  PirsState pirs;
  QuantumState s = sys_.to_frame(state, ec.frame);
  long shot_index = 0;
  for (const auto& seg : sequence.segments) {
    if (const auto* m = std::get_if<ReadMarker>(&seg)) {
      QuantumState r = sys_.to_frame(s, Frame::Rotating);
      if (m->kind == ReadKind::Electron) {
        auto [rec, next] = electron_single_shot(r, config_.readout, rng, shot_index++);
        res.log.electron.push_back(rec);
        r = std::move(next);
      } else {
        std::vector<ShotRecord> shots;
        auto [nr, next] = ffq::nuclear_read(r, config_.nuclear.n_shots, config_.nuclear.threshold,
                                            config_.nuclear.transition, cx_pulse(), config_.readout,
                                            rng, &shots);
        for (auto& sh : shots) {
          sh.shot_index = shot_index++;
          res.log.electron.push_back(sh);
        }
        res.log.nuclear.push_back(nr);
        r = std::move(next);
      }
      s = sys_.to_frame(r, ec.frame);
      continue;
    }
    if (const auto* c = std::get_if<Chirp>(&seg); c && cache_chirps) {
      s.apply(compiled(*c).at(s.clock_us));
      s.clock_us += c->duration_us;
      continue;
    }
    s = propagate(sys_, s, seg, realization, ec, &pirs);
  }
  res.state = s;
  return res;
}

std::pair<QuantumState, ShotLog> run_sequence(const QuantumState& state,
                                              const PulseSequence& sequence,
                                              const NoiseEnvironment& env,
                                              const EvolutionConfig& config, Rng& rng,
                                              const DonorParameters& params,
                                              const ReadoutParams& readout) {
  SimulatorConfig sc;
  sc.params = params;
  sc.env = env;
  sc.evolution = config;
  sc.readout = readout;
  Simulator sim(sc, rng.next());
  const NoiseRealization r = sample_realization(env, rng);
  auto out = sim.run_sequence(state, sequence, r, rng);
  return {out.state, out.log};
}

}  // namespace ffq
