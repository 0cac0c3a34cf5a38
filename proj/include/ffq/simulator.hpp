#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "ffq/measurement.hpp"
#include "ffq/noise.hpp"
#include "ffq/sequences.hpp"

namespace ffq {

struct SimulatorConfig {
  DonorParameters params;
  PhysicalConstants constants;
  NoiseEnvironment env;
  EvolutionConfig evolution;
  ReadoutParams readout;
  NuclearReadSettings nuclear;
  AdiabaticDefaults adiabatic;
  void validate() const;
};

struct ShotLog {
  std::vector<ShotRecord> electron;
  std::vector<NuclearReadResult> nuclear;
};

struct SequenceResult {
  QuantumState state;
  ShotLog log;
  NoiseRealization realization;
};

// Binds one donor, environment and readout chain. The 29Si bath and
// telegraph states persist across run_sequence calls. Adiabatic chirps are
// compiled once on the noiseless Hamiltonian (rotating frame, RWA) and
// reused; everything else sees the frozen per-call noise realization.
// Not thread-safe: give each worker its own instance.
class Simulator {
 public:
  Simulator(const SimulatorConfig& config, std::uint64_t seed);

  const SimulatorConfig& config() const { return config_; }
  const SpinSystem& system() const { return sys_; }
  const AdiabaticPulses& pulses() const { return pulses_; }
  void set_pulses(const AdiabaticPulses& p) { pulses_ = p; }
  NoiseSampler& sampler() { return sampler_; }

  const CompiledPulse& compiled(const Chirp& chirp);
  const CompiledPulse& cx_pulse();

  // Samples a fresh realization from the bath track (advancing it one shot).
  SequenceResult run_sequence(const QuantumState& state, const PulseSequence& sequence, Rng& rng);
  SequenceResult run_sequence(const QuantumState& state, const PulseSequence& sequence,
                              const NoiseRealization& realization, Rng& rng);

  std::pair<NuclearReadResult, QuantumState> nuclear_read(const QuantumState& state, Rng& rng,
                                                          std::vector<ShotRecord>* log = nullptr);
  QuantumState endor_initialize(const QuantumState& state, Rng& rng);

 private:
  SimulatorConfig config_;
  SpinSystem sys_;
  AdiabaticPulses pulses_;
  NoiseSampler sampler_;
  std::map<std::tuple<int, double, double, double, double, double>, CompiledPulse> chirp_cache_;
};

// One-call form: stationary realization drawn from env.
std::pair<QuantumState, ShotLog> run_sequence(const QuantumState& state,
                                              const PulseSequence& sequence,
                                              const NoiseEnvironment& env,
                                              const EvolutionConfig& config, Rng& rng,
                                              const DonorParameters& params = {},
                                              const ReadoutParams& readout = {});

}  // namespace ffq
