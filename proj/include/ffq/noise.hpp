#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ffq/rng.hpp"
#include "ffq/types.hpp"

namespace ffq {

class QuantumState;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct RelaxationRates {
  double t1e_s = 6.45;
  double t1ff_s = 173.0;
  double t1n_s = kInfinity;
  void validate() const;
};

struct TelegraphComponent {
  double amplitude_khz = 0;
  double switching_rate_hz = 1;
};

// Detuning noise on the electron Zeeman term. It shifts ESR lines and the
// flip-flop line by the same amount to first order.
struct DephasingModel {
  double quasi_static_sigma_khz = 0;
  std::vector<TelegraphComponent> telegraph;
  void validate() const;
};

struct Si29Bath {
  std::vector<double> couplings_khz;
  double flip_rate_hz = 0;
  std::vector<int> current_config;  // +1 / -1 per nucleus
  void validate() const;
};

struct PirsEdsrRow {
  double amplitude_v = 0;
  double delta_f_a_khz = 0;
  double tau_sat_us = 1;
  double delta_f_0_khz = 0;
};

struct PirsModel {
  double esr_slope_khz_per_v = 50.5;
  double esr_slope_hz_per_us = 219.0;
  std::vector<PirsEdsrRow> edsr_rows{{1.84, 94.8, 284.0, 2.1}, {0.97, 20.4, 93.0, -4.7}};
  bool interpolate = false;
  double match_tolerance_v = 1e-6;
  void validate() const;
};

struct NoiseEnvironment {
  RelaxationRates rates{kInfinity, kInfinity, kInfinity};
  DephasingModel dephasing;
  Si29Bath si29;
  PirsModel pirs;
  bool pirs_enabled = false;
  // Amplitude of the drive at the gate per volt at the source, used to map
  // gate-referred EDSR amplitudes back to the source amplitudes of the PIRS table.
  double pirs_attenuation = 1.0;
  double nuclear_sigma_khz = 0;
  // Depolarizing error r per EDSR gate (average gate infidelity), applied in
  // the flip-flop subspace after every EDSR tone.
  double gate_depolarizing = 0;
  // Coherent scale applied to every EDSR drive amplitude (1 = ideal).
  double edsr_rotation_scale = 1.0;
  double shot_interval_s = 0.1;
  void validate() const;
};

// Running PIRS bookkeeping for one shot.
struct PirsState {
  double edsr_on_time_us = 0;
  double last_edsr_amplitude_v = 0;
};

// Frozen per-shot noise values. Offsets are in MHz on the electron Zeeman
// (Sz) and nuclear Zeeman (-Iz) generators.
struct NoiseRealization {
  double electron_offset_mhz = 0;
  double nuclear_offset_mhz = 0;
  double si29_offset_khz = 0;
  std::vector<int> si29_config;
  RelaxationRates rates{kInfinity, kInfinity, kInfinity};
  std::uint64_t jump_seed = 0;
  double gate_depolarizing = 0;
  double edsr_rotation_scale = 1.0;
  std::optional<PirsModel> pirs;
  double pirs_attenuation = 1.0;

  static NoiseRealization noiseless() { return NoiseRealization{}; }
  bool has_relaxation() const;
};

double si29_offset(const std::vector<int>& config, const std::vector<double>& couplings_khz);

// All distinct offsets over the 2^n configurations, sorted.
std::vector<double> si29_offsets_enumerated(const std::vector<double>& couplings_khz,
                                            double merge_tolerance_khz = 1e-9);

double pirs_edsr_shift(double amplitude_v, double duration_us, const PirsModel& model);
double pirs_esr_shift(double amplitude_v, double duration_us, const PirsModel& model);

double combined_t1(const RelaxationRates& rates);

// Relaxation channels in the eigenbasis: (up,Down)->(down,Down) at 1/T1e,
// (up,Down)->(down,Up) at 1/T1ff, (down,Down)->(down,Up) at 1/T1n and
// (up,Up)->(down,Up) at 1/T1e. Pure states take a stochastic jump trajectory,
// density matrices the exact ensemble channel.
QuantumState apply_relaxation(const QuantumState& state, double dt_s, const RelaxationRates& rates,
                              Rng& rng);

// Population transfer matrix of the channel above: p(t) = M p(0).
Eigen::Matrix4d relaxation_transfer(double dt_s, const RelaxationRates& rates);

// Stateful sampler: keeps the 29Si configuration and telegraph states and
// advances them by env.shot_interval_s (or a given time) between samples.
class NoiseSampler {
 public:
  NoiseSampler(const NoiseEnvironment& env, Rng& rng);

  NoiseRealization sample(Rng& rng);
  NoiseRealization sample_after(double elapsed_s, Rng& rng);
  void advance(double elapsed_s, Rng& rng);

  const std::vector<int>& si29_config() const { return si29_config_; }
  const NoiseEnvironment& environment() const { return env_; }

 private:
  NoiseEnvironment env_;
  std::vector<int> si29_config_;
  std::vector<int> telegraph_state_;
};

// Stationary one-off draw: the 29Si configuration starts from
// env.si29.current_config and evolves over one shot interval.
NoiseRealization sample_realization(const NoiseEnvironment& env, Rng& rng);

}  // namespace ffq
