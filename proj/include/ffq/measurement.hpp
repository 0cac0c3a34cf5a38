#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ffq/propagator.hpp"
#include "ffq/rng.hpp"

namespace ffq {

struct ReadoutParams {
  double tunnel_out_rate_per_ms = 10.0;  // up electron -> island
  double tunnel_in_rate_per_ms = 5.0;    // down electron reload
  double detection_window_ms = 0.3;
  double blip_miss_probability = 0.0;
  double dark_blip_probability = 0.05;
  double reload_error = 0.0;  // probability the electron is left up after a shot

  void validate() const;
  double blip_probability_up() const;
  double blip_probability_down() const { return dark_blip_probability; }
  // Mean of the two assignment fidelities.
  double electron_fidelity() const;

  static ReadoutParams ideal();
  // Symmetric assignment fidelity f for both spin states.
  static ReadoutParams symmetric(double fidelity);
};

struct ShotRecord {
  bool blip = false;
  long shot_index = 0;
  bool electron_up_inferred = false;
};

struct NuclearReadResult {
  NuclearSpin state = NuclearSpin::Up;
  double up_proportion = 0;
  int n_shots = 0;
};

// The CX of the nuclear readout inverts the electron conditional on the
// nuclear state: Esr2 flips for nucleus Up, Esr1 for nucleus Down.
enum class ReadTransition { Esr1, Esr2 };

struct NuclearReadSettings {
  int n_shots = 20;
  double threshold = 0.45;
  ReadTransition transition = ReadTransition::Esr2;
  void validate() const;
};

// Projective electron readout in the eigenbasis followed by reload to down.
std::pair<ShotRecord, QuantumState> electron_single_shot(const QuantumState& state,
                                                         const ReadoutParams& params, Rng& rng,
                                                         long shot_index = 0);

// n_shots x (CX, electron shot); the decision compares the blip fraction to
// threshold. A high fraction means the nucleus is in the state the CX
// transition is conditioned on.
std::pair<NuclearReadResult, QuantumState> nuclear_read(const QuantumState& state, int n_shots,
                                                        double threshold, ReadTransition transition,
                                                        const CompiledPulse& cx,
                                                        const ReadoutParams& params, Rng& rng,
                                                        std::vector<ShotRecord>* log = nullptr);

// P_flip = number of changes / (N - 1).
double flip_probability(const std::vector<NuclearSpin>& series);

// ENDOR initialization: aESR2, aNMR1, electron shot.
QuantumState endor_initialize(const QuantumState& state, const CompiledPulse& aesr2,
                              const CompiledPulse& anmr1, const ReadoutParams& params, Rng& rng);

// Probability that n shots with per-shot blip probability p give a blip
// fraction on the wrong side of threshold. correct_is_high: the true state
// should produce a fraction above threshold.
double binomial_misclassification(double p_blip, int n, double threshold, bool correct_is_high);

std::string shot_log_csv(const std::vector<ShotRecord>& shots);

}  // namespace ffq
