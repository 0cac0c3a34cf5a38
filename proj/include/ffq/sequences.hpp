#pragma once

#include <optional>
#include <string>

#include "ffq/propagator.hpp"

namespace ffq {

// Adiabatic inversion pulses on the four magnetic transitions.
// ESR1: (down,Down)<->(up,Down), ESR2: (down,Up)<->(up,Up),
// NMR1: (down,Up)<->(down,Down), NMR2: (up,Down)<->(up,Up).
struct AdiabaticPulses {
  Chirp aesr1, aesr2, anmr1, anmr2;
};

struct AdiabaticDefaults {
  double esr_amplitude_mt = 0.05;
  double esr_span_mhz = 20.0;
  double esr_duration_us = 200.0;
  double nmr_amplitude_mt = 1.0;
  double nmr_span_mhz = 1.0;
  double nmr_duration_us = 2000.0;
};

AdiabaticPulses default_adiabatic_pulses(const SpinSystem& sys, const AdiabaticDefaults& d = {});

// Flip-flop transition frequency in the eigenbasis (GHz).
double flipflop_frequency_ghz(const SpinSystem& sys);
// Rabi frequency (MHz) of a resonant tone on channel between two levels.
double tone_rabi_mhz(const SpinSystem& sys, Channel channel, double amplitude, Level upper,
                     Level lower);
// Resonant EDSR rotation by angle (rad) about an equatorial axis at phase.
Tone flipflop_rotation(const SpinSystem& sys, double angle_rad, double phase_rad,
                       double amplitude_v, double detuning_mhz = 0);

enum class SequenceKind { EndorInit, NuclearRead, EdsrRabi, Ramsey, HahnEcho, T1ffPump, SpectrumScan };

const char* sequence_kind_name(SequenceKind k);
SequenceKind sequence_kind_from_name(const std::string& name);

struct SequenceOptions {
  std::optional<AdiabaticPulses> pulses;  // defaults when unset
  std::optional<Chirp> half_aesr1;        // required for t1ff-pump
  std::optional<Chirp> pump_aesr1;        // pump inversion; aesr1 when unset
  double edsr_amplitude_v = 0.4;
  double detuning_mhz = 0;
  std::optional<double> tau_us;           // ramsey, hahn-echo
  std::optional<double> duration_us;      // edsr-rabi, spectrum-scan
  std::optional<double> wait_s;           // t1ff-pump
  std::optional<double> pump_period_s;    // t1ff-pump
  std::optional<double> frequency_ghz;    // spectrum-scan
  std::optional<double> amplitude;        // spectrum-scan
  Channel channel = Channel::EdsrElectric;
};

PulseSequence build_standard_sequence(SequenceKind kind, const SpinSystem& sys,
                                      const SequenceOptions& options = {});

}  // namespace ffq
