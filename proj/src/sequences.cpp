#include "ffq/sequences.hpp"

#include <cmath>

namespace ffq {

namespace {

Chirp centred(double centre_mhz, double span_mhz, double amplitude, double duration, Channel ch) {
  Chirp c;
  c.f_start_ghz = (centre_mhz - 0.5 * span_mhz) * 1e-3;
  c.f_end_ghz = (centre_mhz + 0.5 * span_mhz) * 1e-3;
  c.amplitude = amplitude;
  c.duration_us = duration;
  c.channel = ch;
  return c;
}

double require(const std::optional<double>& v, const char* name) {
  if (!v) throw InvalidArgument(std::string("missing sequence parameter '") + name + "'");
  return *v;
}

}  // namespace

AdiabaticPulses default_adiabatic_pulses(const SpinSystem& sys, const AdiabaticDefaults& d) {
  AdiabaticPulses p;
  p.aesr1 = centred(sys.transition_mhz(Level::UpDown, Level::DownDown), d.esr_span_mhz,
                    d.esr_amplitude_mt, d.esr_duration_us, Channel::EsrMagnetic);
  p.aesr2 = centred(sys.transition_mhz(Level::UpUp, Level::DownUp), d.esr_span_mhz,
                    d.esr_amplitude_mt, d.esr_duration_us, Channel::EsrMagnetic);
  p.anmr1 = centred(sys.transition_mhz(Level::DownDown, Level::DownUp), d.nmr_span_mhz,
                    d.nmr_amplitude_mt, d.nmr_duration_us, Channel::NmrMagnetic);
  p.anmr2 = centred(sys.transition_mhz(Level::UpUp, Level::UpDown), d.nmr_span_mhz,
                    d.nmr_amplitude_mt, d.nmr_duration_us, Channel::NmrMagnetic);
  return p;
}

double flipflop_frequency_ghz(const SpinSystem& sys) {
  return sys.transition_mhz(Level::UpDown, Level::DownUp) * 1e-3;
}

double tone_rabi_mhz(const SpinSystem& sys, Channel channel, double amplitude, Level upper,
                     Level lower) {
  return std::abs(amplitude * sys.drive_dressed(channel)(idx(upper), idx(lower)));
}

Tone flipflop_rotation(const SpinSystem& sys, double angle_rad, double phase_rad,
                       double amplitude_v, double detuning_mhz) {
  const double rabi = tone_rabi_mhz(sys, Channel::EdsrElectric, amplitude_v, Level::UpDown, Level::DownUp);
  if (!(rabi > 0)) throw InvalidArgument("EDSR amplitude must be > 0");
  Tone t;
  t.channel = Channel::EdsrElectric;
  t.frequency_ghz = flipflop_frequency_ghz(sys) + detuning_mhz * 1e-3;
  t.amplitude = amplitude_v;
  t.phase_rad = phase_rad;
  t.duration_us = angle_rad / (kTwoPi * rabi);
  return t;
}

const char* sequence_kind_name(SequenceKind k) {
  switch (k) {
    case SequenceKind::EndorInit: return "endor-init";
    case SequenceKind::NuclearRead: return "nuclear-read";
    case SequenceKind::EdsrRabi: return "edsr-rabi";
    case SequenceKind::Ramsey: return "ramsey";
    case SequenceKind::HahnEcho: return "hahn-echo";
    case SequenceKind::T1ffPump: return "t1ff-pump";
    case SequenceKind::SpectrumScan: return "spectrum-scan";
  }
  return "?";
}

SequenceKind sequence_kind_from_name(const std::string& name) {
  for (auto k : {SequenceKind::EndorInit, SequenceKind::NuclearRead, SequenceKind::EdsrRabi,
                 SequenceKind::Ramsey, SequenceKind::HahnEcho, SequenceKind::T1ffPump,
                 SequenceKind::SpectrumScan}) {
    if (name == sequence_kind_name(k)) return k;
  }
  throw InvalidArgument("unknown sequence kind '" + name + "'");
}

PulseSequence build_standard_sequence(SequenceKind kind, const SpinSystem& sys,
                                      const SequenceOptions& o) {
  const AdiabaticPulses pulses = o.pulses ? *o.pulses : default_adiabatic_pulses(sys);
  PulseSequence seq;
  seq.label = sequence_kind_name(kind);
  const ReadMarker nuclear{ReadKind::Nuclear, "nuclear"};
  switch (kind) {
    case SequenceKind::EndorInit:
      seq.add(pulses.aesr2).add(pulses.anmr1).add(ReadMarker{ReadKind::Electron, "endor"});
      break;
    case SequenceKind::NuclearRead:
      seq.add(nuclear);
      break;
    case SequenceKind::EdsrRabi: {
      const double d = require(o.duration_us, "duration_us");
      Tone t = flipflop_rotation(sys, kPi, 0.0, o.edsr_amplitude_v, o.detuning_mhz);
      t.duration_us = d;
      seq.add(t).add(nuclear);
      break;
    }
    case SequenceKind::Ramsey: {
      const double tau = require(o.tau_us, "tau_us");
      const Tone half = flipflop_rotation(sys, kPi / 2, 0.0, o.edsr_amplitude_v, o.detuning_mhz);
      seq.add(half);
      if (tau > 0) seq.add(Delay{tau});
      seq.add(half).add(nuclear);
      break;
    }
    case SequenceKind::HahnEcho: {
      const double tau = require(o.tau_us, "tau_us");
      const Tone half = flipflop_rotation(sys, kPi / 2, 0.0, o.edsr_amplitude_v, o.detuning_mhz);
      const Tone pi = flipflop_rotation(sys, kPi, 0.0, o.edsr_amplitude_v, o.detuning_mhz);
      // Closing pulse about -X so a refocused echo ends in (up,Down).
      const Tone close = flipflop_rotation(sys, kPi / 2, kPi, o.edsr_amplitude_v, o.detuning_mhz);
      seq.add(half);
      if (tau > 0) seq.add(Delay{tau / 2});
      seq.add(pi);
      if (tau > 0) seq.add(Delay{tau / 2});
      seq.add(close).add(nuclear);
      break;
    }
    case SequenceKind::T1ffPump: {
      const double wait = require(o.wait_s, "wait_s");
      const double period = require(o.pump_period_s, "pump_period_s");
      if (!o.half_aesr1) throw InvalidArgument("missing sequence parameter 'half_aesr1'");
      if (!(period > 0) || wait < 0) throw InvalidArgument("pump period must be > 0 and wait >= 0");
      const Chirp pump = o.pump_aesr1 ? *o.pump_aesr1 : pulses.aesr1;
      seq.add(*o.half_aesr1);
      const int n = static_cast<int>(std::floor(wait / period + 1e-9));
      for (int i = 0; i < n; ++i) seq.add(Delay{period * 1e6}).add(pump);
      const double rest = wait - n * period;
      if (rest > 1e-12) seq.add(Delay{rest * 1e6});
      seq.add(nuclear);
      break;
    }
    case SequenceKind::SpectrumScan: {
      Tone t;
      t.frequency_ghz = require(o.frequency_ghz, "frequency_ghz");
      t.amplitude = require(o.amplitude, "amplitude");
      t.duration_us = require(o.duration_us, "duration_us");
      t.channel = o.channel;
      seq.add(t);
      seq.add(ReadMarker{o.channel == Channel::EsrMagnetic ? ReadKind::Electron : ReadKind::Nuclear, "scan"});
      break;
    }
  }
  return seq;
}

}  // namespace ffq
