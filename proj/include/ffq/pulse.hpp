#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ffq/types.hpp"

namespace ffq {

// Magnetic channels take amplitudes in mT (B1), the electric channel in
// volts at the gate (amplitude, not peak-to-peak).
enum class Channel { EsrMagnetic, NmrMagnetic, EdsrElectric };

struct Tone {
  double frequency_ghz = 0;
  double amplitude = 0;
  double phase_rad = 0;
  double duration_us = 0;
  Channel channel = Channel::EdsrElectric;
};

// Linear frequency sweep from f_start to f_end, phase-continuous with a
// carrier at f_start referenced to absolute time.
struct Chirp {
  double f_start_ghz = 0;
  double f_end_ghz = 0;
  double amplitude = 0;
  double duration_us = 0;
  Channel channel = Channel::EsrMagnetic;
  double phase_rad = 0;

  double rate_mhz_per_us() const { return (f_end_ghz - f_start_ghz) * 1e3 / duration_us; }
};

struct Delay {
  double duration_us = 0;
};

enum class ReadKind { Electron, Nuclear };

struct ReadMarker {
  ReadKind kind = ReadKind::Electron;
  std::string label;
};

using PulseSegment = std::variant<Tone, Chirp, Delay, ReadMarker>;

struct PulseSequence {
  std::vector<PulseSegment> segments;
  std::string label;

  void validate() const;
  double duration_us() const;
  PulseSequence& add(PulseSegment s) {
    segments.push_back(std::move(s));
    return *this;
  }
};

void validate_segment(const PulseSegment& segment);
double segment_duration_us(const PulseSegment& segment);

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

}  // namespace ffq
