#include "ffq/pulse.hpp"

#include <cmath>

namespace ffq {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

void validate_segment(const PulseSegment& segment) {
  std::visit(overloaded{
                 [](const Tone& t) {
                   if (!(t.duration_us > 0)) throw InvalidArgument("tone duration must be > 0");
                   if (!std::isfinite(t.frequency_ghz) || !std::isfinite(t.amplitude))
                     throw InvalidArgument("tone parameters must be finite");
                 },
                 [](const Chirp& c) {
                   if (!(c.duration_us > 0)) throw InvalidArgument("chirp duration must be > 0");
                   if (c.f_start_ghz == c.f_end_ghz)
                     throw InvalidArgument("chirp f_start must differ from f_end");
                 },
                 [](const Delay& d) {
                   if (!(d.duration_us > 0)) throw InvalidArgument("delay duration must be > 0");
                 },
                 [](const ReadMarker&) {},
             },
             segment);
}

double segment_duration_us(const PulseSegment& segment) {
  return std::visit(overloaded{
                        [](const Tone& t) { return t.duration_us; },
                        [](const Chirp& c) { return c.duration_us; },
                        [](const Delay& d) { return d.duration_us; },
                        [](const ReadMarker&) { return 0.0; },
                    },
                    segment);
}

void PulseSequence::validate() const {
  if (segments.empty()) throw InvalidArgument("pulse sequence is empty");
  for (const auto& s : segments) validate_segment(s);
}

double PulseSequence::duration_us() const {
  double t = 0;
  for (const auto& s : segments) t += segment_duration_us(s);
  return t;
}

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::EsrMagnetic: return "esr";
    case Channel::NmrMagnetic: return "nmr";
    case Channel::EdsrElectric: return "edsr";
  }
  return "?";
}

Channel channel_from_name(const std::string& name) {
  if (name == "esr") return Channel::EsrMagnetic;
  if (name == "nmr") return Channel::NmrMagnetic;
  if (name == "edsr") return Channel::EdsrElectric;
  throw InvalidArgument("unknown channel '" + name + "' (allowed: esr, nmr, edsr)");
}

}  // namespace ffq
