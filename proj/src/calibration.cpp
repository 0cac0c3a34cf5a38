#include "ffq/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ffq/types.hpp"

namespace ffq {

bool Attenuation::unbounded() const { return std::isinf(db); }

double ratio_to_db(double ratio) {
  if (ratio < 0) throw InvalidArgument("attenuation ratio must be >= 0");
  if (ratio == 0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(ratio);
}

double db_to_ratio(double db) { return std::pow(10.0, db / 20.0); }

Attenuation edsr_attenuation(double rabi_slope_khz_per_v, double stark_slope_khz_per_v) {
  if (stark_slope_khz_per_v == 0) throw InvalidArgument("Stark slope must be non-zero");
  const double ratio = std::abs(2.0 * rabi_slope_khz_per_v / stark_slope_khz_per_v);
  return {ratio, ratio_to_db(ratio)};
}

Attenuation set_attenuation(double k_mw, double k_100hz) {
  if (k_100hz == 0) throw InvalidArgument("k_100Hz must be non-zero");
  const double ratio = std::abs(k_mw / k_100hz);
  return {ratio, ratio_to_db(ratio)};
}

double source_amplitude(double quoted_v, AmplitudeConvention convention) {
  return convention == AmplitudeConvention::PeakToPeak ? quoted_v : 0.5 * quoted_v;
}

double rabi_slope(double rabi_khz, double quoted_source_v, AmplitudeConvention convention) {
  const double v = source_amplitude(quoted_source_v, convention);
  if (!(v > 0)) throw InvalidArgument("source amplitude must be > 0");
  return rabi_khz / v;
}

double broadening_excess(double width, double reference_width) {
  if (width < reference_width) throw InvalidArgument("driven width is below the reference width");
  return std::sqrt(width * width - reference_width * reference_width);
}

std::vector<FrequencyCluster> cluster_frequencies(std::vector<double> samples, double min_separation) {
  if (samples.empty()) throw InvalidArgument("cannot cluster an empty sample list");
  std::sort(samples.begin(), samples.end());
  std::vector<FrequencyCluster> out;
  std::size_t start = 0;
  auto close = [&](std::size_t end) {
    FrequencyCluster c;
    c.count = end - start;
    c.min = samples[start];
    c.max = samples[end - 1];
    double s = 0;
    for (std::size_t i = start; i < end; ++i) s += samples[i];
    c.center = s / static_cast<double>(c.count);
    double v = 0;
    for (std::size_t i = start; i < end; ++i) v += (samples[i] - c.center) * (samples[i] - c.center);
    c.width = c.count > 1 ? std::sqrt(v / static_cast<double>(c.count - 1)) : 0.0;
    out.push_back(c);
    start = end;
  };
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i] - samples[i - 1] > min_separation) close(i);
  }
  close(samples.size());
  return out;
}

}  // namespace ffq
