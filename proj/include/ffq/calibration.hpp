#pragma once

#include <vector>

namespace ffq {

struct Attenuation {
  double ratio = 0;
  double db = 0;  // -inf when ratio is 0
  bool unbounded() const;
};

double ratio_to_db(double ratio);
double db_to_ratio(double db);

// Ratio = 2 * rabi_slope / stark_slope, both in kHz/V.
Attenuation edsr_attenuation(double rabi_slope_khz_per_v, double stark_slope_khz_per_v);

// Ratio of the Coulomb-peak splitting slopes under microwave and 100 Hz drive.
Attenuation set_attenuation(double k_mw, double k_100hz);

// How a quoted source voltage maps to the drive amplitude.
enum class AmplitudeConvention { PeakToPeak, Amplitude };

double source_amplitude(double quoted_v, AmplitudeConvention convention);
double rabi_slope(double rabi_khz, double quoted_source_v, AmplitudeConvention convention);

// Width added by a drive, from the measured width and the undriven reference.
double broadening_excess(double width, double reference_width);

struct FrequencyCluster {
  double center = 0;
  double width = 0;  // sample standard deviation
  std::size_t count = 0;
  double min = 0;
  double max = 0;
};

// Gap-based 1-D clustering: sorted samples split wherever consecutive values
// differ by more than min_separation.
std::vector<FrequencyCluster> cluster_frequencies(std::vector<double> samples, double min_separation);

}  // namespace ffq
