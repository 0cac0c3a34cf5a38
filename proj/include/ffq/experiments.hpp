#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ffq/benchmark.hpp"
#include "ffq/calibration.hpp"
#include "ffq/fitting.hpp"
#include "ffq/simulator.hpp"

namespace ffq {

// Runs body(i) for i in [0, n) on up to jobs threads. Work items must be
// independent; callers write results by index so ordering is canonical.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

// One point of a repeated-shot scan.
struct ScanPoint {
  double p_measured = 0;  // fraction of readouts reporting the target outcome
  double sem = 0;         // binomial standard error of p_measured
  double p_expected = 0;  // mean target population just before readout
  int shots = 0;
};

// Two-level chevron: Omega^2 / (Omega^2 + Delta^2) sin^2(pi sqrt(Omega^2 + Delta^2) t).
double chevron_probability(double rabi_mhz, double detuning_mhz, double t_us);

struct ChevronGrid {
  std::vector<double> detunings_mhz;
  std::vector<double> durations_us;
  double rabi_mhz = 0;
  std::vector<double> simulated;  // row-major [detuning][duration]
  std::vector<double> analytic;
  double max_abs_error = 0;
};

// Noiseless (down,Up) -> (up,Down) transfer under a detuned EDSR tone.
ChevronGrid simulate_chevron(const SimulatorConfig& config, const std::vector<double>& detunings_mhz,
                             const std::vector<double>& durations_us, double amplitude_v, int jobs = 1);

// Flip-flop scans from (down,Up), read through the nucleus (target: nuclear Down).
enum class FlipFlopScan { Spectrum, Rabi, Ramsey, Hahn };

struct FlipFlopScanOptions {
  FlipFlopScan kind = FlipFlopScan::Rabi;
  double amplitude_v = 0.4;
  double detuning_mhz = 0;
  double duration_us = 0;  // spectrum: tone length (0 = pi time)
};

// x is the detuning (MHz) for Spectrum, the tone duration (us) for Rabi and
// the free evolution time (us) for Ramsey and Hahn.
std::vector<ScanPoint> run_flipflop_scan(const SimulatorConfig& config, const FlipFlopScanOptions& options,
                                         const std::vector<double>& x, int shots, std::uint64_t seed,
                                         int jobs = 1);

// Electron decay from (up,Down) after a wait (s), read as electron up.
std::vector<ScanPoint> run_t1_decay(const SimulatorConfig& config, const std::vector<double>& waits_s,
                                    int shots, std::uint64_t seed, int jobs = 1);

struct PumpingSchedule {
  double inversion_fidelity = 0.98;
  double half_fidelity = 0.5;
  double period_s = 5.0;
  double trace_duration_s = 30.0;
  int samples_per_period = 500;
};

struct PumpingPulses {
  Chirp half;
  Chirp pump;
  double half_probability = 0;
  double pump_probability = 0;
};

PumpingPulses calibrate_pumping_pulses(const SimulatorConfig& config, const PumpingSchedule& schedule);

// Ensemble (up,Down) fraction of the nuclear-Down manifold under the pump.
// The electron coherence is dropped across each wait, which is many orders
// of magnitude longer than T2*.
struct PumpingTrace {
  std::vector<double> times_s;
  std::vector<double> up_down_fraction;
  double min = 0, max = 0, mean = 0;
  double steady_mean = 0;  // time average over one period in the periodic steady state
};

PumpingTrace pumping_trace(const SimulatorConfig& config, const PumpingSchedule& schedule,
                           const PumpingPulses& pulses);

struct PumpDecay {
  std::vector<double> waits_s;
  std::vector<ScanPoint> points;  // target: nuclear Down
  FitResult fit;                  // A exp(-t/tau) + C
  double tau_s = 0, tau_sigma_s = 0;
  double x_mean = 0;
  double t1ff_s = 0, t1ff_sigma_s = 0;
  PumpingTrace trace;
  PumpingPulses pulses;
};

// Trajectory simulation of the pump sequence; T1ff = tau_fit * steady mean
// (up,Down) fraction.
PumpDecay run_t1ff_pump(const SimulatorConfig& config, const PumpingSchedule& schedule,
                        const std::vector<double>& waits_s, int trajectories, std::uint64_t seed,
                        int jobs = 1);

struct EndorFidelity {
  double fidelity = 0;  // fraction of nuclear reads reporting Up after ENDOR
  double sem = 0;
  double expected = 0;  // mean (down,Up) + (up,Up) population before the read
  int repetitions = 0;
  double aesr2_probability = 0;
  double anmr1_probability = 0;
};

// Electron starts up with probability readout.reload_error, nucleus random.
// pulse_fidelity > 0 recalibrates aESR2 and aNMR1 to that inversion.
EndorFidelity run_endor_fidelity(const SimulatorConfig& config, double pulse_fidelity, int repetitions,
                                 std::uint64_t seed, int jobs = 1);

struct QndReadout {
  long reads = 0;
  long misclassified = 0;
  double rate = 0;
  double oracle = 0;  // binomial tail, averaged over the two nuclear states
};

// Alternating nuclear Up / Down preparations, each read once.
QndReadout run_qnd_readout(const SimulatorConfig& config, long reads, std::uint64_t seed, int jobs = 1);

struct Si29Monitor {
  std::vector<double> true_offsets_khz;
  std::vector<double> fitted_offsets_khz;
  std::vector<FrequencyCluster> clusters;
};

struct Si29MonitorOptions {
  int spectra = 120;
  double span_khz = 600;
  double step_khz = 5;
  double amplitude_v = 0.1;
  double interval_s = 60;  // bath evolution between spectra
  double cluster_separation_khz = 20;
};

// Repeated flip-flop spectra, each fitted with a Gaussian to locate the line.
Si29Monitor run_si29_monitor(const SimulatorConfig& config, const Si29MonitorOptions& options,
                             std::uint64_t seed, int jobs = 1);

}  // namespace ffq
