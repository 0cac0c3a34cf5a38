#pragma once

#include <optional>

#include "ffq/noise.hpp"
#include "ffq/pulse.hpp"
#include "ffq/spin_core.hpp"
#include "ffq/state.hpp"

namespace ffq {

enum class Integrator {
  PiecewiseExponential,  // 4th-order Magnus steps, exponentials by eigendecomposition
  FixedStepExpansion,    // midpoint Hamiltonian, exponential by scaled Taylor series
};

struct EvolutionConfig {
  Frame frame = Frame::Rotating;
  bool rwa = true;
  // Unset: 1 / (steps_per_period * largest instantaneous frequency).
  std::optional<double> dt_max_us;
  Integrator integrator = Integrator::PiecewiseExponential;
  double secular_window_mhz = 10.0;
  double steps_per_period = 50.0;
  long long max_steps = 200'000'000;
  void validate() const;
};

// Static data for one donor: bare and dressed operators.
class SpinSystem {
 public:
  explicit SpinSystem(const DonorParameters& params, const PhysicalConstants& constants = {});

  const DonorParameters& params() const { return params_; }
  const PhysicalConstants& constants() const { return constants_; }
  const Eigensystem& eigen() const { return eig_; }
  const Matrix4c& h0_bare() const { return h0_; }
  // Drive operators in MHz per unit amplitude (mT or gate volts), multiplied
  // by cos(phase(t)) in the Hamiltonian.
  const Matrix4c& drive_bare(Channel c) const;
  const Matrix4c& drive_dressed(Channel c) const;
  // Generators of the frozen offsets: electron (Sz) and nuclear (-Iz).
  const Matrix4c& electron_shift_bare() const { return sz_; }
  const Matrix4c& nuclear_shift_bare() const { return niz_; }
  const Matrix4c& electron_shift_dressed() const { return sz_d_; }
  const Matrix4c& nuclear_shift_dressed() const { return niz_d_; }

  double energy_mhz(Level l) const { return eig_.energies_mhz(idx(l)); }
  double transition_mhz(Level upper, Level lower) const {
    return energy_mhz(upper) - energy_mhz(lower);
  }
  // diag(exp(i 2 pi E_k t)).
  Vector4c frame_phases(double t_us) const;

  QuantumState to_frame(const QuantumState& s, Frame target) const;

 private:
  DonorParameters params_;
  PhysicalConstants constants_;
  Eigensystem eig_;
  Matrix4c h0_;
  Matrix4c edsr_, mag_, edsr_d_, mag_d_;
  Matrix4c sz_, niz_, sz_d_, niz_d_;
};

struct StaticShift {
  double electron_mhz = 0;
  double nuclear_mhz = 0;
};

// Unitary of a drive segment, movable in time when shiftable:
// U(t0) = Q(t0) u0 Q(t0)^dagger with Q(t) = diag(exp(i 2 pi d_k t)).
struct CompiledPulse {
  Matrix4c u0 = Matrix4c::Identity();
  Vector4d phase_rates_mhz = Vector4d::Zero();
  double duration_us = 0;
  bool shiftable = true;
  double t_ref_us = 0;
  Frame frame = Frame::Rotating;

  Matrix4c at(double t0_us) const;
};

CompiledPulse compile_tone(const SpinSystem& sys, const Tone& tone, const StaticShift& shift,
                           const EvolutionConfig& config, double t0_us = 0);
CompiledPulse compile_chirp(const SpinSystem& sys, const Chirp& chirp, const StaticShift& shift,
                            const EvolutionConfig& config, double t0_us = 0);
Matrix4c delay_unitary(const SpinSystem& sys, double duration_us, const StaticShift& shift,
                       const EvolutionConfig& config, double t0_us);

// Applies one segment. ReadMarkers are ignored here (see run_sequence).
// Relaxation is applied across Delays; depolarizing noise after EDSR tones.
QuantumState propagate(const SpinSystem& sys, const QuantumState& state,
                       const PulseSegment& segment, const NoiseRealization& realization,
                       const EvolutionConfig& config, PirsState* pirs = nullptr);
QuantumState propagate(const QuantumState& state, const PulseSegment& segment,
                       const DonorParameters& params, const NoiseRealization& realization,
                       const EvolutionConfig& config, const PhysicalConstants& constants = {});

// Pair (upper, lower) driven by a chirp: the coupled transition nearest to
// the sweep centre.
std::pair<Level, Level> chirp_target(const SpinSystem& sys, const Chirp& chirp);

// Transfer probability lower -> upper through the chirp, starting in the
// lower level of its target transition. Offsets: the 29Si configuration and
// telegraph/quasi-static means of env (random parts are not sampled).
double adiabatic_inversion_probability(const Chirp& chirp, const DonorParameters& params,
                                       const NoiseEnvironment& env, const EvolutionConfig& config,
                                       const PhysicalConstants& constants = {});
double adiabatic_inversion_probability(const SpinSystem& sys, const Chirp& chirp,
                                       const StaticShift& shift, const EvolutionConfig& config);

// Landau-Zener inversion probability, cycle units: 1 - exp(-pi^2 Omega^2 / rate).
double landau_zener_inversion(double rabi_mhz, double rate_mhz_per_us);

// Rabi frequency (MHz) of the chirp's target transition at its amplitude.
double chirp_rabi_mhz(const SpinSystem& sys, const Chirp& chirp);

// Bisection on sweep duration (span fixed) until the inversion probability
// is within tolerance of target.
Chirp calibrate_adiabatic(const Chirp& base, double target, const SpinSystem& sys,
                          const EvolutionConfig& config, double tolerance = 0.002,
                          int max_iterations = 60);
Chirp calibrate_half_adiabatic(double target, const DonorParameters& params,
                               const EvolutionConfig& config,
                               const PhysicalConstants& constants = {});

}  // namespace ffq
