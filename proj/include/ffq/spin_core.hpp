#pragma once

#include "ffq/types.hpp"

namespace ffq {

// Gyromagnetic ratios, both stored as positive numbers.
struct PhysicalConstants {
  double gamma_e_ghz_per_t = 27.97;
  double gamma_n_mhz_per_t = 17.23;

  double gamma_e_mhz_per_t() const { return gamma_e_ghz_per_t * 1e3; }
  double gamma_plus_mhz_per_t() const { return gamma_e_mhz_per_t() + gamma_n_mhz_per_t; }
  double gamma_minus_mhz_per_t() const { return gamma_e_mhz_per_t() - gamma_n_mhz_per_t; }
  void validate() const;
};

struct DonorParameters {
  double b0_t = 1.0;
  double a_hf_mhz = 114.1;
  double stark_slope_khz_per_v = 512.0;  // dA/dV at the gate
  double fd_offset_voltage = 0.0;        // DC operating point, informational
  void validate() const;
};

// 4x4 spin Hamiltonian in MHz over (up,Up), (up,Down), (down,Up), (down,Down).
struct HamiltonianMatrix {
  Matrix4c entries;
};

// 2x2 block over (up,Down), (down,Up).
struct FlipFlopHamiltonian {
  Matrix2c entries;
};

struct TransitionFrequencies {
  double esr1_ghz = 0;
  double esr2_ghz = 0;
  double nmr1_mhz = 0;
  double nmr2_mhz = 0;
  double ff_ghz = 0;
};

namespace spin_ops {
Matrix4c sx();
Matrix4c sy();
Matrix4c sz();
Matrix4c ix();
Matrix4c iy();
Matrix4c iz();
Matrix4c s_dot_i();
}  // namespace spin_ops

HamiltonianMatrix build_full_hamiltonian(const DonorParameters& params,
                                         const PhysicalConstants& constants);
FlipFlopHamiltonian truncate_flipflop(const HamiltonianMatrix& h);
TransitionFrequencies transition_frequencies(const DonorParameters& params,
                                             const PhysicalConstants& constants);

// sqrt((gamma_+ B0)^2 + A^2) in MHz.
double flipflop_gap_mhz(const DonorParameters& params, const PhysicalConstants& constants);

// Rabi frequency (kHz) of the flip-flop transition for a gate-referred drive amplitude (V).
double flipflop_rabi_frequency(double stark_slope_khz_per_v, double drive_amplitude_at_gate_v);

// Field at which the flip-flop transition sits at ff_ghz.
double b0_for_flipflop_frequency(double ff_ghz, double a_hf_mhz,
                                 const PhysicalConstants& constants);

// Eigen-decomposition with columns ordered and phased to follow the product
// basis: column k is the eigenvector with the largest overlap with product
// state k, and that overlap is real and non-negative.
struct Eigensystem {
  Vector4d energies_mhz;
  Matrix4c vectors;
};

Eigensystem dressed_eigensystem(const HamiltonianMatrix& h);

}  // namespace ffq
