#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ffq/fitting.hpp"
#include "ffq/simulator.hpp"

namespace ffq {

enum class NativeGateKind { X, Y, XHalf, MinusXHalf, YHalf, MinusYHalf, Idle };

const char* native_gate_name(NativeGateKind k);

struct NativeGate {
  NativeGateKind kind = NativeGateKind::X;
  double duration_us = 0;
};

struct NativeGateDurations {
  double pi_us = 6.13;
  double x_half_us = 3.073;
  double y_half_us = 3.087;
  double idle_us = 0;

  double duration(NativeGateKind k) const;
  void validate() const;
};

// Rotation angle and drive phase of a native gate.
std::pair<double, double> native_rotation(NativeGateKind k);

// exp(-i angle/2 (cos(phase) X + sin(phase) Y)).
Matrix2c native_unitary(NativeGateKind k);

struct CliffordElement {
  int index = 0;
  Matrix2c unitary;
  std::vector<NativeGateKind> decomposition;  // time order
};

// Unitaries equal up to a global phase.
bool equal_up_to_phase(const Matrix2c& a, const Matrix2c& b, double tol = 1e-9);

const std::vector<CliffordElement>& clifford_table();
int clifford_index(const Matrix2c& u);
int clifford_inverse(int index);
int clifford_compose(int first, int second);  // second applied after first
double mean_native_gates_per_clifford();

inline constexpr double kNativeGatesPerClifford = 2.233;

struct RbSequence {
  std::vector<int> cliffords;
  int recovery = 0;
};

RbSequence rb_sequence(int m, Rng& rng);

// EDSR tones realizing the Clifford list plus recovery.
PulseSequence rb_pulses(const SpinSystem& sys, const RbSequence& seq, const NativeGateDurations& d,
                        double drive_offset_mhz = 0);

struct RbConfig {
  std::vector<int> lengths{1, 5, 10, 20, 35, 50, 65};
  int sequences_per_length = 20;
  int shots = 100;
  NativeGateDurations durations;
  double prep_error = 0;       // probability of starting in (up,Down) instead of (down,Up)
  bool frequency_check = true;  // remeasure blocks across which the 29Si configuration changed
  int max_remeasure = 20;
  void validate() const;
};

struct RbPoint {
  int m = 0;
  double mean = 0;
  double sem = 0;
  std::vector<double> survivals;  // one per sequence
};

struct RbRun {
  std::vector<RbPoint> points;
  long blocks_measured = 0;
  long blocks_discarded = 0;
};

RbRun run_rb(Simulator& sim, const RbConfig& config, std::uint64_t seed);

struct RbResult {
  std::vector<int> lengths;
  std::vector<double> survival;
  std::vector<double> sem;
  double a = 0, p = 0, b = 0;
  double p_sigma = 0;
  double f_clifford = 0, f_clifford_ci95 = 0;
  double f_native = 0, f_native_ci95 = 0;
  FitResult fit;
};

double clifford_fidelity(double p);
double native_fidelity(double f_clifford, double gates_per_clifford = kNativeGatesPerClifford);

// Weighted fit of A p^m + B; 95% intervals are 1.96 sigma.
RbResult fit_rb(const std::vector<RbPoint>& points,
                double gates_per_clifford = kNativeGatesPerClifford);

// Survival decay per Clifford for a depolarizing channel of strength
// lambda = 2 r after every native gate.
double depolarizing_clifford_decay(double r);

}  // namespace ffq
