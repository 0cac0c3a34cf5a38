#include "ffq/spin_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace ffq {

void PhysicalConstants::validate() const {
  if (!(gamma_e_ghz_per_t > 0) || !(gamma_n_mhz_per_t > 0)) {
    throw InvalidArgument("gyromagnetic ratios must be positive");
  }
}

void DonorParameters::validate() const {
  if (!(b0_t >= 0)) throw InvalidArgument("b0 must be >= 0");
  if (!(a_hf_mhz >= 0)) throw InvalidArgument("a_hf must be >= 0");
  if (!std::isfinite(stark_slope_khz_per_v)) throw InvalidArgument("stark_slope must be finite");
}

namespace spin_ops {
namespace {
const Complex I1(0.0, 1.0);

Matrix2c pauli_x() {
  Matrix2c m;
  m << 0, 1, 1, 0;
  return m;
}
Matrix2c pauli_y() {
  Matrix2c m;
  m << 0, -I1, I1, 0;
  return m;
}
Matrix2c pauli_z() {
  Matrix2c m;
  m << 1, 0, 0, -1;
  return m;
}

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}
}  // namespace

Matrix4c sx() { return kron(0.5 * pauli_x(), Matrix2c::Identity()); }
Matrix4c sy() { return kron(0.5 * pauli_y(), Matrix2c::Identity()); }
Matrix4c sz() { return kron(0.5 * pauli_z(), Matrix2c::Identity()); }
Matrix4c ix() { return kron(Matrix2c::Identity(), 0.5 * pauli_x()); }
Matrix4c iy() { return kron(Matrix2c::Identity(), 0.5 * pauli_y()); }
Matrix4c iz() { return kron(Matrix2c::Identity(), 0.5 * pauli_z()); }
Matrix4c s_dot_i() { return sx() * ix() + sy() * iy() + sz() * iz(); }
}  // namespace spin_ops

HamiltonianMatrix build_full_hamiltonian(const DonorParameters& params,
                                         const PhysicalConstants& constants) {
  params.validate();
  constants.validate();
  const double b = params.b0_t;
  const double a = params.a_hf_mhz;
  const double gp = constants.gamma_plus_mhz_per_t() * b;
  const double gm = constants.gamma_minus_mhz_per_t() * b;

  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = gm + a / 2;
  m(1, 1) = gp - a / 2;
  m(2, 2) = -gp - a / 2;
  m(3, 3) = -gm + a / 2;
  m(1, 2) = a;
  m(2, 1) = a;
  return {0.5 * m};
}

FlipFlopHamiltonian truncate_flipflop(const HamiltonianMatrix& h) {
  return {h.entries.block<2, 2>(1, 1)};
}

TransitionFrequencies transition_frequencies(const DonorParameters& params,
                                             const PhysicalConstants& constants) {
  params.validate();
  constants.validate();
  const double a = params.a_hf_mhz;
  const double ze = constants.gamma_e_mhz_per_t() * params.b0_t;
  const double zn = constants.gamma_n_mhz_per_t * params.b0_t;
  TransitionFrequencies f;
  f.esr1_ghz = (ze - a / 2) * 1e-3;
  f.esr2_ghz = (ze + a / 2) * 1e-3;
  f.nmr1_mhz = a / 2 + zn;
  f.nmr2_mhz = a / 2 - zn;
  f.ff_ghz = flipflop_gap_mhz(params, constants) * 1e-3;
  return f;
}

double flipflop_gap_mhz(const DonorParameters& params, const PhysicalConstants& constants) {
  return std::hypot(constants.gamma_plus_mhz_per_t() * params.b0_t, params.a_hf_mhz);
}

double flipflop_rabi_frequency(double stark_slope_khz_per_v, double drive_amplitude_at_gate_v) {
  if (drive_amplitude_at_gate_v < 0) throw InvalidArgument("drive amplitude must be >= 0");
  return 0.5 * stark_slope_khz_per_v * drive_amplitude_at_gate_v;
}

double b0_for_flipflop_frequency(double ff_ghz, double a_hf_mhz,
                                 const PhysicalConstants& constants) {
  const double ff = ff_ghz * 1e3;
  if (ff < a_hf_mhz) throw InvalidArgument("flip-flop frequency below the hyperfine coupling");
  return std::sqrt(ff * ff - a_hf_mhz * a_hf_mhz) / constants.gamma_plus_mhz_per_t();
}

Eigensystem dressed_eigensystem(const HamiltonianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h.entries);
  const Matrix4c& v = es.eigenvectors();

  // Assign eigenvector columns to product labels by the permutation with the
  // largest total overlap (ties resolved by the first permutation found).
  std::array<int, 4> perm{0, 1, 2, 3};
  std::array<int, 4> best = perm;
  double best_score = -1;
  do {
    double score = 0;
    for (int k = 0; k < 4; ++k) score += std::norm(v(k, perm[k]));
    if (score > best_score + 1e-12) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Eigensystem out;
  for (int k = 0; k < 4; ++k) {
    Eigen::Matrix<Complex, 4, 1> col = v.col(best[k]);
    const Complex d = col(k);
    if (std::abs(d) > 1e-14) col *= std::conj(d) / std::abs(d);
    out.vectors.col(k) = col;
    out.energies_mhz(k) = es.eigenvalues()(best[k]);
  }
  return out;
}

}  // namespace ffq
