#include "ffq/propagator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <vector>

#include "ffq/sequences.hpp"

namespace ffq {

namespace {

const Complex kI(0.0, 1.0);

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// exp(-i 2 pi H t) for Hermitian H.
Matrix4c expm_hermitian(const Matrix4c& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h);
  Vector4c ph;
  for (int k = 0; k < 4; ++k) ph(k) = std::exp(-kI * (kTwoPi * es.eigenvalues()(k) * t));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// exp(a) for anti-Hermitian a.
Matrix4c expm_antihermitian(const Matrix4c& a) {
  const Matrix4c k = kI * a;  // Hermitian
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (k + k.adjoint()));
  Vector4c ph;
  for (int j = 0; j < 4; ++j) ph(j) = std::exp(-kI * es.eigenvalues()(j));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix4c expm_taylor(const Matrix4c& a) {
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const Matrix4c x = a / std::ldexp(1.0, squarings);
  Matrix4c term = Matrix4c::Identity();
  Matrix4c sum = Matrix4c::Identity();
  for (int n = 1; n <= 16; ++n) {
    term = term * x / static_cast<double>(n);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

double frequency_mhz(double ghz) { return ghz * 1e3; }

using HamiltonianFn = std::function<Matrix4c(double)>;

// Integrates dU/ds = -i 2 pi H(s) U over [0, duration].
Matrix4c integrate(const HamiltonianFn& h, double duration, double max_freq_mhz,
                   const EvolutionConfig& config) {
  const double dt_auto =
      max_freq_mhz > 0 ? 1.0 / (config.steps_per_period * max_freq_mhz) : duration;
  double dt = dt_auto;
  if (config.dt_max_us) {
    if (*config.dt_max_us > dt_auto * (1.0 + 1e-9) && duration > dt_auto) {
      throw StepSizeError("dt_max " + std::to_string(*config.dt_max_us) +
                          " us is too coarse for instantaneous frequency " +
                          std::to_string(max_freq_mhz) + " MHz (need <= " +
                          std::to_string(dt_auto) + " us)");
    }
    dt = std::min(dt_auto, *config.dt_max_us);
  }
  const double nsteps_d = std::ceil(duration / dt - 1e-9);
  if (nsteps_d > static_cast<double>(config.max_steps)) {
    throw StepSizeError("segment needs " + std::to_string(nsteps_d) +
                        " steps, above max_steps; use the rotating frame with RWA or a shorter segment");
  }
  const long long n = std::max<long long>(1, static_cast<long long>(nsteps_d));
  const double step = duration / static_cast<double>(n);
  Matrix4c u = Matrix4c::Identity();
  if (config.integrator == Integrator::PiecewiseExponential) {
    const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
    const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
    const double comm = std::sqrt(3.0) / 3.0 * kPi * kPi * step * step;
    for (long long i = 0; i < n; ++i) {
      const double s = step * static_cast<double>(i);
      const Matrix4c h1 = h(s + c1 * step);
      const Matrix4c h2 = h(s + c2 * step);
      const Matrix4c omega = -kI * (kPi * step) * (h1 + h2) - comm * (h2 * h1 - h1 * h2);
      u = expm_antihermitian(omega) * u;
    }
  } else {
    for (long long i = 0; i < n; ++i) {
      const double s = step * (static_cast<double>(i) + 0.5);
      u = expm_taylor(-kI * (kTwoPi * step) * h(s)) * u;
    }
  }
  return u;
}

struct DriveTerm {
  int k, l;    // k upper
  Complex c;   // coefficient at local time 0
  double nu;   // MHz
};

struct RwaModel {
  std::vector<DriveTerm> terms;
  Vector4d diag = Vector4d::Zero();
  double chirp_rate = 0;  // MHz/us
  bool shiftable = true;
  Vector4d potentials = Vector4d::Zero();
};

Vector4d shift_diagonal(const SpinSystem& sys, const StaticShift& shift) {
  const Matrix4c n =
      shift.electron_mhz * sys.electron_shift_dressed() + shift.nuclear_mhz * sys.nuclear_shift_dressed();
  return n.diagonal().real();
}

Matrix4c shift_bare(const SpinSystem& sys, const StaticShift& shift) {
  return shift.electron_mhz * sys.electron_shift_bare() + shift.nuclear_mhz * sys.nuclear_shift_bare();
}

// Potentials d with d_k - d_l = nu for every term, if they exist.
bool solve_potentials(const std::vector<DriveTerm>& terms, Vector4d& d) {
  d.setZero();
  std::array<bool, 4> seen{false, false, false, false};
  for (int root = 0; root < 4; ++root) {
    if (seen[root]) continue;
    seen[root] = true;
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (const auto& t : terms) {
        int b = -1;
        double val = 0;
        if (t.k == a) {
          b = t.l;
          val = d(a) - t.nu;
        } else if (t.l == a) {
          b = t.k;
          val = d(a) + t.nu;
        } else {
          continue;
        }
        if (!seen[b]) {
          seen[b] = true;
          d(b) = val;
          stack.push_back(b);
        } else if (std::abs(d(b) - val) > 1e-9 * (1.0 + std::abs(val))) {
          return false;
        }
      }
    }
  }
  return true;
}

RwaModel build_rwa(const SpinSystem& sys, Channel channel, double amplitude, double phase,
                   double f_start_mhz, double rate, double duration, const StaticShift& shift,
                   const EvolutionConfig& config, double t0) {
  RwaModel m;
  m.chirp_rate = rate;
  m.diag = shift_diagonal(sys, shift);
  const Matrix4c& op = sys.drive_dressed(channel);
  const double f_lo = std::min(f_start_mhz, f_start_mhz + rate * duration);
  const double f_hi = std::max(f_start_mhz, f_start_mhz + rate * duration);
  const double scale = op.cwiseAbs().maxCoeff();
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 4; ++l) {
      const double w = sys.eigen().energies_mhz(k) - sys.eigen().energies_mhz(l);
      if (w <= 0) continue;
      if (std::abs(op(k, l)) <= 1e-12 * scale) continue;
      if (w < f_lo - config.secular_window_mhz || w > f_hi + config.secular_window_mhz) continue;
      DriveTerm t{k, l, 0.5 * amplitude * op(k, l) * std::exp(-kI * phase), w - f_start_mhz};
      m.terms.push_back(t);
    }
  }
  m.shiftable = solve_potentials(m.terms, m.potentials);
  if (!m.shiftable) {
    // Absolute-time reference folded into the coefficients.
    for (auto& t : m.terms) t.c *= std::exp(kI * (kTwoPi * t.nu * t0));
  }
  return m;
}

CompiledPulse compile_rwa(const RwaModel& m, double duration, const EvolutionConfig& config,
                          double t0, bool allow_exact) {
  CompiledPulse out;
  out.duration_us = duration;
  out.frame = Frame::Rotating;
  out.shiftable = m.shiftable;
  out.t_ref_us = m.shiftable ? 0.0 : t0;
  out.phase_rates_mhz = m.shiftable ? m.potentials : Vector4d::Zero();

  if (allow_exact && m.shiftable && m.chirp_rate == 0 &&
      config.integrator == Integrator::PiecewiseExponential) {
    Matrix4c hc = Matrix4c::Zero();
    for (const auto& t : m.terms) {
      hc(t.k, t.l) += t.c;
      hc(t.l, t.k) += std::conj(t.c);
    }
    for (int k = 0; k < 4; ++k) hc(k, k) += m.diag(k) + m.potentials(k);
    Vector4c q;
    for (int k = 0; k < 4; ++k) q(k) = std::exp(kI * (kTwoPi * m.potentials(k) * duration));
    out.u0 = q.asDiagonal() * expm_hermitian(hc, duration);
    return out;
  }

  double fmax = 0;
  for (const auto& t : m.terms) {
    fmax = std::max({fmax, std::abs(t.nu), std::abs(t.nu - m.chirp_rate * duration),
                     2.0 * std::abs(t.c)});
  }
  fmax = std::max(fmax, m.diag.cwiseAbs().maxCoeff());
  const double rate = m.chirp_rate;
  auto h = [&m, rate](double s) {
    Matrix4c hm = Matrix4c::Zero();
    for (int k = 0; k < 4; ++k) hm(k, k) = m.diag(k);
    for (const auto& t : m.terms) {
      const Complex v = t.c * std::exp(kI * (kTwoPi * t.nu * s - kPi * rate * s * s));
      hm(t.k, t.l) += v;
      hm(t.l, t.k) += std::conj(v);
    }
    return hm;
  };
  out.u0 = integrate(h, duration, fmax, config);
  return out;
}

// Non-RWA drive in the rotating (interaction) frame or the lab frame; phase
// of the drive cos(phi + 2 pi f_start t + pi rate (t - t0)^2).
CompiledPulse compile_full(const SpinSystem& sys, Channel channel, double amplitude, double phase,
                           double f_start_mhz, double rate, double duration,
                           const StaticShift& shift, const EvolutionConfig& config, double t0) {
  CompiledPulse out;
  out.duration_us = duration;
  out.shiftable = false;
  out.t_ref_us = t0;
  out.frame = config.frame;
  const double f_max = std::max(std::abs(f_start_mhz), std::abs(f_start_mhz + rate * duration));
  const Vector4d& e = sys.eigen().energies_mhz;
  const double spread = e.maxCoeff() - e.minCoeff();
  auto drive_phase = [=](double t) {
    const double s = t - t0;
    return phase + kTwoPi * f_start_mhz * t + kPi * rate * s * s;
  };
  if (config.frame == Frame::Lab) {
    const Matrix4c h0 = sys.h0_bare() + shift_bare(sys, shift);
    const Matrix4c op = amplitude * sys.drive_bare(channel);
    auto h = [&](double s) -> Matrix4c {
      return h0 + std::cos(drive_phase(t0 + s)) * op;
    };
    out.u0 = integrate(h, duration, spread + f_max, config);
  } else {
    const Matrix4c nd = shift.electron_mhz * sys.electron_shift_dressed() +
                        shift.nuclear_mhz * sys.nuclear_shift_dressed();
    const Matrix4c op = amplitude * sys.drive_dressed(channel);
    auto h = [&](double s) -> Matrix4c {
      const double t = t0 + s;
      const Vector4c ph = sys.frame_phases(t);
      const Matrix4c m = nd + std::cos(drive_phase(t)) * op;
      return ph.asDiagonal() * m * ph.conjugate().asDiagonal();
    };
    out.u0 = integrate(h, duration, spread + f_max + nd.cwiseAbs().maxCoeff(), config);
  }
  return out;
}

std::uint64_t clock_bits(double t) { return std::bit_cast<std::uint64_t>(t); }

void depolarize_flipflop(QuantumState& s, double r, std::uint64_t seed) {
  if (r <= 0) return;
  const double lambda = 2.0 * r;
  const int a = idx(Level::UpDown), b = idx(Level::DownUp);
  Matrix4c x = Matrix4c::Identity(), y = Matrix4c::Identity(), z = Matrix4c::Identity();
  x(a, a) = x(b, b) = 0;
  x(a, b) = x(b, a) = 1;
  y(a, a) = y(b, b) = 0;
  y(a, b) = -kI;
  y(b, a) = kI;
  z(b, b) = -1;
  if (s.is_pure()) {
    Rng rng(seed);
    const double u = rng.uniform();
    if (u < 0.25 * lambda) s.apply(x);
    else if (u < 0.5 * lambda) s.apply(y);
    else if (u < 0.75 * lambda) s.apply(z);
    return;
  }
  const Matrix4c rho = s.density();
  const Matrix4c out = (1.0 - 0.75 * lambda) * rho +
                       0.25 * lambda * (x * rho * x.adjoint() + y * rho * y.adjoint() + z * rho * z.adjoint());
  s.set_density(out);
}

}  // namespace

void EvolutionConfig::validate() const {
  if (dt_max_us && !(*dt_max_us > 0)) throw InvalidArgument("dt_max must be > 0");
  if (!(secular_window_mhz > 0)) throw InvalidArgument("secular_window must be > 0");
  if (!(steps_per_period > 0)) throw InvalidArgument("steps_per_period must be > 0");
}

SpinSystem::SpinSystem(const DonorParameters& params, const PhysicalConstants& constants)
    : params_(params), constants_(constants) {
  const HamiltonianMatrix h = build_full_hamiltonian(params, constants);
  h0_ = h.entries;
  eig_ = dressed_eigensystem(h);
  edsr_ = params.stark_slope_khz_per_v * 1e-3 * spin_ops::s_dot_i();
  // GHz/T equals MHz/mT.
  mag_ = constants.gamma_e_ghz_per_t * spin_ops::sx() - constants.gamma_n_mhz_per_t * 1e-3 * spin_ops::ix();
  sz_ = spin_ops::sz();
  niz_ = -spin_ops::iz();
  const Matrix4c& v = eig_.vectors;
  edsr_d_ = v.adjoint() * edsr_ * v;
  mag_d_ = v.adjoint() * mag_ * v;
  sz_d_ = v.adjoint() * sz_ * v;
  niz_d_ = v.adjoint() * niz_ * v;
}

const Matrix4c& SpinSystem::drive_bare(Channel c) const {
  return c == Channel::EdsrElectric ? edsr_ : mag_;
}

const Matrix4c& SpinSystem::drive_dressed(Channel c) const {
  return c == Channel::EdsrElectric ? edsr_d_ : mag_d_;
}

Vector4c SpinSystem::frame_phases(double t_us) const {
  Vector4c p;
  for (int k = 0; k < 4; ++k) p(k) = std::exp(kI * (kTwoPi * eig_.energies_mhz(k) * t_us));
  return p;
}

QuantumState SpinSystem::to_frame(const QuantumState& s, Frame target) const {
  if (s.frame == target) return s;
  const Vector4c ph = frame_phases(s.clock_us);
  // psi_rot = E(t) V^dagger psi_lab.
  const Matrix4c lab_to_rot = ph.asDiagonal() * eig_.vectors.adjoint();
  const Matrix4c m = target == Frame::Rotating ? lab_to_rot : Matrix4c(lab_to_rot.adjoint());
  QuantumState out = s;
  out.apply(m);
  out.frame = target;
  return out;
}

Matrix4c CompiledPulse::at(double t0_us) const {
  if (!shiftable) {
    if (std::abs(t0_us - t_ref_us) > 1e-12 * (1.0 + std::abs(t0_us))) {
      throw InvalidArgument("compiled pulse is bound to its start time");
    }
    return u0;
  }
  if (t0_us == 0 || phase_rates_mhz.isZero()) return u0;
  Vector4c q;
  for (int k = 0; k < 4; ++k) q(k) = std::exp(kI * (kTwoPi * phase_rates_mhz(k) * t0_us));
  return q.asDiagonal() * u0 * q.conjugate().asDiagonal();
}

CompiledPulse compile_tone(const SpinSystem& sys, const Tone& tone, const StaticShift& shift,
                           const EvolutionConfig& config, double t0_us) {
  validate_segment(tone);
  const double f = frequency_mhz(tone.frequency_ghz);
  if (config.frame == Frame::Rotating && config.rwa) {
    const RwaModel m = build_rwa(sys, tone.channel, tone.amplitude, tone.phase_rad, f, 0.0,
                                 tone.duration_us, shift, config, t0_us);
    return compile_rwa(m, tone.duration_us, config, t0_us, true);
  }
  return compile_full(sys, tone.channel, tone.amplitude, tone.phase_rad, f, 0.0, tone.duration_us,
                      shift, config, t0_us);
}

CompiledPulse compile_chirp(const SpinSystem& sys, const Chirp& chirp, const StaticShift& shift,
                            const EvolutionConfig& config, double t0_us) {
  validate_segment(chirp);
  const double f = frequency_mhz(chirp.f_start_ghz);
  const double rate = chirp.rate_mhz_per_us();
  if (config.frame == Frame::Rotating && config.rwa) {
    const RwaModel m = build_rwa(sys, chirp.channel, chirp.amplitude, chirp.phase_rad, f, rate,
                                 chirp.duration_us, shift, config, t0_us);
    return compile_rwa(m, chirp.duration_us, config, t0_us, false);
  }
  return compile_full(sys, chirp.channel, chirp.amplitude, chirp.phase_rad, f, rate,
                      chirp.duration_us, shift, config, t0_us);
}

Matrix4c delay_unitary(const SpinSystem& sys, double duration_us, const StaticShift& shift,
                       const EvolutionConfig& config, double t0_us) {
  if (config.frame == Frame::Rotating && config.rwa) {
    const Vector4d n = shift_diagonal(sys, shift);
    Vector4c ph;
    for (int k = 0; k < 4; ++k) ph(k) = std::exp(-kI * (kTwoPi * n(k) * duration_us));
    return ph.asDiagonal();
  }
  if (shift.electron_mhz == 0 && shift.nuclear_mhz == 0 && config.frame == Frame::Rotating) {
    return Matrix4c::Identity();
  }
  const Matrix4c lab = expm_hermitian(sys.h0_bare() + shift_bare(sys, shift), duration_us);
  if (config.frame == Frame::Lab) return lab;
  const Matrix4c& v = sys.eigen().vectors;
  const Vector4c e1 = sys.frame_phases(t0_us + duration_us);
  const Vector4c e0 = sys.frame_phases(t0_us);
  return e1.asDiagonal() * v.adjoint() * lab * v * e0.conjugate().asDiagonal();
}

QuantumState propagate(const SpinSystem& sys, const QuantumState& state,
                       const PulseSegment& segment, const NoiseRealization& realization,
                       const EvolutionConfig& config, PirsState* pirs) {
  config.validate();
  validate_segment(segment);
  QuantumState s = sys.to_frame(state, config.frame);
  const double t0 = s.clock_us;
  StaticShift shift{realization.electron_offset_mhz, realization.nuclear_offset_mhz};

  auto esr_pirs = [&]() {
    if (realization.pirs && pirs && pirs->edsr_on_time_us > 0) {
      shift.electron_mhz +=
          pirs_esr_shift(pirs->last_edsr_amplitude_v, pirs->edsr_on_time_us, *realization.pirs) * 1e-3;
    }
  };

  std::visit(overloaded{
                 [&](const Tone& tone) {
                   Tone t = tone;
                   if (t.channel == Channel::EdsrElectric) {
                     t.amplitude *= realization.edsr_rotation_scale;
                     if (realization.pirs && pirs) {
                       const double source_v = std::abs(tone.amplitude) / realization.pirs_attenuation;
                       shift.electron_mhz +=
                           pirs_edsr_shift(source_v, pirs->edsr_on_time_us + 0.5 * t.duration_us,
                                           *realization.pirs) * 1e-3;
                       pirs->edsr_on_time_us += t.duration_us;
                       pirs->last_edsr_amplitude_v = source_v;
                     }
                   } else {
                     esr_pirs();
                   }
                   s.apply(compile_tone(sys, t, shift, config, t0).at(t0));
                   s.clock_us = t0 + t.duration_us;
                   if (t.channel == Channel::EdsrElectric && realization.gate_depolarizing > 0) {
                     QuantumState r = sys.to_frame(s, Frame::Rotating);
                     depolarize_flipflop(r, realization.gate_depolarizing,
                                         derive_seed(realization.jump_seed, "depolarize", clock_bits(t0)));
                     s = sys.to_frame(r, config.frame);
                   }
                 },
                 [&](const Chirp& c) {
                   esr_pirs();
                   s.apply(compile_chirp(sys, c, shift, config, t0).at(t0));
                   s.clock_us = t0 + c.duration_us;
                 },
                 [&](const Delay& d) {
                   esr_pirs();
                   s.apply(delay_unitary(sys, d.duration_us, shift, config, t0));
                   s.clock_us = t0 + d.duration_us;
                   if (realization.has_relaxation()) {
                     Rng rng(derive_seed(realization.jump_seed, "relax", clock_bits(t0)));
                     QuantumState r = sys.to_frame(s, Frame::Rotating);
                     r = apply_relaxation(r, d.duration_us * 1e-6, realization.rates, rng);
                     s = sys.to_frame(r, config.frame);
                   }
                 },
                 [&](const ReadMarker&) {},
             },
             segment);
  return s;
}

QuantumState propagate(const QuantumState& state, const PulseSegment& segment,
                       const DonorParameters& params, const NoiseRealization& realization,
                       const EvolutionConfig& config, const PhysicalConstants& constants) {
  const SpinSystem sys(params, constants);
  return propagate(sys, state, segment, realization, config);
}

std::pair<Level, Level> chirp_target(const SpinSystem& sys, const Chirp& chirp) {
  const Matrix4c& op = sys.drive_dressed(chirp.channel);
  const double centre = 0.5 * (chirp.f_start_ghz + chirp.f_end_ghz) * 1e3;
  const double scale = op.cwiseAbs().maxCoeff();
  double best = kInfinity;
  std::pair<Level, Level> out{Level::UpUp, Level::DownUp};
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 4; ++l) {
      const double w = sys.eigen().energies_mhz(k) - sys.eigen().energies_mhz(l);
      if (w <= 0 || std::abs(op(k, l)) <= 1e-9 * scale) continue;
      if (std::abs(w - centre) < best) {
        best = std::abs(w - centre);
        out = {static_cast<Level>(k), static_cast<Level>(l)};
      }
    }
  }
  if (!std::isfinite(best)) throw InvalidArgument("channel couples no transition");
  return out;
}

double chirp_rabi_mhz(const SpinSystem& sys, const Chirp& chirp) {
  const auto [up, lo] = chirp_target(sys, chirp);
  return std::abs(chirp.amplitude * sys.drive_dressed(chirp.channel)(idx(up), idx(lo)));
}

double landau_zener_inversion(double rabi_mhz, double rate_mhz_per_us) {
  return 1.0 - std::exp(-kPi * kPi * rabi_mhz * rabi_mhz / std::abs(rate_mhz_per_us));
}

double adiabatic_inversion_probability(const SpinSystem& sys, const Chirp& chirp,
                                       const StaticShift& shift, const EvolutionConfig& config) {
  const auto [up, lo] = chirp_target(sys, chirp);
  QuantumState s = QuantumState::basis(lo, Frame::Rotating);
  s = sys.to_frame(s, config.frame);
  s.apply(compile_chirp(sys, chirp, shift, config, 0.0).at(0.0));
  s.clock_us = chirp.duration_us;
  s = sys.to_frame(s, Frame::Rotating);
  return s.population(up);
}

double adiabatic_inversion_probability(const Chirp& chirp, const DonorParameters& params,
                                       const NoiseEnvironment& env, const EvolutionConfig& config,
                                       const PhysicalConstants& constants) {
  const SpinSystem sys(params, constants);
  double offset_khz = 0;
  if (!env.si29.current_config.empty()) offset_khz += si29_offset(env.si29.current_config, env.si29.couplings_khz);
  return adiabatic_inversion_probability(sys, chirp, StaticShift{offset_khz * 1e-3, 0.0}, config);
}

Chirp calibrate_adiabatic(const Chirp& base, double target, const SpinSystem& sys,
                          const EvolutionConfig& config, double tolerance, int max_iterations) {
  if (!(target > 0 && target < 1)) throw InvalidArgument("target must lie in (0, 1)");
  const double span = std::abs(base.f_end_ghz - base.f_start_ghz) * 1e3;
  const double omega = chirp_rabi_mhz(sys, base);
  if (omega <= 0) throw InvalidArgument("chirp does not couple its target transition");
  auto prob = [&](double duration) {
    Chirp c = base;
    c.duration_us = duration;
    return adiabatic_inversion_probability(sys, c, StaticShift{}, config);
  };
  // Landau-Zener estimate for the bracket centre.
  const double rate_guess = kPi * kPi * omega * omega / -std::log(1.0 - target);
  double t_mid = span / rate_guess;
  double lo = t_mid / 4, hi = t_mid * 4;
  double p_lo = prob(lo), p_hi = prob(hi);
  for (int i = 0; i < 6 && p_lo > target; ++i) p_lo = prob(lo /= 4);
  for (int i = 0; i < 6 && p_hi < target; ++i) p_hi = prob(hi *= 4);
  if (p_lo > target || p_hi < target) {
    throw ConvergenceError("could not bracket the target inversion probability");
  }
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double p = prob(mid);
    if (std::abs(p - target) <= tolerance) {
      Chirp c = base;
      c.duration_us = mid;
      return c;
    }
    if (p < target) lo = mid; else hi = mid;
  }
  throw ConvergenceError("adiabatic calibration did not converge");
}

Chirp calibrate_half_adiabatic(double target, const DonorParameters& params,
                               const EvolutionConfig& config, const PhysicalConstants& constants) {
  if (!(target > 0 && target < 1)) throw InvalidArgument("target must lie in (0, 1)");
  const SpinSystem sys(params, constants);
  return calibrate_adiabatic(default_adiabatic_pulses(sys).aesr1, target, sys, config);
}

}  // namespace ffq
