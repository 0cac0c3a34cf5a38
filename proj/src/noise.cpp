#include "ffq/noise.hpp"

#include <algorithm>
#include <cmath>

#include "ffq/state.hpp"

namespace ffq {

namespace {

double rate_of(double t_s) { return std::isinf(t_s) ? 0.0 : 1.0 / t_s; }

// Integral over s in [0,t] of exp(-a s) exp(-b (t-s)).
double cascade(double a, double b, double t) {
  const double d = a - b;
  if (std::abs(d) * t < 1e-8) return t * std::exp(-0.5 * (a + b) * t);
  return (std::exp(-b * t) - std::exp(-a * t)) / d;
}

double flip_probability_over(double rate_hz, double dt_s) {
  return 0.5 * (1.0 - std::exp(-2.0 * rate_hz * dt_s));
}

}  // namespace

void RelaxationRates::validate() const {
  if (!(t1e_s > 0) || !(t1ff_s > 0) || !(t1n_s > 0)) {
    throw InvalidArgument("relaxation times must be > 0");
  }
}

void DephasingModel::validate() const {
  if (!(quasi_static_sigma_khz >= 0)) throw InvalidArgument("quasi_static_sigma must be >= 0");
  for (const auto& t : telegraph) {
    if (!(t.switching_rate_hz > 0)) throw InvalidArgument("telegraph switching_rate must be > 0");
  }
}

void Si29Bath::validate() const {
  for (double c : couplings_khz) {
    if (!(c >= 0)) throw InvalidArgument("29Si couplings must be >= 0");
  }
  if (!current_config.empty() && current_config.size() != couplings_khz.size()) {
    throw InvalidArgument("29Si config length does not match couplings");
  }
  for (int s : current_config) {
    if (s != 1 && s != -1) throw InvalidArgument("29Si config entries must be +1 or -1");
  }
  if (!(flip_rate_hz >= 0)) throw InvalidArgument("29Si flip_rate must be >= 0");
}

void PirsModel::validate() const {
  for (const auto& r : edsr_rows) {
    if (!(r.tau_sat_us > 0)) throw InvalidArgument("PIRS tau_sat must be > 0");
  }
}

void NoiseEnvironment::validate() const {
  rates.validate();
  dephasing.validate();
  si29.validate();
  pirs.validate();
  if (!(nuclear_sigma_khz >= 0)) throw InvalidArgument("nuclear_sigma must be >= 0");
  if (!(gate_depolarizing >= 0 && gate_depolarizing <= 0.5)) {
    throw InvalidArgument("gate_depolarizing must be in [0, 0.5]");
  }
  if (!(shot_interval_s >= 0)) throw InvalidArgument("shot_interval must be >= 0");
  if (!(pirs_attenuation > 0)) throw InvalidArgument("pirs_attenuation must be > 0");
}

bool NoiseRealization::has_relaxation() const {
  return std::isfinite(rates.t1e_s) || std::isfinite(rates.t1ff_s) || std::isfinite(rates.t1n_s);
}

double si29_offset(const std::vector<int>& config, const std::vector<double>& couplings_khz) {
  if (config.size() != couplings_khz.size()) {
    throw InvalidArgument("29Si config length does not match couplings");
  }
  double f = 0;
  for (std::size_t i = 0; i < config.size(); ++i) f += config[i] * couplings_khz[i] / 2.0;
  return f;
}

std::vector<double> si29_offsets_enumerated(const std::vector<double>& couplings_khz,
                                            double merge_tolerance_khz) {
  const std::size_t n = couplings_khz.size();
  if (n > 20) throw InvalidArgument("too many 29Si couplings to enumerate");
  std::vector<double> all;
  std::vector<int> config(n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) config[i] = (mask >> i) & 1 ? 1 : -1;
    all.push_back(si29_offset(config, couplings_khz));
  }
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double v : all) {
    if (out.empty() || v - out.back() > merge_tolerance_khz) out.push_back(v);
  }
  return out;
}

double pirs_edsr_shift(double amplitude_v, double duration_us, const PirsModel& model) {
  if (duration_us < 0) throw InvalidArgument("duration must be >= 0");
  const PirsEdsrRow* exact = nullptr;
  for (const auto& r : model.edsr_rows) {
    if (std::abs(r.amplitude_v - amplitude_v) <= model.match_tolerance_v) exact = &r;
  }
  PirsEdsrRow row;
  if (exact) {
    row = *exact;
  } else {
    if (!model.interpolate || model.edsr_rows.size() < 2) {
      throw InvalidArgument("EDSR amplitude not in the PIRS table and interpolation is off");
    }
    std::vector<PirsEdsrRow> rows = model.edsr_rows;
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.amplitude_v < b.amplitude_v; });
    if (amplitude_v < rows.front().amplitude_v || amplitude_v > rows.back().amplitude_v) {
      throw InvalidArgument("EDSR amplitude outside the PIRS table range");
    }
    std::size_t k = 1;
    while (rows[k].amplitude_v < amplitude_v) ++k;
    const auto& lo = rows[k - 1];
    const auto& hi = rows[k];
    const double w = (amplitude_v - lo.amplitude_v) / (hi.amplitude_v - lo.amplitude_v);
    row.amplitude_v = amplitude_v;
    row.delta_f_a_khz = lo.delta_f_a_khz + w * (hi.delta_f_a_khz - lo.delta_f_a_khz);
    row.delta_f_0_khz = lo.delta_f_0_khz + w * (hi.delta_f_0_khz - lo.delta_f_0_khz);
    row.tau_sat_us = 1.0 / (1.0 / lo.tau_sat_us + w * (1.0 / hi.tau_sat_us - 1.0 / lo.tau_sat_us));
  }
  return row.delta_f_a_khz * (1.0 - std::exp(-duration_us / row.tau_sat_us)) + row.delta_f_0_khz;
}

double pirs_esr_shift(double amplitude_v, double duration_us, const PirsModel& model) {
  return model.esr_slope_khz_per_v * amplitude_v + model.esr_slope_hz_per_us * 1e-3 * duration_us;
}

double combined_t1(const RelaxationRates& rates) {
  rates.validate();
  const double g = rate_of(rates.t1e_s) + rate_of(rates.t1ff_s);
  return g == 0 ? kInfinity : 1.0 / g;
}

Eigen::Matrix4d relaxation_transfer(double dt_s, const RelaxationRates& rates) {
  const double ge = rate_of(rates.t1e_s);
  const double gf = rate_of(rates.t1ff_s);
  const double gn = rate_of(rates.t1n_s);
  const int uu = idx(Level::UpUp), ud = idx(Level::UpDown), du = idx(Level::DownUp),
            dd = idx(Level::DownDown);
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(uu, uu) = std::exp(-ge * dt_s);
  m(ud, ud) = std::exp(-(ge + gf) * dt_s);
  m(dd, dd) = std::exp(-gn * dt_s);
  m(dd, ud) = ge * cascade(ge + gf, gn, dt_s);
  for (int k = 0; k < 4; ++k) {
    double rest = 0;
    for (int j = 0; j < 4; ++j)
      if (j != du) rest += m(j, k);
    m(du, k) = 1.0 - rest;
  }
  return m;
}

QuantumState apply_relaxation(const QuantumState& state, double dt_s, const RelaxationRates& rates,
                              Rng& rng) {
  if (dt_s < 0) throw InvalidArgument("dt must be >= 0");
  if (state.frame != Frame::Rotating) {
    throw InvalidArgument("relaxation acts on eigenbasis populations; convert to the rotating frame");
  }
  if (dt_s == 0) return state;
  const double ge = rate_of(rates.t1e_s);
  const double gf = rate_of(rates.t1ff_s);
  const double gn = rate_of(rates.t1n_s);
  const Vector4d gamma(ge, ge + gf, 0.0, gn);

  if (!state.is_pure()) {
    Matrix4c rho = state.density();
    const Eigen::Matrix4d m = relaxation_transfer(dt_s, rates);
    const Vector4d p = m * state.populations();
    for (int k = 0; k < 4; ++k) {
      for (int l = 0; l < 4; ++l) {
        if (k == l) {
          rho(k, k) = p(k);
        } else {
          rho(k, l) *= std::exp(-0.5 * (gamma(k) + gamma(l)) * dt_s);
        }
      }
    }
    QuantumState out = state;
    out.set_density(rho);
    return out;
  }

  // Waiting-time trajectory.
  Vector4c psi = state.vector();
  double remaining = dt_s;
  while (remaining > 0) {
    auto survival = [&](double t) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += std::norm(psi(k)) * std::exp(-gamma(k) * t);
      return s;
    };
    const double u = rng.uniform();
    if (survival(remaining) >= u) {
      for (int k = 0; k < 4; ++k) psi(k) *= std::exp(-0.5 * gamma(k) * remaining);
      psi.normalize();
      break;
    }
    double lo = 0, hi = remaining;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (survival(mid) > u) lo = mid; else hi = mid;
    }
    const double t = 0.5 * (lo + hi);
    Vector4d w;
    for (int k = 0; k < 4; ++k) w(k) = std::norm(psi(k)) * std::exp(-gamma(k) * t);
    // Channels: (source, target, rate).
    struct Channel { int from, to; double rate; };
    const Channel channels[] = {{idx(Level::UpUp), idx(Level::DownUp), ge},
                                {idx(Level::UpDown), idx(Level::DownDown), ge},
                                {idx(Level::UpDown), idx(Level::DownUp), gf},
                                {idx(Level::DownDown), idx(Level::DownUp), gn}};
    double total = 0;
    for (const auto& c : channels) total += c.rate * w(c.from);
    double pick = rng.uniform() * total;
    int target = idx(Level::DownUp);
    for (const auto& c : channels) {
      const double p = c.rate * w(c.from);
      if (p <= 0) continue;
      target = c.to;
      if (pick < p) break;
      pick -= p;
    }
    psi = Vector4c::Zero();
    psi(target) = 1.0;
    remaining -= t;
  }
  QuantumState out = state;
  out.set_vector(psi);
  return out;
}

NoiseSampler::NoiseSampler(const NoiseEnvironment& env, Rng& rng) : env_(env) {
  env_.validate();
  si29_config_ = env_.si29.current_config;
  if (si29_config_.empty()) {
    for (std::size_t i = 0; i < env_.si29.couplings_khz.size(); ++i) {
      si29_config_.push_back(rng.bernoulli(0.5) ? 1 : -1);
    }
  }
  for (std::size_t i = 0; i < env_.dephasing.telegraph.size(); ++i) {
    telegraph_state_.push_back(rng.bernoulli(0.5) ? 1 : -1);
  }
}

void NoiseSampler::advance(double elapsed_s, Rng& rng) {
  if (elapsed_s <= 0) return;
  if (env_.si29.flip_rate_hz > 0) {
    const double p = flip_probability_over(env_.si29.flip_rate_hz, elapsed_s);
    for (int& s : si29_config_) {
      if (rng.bernoulli(p)) s = -s;
    }
  }
  for (std::size_t i = 0; i < telegraph_state_.size(); ++i) {
    const double p = flip_probability_over(env_.dephasing.telegraph[i].switching_rate_hz, elapsed_s);
    if (rng.bernoulli(p)) telegraph_state_[i] = -telegraph_state_[i];
  }
}

NoiseRealization NoiseSampler::sample(Rng& rng) { return sample_after(env_.shot_interval_s, rng); }

NoiseRealization NoiseSampler::sample_after(double elapsed_s, Rng& rng) {
  advance(elapsed_s, rng);
  NoiseRealization r;
  double offset_khz = 0;
  if (env_.dephasing.quasi_static_sigma_khz > 0) {
    offset_khz += rng.normal(0.0, env_.dephasing.quasi_static_sigma_khz);
  }
  for (std::size_t i = 0; i < telegraph_state_.size(); ++i) {
    offset_khz += telegraph_state_[i] * env_.dephasing.telegraph[i].amplitude_khz;
  }
  r.si29_config = si29_config_;
  r.si29_offset_khz = si29_config_.empty() ? 0.0 : si29_offset(si29_config_, env_.si29.couplings_khz);
  offset_khz += r.si29_offset_khz;
  r.electron_offset_mhz = offset_khz * 1e-3;
  if (env_.nuclear_sigma_khz > 0) r.nuclear_offset_mhz = rng.normal(0.0, env_.nuclear_sigma_khz) * 1e-3;
  r.rates = env_.rates;
  r.jump_seed = rng.next();
  r.gate_depolarizing = env_.gate_depolarizing;
  r.edsr_rotation_scale = env_.edsr_rotation_scale;
  if (env_.pirs_enabled) r.pirs = env_.pirs;
  r.pirs_attenuation = env_.pirs_attenuation;
  return r;
}

NoiseRealization sample_realization(const NoiseEnvironment& env, Rng& rng) {
  NoiseSampler sampler(env, rng);
  return sampler.sample(rng);
}

}  // namespace ffq
