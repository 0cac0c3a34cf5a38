#include "ffq/measurement.hpp"

#include <cmath>
#include <sstream>

namespace ffq {

void ReadoutParams::validate() const {
  if (!(tunnel_out_rate_per_ms > 0) || !(tunnel_in_rate_per_ms > 0)) {
    throw InvalidArgument("tunnel rates must be > 0");
  }
  if (!(detection_window_ms > 0)) throw InvalidArgument("detection window must be > 0");
  for (double p : {blip_miss_probability, dark_blip_probability, reload_error}) {
    if (!(p >= 0 && p <= 1)) throw InvalidArgument("readout probabilities must lie in [0, 1]");
  }
}

double ReadoutParams::blip_probability_up() const {
  return (1.0 - blip_miss_probability) * (1.0 - std::exp(-tunnel_out_rate_per_ms * detection_window_ms));
}

double ReadoutParams::electron_fidelity() const {
  return 0.5 * (blip_probability_up() + 1.0 - dark_blip_probability);
}

ReadoutParams ReadoutParams::ideal() {
  ReadoutParams p;
  p.tunnel_out_rate_per_ms = 1e3;
  p.detection_window_ms = 1.0;  // exp(-1000) underflows to 0
  p.blip_miss_probability = 0;
  p.dark_blip_probability = 0;
  p.reload_error = 0;
  return p;
}

ReadoutParams ReadoutParams::symmetric(double fidelity) {
  if (!(fidelity > 0.5 && fidelity <= 1)) throw InvalidArgument("fidelity must lie in (0.5, 1]");
  ReadoutParams p = ideal();
  p.blip_miss_probability = 1.0 - fidelity;
  p.dark_blip_probability = 1.0 - fidelity;
  return p;
}

void NuclearReadSettings::validate() const {
  if (n_shots < 1) throw InvalidArgument("n_shots must be >= 1");
  if (!(threshold >= 0 && threshold <= 1)) throw InvalidArgument("threshold must lie in [0, 1]");
}

std::pair<ShotRecord, QuantumState> electron_single_shot(const QuantumState& state,
                                                         const ReadoutParams& params, Rng& rng,
                                                         long shot_index) {
  if (state.frame != Frame::Rotating) {
    throw InvalidArgument("readout acts in the eigenbasis; convert the state to the rotating frame");
  }
  const Vector4d pop = state.populations();
  const double p_up = std::min(1.0, std::max(0.0, pop(0) + pop(1)));
  const bool up = rng.uniform() < p_up;
  ShotRecord rec;
  rec.shot_index = shot_index;
  rec.blip = rng.bernoulli(up ? params.blip_probability_up() : params.blip_probability_down());
  rec.electron_up_inferred = rec.blip;

  // Projection onto the outcome, then reload: up components move to down
  // with the nuclear part untouched.
  const bool left_up = up && rng.bernoulli(params.reload_error);
  Matrix4c m = Matrix4c::Zero();
  if (up && !left_up) {
    m(2, 0) = 1;
    m(3, 1) = 1;
  } else if (up) {
    m(0, 0) = 1;
    m(1, 1) = 1;
  } else {
    m(2, 2) = 1;
    m(3, 3) = 1;
  }
  QuantumState out = state;
  out.apply(m);
  if (out.is_pure()) {
    Vector4c v = out.vector();
    const double n = v.norm();
    if (n > 0) out.set_vector(v / n);
  } else {
    Matrix4c r = out.density();
    const double tr = r.trace().real();
    if (tr > 0) out.set_density(r / tr);
  }
  return {rec, out};
}

std::pair<NuclearReadResult, QuantumState> nuclear_read(const QuantumState& state, int n_shots,
                                                        double threshold, ReadTransition transition,
                                                        const CompiledPulse& cx,
                                                        const ReadoutParams& params, Rng& rng,
                                                        std::vector<ShotRecord>* log) {
  if (n_shots < 1) throw InvalidArgument("n_shots must be >= 1");
  QuantumState s = state;
  int blips = 0;
  for (int i = 0; i < n_shots; ++i) {
    s.apply(cx.at(s.clock_us));
    s.clock_us += cx.duration_us;
    auto [rec, next] = electron_single_shot(s, params, rng, i);
    s = std::move(next);
    blips += rec.blip ? 1 : 0;
    if (log) log->push_back(rec);
  }
  NuclearReadResult r;
  r.n_shots = n_shots;
  r.up_proportion = static_cast<double>(blips) / n_shots;
  const bool high = r.up_proportion > threshold;
  const NuclearSpin conditioned = transition == ReadTransition::Esr2 ? NuclearSpin::Up : NuclearSpin::Down;
  const NuclearSpin other = conditioned == NuclearSpin::Up ? NuclearSpin::Down : NuclearSpin::Up;
  r.state = high ? conditioned : other;
  return {r, s};
}

double flip_probability(const std::vector<NuclearSpin>& series) {
  if (series.size() < 2) throw InvalidArgument("flip probability needs at least 2 samples");
  std::size_t flips = 0;
  for (std::size_t i = 1; i < series.size(); ++i) flips += series[i] != series[i - 1] ? 1 : 0;
  return static_cast<double>(flips) / static_cast<double>(series.size() - 1);
}

QuantumState endor_initialize(const QuantumState& state, const CompiledPulse& aesr2,
                              const CompiledPulse& anmr1, const ReadoutParams& params, Rng& rng) {
  QuantumState s = state;
  s.apply(aesr2.at(s.clock_us));
  s.clock_us += aesr2.duration_us;
  s.apply(anmr1.at(s.clock_us));
  s.clock_us += anmr1.duration_us;
  return electron_single_shot(s, params, rng).second;
}

double binomial_misclassification(double p_blip, int n, double threshold, bool correct_is_high) {
  double total = 0;
  for (int k = 0; k <= n; ++k) {
    const bool high = static_cast<double>(k) / n > threshold;
    if (high == correct_is_high) continue;
    const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double lp = k == 0 ? 0.0 : k * std::log(p_blip);
    const double lq = k == n ? 0.0 : (n - k) * std::log1p(-p_blip);
    if ((p_blip == 0 && k > 0) || (p_blip == 1 && k < n)) continue;
    total += std::exp(logc + lp + lq);
  }
  return total;
}

std::string shot_log_csv(const std::vector<ShotRecord>& shots) {
  std::ostringstream os;
  os << "shot_index,blip,inferred_state\n";
  for (const auto& s : shots) {
    os << s.shot_index << ',' << (s.blip ? 1 : 0) << ',' << (s.electron_up_inferred ? "up" : "down")
       << '\n';
  }
  return os.str();
}

}  // namespace ffq
