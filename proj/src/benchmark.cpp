#include "ffq/benchmark.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace ffq {

const char* native_gate_name(NativeGateKind k) {
  switch (k) {
    case NativeGateKind::X: return "X";
    case NativeGateKind::Y: return "Y";
    case NativeGateKind::XHalf: return "+X/2";
    case NativeGateKind::MinusXHalf: return "-X/2";
    case NativeGateKind::YHalf: return "+Y/2";
    case NativeGateKind::MinusYHalf: return "-Y/2";
    case NativeGateKind::Idle: return "I";
  }
  return "?";
}

double NativeGateDurations::duration(NativeGateKind k) const {
  switch (k) {
    case NativeGateKind::X:
    case NativeGateKind::Y: return pi_us;
    case NativeGateKind::XHalf:
    case NativeGateKind::MinusXHalf: return x_half_us;
    case NativeGateKind::YHalf:
    case NativeGateKind::MinusYHalf: return y_half_us;
    case NativeGateKind::Idle: return idle_us;
  }
  return 0;
}

void NativeGateDurations::validate() const {
  if (!(pi_us > 0) || !(x_half_us > 0) || !(y_half_us > 0) || idle_us < 0) {
    throw InvalidArgument("native gate durations must be > 0");
  }
}

std::pair<double, double> native_rotation(NativeGateKind k) {
  switch (k) {
    case NativeGateKind::X: return {kPi, 0};
    case NativeGateKind::Y: return {kPi, kPi / 2};
    case NativeGateKind::XHalf: return {kPi / 2, 0};
    case NativeGateKind::MinusXHalf: return {kPi / 2, kPi};
    case NativeGateKind::YHalf: return {kPi / 2, kPi / 2};
    case NativeGateKind::MinusYHalf: return {kPi / 2, 3 * kPi / 2};
    case NativeGateKind::Idle: return {0, 0};
  }
  return {0, 0};
}

Matrix2c native_unitary(NativeGateKind k) {
  const auto [angle, phase] = native_rotation(k);
  const Complex i(0, 1);
  Matrix2c n;
  n << 0, std::polar(1.0, -phase), std::polar(1.0, phase), 0;
  return std::cos(angle / 2) * Matrix2c::Identity() - i * std::sin(angle / 2) * n;
}

bool equal_up_to_phase(const Matrix2c& a, const Matrix2c& b, double tol) {
  return std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < tol;
}

namespace {

std::vector<CliffordElement> build_table() {
  // Breadth-first search over words in a fixed generator order; the first
  // word reaching each element is kept.
  const std::array<NativeGateKind, 4> generators{NativeGateKind::X, NativeGateKind::XHalf,
                                                 NativeGateKind::MinusXHalf, NativeGateKind::YHalf};
  std::vector<CliffordElement> table;
  table.push_back({0, Matrix2c::Identity(), {}});
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const CliffordElement cur = table[queue.front()];
    queue.pop_front();
    for (NativeGateKind g : generators) {
      const Matrix2c u = native_unitary(g) * cur.unitary;
      bool seen = false;
      for (const auto& e : table) seen = seen || equal_up_to_phase(e.unitary, u);
      if (seen) continue;
      CliffordElement next{static_cast<int>(table.size()), u, cur.decomposition};
      next.decomposition.push_back(g);
      table.push_back(next);
      queue.push_back(table.size() - 1);
    }
  }
  if (table.size() != 24) throw Error("Clifford search did not close on 24 elements");
  return table;
}

}  // namespace

const std::vector<CliffordElement>& clifford_table() {
  static const std::vector<CliffordElement> table = build_table();
  return table;
}

int clifford_index(const Matrix2c& u) {
  for (const auto& e : clifford_table()) {
    if (equal_up_to_phase(e.unitary, u, 1e-6)) return e.index;
  }
  throw InvalidArgument("unitary is not a Clifford element");
}

int clifford_inverse(int index) {
  return clifford_index(clifford_table().at(index).unitary.adjoint());
}

int clifford_compose(int first, int second) {
  const auto& t = clifford_table();
  return clifford_index(t.at(second).unitary * t.at(first).unitary);
}

double mean_native_gates_per_clifford() {
  double s = 0;
  for (const auto& e : clifford_table()) s += static_cast<double>(e.decomposition.size());
  return s / 24.0;
}

RbSequence rb_sequence(int m, Rng& rng) {
  if (m < 1) throw InvalidArgument("RB sequence length must be >= 1");
  RbSequence s;
  int total = 0;
  for (int i = 0; i < m; ++i) {
    const int c = static_cast<int>(rng.uniform_int(0, 23));
    s.cliffords.push_back(c);
    total = clifford_compose(total, c);
  }
  s.recovery = clifford_inverse(total);
  return s;
}

PulseSequence rb_pulses(const SpinSystem& sys, const RbSequence& seq, const NativeGateDurations& d,
                        double drive_offset_mhz) {
  d.validate();
  const double rabi_per_v =
      tone_rabi_mhz(sys, Channel::EdsrElectric, 1.0, Level::UpDown, Level::DownUp);
  PulseSequence out;
  out.label = "rb";
  auto add = [&](int c) {
    for (NativeGateKind g : clifford_table().at(c).decomposition) {
      const auto [angle, phase] = native_rotation(g);
      const double dur = d.duration(g);
      if (g == NativeGateKind::Idle) {
        if (dur > 0) out.add(Delay{dur});
        continue;
      }
      Tone t = flipflop_rotation(sys, angle, phase, angle / (kTwoPi * rabi_per_v * dur), drive_offset_mhz);
      t.duration_us = dur;
      out.add(t);
    }
  };
  for (int c : seq.cliffords) add(c);
  add(seq.recovery);
  out.add(ReadMarker{ReadKind::Nuclear, "rb"});
  return out;
}

void RbConfig::validate() const {
  if (lengths.empty()) throw InvalidArgument("RB needs at least one sequence length");
  for (int m : lengths) {
    if (m < 1) throw InvalidArgument("RB sequence lengths must be >= 1");
  }
  if (sequences_per_length < 1 || shots < 1) throw InvalidArgument("RB sequences and shots must be >= 1");
  if (!(prep_error >= 0 && prep_error <= 1)) throw InvalidArgument("prep_error must lie in [0, 1]");
  if (max_remeasure < 0) throw InvalidArgument("max_remeasure must be >= 0");
  durations.validate();
}

RbRun run_rb(Simulator& sim, const RbConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& env = sim.config().env;
  RbRun run;
  for (std::size_t li = 0; li < config.lengths.size(); ++li) {
    RbPoint point;
    point.m = config.lengths[li];
    for (int si = 0; si < config.sequences_per_length; ++si) {
      Rng rng(derive_seed(seed, "rb-sequence", li, static_cast<std::uint64_t>(si)));
      const RbSequence seq = rb_sequence(point.m, rng);
      double survival = 0;
      for (int attempt = 0;; ++attempt) {
        // The drive is retuned to the line found by the spectrum scan before the block.
        const std::vector<int> before = sim.sampler().si29_config();
        const double offset_mhz =
            before.empty() ? 0.0 : si29_offset(before, env.si29.couplings_khz) * 1e-3;
        const PulseSequence pulses = rb_pulses(sim.system(), seq, config.durations, offset_mhz);
        int up = 0;
        for (int shot = 0; shot < config.shots; ++shot) {
          const NoiseRealization r = sim.sampler().sample_after(env.shot_interval_s, rng);
          const Level start = rng.bernoulli(config.prep_error) ? Level::UpDown : Level::DownUp;
          const auto res = sim.run_sequence(QuantumState::basis(start), pulses, r, rng);
          up += res.log.nuclear.back().state == NuclearSpin::Up ? 1 : 0;
        }
        ++run.blocks_measured;
        survival = static_cast<double>(up) / config.shots;
        const bool changed = sim.sampler().si29_config() != before;
        if (!(config.frequency_check && changed) || attempt >= config.max_remeasure) break;
        ++run.blocks_discarded;
      }
      point.survivals.push_back(survival);
    }
    const double n = static_cast<double>(point.survivals.size());
    point.mean = std::accumulate(point.survivals.begin(), point.survivals.end(), 0.0) / n;
    double var = 0;
    for (double v : point.survivals) var += (v - point.mean) * (v - point.mean);
    if (n > 1) {
      point.sem = std::sqrt(var / (n - 1) / n);
    } else {
      point.sem = std::sqrt(point.mean * (1 - point.mean) / config.shots);
    }
    run.points.push_back(point);
  }
  return run;
}

double clifford_fidelity(double p) { return 1.0 - (1.0 - p) / 2.0; }

double native_fidelity(double f_clifford, double gates_per_clifford) {
  if (!(gates_per_clifford > 0)) throw InvalidArgument("gates per Clifford must be > 0");
  return 1.0 - (1.0 - f_clifford) / gates_per_clifford;
}

RbResult fit_rb(const std::vector<RbPoint>& points, double gates_per_clifford) {
  if (points.size() < 3) throw InvalidArgument("RB fit needs at least 3 lengths");
  RbResult r;
  Dataset d;
  std::vector<double> err;
  // Floor on the weights so a length with identical survivals cannot dominate.
  double floor = 0;
  for (const auto& p : points) floor = std::max(floor, 1e-3 * p.sem);
  floor = std::max(floor, 1e-6);
  for (const auto& p : points) {
    r.lengths.push_back(p.m);
    r.survival.push_back(p.mean);
    r.sem.push_back(p.sem);
    d.x.push_back(p.m);
    d.y.push_back(p.mean);
    err.push_back(std::max(p.sem, floor));
  }
  d.y_err = err;
  r.fit = fit_rb_decay(d);
  r.a = r.fit.value("A");
  r.p = r.fit.value("p");
  r.b = r.fit.value("B");
  r.p_sigma = r.fit.sigma("p");
  r.f_clifford = clifford_fidelity(r.p);
  r.f_clifford_ci95 = 1.96 * r.p_sigma / 2.0;
  r.f_native = native_fidelity(r.f_clifford, gates_per_clifford);
  r.f_native_ci95 = r.f_clifford_ci95 / gates_per_clifford;
  return r;
}

double depolarizing_clifford_decay(double r) {
  double s = 0;
  for (const auto& e : clifford_table()) s += std::pow(1.0 - 2.0 * r, static_cast<double>(e.decomposition.size()));
  return s / 24.0;
}

}  // namespace ffq
