#include "ffq/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace ffq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void Dataset::validate(bool require_increasing) const {
  if (x.size() != y.size()) throw InvalidArgument("dataset x and y lengths differ");
  if (y_err && y_err->size() != y.size()) throw InvalidArgument("dataset y_err length differs");
  if (y_err) {
    for (double e : *y_err) {
      if (!(e > 0)) throw InvalidArgument("y_err entries must be > 0");
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw InvalidArgument("dataset has non-finite values");
    if (require_increasing && i > 0 && !(x[i] > x[i - 1])) {
      throw InvalidArgument("dataset x must be strictly increasing");
    }
  }
}

std::size_t FitResult::index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw InvalidArgument("fit has no parameter '" + name + "'");
}

double FitResult::value(const std::string& name) const { return params(index(name)); }

double FitResult::sigma(const std::string& name) const {
  const auto i = index(name);
  return std::sqrt(std::max(0.0, covariance(i, i)));
}

namespace {

struct Evaluation {
  VectorXd r;  // weighted residuals y - f
  MatrixXd j;  // weighted Jacobian of f
  double cost = 0;
};

Evaluation evaluate(const ModelFunction& model, const Dataset& d, const VectorXd& w,
                    const VectorXd& p, bool jacobian) {
  Evaluation e;
  VectorXd f(d.size());
  MatrixXd jac;
  model(p, d.x, f, jacobian ? &jac : nullptr);
  e.r.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) e.r(i) = w(i) * (d.y[i] - f(i));
  if (jacobian) e.j = w.asDiagonal() * jac;
  e.cost = e.r.squaredNorm();
  return e;
}

}  // namespace

FitResult levenberg_marquardt(const ModelFunction& model, const Dataset& data, const VectorXd& p0,
                              std::vector<std::string> names, const LmOptions& opt) {
  data.validate(false);
  const int n = static_cast<int>(data.size());
  const int k = static_cast<int>(p0.size());
  if (static_cast<int>(names.size()) != k) throw InvalidArgument("parameter names do not match p0");
  std::vector<int> free;
  for (int i = 0; i < k; ++i) {
    if (opt.fixed.empty() || !opt.fixed.at(i)) free.push_back(i);
  }
  const int m = static_cast<int>(free.size());
  if (n < m) throw InvalidArgument("fewer data points than free parameters");
  if (opt.valid && !opt.valid(p0)) throw InvalidArgument("initial parameters are invalid for the model");

  VectorXd w = VectorXd::Ones(n);
  if (data.y_err) {
    for (int i = 0; i < n; ++i) w(i) = 1.0 / (*data.y_err)[i];
  }

  FitResult res;
  res.names = std::move(names);
  VectorXd p = p0;
  Evaluation cur = evaluate(model, data, w, p, true);
  double lambda = opt.lambda0;
  int it = 0;
  bool converged = false;
  auto free_jacobian = [&](const MatrixXd& j) {
    MatrixXd jf(n, m);
    for (int c = 0; c < m; ++c) jf.col(c) = j.col(free[c]);
    return jf;
  };

  for (; it < opt.max_iterations; ++it) {
    if (cur.cost <= opt.cost_tolerance) {
      converged = true;
      break;
    }
    const MatrixXd jf = free_jacobian(cur.j);
    const MatrixXd a = jf.transpose() * jf;
    const VectorXd g = jf.transpose() * cur.r;
    bool accepted = false;
    while (lambda < 1e20) {
      MatrixXd damped = a;
      for (int c = 0; c < m; ++c) damped(c, c) += lambda * std::max(a(c, c), 1e-300);
      const VectorXd delta = damped.ldlt().solve(g);
      VectorXd trial = p;
      for (int c = 0; c < m; ++c) trial(free[c]) += delta(c);
      const bool ok = trial.allFinite() && (!opt.valid || opt.valid(trial));
      if (ok) {
        Evaluation next = evaluate(model, data, w, trial, false);
        if (std::isfinite(next.cost) && next.cost < cur.cost) {
          const double step = delta.norm();
          const double scale = VectorXd(trial).norm();
          const double gain = (cur.cost - next.cost) / std::max(cur.cost, 1e-300);
          p = trial;
          cur = evaluate(model, data, w, p, true);
          lambda = std::max(lambda / 10, 1e-15);
          accepted = true;
          if (step <= opt.step_tolerance * (scale + opt.step_tolerance) || gain < 1e-15) converged = true;
          break;
        }
      }
      lambda *= 10;
    }
    // No downhill step exists at any damping: numerically at the minimum.
    if (!accepted) converged = true;
    if (converged) break;
  }

  res.params = p;
  res.iterations = it;
  res.converged = converged;
  res.residual_norm = std::sqrt(cur.cost);

  const MatrixXd jf = free_jacobian(cur.j);
  const MatrixXd a = jf.transpose() * jf;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd ev = es.eigenvalues();
  const double emax = ev.cwiseAbs().maxCoeff();
  MatrixXd inv = MatrixXd::Zero(m, m);
  bool deficient = false;
  for (int c = 0; c < m; ++c) {
    if (ev(c) > 1e-13 * emax && ev(c) > 0) {
      inv += es.eigenvectors().col(c) * es.eigenvectors().col(c).transpose() / ev(c);
    } else {
      deficient = true;
    }
  }
  if (deficient) res.warnings.push_back("rank-deficient Jacobian");
  const double s2 = data.y_err ? 1.0 : (n > m ? cur.cost / (n - m) : 0.0);
  res.covariance = MatrixXd::Zero(k, k);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) res.covariance(free[r], free[c]) = s2 * inv(r, c);
  }
  return res;
}

namespace {

LmOptions with_valid(std::function<bool(const VectorXd&)> valid) {
  LmOptions o;
  o.valid = std::move(valid);
  return o;
}

bool better(const FitResult& a, const FitResult& b) {
  if (a.converged != b.converged) return a.converged;
  return a.residual_norm < b.residual_norm;
}

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

}  // namespace

double stretched_exp(double t, double p, double t2, double beta, double p_inf) {
  return p * std::exp(-std::pow(t / t2, beta)) + p_inf;
}

FitResult fit_stretched_exp(const Dataset& data) {
  data.validate();
  const std::size_t n = data.size();
  if (n < 5) throw InvalidArgument("stretched exponential fit needs at least 5 points");
  const ModelFunction model = [](const VectorXd& p, const std::vector<double>& x, VectorXd& f,
                                 MatrixXd* j) {
    f.resize(x.size());
    if (j) j->resize(x.size(), 4);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = x[i] > 0 ? std::pow(x[i] / p(1), p(2)) : 0.0;
      const double e = std::exp(-u);
      f(i) = p(0) * e + p(3);
      if (j) {
        (*j)(i, 0) = e;
        (*j)(i, 1) = p(0) * e * u * p(2) / p(1);
        (*j)(i, 2) = x[i] > 0 ? -p(0) * e * u * std::log(x[i] / p(1)) : 0.0;
        (*j)(i, 3) = 1.0;
      }
    }
  };
  const auto valid = [](const VectorXd& p) { return p(1) > 0 && p(2) > 0.05 && p(2) < 20; };

  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  const double span = data.x.back() - data.x.front();
  std::vector<double> offsets{mean_of(data.y, n - tail, n), data.y.back()};
  FitResult best;
  bool have = false;
  for (double p_inf : offsets) {
    const double amp = data.y.front() - p_inf;
    if (amp == 0) continue;
    // Log-log linearization of -ln((y - P_inf)/P) against ln t.
    std::vector<double> lx, ly;
    double t_e = span / 3;
    bool t_e_found = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double ratio = (data.y[i] - p_inf) / amp;
      if (!t_e_found && ratio < std::exp(-1.0) && data.x[i] > 0) {
        t_e = data.x[i];
        t_e_found = true;
      }
      if (data.x[i] > 0 && ratio > 0.02 && ratio < 0.98) {
        lx.push_back(std::log(data.x[i]));
        ly.push_back(std::log(-std::log(ratio)));
      }
    }
    std::vector<std::pair<double, double>> starts{{t_e, 1.0}, {t_e, 2.0}};
    if (lx.size() >= 2) {
      const LineFit lf = fit_line(lx, ly);
      if (lf.slope > 0.05 && lf.slope < 20) starts.insert(starts.begin(), {std::exp(-lf.intercept / lf.slope), lf.slope});
    }
    for (const auto& [t2, beta] : starts) {
      VectorXd p0(4);
      p0 << amp, t2, beta, p_inf;
      if (!valid(p0)) continue;
      FitResult r = levenberg_marquardt(model, data, p0, {"P", "T2", "beta", "P_inf"}, with_valid(valid));
      if (!have || better(r, best)) {
        best = std::move(r);
        have = true;
      }
    }
  }
  if (!have || !best.converged) throw ConvergenceError("stretched exponential fit did not converge");
  if (!best.warnings.empty()) throw ConvergenceError("stretched exponential fit is rank deficient");
  best.model = "stretched_exponential";
  return best;
}

double damped_sinusoid(double t, double p, double gamma, double f, double phi, double p_inf) {
  return p * std::exp(-gamma * t) * std::sin(kTwoPi * f * t + phi) + p_inf;
}

double decay_time(const FitResult& fit) {
  const double g = fit.value("gamma");
  return g > 0 ? 1.0 / g : std::numeric_limits<double>::infinity();
}

namespace {

double periodogram(const Dataset& d, double mean, double f) {
  std::complex<double> s = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    s += (d.y[i] - mean) * std::polar(1.0, -kTwoPi * f * d.x[i]);
  }
  return std::norm(s);
}

}  // namespace

FitResult fit_damped_sinusoid(const Dataset& data) {
  data.validate();
  const std::size_t n = data.size();
  if (n < 6) throw InvalidArgument("damped sinusoid fit needs at least 6 points");
  const double span = data.x.back() - data.x.front();
  const double mean = mean_of(data.y, 0, n);
  const double nyquist = 0.5 * static_cast<double>(n - 1) / span;

  // Discrete spectral peak on a 4x oversampled grid, then golden-section refinement.
  const double df = 1.0 / (4 * span);
  double f_best = df, p_best = -1;
  for (double f = df; f <= nyquist; f += df) {
    const double pw = periodogram(data, mean, f);
    if (pw > p_best) {
      p_best = pw;
      f_best = f;
    }
  }
  {
    double lo = std::max(1e-12, f_best - df), hi = f_best + df;
    const double g = 0.5 * (std::sqrt(5.0) - 1);
    for (int i = 0; i < 60; ++i) {
      const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
      if (periodogram(data, mean, a) > periodogram(data, mean, b)) hi = b; else lo = a;
    }
    f_best = 0.5 * (lo + hi);
  }
  if (f_best * span < 2.0) throw InvalidArgument("damped sinusoid fit needs at least 2 sampled periods");

  // Amplitude and phase by linear least squares at the peak frequency.
  MatrixXd a(n, 3);
  VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = std::sin(kTwoPi * f_best * data.x[i]);
    a(i, 1) = std::cos(kTwoPi * f_best * data.x[i]);
    a(i, 2) = 1.0;
    y(i) = data.y[i];
  }
  const VectorXd c = a.colPivHouseholderQr().solve(y);

  const ModelFunction model = [](const VectorXd& p, const std::vector<double>& x, VectorXd& f,
                                 MatrixXd* j) {
    f.resize(x.size());
    if (j) j->resize(x.size(), 5);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = std::exp(-p(1) * x[i]);
      const double th = kTwoPi * p(2) * x[i] + p(3);
      const double s = std::sin(th), co = std::cos(th);
      f(i) = p(0) * e * s + p(4);
      if (j) {
        (*j)(i, 0) = e * s;
        (*j)(i, 1) = -x[i] * p(0) * e * s;
        (*j)(i, 2) = p(0) * e * co * kTwoPi * x[i];
        (*j)(i, 3) = p(0) * e * co;
        (*j)(i, 4) = 1.0;
      }
    }
  };
  const auto valid = [](const VectorXd& p) { return p(2) > 0 && std::abs(p(1)) < 1e6; };
  FitResult best;
  bool have = false;
  for (double gamma : {0.0, 1.0 / span, 3.0 / span}) {
    VectorXd p0(5);
    p0 << std::hypot(c(0), c(1)), gamma, f_best, std::atan2(c(1), c(0)), c(2);
    FitResult r = levenberg_marquardt(model, data, p0, {"P", "gamma", "f", "phi", "P_inf"}, with_valid(valid));
    if (!have || better(r, best)) {
      best = std::move(r);
      have = true;
    }
  }
  if (!best.converged) throw ConvergenceError("damped sinusoid fit did not converge");
  // Canonical sign: positive amplitude, phase in (-pi, pi].
  if (best.params(0) < 0) {
    best.params(0) = -best.params(0);
    best.params(3) += kPi;
  }
  best.params(3) = std::remainder(best.params(3), kTwoPi);
  best.model = "damped_sinusoid";
  return best;
}

double gaussian_mixture(double x, const VectorXd& p, int n_peaks) {
  double s = p(3 * n_peaks);
  for (int k = 0; k < n_peaks; ++k) {
    const double z = (x - p(3 * k + 1)) / p(3 * k + 2);
    s += p(3 * k) * std::exp(-0.5 * z * z);
  }
  return s;
}

FitResult fit_gaussian_mixture(const Dataset& data, int n_peaks) {
  if (n_peaks < 1 || n_peaks > 3) throw InvalidArgument("n_peaks must be 1, 2 or 3");
  data.validate();
  const std::size_t n = data.size();
  if (n < static_cast<std::size_t>(3 * n_peaks + 2)) throw InvalidArgument("too few points for the mixture");

  std::vector<double> sorted = data.y;
  std::sort(sorted.begin(), sorted.end());
  const double offset = sorted[n / 10];
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = data.y[i] - offset;
  const double dx = (data.x.back() - data.x.front()) / static_cast<double>(n - 1);

  // Greedy initialization: take the largest residual peak, estimate its
  // half-maximum width, subtract it, repeat.
  VectorXd p0(3 * n_peaks + 1);
  for (int k = 0; k < n_peaks; ++k) {
    const auto i = static_cast<std::size_t>(std::max_element(res.begin(), res.end()) - res.begin());
    const double amp = res[i];
    std::size_t l = i, r = i;
    while (l > 0 && res[l] > 0.5 * amp) --l;
    while (r + 1 < n && res[r] > 0.5 * amp) ++r;
    const double sigma = std::max(dx, (data.x[r] - data.x[l]) / fwhm_from_sigma(1.0));
    p0(3 * k) = amp;
    p0(3 * k + 1) = data.x[i];
    p0(3 * k + 2) = sigma;
    for (std::size_t q = 0; q < n; ++q) {
      const double z = (data.x[q] - data.x[i]) / sigma;
      res[q] -= amp * std::exp(-0.5 * z * z);
    }
  }
  p0(3 * n_peaks) = offset;

  const ModelFunction model = [n_peaks](const VectorXd& p, const std::vector<double>& x, VectorXd& f,
                                        MatrixXd* j) {
    f.resize(x.size());
    if (j) j->resize(x.size(), 3 * n_peaks + 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      f(i) = p(3 * n_peaks);
      if (j) (*j)(i, 3 * n_peaks) = 1.0;
      for (int k = 0; k < n_peaks; ++k) {
        const double s = p(3 * k + 2);
        const double z = (x[i] - p(3 * k + 1)) / s;
        const double e = std::exp(-0.5 * z * z);
        f(i) += p(3 * k) * e;
        if (j) {
          (*j)(i, 3 * k) = e;
          (*j)(i, 3 * k + 1) = p(3 * k) * e * z / s;
          (*j)(i, 3 * k + 2) = p(3 * k) * e * z * z / s;
        }
      }
    }
  };
  const auto valid = [n_peaks](const VectorXd& p) {
    for (int k = 0; k < n_peaks; ++k) {
      if (!(p(3 * k + 2) > 0)) return false;
    }
    return true;
  };
  std::vector<std::string> names;
  for (int k = 1; k <= n_peaks; ++k) {
    for (const char* s : {"a", "mu", "sigma"}) names.push_back(s + std::to_string(k));
  }
  names.push_back("offset");
  FitResult fit = levenberg_marquardt(model, data, p0, names, with_valid(valid));
  if (!fit.converged) throw ConvergenceError("Gaussian mixture fit did not converge");

  // Order peaks by position.
  std::vector<int> order(n_peaks);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return fit.params(3 * a + 1) < fit.params(3 * b + 1); });
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3 * n_peaks + 1);
  for (int k = 0; k < n_peaks; ++k) {
    for (int q = 0; q < 3; ++q) perm.indices()(3 * k + q) = 3 * order[k] + q;
  }
  perm.indices()(3 * n_peaks) = 3 * n_peaks;
  const VectorXd pp = fit.params;
  const MatrixXd cc = fit.covariance;
  for (int a = 0; a < 3 * n_peaks + 1; ++a) {
    fit.params(a) = pp(perm.indices()(a));
    for (int b = 0; b < 3 * n_peaks + 1; ++b) fit.covariance(a, b) = cc(perm.indices()(a), perm.indices()(b));
  }
  for (int k = 0; k < n_peaks; ++k) fit.params(3 * k + 2) = std::abs(fit.params(3 * k + 2));
  for (int k = 0; k + 1 < n_peaks; ++k) {
    const double sep = fit.params(3 * (k + 1) + 1) - fit.params(3 * k + 1);
    if (sep < 0.5 * (fit.params(3 * k + 2) + fit.params(3 * (k + 1) + 2))) {
      fit.warnings.push_back("overlapping peaks " + std::to_string(k + 1) + " and " + std::to_string(k + 2) +
                             ": parameters are degenerate");
    }
  }
  double total_area = 0;
  for (int k = 0; k < n_peaks; ++k) total_area += std::abs(fit.params(3 * k) * fit.params(3 * k + 2));
  for (int k = 0; k < n_peaks && n_peaks > 1; ++k) {
    if (std::abs(fit.params(3 * k) * fit.params(3 * k + 2)) < 0.05 * total_area) {
      fit.warnings.push_back("peak " + std::to_string(k + 1) + " carries under 5% of the area: parameters are degenerate");
    }
  }
  fit.model = "gaussian_mixture";
  return fit;
}

FitResult fit_exponential(const Dataset& data, std::optional<double> fixed_offset) {
  data.validate();
  const std::size_t n = data.size();
  if (n < 3) throw InvalidArgument("exponential fit needs at least 3 points");
  const ModelFunction model = [](const VectorXd& p, const std::vector<double>& x, VectorXd& f,
                                 MatrixXd* j) {
    f.resize(x.size());
    if (j) j->resize(x.size(), 3);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = std::exp(-x[i] / p(1));
      f(i) = p(0) * e + p(2);
      if (j) {
        (*j)(i, 0) = e;
        (*j)(i, 1) = p(0) * e * x[i] / (p(1) * p(1));
        (*j)(i, 2) = 1.0;
      }
    }
  };
  const double c0 = fixed_offset ? *fixed_offset : data.y.back();
  const double a0 = data.y.front() - c0;
  double tau0 = (data.x.back() - data.x.front()) / 3;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = a0 != 0 ? (data.y[i] - c0) / a0 : 0;
    if (ratio > 0.05 && ratio < 0.95) {
      lx.push_back(data.x[i]);
      ly.push_back(std::log(ratio));
    }
  }
  if (lx.size() >= 2) {
    const LineFit lf = fit_line(lx, ly);
    if (lf.slope < 0) tau0 = -1 / lf.slope;
  }
  VectorXd p0(3);
  p0 << a0, tau0, c0;
  LmOptions opt = with_valid([](const VectorXd& p) { return p(1) > 0; });
  if (fixed_offset) opt.fixed = {false, false, true};
  FitResult r = levenberg_marquardt(model, data, p0, {"A", "tau", "C"}, opt);
  if (!r.converged) throw ConvergenceError("exponential fit did not converge");
  r.model = "exponential";
  return r;
}

FitResult fit_rb_decay(const Dataset& data) {
  data.validate();
  if (data.size() < 3) throw InvalidArgument("RB fit needs at least 3 lengths");
  const ModelFunction model = [](const VectorXd& p, const std::vector<double>& x, VectorXd& f,
                                 MatrixXd* j) {
    f.resize(x.size());
    if (j) j->resize(x.size(), 3);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double pm = std::pow(p(1), x[i]);
      f(i) = p(0) * pm + p(2);
      if (j) {
        (*j)(i, 0) = pm;
        (*j)(i, 1) = x[i] == 0 ? 0.0 : p(0) * x[i] * std::pow(p(1), x[i] - 1);
        (*j)(i, 2) = 1.0;
      }
    }
  };
  // Grid over p with A, B from weighted linear least squares.
  const std::size_t n = data.size();
  VectorXd w = VectorXd::Ones(n);
  if (data.y_err) {
    for (std::size_t i = 0; i < n; ++i) w(i) = 1.0 / (*data.y_err)[i];
  }
  double best_cost = std::numeric_limits<double>::infinity();
  VectorXd p0(3);
  // From p near 1 downwards so flat data keeps p = 1 on ties.
  for (int g = 400; g >= 0; --g) {
    const double p = 1.0 - std::pow(10.0, -0.01 * g);
    MatrixXd a(n, 2);
    VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, 0) = w(i) * std::pow(p, data.x[i]);
      a(i, 1) = w(i);
      y(i) = w(i) * data.y[i];
    }
    const VectorXd c = a.colPivHouseholderQr().solve(y);
    const double cost = (a * c - y).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      p0 << c(0), p, c(1);
    }
  }
  FitResult r = levenberg_marquardt(model, data, p0, {"A", "p", "B"},
                                    with_valid([](const VectorXd& p) { return p(1) > 0 && p(1) <= 1.0; }));
  if (!r.converged) throw ConvergenceError("RB decay fit did not converge");
  r.model = "rb_decay";
  return r;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("line fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw InvalidArgument("line fit needs distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ssr = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ssr += r * r;
    }
    const double s2 = ssr / (n - 2);
    f.slope_sigma = std::sqrt(s2 / sxx);
    f.intercept_sigma = std::sqrt(s2 * (1 / n + mx * mx / sxx));
  }
  return f;
}

}  // namespace ffq
