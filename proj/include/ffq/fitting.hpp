#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ffq/types.hpp"

namespace ffq {

struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  std::optional<std::vector<double>> y_err;

  void validate(bool require_increasing = true) const;
  std::size_t size() const { return x.size(); }
};

struct FitResult {
  std::string model;
  std::vector<std::string> names;
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  double residual_norm = 0;  // sqrt of the (weighted) sum of squared residuals
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;

  double value(const std::string& name) const;
  double sigma(const std::string& name) const;
  std::size_t index(const std::string& name) const;
};

// Model callback: fills f(x_i) and, when J is non-null, the Jacobian df/dp.
using ModelFunction = std::function<void(const Eigen::VectorXd& p, const std::vector<double>& x,
                                         Eigen::VectorXd& f, Eigen::MatrixXd* jacobian)>;

struct LmOptions {
  int max_iterations = 1000;
  double lambda0 = 1e-3;
  double step_tolerance = 1e-14;   // relative
  double cost_tolerance = 1e-28;   // absolute cost at which the fit is exact
  std::vector<bool> fixed;         // per-parameter mask; empty = all free
  std::function<bool(const Eigen::VectorXd&)> valid;  // rejects steps into invalid regions
};

FitResult levenberg_marquardt(const ModelFunction& model, const Dataset& data,
                              const Eigen::VectorXd& p0, std::vector<std::string> names,
                              const LmOptions& options = {});

// P exp(-(t/T2)^beta) + P_inf. Parameters: P, T2, beta, P_inf.
FitResult fit_stretched_exp(const Dataset& data);
double stretched_exp(double t, double p, double t2, double beta, double p_inf);

// P exp(-gamma t) sin(2 pi f t + phi) + P_inf. Parameters: P, gamma, f, phi, P_inf.
// tau = 1/gamma, infinite when gamma <= 0.
FitResult fit_damped_sinusoid(const Dataset& data);
double damped_sinusoid(double t, double p, double gamma, double f, double phi, double p_inf);
double decay_time(const FitResult& damped_sinusoid_fit);

// Sum of n Gaussians plus offset. Parameters: a1, mu1, sigma1, ..., offset.
FitResult fit_gaussian_mixture(const Dataset& data, int n_peaks);
double gaussian_mixture(double x, const Eigen::VectorXd& p, int n_peaks);

// A exp(-t/tau) + C. Parameters: A, tau, C. C is held at fixed_offset when given.
FitResult fit_exponential(const Dataset& data, std::optional<double> fixed_offset = std::nullopt);

// A p^m + B. Parameters: A, p, B.
FitResult fit_rb_decay(const Dataset& data);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_sigma = 0;
  double intercept_sigma = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Gaussian FWHM from a standard deviation.
inline double fwhm_from_sigma(double sigma) { return 2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma; }

}  // namespace ffq
