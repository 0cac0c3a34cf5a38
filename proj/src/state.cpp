#include "ffq/state.hpp"

#include <cmath>

namespace ffq {

QuantumState QuantumState::pure(const Vector4c& psi, Frame frame, double clock_us) {
  QuantumState s;
  s.data_ = psi;
  s.frame = frame;
  s.clock_us = clock_us;
  return s;
}

QuantumState QuantumState::mixed(const Matrix4c& rho, Frame frame, double clock_us) {
  QuantumState s;
  s.data_ = rho;
  s.frame = frame;
  s.clock_us = clock_us;
  return s;
}

QuantumState QuantumState::basis(Level level, Frame frame) {
  Vector4c v = Vector4c::Zero();
  v(idx(level)) = 1.0;
  return pure(v, frame);
}

QuantumState QuantumState::basis_mixed(Level level, Frame frame) {
  Matrix4c r = Matrix4c::Zero();
  r(idx(level), idx(level)) = 1.0;
  return mixed(r, frame);
}

const Vector4c& QuantumState::vector() const {
  if (!is_pure()) throw InvalidArgument("state is a density matrix");
  return std::get<Vector4c>(data_);
}

Matrix4c QuantumState::density() const {
  if (is_pure()) {
    const auto& v = std::get<Vector4c>(data_);
    return v * v.adjoint();
  }
  return std::get<Matrix4c>(data_);
}

Vector4d QuantumState::populations() const {
  Vector4d p;
  if (is_pure()) {
    const auto& v = std::get<Vector4c>(data_);
    for (int k = 0; k < 4; ++k) p(k) = std::norm(v(k));
  } else {
    const auto& r = std::get<Matrix4c>(data_);
    for (int k = 0; k < 4; ++k) p(k) = r(k, k).real();
  }
  return p;
}

void QuantumState::validate(double tol) const {
  if (is_pure()) {
    const double n = std::get<Vector4c>(data_).norm();
    if (std::abs(n - 1.0) > tol) throw InvalidArgument("state vector is not normalized");
    return;
  }
  const auto& r = std::get<Matrix4c>(data_);
  if ((r - r.adjoint()).norm() > tol) throw InvalidArgument("density matrix is not Hermitian");
  if (std::abs(r.trace().real() - 1.0) > tol) throw InvalidArgument("density matrix trace != 1");
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(r, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) throw InvalidArgument("density matrix is not positive");
}

void QuantumState::apply(const Matrix4c& u) {
  if (is_pure()) {
    data_ = Vector4c(u * std::get<Vector4c>(data_));
  } else {
    const auto& r = std::get<Matrix4c>(data_);
    data_ = Matrix4c(u * r * u.adjoint());
  }
}

QuantumState QuantumState::to_mixed() const { return mixed(density(), frame, clock_us); }

}  // namespace ffq
