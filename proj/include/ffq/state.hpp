#pragma once

#include <variant>

#include "ffq/types.hpp"

namespace ffq {

// Lab: bare product basis with the full Hamiltonian.
// Rotating: interaction picture w.r.t. the static Hamiltonian, expressed in
// its eigenbasis (labelled by the nearest product state).
enum class Frame { Lab, Rotating };

class QuantumState {
 public:
  QuantumState() : data_(Vector4c(Vector4c::Zero())) {}

  static QuantumState pure(const Vector4c& psi, Frame frame = Frame::Rotating,
                           double clock_us = 0);
  static QuantumState mixed(const Matrix4c& rho, Frame frame = Frame::Rotating,
                            double clock_us = 0);
  static QuantumState basis(Level level, Frame frame = Frame::Rotating);
  static QuantumState basis_mixed(Level level, Frame frame = Frame::Rotating);

  bool is_pure() const { return std::holds_alternative<Vector4c>(data_); }
  const Vector4c& vector() const;
  Matrix4c density() const;
  Vector4d populations() const;
  double population(Level l) const { return populations()(idx(l)); }

  // Throws InvalidArgument when norm/trace/hermiticity/positivity fail at tol.
  void validate(double tol = 1e-9) const;

  void apply(const Matrix4c& u);
  void set_vector(const Vector4c& psi) { data_ = psi; }
  void set_density(const Matrix4c& rho) { data_ = rho; }
  QuantumState to_mixed() const;

  double clock_us = 0;
  Frame frame = Frame::Rotating;

 private:
  std::variant<Vector4c, Matrix4c> data_;
};

}  // namespace ffq
