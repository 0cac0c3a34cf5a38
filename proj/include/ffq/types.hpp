#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ffq {

using Complex = std::complex<double>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;
using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector2c = Eigen::Matrix<Complex, 2, 1>;
using Matrix2c = Eigen::Matrix<Complex, 2, 2>;
using Vector4d = Eigen::Vector4d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Product states, electron spin first. The index is the basis position
// used by every matrix in the library: (up,Up), (up,Down), (down,Up), (down,Down).
enum class Level : int { UpUp = 0, UpDown = 1, DownUp = 2, DownDown = 3 };

inline constexpr int idx(Level l) { return static_cast<int>(l); }

enum class NuclearSpin { Up, Down };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or schema problem in user-supplied input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ffq
