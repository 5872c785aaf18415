#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <filesystem>

#include "roughsc/errors.hpp"

namespace roughsc {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Array2 = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RealVector = Vector<double>;
using ComplexVector = Vector<std::complex<double>>;
using RealArray2 = Array2<double>;
using ComplexArray2 = Array2<std::complex<double>>;

/// Uniform periodic grid x_i = x_min + i*dx, i = 0..n-1, dx = (x_max - x_min)/n.
class PositionGrid {
 public:
  PositionGrid(Index n_points, double x_min, double x_max);

  Index size() const { return n_; }
  double min() const { return x_min_; }
  double max() const { return x_max_; }
  double length() const { return x_max_ - x_min_; }
  double spacing() const { return dx_; }
  double node(Index i) const { return x_min_ + static_cast<double>(i) * dx_; }
  RealVector nodes() const;

  /// Spacing of the dual (angular frequency) grid, 2*pi/length.
  double frequency_spacing() const;
  /// Largest representable |k|, pi/dx.
  double nyquist() const;
  /// Angular frequencies in standard DFT ordering: 0, dk, ..., -dk.
  RealVector frequencies() const;
  /// Same frequencies sorted ascending, -n/2*dk .. (n/2-1)*dk.
  RealVector centered_frequencies() const;

  /// Index of the node nearest to x (clamped to the grid).
  Index nearest_index(double x) const;

  bool operator==(const PositionGrid& other) const = default;

 private:
  Index n_;
  double x_min_;
  double x_max_;
  double dx_;
};

PositionGrid build_position_grid(Index n_points, double x_min, double x_max);

bool is_power_of_two(Index n);

/// Tensor product of a position and a momentum axis.
struct PhaseGrid {
  PositionGrid x;
  PositionGrid p;

  double cell_area() const { return x.spacing() * p.spacing(); }
  bool operator==(const PhaseGrid& other) const = default;
};

/// Rectangle rule dx * sum f_i (exact trapezoid on a periodic grid).
template <typename Derived>
double quadrature(const Eigen::DenseBase<Derived>& f, const PositionGrid& grid) {
  if (f.size() != grid.size()) {
    throw ShapeError("quadrature: array length does not match grid");
  }
  return grid.spacing() * static_cast<double>(f.sum());
}

/// Unitary DFT (1/sqrt(n) normalization), standard ordering.
ComplexVector dft_forward(const Eigen::Ref<const ComplexVector>& c);
ComplexVector dft_inverse(const Eigen::Ref<const ComplexVector>& c);
ComplexVector dft_forward(const Eigen::Ref<const ComplexVector>& c, const PositionGrid& grid);
ComplexVector dft_inverse(const Eigen::Ref<const ComplexVector>& c, const PositionGrid& grid);

/// Reusable unnormalized FFT engine. forward computes sum_j c_j e^{-2 pi i jk/n},
/// backward the conjugate sum (no 1/n). Not thread-safe; give each worker its own.
class FftEngine {
 public:
  FftEngine();
  ~FftEngine();
  FftEngine(FftEngine&&) noexcept;
  FftEngine& operator=(FftEngine&&) noexcept;
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  void forward(std::complex<double>* dst, const std::complex<double>* src, Index n);
  void backward(std::complex<double>* dst, const std::complex<double>* src, Index n);
  void forward(ComplexVector& inplace);
  void backward(ComplexVector& inplace);

  /// In-place 2D transforms along both axes of a column-major array.
  void forward2d(ComplexArray2& a);
  void backward2d(ComplexArray2& a);

 private:
  struct Impl;
  Impl* impl_;
};

/// Multiply the spectrum of a periodic real signal by symbol(k_j) and transform
/// back. symbol is given in standard DFT ordering.
RealVector apply_fourier_multiplier(const Eigen::Ref<const RealVector>& f,
                                    const Eigen::Ref<const RealVector>& symbol);

/// Binary grid dump: 32-byte header (magic "RSGRID01", u64 rows, u64 cols,
/// 8 reserved zero bytes) followed by little-endian f64 values, row-major.
void write_grid(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& values);
Eigen::MatrixXd read_grid(const std::filesystem::path& path);

}  // namespace roughsc
