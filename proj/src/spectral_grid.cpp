#include "roughsc/spectral_grid.hpp"

#define EIGEN_FFTW_DEFAULT
#include <unsupported/Eigen/FFT>

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <vector>

namespace roughsc {

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

PositionGrid::PositionGrid(Index n_points, double x_min, double x_max)
    : n_(n_points), x_min_(x_min), x_max_(x_max), dx_(0.0) {
  if (n_points < 8 || !is_power_of_two(n_points)) {
    throw ConfigurationError("PositionGrid: n_points must be a power of two >= 8, got " +
                             std::to_string(n_points));
  }
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw ConfigurationError("PositionGrid: degenerate interval");
  }
  dx_ = (x_max - x_min) / static_cast<double>(n_points);
}

RealVector PositionGrid::nodes() const {
  RealVector x(n_);
  for (Index i = 0; i < n_; ++i) x[i] = node(i);
  return x;
}

double PositionGrid::frequency_spacing() const { return 2.0 * std::numbers::pi / length(); }

double PositionGrid::nyquist() const { return std::numbers::pi / dx_; }

RealVector PositionGrid::frequencies() const {
  const double dk = frequency_spacing();
  RealVector k(n_);
  for (Index j = 0; j < n_; ++j) {
    k[j] = dk * static_cast<double>(j < n_ / 2 ? j : j - n_);
  }
  return k;
}

RealVector PositionGrid::centered_frequencies() const {
  const double dk = frequency_spacing();
  RealVector k(n_);
  for (Index j = 0; j < n_; ++j) k[j] = dk * static_cast<double>(j - n_ / 2);
  return k;
}

Index PositionGrid::nearest_index(double x) const {
  const double s = std::round((x - x_min_) / dx_);
  if (s < 0.0) return 0;
  if (s > static_cast<double>(n_ - 1)) return n_ - 1;
  return static_cast<Index>(s);
}

PositionGrid build_position_grid(Index n_points, double x_min, double x_max) {
  return PositionGrid(n_points, x_min, x_max);
}

struct FftEngine::Impl {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> buffer;
  Impl() {
    static std::once_flag planner_once;
    std::call_once(planner_once, [] { fftw_make_planner_thread_safe(); });
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
  }
};

FftEngine::FftEngine() : impl_(new Impl) {}
FftEngine::~FftEngine() { delete impl_; }
FftEngine::FftEngine(FftEngine&& other) noexcept : impl_(other.impl_) { other.impl_ = nullptr; }
FftEngine& FftEngine::operator=(FftEngine&& other) noexcept {
  if (this != &other) {
    delete impl_;
    impl_ = other.impl_;
    other.impl_ = nullptr;
  }
  return *this;
}

void FftEngine::forward(std::complex<double>* dst, const std::complex<double>* src, Index n) {
  impl_->fft.fwd(dst, src, n);
}

void FftEngine::backward(std::complex<double>* dst, const std::complex<double>* src, Index n) {
  impl_->fft.inv(dst, src, n);
}

void FftEngine::forward(ComplexVector& inplace) {
  auto& buf = impl_->buffer;
  buf.resize(static_cast<std::size_t>(inplace.size()));
  impl_->fft.fwd(buf.data(), inplace.data(), inplace.size());
  std::memcpy(inplace.data(), buf.data(), buf.size() * sizeof(std::complex<double>));
}

void FftEngine::backward(ComplexVector& inplace) {
  auto& buf = impl_->buffer;
  buf.resize(static_cast<std::size_t>(inplace.size()));
  impl_->fft.inv(buf.data(), inplace.data(), inplace.size());
  std::memcpy(inplace.data(), buf.data(), buf.size() * sizeof(std::complex<double>));
}

namespace {

template <bool Forward>
void transform2d(Eigen::FFT<double>& fft, std::vector<std::complex<double>>& buf, ComplexArray2& a) {
  const Index rows = a.rows();
  const Index cols = a.cols();
  // columns are contiguous
  buf.resize(static_cast<std::size_t>(std::max(rows, cols)));
  for (Index j = 0; j < cols; ++j) {
    std::complex<double>* col = a.data() + j * rows;
    if constexpr (Forward) {
      fft.fwd(buf.data(), col, rows);
    } else {
      fft.inv(buf.data(), col, rows);
    }
    std::memcpy(col, buf.data(), static_cast<std::size_t>(rows) * sizeof(std::complex<double>));
  }
  std::vector<std::complex<double>> row(static_cast<std::size_t>(cols));
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) row[static_cast<std::size_t>(j)] = a(i, j);
    if constexpr (Forward) {
      fft.fwd(buf.data(), row.data(), cols);
    } else {
      fft.inv(buf.data(), row.data(), cols);
    }
    for (Index j = 0; j < cols; ++j) a(i, j) = buf[static_cast<std::size_t>(j)];
  }
}

}  // namespace

void FftEngine::forward2d(ComplexArray2& a) { transform2d<true>(impl_->fft, impl_->buffer, a); }
void FftEngine::backward2d(ComplexArray2& a) { transform2d<false>(impl_->fft, impl_->buffer, a); }

ComplexVector dft_forward(const Eigen::Ref<const ComplexVector>& c) {
  FftEngine engine;
  ComplexVector out(c.size());
  ComplexVector in = c;
  engine.forward(out.data(), in.data(), in.size());
  return out / std::sqrt(static_cast<double>(c.size()));
}

ComplexVector dft_inverse(const Eigen::Ref<const ComplexVector>& c) {
  FftEngine engine;
  ComplexVector out(c.size());
  ComplexVector in = c;
  engine.backward(out.data(), in.data(), in.size());
  return out / std::sqrt(static_cast<double>(c.size()));
}

ComplexVector dft_forward(const Eigen::Ref<const ComplexVector>& c, const PositionGrid& grid) {
  if (c.size() != grid.size()) throw ShapeError("dft_forward: length does not match grid");
  return dft_forward(c);
}

ComplexVector dft_inverse(const Eigen::Ref<const ComplexVector>& c, const PositionGrid& grid) {
  if (c.size() != grid.size()) throw ShapeError("dft_inverse: length does not match grid");
  return dft_inverse(c);
}

RealVector apply_fourier_multiplier(const Eigen::Ref<const RealVector>& f,
                                    const Eigen::Ref<const RealVector>& symbol) {
  if (f.size() != symbol.size()) throw ShapeError("apply_fourier_multiplier: length mismatch");
  FftEngine engine;
  ComplexVector c = f.cast<std::complex<double>>();
  engine.forward(c);
  c.array() *= symbol.array().cast<std::complex<double>>();
  engine.backward(c);
  return c.real() / static_cast<double>(f.size());
}

namespace {

constexpr std::array<char, 8> kGridMagic = {'R', 'S', 'G', 'R', 'I', 'D', '0', '1'};

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }
}

}  // namespace

void write_grid(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("write_grid: cannot open " + path.string());
  out.write(kGridMagic.data(), kGridMagic.size());
  const auto rows = to_little_endian(static_cast<std::uint64_t>(values.rows()));
  const auto cols = to_little_endian(static_cast<std::uint64_t>(values.cols()));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  const std::array<char, 8> reserved{};
  out.write(reserved.data(), reserved.size());
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      const double v = to_little_endian(values(i, j));
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  if (!out) throw ConfigurationError("write_grid: write failed for " + path.string());
}

Eigen::MatrixXd read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("read_grid: cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kGridMagic) throw ConfigurationError("read_grid: bad magic in " + path.string());
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::array<char, 8> reserved{};
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  in.read(reserved.data(), reserved.size());
  rows = to_little_endian(rows);
  cols = to_little_endian(cols);
  if (!in) throw ConfigurationError("read_grid: truncated header in " + path.string());
  Eigen::MatrixXd values(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      values(i, j) = to_little_endian(v);
    }
  }
  if (!in) throw ConfigurationError("read_grid: truncated payload in " + path.string());
  return values;
}

}  // namespace roughsc
