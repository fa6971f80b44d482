#pragma once

// Periodic grid fields on the torus (-pi, pi)^2 and their Fourier
// representations.
//
// Transform convention (the only place it is defined):
//   forward  c(k) = sum_j f(x_j) exp(-i k . (x_j + pi))      (unnormalized)
//   inverse  f(x_j) = (1 / (nx ny)) sum_k c(k) exp(i k . (x_j + pi))
// i.e. the plain DFT over grid indices. Phases are taken relative to the
// grid origin x_0 = -pi, so the symbol of d/dx is i k regardless of the shift.
// `SpectralField::amplitude` divides by nx*ny to give the normalized value.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace nlc2 {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDomainArea = 4.0 * kPi * kPi;

class TorusGrid {
 public:
  TorusGrid() : TorusGrid(8, 8) {}
  TorusGrid(int nx, int ny);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  double hx() const { return 2.0 * kPi / nx_; }
  double hy() const { return 2.0 * kPi / ny_; }
  double h() const { return hx() > hy() ? hx() : hy(); }
  double cell_area() const { return hx() * hy(); }
  double x(int i) const { return -kPi + i * hx(); }
  double y(int j) const { return -kPi + j * hy(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  // Half-plane layout of real-to-complex transforms: i in [0, nx/2], j in [0, ny).
  int spectral_nx() const { return nx_ / 2 + 1; }
  std::size_t spectral_size() const {
    return static_cast<std::size_t>(spectral_nx()) * ny_;
  }
  int kx(int i) const { return i; }
  int ky(int j) const { return j <= ny_ / 2 ? j : j - ny_; }
  bool is_nyquist_x(int i) const { return i == nx_ / 2; }
  bool is_nyquist_y(int j) const { return j == ny_ / 2; }

  // Largest wavenumber per axis retained by the 2/3 dealiasing rule.
  int dealias_kx() const { return nx_ / 3; }
  int dealias_ky() const { return ny_ / 3; }

  bool operator==(const TorusGrid&) const = default;

 private:
  int nx_;
  int ny_;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const TorusGrid& grid, double value = 0.0);
  ScalarField(const TorusGrid& grid, std::vector<double> values);

  template <class F>
  static ScalarField from_function(const TorusGrid& grid, F&& f) {
    ScalarField out(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i)
        out.data_[grid.index(i, j)] = f(grid.x(i), grid.y(j));
    return out;
  }

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return data_.size(); }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }
  double& operator()(int i, int j) { return data_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return data_[grid_.index(i, j)]; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);

 private:
  TorusGrid grid_;
  std::vector<double> data_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
// Nodewise product.
ScalarField hadamard(const ScalarField& a, const ScalarField& b);

// A fixed number of scalar components on one grid (velocity, director, ...).
template <std::size_t C>
class FieldTuple {
 public:
  static constexpr std::size_t kComponents = C;

  FieldTuple() = default;
  explicit FieldTuple(const TorusGrid& grid) {
    for (auto& c : comps_) c = ScalarField(grid);
  }
  explicit FieldTuple(std::array<ScalarField, C> comps) : comps_(std::move(comps)) {}

  const TorusGrid& grid() const { return comps_[0].grid(); }
  ScalarField& operator[](std::size_t c) { return comps_[c]; }
  const ScalarField& operator[](std::size_t c) const { return comps_[c]; }
  std::size_t size() const { return comps_[0].size(); }

  FieldTuple& operator+=(const FieldTuple& o) {
    for (std::size_t c = 0; c < C; ++c) comps_[c] += o.comps_[c];
    return *this;
  }
  FieldTuple& operator-=(const FieldTuple& o) {
    for (std::size_t c = 0; c < C; ++c) comps_[c] -= o.comps_[c];
    return *this;
  }
  FieldTuple& operator*=(double s) {
    for (auto& c : comps_) c *= s;
    return *this;
  }

 private:
  std::array<ScalarField, C> comps_;
};

using VectorField = FieldTuple<2>;
using DirectorField = FieldTuple<3>;
// 2x2 tensor field, entry (i, j) stored at component 2*i + j.
using TensorField = FieldTuple<4>;

inline std::size_t tensor_index(std::size_t i, std::size_t j) { return 2 * i + j; }

template <std::size_t C>
FieldTuple<C> operator+(FieldTuple<C> a, const FieldTuple<C>& b) {
  a += b;
  return a;
}
template <std::size_t C>
FieldTuple<C> operator-(FieldTuple<C> a, const FieldTuple<C>& b) {
  a -= b;
  return a;
}
template <std::size_t C>
FieldTuple<C> operator*(double s, FieldTuple<C> a) {
  a *= s;
  return a;
}

// Complex Fourier coefficients of a real field in half-plane storage.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  // Real fields obey c(-k) = conj(c(k)); only half the plane is stored.
  bool hermitian() const { return true; }

  std::complex<double>& at(int i, int j) {
    return data_[static_cast<std::size_t>(j) * grid_.spectral_nx() + i];
  }
  std::complex<double> at(int i, int j) const {
    return data_[static_cast<std::size_t>(j) * grid_.spectral_nx() + i];
  }
  // Raw (unnormalized) coefficient for any wavevector with |k1| <= nx/2, |k2| <= ny/2.
  std::complex<double> coefficient(int k1, int k2) const;
  // Coefficient divided by nx*ny: a constant field f = 1 has amplitude(0,0) = 1.
  std::complex<double> amplitude(int k1, int k2) const;

  std::span<std::complex<double>> data() { return data_; }
  std::span<const std::complex<double>> data() const { return data_; }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator*=(double s);

 private:
  TorusGrid grid_;
  std::vector<std::complex<double>> data_;
};

// FFTW-backed transform engine for one grid. Holds scratch buffers, so an
// instance must not be used from two threads at once.
class SpectralTransform {
 public:
  explicit SpectralTransform(const TorusGrid& grid);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  const TorusGrid& grid() const { return grid_; }
  SpectralField forward(const ScalarField& f);
  ScalarField inverse(const SpectralField& c);

 private:
  TorusGrid grid_;
  double* real_buf_ = nullptr;
  void* complex_buf_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

// Per-thread cached engine for `grid`.
SpectralTransform& transform_engine(const TorusGrid& grid);

SpectralField transform(const ScalarField& f);
ScalarField inverse_transform(const SpectralField& c);

// Retained wavevector box |k1| <= kx_max, |k2| <= ky_max.
struct ModeMask {
  int kx_max;
  int ky_max;
  bool keeps(int k1, int k2) const {
    return (k1 < 0 ? -k1 : k1) <= kx_max && (k2 < 0 ? -k2 : k2) <= ky_max;
  }
};

// 2/3-rule mask intersected with a Galerkin truncation n (n <= 0 means none).
ModeMask galerkin_mask(const TorusGrid& grid, int n = 0);
void truncate(SpectralField& c, const ModeMask& mask);
ScalarField truncate(const ScalarField& f, const ModeMask& mask);
template <std::size_t C>
FieldTuple<C> truncate(const FieldTuple<C>& f, const ModeMask& mask) {
  FieldTuple<C> out(f.grid());
  for (std::size_t c = 0; c < C; ++c) out[c] = truncate(f[c], mask);
  return out;
}

// Spectral symbols applied to coefficients.
enum class Axis { x = 0, y = 1 };
SpectralField spectral_derivative(const SpectralField& c, Axis axis);
SpectralField spectral_laplacian(const SpectralField& c);

enum class ScalarOperator { laplacian, inverse_laplacian_zero_mean };

VectorField gradient(const ScalarField& f);
ScalarField partial(const ScalarField& f, Axis axis);
ScalarField divergence(const VectorField& v);
ScalarField laplacian(const ScalarField& f);

struct PoissonSolution {
  ScalarField field;
  double input_mean = 0.0;  // mean of the right-hand side that was discarded
  bool mean_warning = false;  // input mean above tolerance
};
// Solves Lap(g) = f with zero-mean g; a non-negligible mean of f is discarded
// and reported.
PoissonSolution inverse_laplacian_zero_mean(const ScalarField& f,
                                            double mean_tolerance = 1e-10);
ScalarField apply_operator(const ScalarField& f, ScalarOperator op);

// Divergence-free part v - grad Lap^{-1} div v.
VectorField leray_project(const VectorField& v);
// Same projection applied to Fourier coefficients in place.
void leray_project(SpectralField& cx, SpectralField& cy);

// Spectral interpolation onto another grid (zero-padding or truncation).
ScalarField resample(const ScalarField& f, const TorusGrid& target);

// g(x) ~ integral of f over the ball B_r(x), computed as a periodic
// convolution with a ball indicator smoothed over two grid cells and
// rescaled to carry mass exactly pi r^2.
ScalarField ball_integrals(const ScalarField& f, double r);

// Grid quadrature helpers (spectrally accurate for band-limited integrands).
double integral(const ScalarField& f);
double mean(const ScalarField& f);
double max_abs(const ScalarField& f);
double min_value(const ScalarField& f);
double max_value(const ScalarField& f);
template <std::size_t C>
double max_abs(const FieldTuple<C>& f) {
  double m = 0.0;
  for (std::size_t c = 0; c < C; ++c) m = std::max(m, max_abs(f[c]));
  return m;
}
// Nodewise Euclidean norm of a multi-component field.
template <std::size_t C>
ScalarField pointwise_norm(const FieldTuple<C>& f) {
  ScalarField out(f.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += f[c][k] * f[c][k];
    out[k] = std::sqrt(s);
  }
  return out;
}
bool all_finite(const ScalarField& f);

// Random trigonometric polynomial with modes |k1|, |k2| <= kmax (mean
// zero), scaled to max |f| = amplitude. Deterministic in `seed`.
ScalarField random_bandlimited(const TorusGrid& grid, int kmax, double amplitude,
                               std::uint64_t seed);

}  // namespace nlc2
