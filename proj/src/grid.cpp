#include "nlc2/grid.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>

#include "nlc2/errors.hpp"

namespace nlc2 {

namespace {

// The FFTW planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) {
    throw ConfigError(std::string(what) + ": grid mismatch (" + std::to_string(a.nx()) +
                      "x" + std::to_string(a.ny()) + " vs " + std::to_string(b.nx()) +
                      "x" + std::to_string(b.ny()) + ")");
  }
}

}  // namespace

TorusGrid::TorusGrid(int nx, int ny) : nx_(nx), ny_(ny) {
  if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0) {
    throw ConfigError("grid sizes must be even and >= 8, got " + std::to_string(nx) +
                      "x" + std::to_string(ny));
  }
}

ScalarField::ScalarField(const TorusGrid& grid, double value)
    : grid_(grid), data_(grid.size(), value) {}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), data_(std::move(values)) {
  if (data_.size() != grid.size()) {
    throw ConfigError("field has " + std::to_string(data_.size()) + " values, grid needs " +
                      std::to_string(grid.size()));
  }
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) {
  a += b;
  return a;
}
ScalarField operator-(ScalarField a, const ScalarField& b) {
  a -= b;
  return a;
}
ScalarField operator*(double s, ScalarField a) {
  a *= s;
  return a;
}

ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

SpectralField::SpectralField(const TorusGrid& grid)
    : grid_(grid), data_(grid.spectral_size(), {0.0, 0.0}) {}

std::complex<double> SpectralField::coefficient(int k1, int k2) const {
  const int nx = grid_.nx();
  const int ny = grid_.ny();
  if (k1 < -nx / 2 || k1 > nx / 2 || k2 < -ny / 2 || k2 > ny / 2) {
    throw ConfigError("wavevector outside the grid's resolvable range");
  }
  if (k1 >= 0) return at(k1, (k2 + ny) % ny);
  return std::conj(at(-k1, (-k2 + ny) % ny));
}

std::complex<double> SpectralField::amplitude(int k1, int k2) const {
  return coefficient(k1, k2) / static_cast<double>(grid_.size());
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_grid(grid_, o.grid_, "SpectralField::operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

SpectralTransform::SpectralTransform(const TorusGrid& grid) : grid_(grid) {
  std::lock_guard lock(planner_mutex());
  real_buf_ = fftw_alloc_real(grid.size());
  auto* cbuf = fftw_alloc_complex(grid.spectral_size());
  complex_buf_ = cbuf;
  // FFTW takes dimensions slowest-first: rows are y.
  forward_plan_ = fftw_plan_dft_r2c_2d(grid.ny(), grid.nx(), real_buf_, cbuf, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_2d(grid.ny(), grid.nx(), cbuf, real_buf_, FFTW_ESTIMATE);
}

SpectralTransform::~SpectralTransform() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_buf_);
  fftw_free(complex_buf_);
}

SpectralField SpectralTransform::forward(const ScalarField& f) {
  require_same_grid(grid_, f.grid(), "transform");
  std::memcpy(real_buf_, f.values().data(), sizeof(double) * grid_.size());
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  SpectralField out(grid_);
  std::memcpy(out.data().data(), complex_buf_, sizeof(fftw_complex) * grid_.spectral_size());
  return out;
}

ScalarField SpectralTransform::inverse(const SpectralField& c) {
  require_same_grid(grid_, c.grid(), "inverse transform");
  std::memcpy(complex_buf_, c.data().data(), sizeof(fftw_complex) * grid_.spectral_size());
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  ScalarField out(grid_);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  auto v = out.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = real_buf_[k] * scale;
  return out;
}

SpectralTransform& transform_engine(const TorusGrid& grid) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<SpectralTransform>> cache;
  auto& slot = cache[{grid.nx(), grid.ny()}];
  if (!slot) slot = std::make_unique<SpectralTransform>(grid);
  return *slot;
}

SpectralField transform(const ScalarField& f) { return transform_engine(f.grid()).forward(f); }

ScalarField inverse_transform(const SpectralField& c) {
  return transform_engine(c.grid()).inverse(c);
}

ModeMask galerkin_mask(const TorusGrid& grid, int n) {
  ModeMask m{grid.dealias_kx(), grid.dealias_ky()};
  if (n > 0) {
    m.kx_max = std::min(m.kx_max, n);
    m.ky_max = std::min(m.ky_max, n);
  }
  return m;
}

void truncate(SpectralField& c, const ModeMask& mask) {
  const auto& g = c.grid();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.spectral_nx(); ++i)
      if (!mask.keeps(g.kx(i), g.ky(j))) c.at(i, j) = 0.0;
}

ScalarField truncate(const ScalarField& f, const ModeMask& mask) {
  auto c = transform(f);
  truncate(c, mask);
  return inverse_transform(c);
}

SpectralField spectral_derivative(const SpectralField& c, Axis axis) {
  const auto& g = c.grid();
  SpectralField out(g);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.spectral_nx(); ++i) {
      // Odd-order symbols vanish on the Nyquist mode of their own axis.
      const bool nyquist = axis == Axis::x ? g.is_nyquist_x(i) : g.is_nyquist_y(j);
      if (nyquist) continue;
      const double k = axis == Axis::x ? g.kx(i) : g.ky(j);
      out.at(i, j) = std::complex<double>(0.0, k) * c.at(i, j);
    }
  }
  return out;
}

SpectralField spectral_laplacian(const SpectralField& c) {
  const auto& g = c.grid();
  SpectralField out(g);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.spectral_nx(); ++i) {
      const double k1 = g.kx(i);
      const double k2 = g.ky(j);
      out.at(i, j) = -(k1 * k1 + k2 * k2) * c.at(i, j);
    }
  }
  return out;
}

ScalarField partial(const ScalarField& f, Axis axis) {
  return inverse_transform(spectral_derivative(transform(f), axis));
}

VectorField gradient(const ScalarField& f) {
  const auto c = transform(f);
  VectorField out(f.grid());
  out[0] = inverse_transform(spectral_derivative(c, Axis::x));
  out[1] = inverse_transform(spectral_derivative(c, Axis::y));
  return out;
}

ScalarField divergence(const VectorField& v) {
  auto c = spectral_derivative(transform(v[0]), Axis::x);
  c += spectral_derivative(transform(v[1]), Axis::y);
  return inverse_transform(c);
}

ScalarField laplacian(const ScalarField& f) {
  return inverse_transform(spectral_laplacian(transform(f)));
}

PoissonSolution inverse_laplacian_zero_mean(const ScalarField& f, double mean_tolerance) {
  const auto& g = f.grid();
  auto c = transform(f);
  PoissonSolution out;
  out.input_mean = c.at(0, 0).real() / static_cast<double>(g.size());
  const double scale = std::max(1.0, max_abs(f));
  out.mean_warning = std::abs(out.input_mean) > mean_tolerance * scale;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.spectral_nx(); ++i) {
      const double k1 = g.kx(i);
      const double k2 = g.ky(j);
      const double k2sum = k1 * k1 + k2 * k2;
      c.at(i, j) = k2sum == 0.0 ? std::complex<double>(0.0) : -c.at(i, j) / k2sum;
    }
  }
  out.field = inverse_transform(c);
  return out;
}

ScalarField apply_operator(const ScalarField& f, ScalarOperator op) {
  switch (op) {
    case ScalarOperator::laplacian:
      return laplacian(f);
    case ScalarOperator::inverse_laplacian_zero_mean:
      return inverse_laplacian_zero_mean(f).field;
  }
  throw ConfigError("unknown operator");
}

void leray_project(SpectralField& cx, SpectralField& cy) {
  const auto& g = cx.grid();
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.spectral_nx(); ++i) {
      // Effective wavenumbers match the derivative symbols (zero on Nyquist).
      const double k1 = g.is_nyquist_x(i) ? 0.0 : g.kx(i);
      const double k2 = g.is_nyquist_y(j) ? 0.0 : g.ky(j);
      const double k2sum = k1 * k1 + k2 * k2;
      if (k2sum == 0.0) continue;
      const auto kdotv = k1 * cx.at(i, j) + k2 * cy.at(i, j);
      cx.at(i, j) -= k1 * kdotv / k2sum;
      cy.at(i, j) -= k2 * kdotv / k2sum;
    }
  }
}

VectorField leray_project(const VectorField& v) {
  auto cx = transform(v[0]);
  auto cy = transform(v[1]);
  leray_project(cx, cy);
  VectorField out(v.grid());
  out[0] = inverse_transform(cx);
  out[1] = inverse_transform(cy);
  return out;
}

ScalarField resample(const ScalarField& f, const TorusGrid& target) {
  const auto& src = f.grid();
  if (src == target) return f;
  const auto c = transform(f);
  SpectralField out(target);
  const double scale = static_cast<double>(target.size()) / static_cast<double>(src.size());
  // Keep only modes strictly inside both grids' Nyquist limits.
  const int kx_lim = std::min(src.nx(), target.nx()) / 2 - 1;
  const int ky_lim = std::min(src.ny(), target.ny()) / 2 - 1;
  for (int j = 0; j < target.ny(); ++j) {
    const int k2 = target.ky(j);
    if (std::abs(k2) > ky_lim) continue;
    for (int i = 0; i < target.spectral_nx(); ++i) {
      const int k1 = target.kx(i);
      if (k1 > kx_lim) continue;
      out.at(i, j) = c.coefficient(k1, k2) * scale;
    }
  }
  return inverse_transform(out);
}

ScalarField ball_integrals(const ScalarField& f, double r) {
  const auto& g = f.grid();
  const double h = g.h();
  if (!(r > 0.0) || r > kPi) throw ConfigError("ball radius must lie in (0, pi]");
  if (r < 3.0 * h) {
    throw ResolutionError("ball radius " + std::to_string(r) + " is below 3 grid cells (" +
                          std::to_string(3.0 * h) + ")");
  }
  const double width = 2.0 * h;
  ScalarField kernel(g);
  double mass = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    const double dy = (j <= g.ny() / 2 ? j : j - g.ny()) * g.hy();
    for (int i = 0; i < g.nx(); ++i) {
      const double dx = (i <= g.nx() / 2 ? i : i - g.nx()) * g.hx();
      const double s = std::hypot(dx, dy) - r;
      double w;
      if (s <= -0.5 * width) {
        w = 1.0;
      } else if (s >= 0.5 * width) {
        w = 0.0;
      } else {
        w = 0.5 - 0.5 * std::sin(kPi * s / width);
      }
      kernel(i, j) = w;
      mass += w;
    }
  }
  mass *= g.cell_area();
  kernel *= kPi * r * r / mass;

  auto cf = transform(f);
  const auto ck = transform(kernel);
  auto d = cf.data();
  const auto dk = ck.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= dk[k];
  auto out = inverse_transform(cf);
  out *= g.cell_area();
  return out;
}

double integral(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_area();
}

double mean(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double min_value(const ScalarField& f) {
  double m = f.values().empty() ? 0.0 : f[0];
  for (double v : f.values()) m = std::min(m, v);
  return m;
}

double max_value(const ScalarField& f) {
  double m = f.values().empty() ? 0.0 : f[0];
  for (double v : f.values()) m = std::max(m, v);
  return m;
}

bool all_finite(const ScalarField& f) {
  for (double v : f.values())
    if (!std::isfinite(v)) return false;
  return true;
}

ScalarField random_bandlimited(const TorusGrid& grid, int kmax, double amplitude,
                               std::uint64_t seed) {
  if (kmax < 1) throw ConfigError("kmax must be >= 1");
  if (kmax > grid.dealias_kx() || kmax > grid.dealias_ky()) {
    throw ResolutionError("kmax " + std::to_string(kmax) + " exceeds the resolved band");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  ScalarField f(grid);
  for (int k2 = 0; k2 <= kmax; ++k2) {
    for (int k1 = -kmax; k1 <= kmax; ++k1) {
      if (k2 == 0 && k1 <= 0) continue;  // one representative per +-k pair
      const double a = coef(rng);
      const double b = coef(rng);
      const double decay = 1.0 / (1.0 + k1 * k1 + k2 * k2);
      for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
          const double ph = k1 * grid.x(i) + k2 * grid.y(j);
          f(i, j) += decay * (a * std::cos(ph) + b * std::sin(ph));
        }
      }
    }
  }
  const double m = max_abs(f);
  if (m > 0.0) f *= amplitude / m;
  return f;
}

}  // namespace nlc2
