#include "nelson/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace nelson {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int fftfreq(int m, int n) { return m < (n + 1) / 2 ? m : m - n; }

}  // namespace

SpatialGrid::SpatialGrid(int d, double L, int n_x) : d_(d), n_x_(n_x), L_(L) {
  if (d != 1 && d != 3) throw std::invalid_argument("dimension must be 1 or 3");
  if (L <= 0.0) throw std::invalid_argument("box length must be positive");
  if (n_x < 2) throw std::invalid_argument("n_x must be >= 2");
  S_ = 1;
  for (int a = 0; a < d; ++a) S_ *= n_x;
  dx_ = L / n_x;
  cell_ = std::pow(dx_, d);

  k2_.resize(S_);
  for (int a = 0; a < 3; ++a) kg_[a] = RVec::Zero(S_);
  const double dk = 2.0 * pi / L;
  for (int m = 0; m < S_; ++m) {
    int rem = m;
    double k2 = 0.0;
    for (int a = d_ - 1; a >= 0; --a) {
      const int ma = rem % n_x_;
      rem /= n_x_;
      const double k = dk * fftfreq(ma, n_x_);
      kg_[a][m] = k;
      k2 += k * k;
    }
    k2_[m] = k2;
  }
}

std::array<double, 3> SpatialGrid::position(int node) const {
  std::array<double, 3> x{};
  int rem = node;
  for (int a = d_ - 1; a >= 0; --a) {
    x[a] = (rem % n_x_) * dx_;
    rem /= n_x_;
  }
  return x;
}

std::array<double, 3> SpatialGrid::momentum(int m) const {
  std::array<double, 3> k{};
  for (int a = 0; a < d_; ++a) k[a] = kg_[a][m];
  return k;
}

cplx SpatialGrid::inner(const Vec& f, const Vec& g) const {
  return cell_ * f.dot(g);
}

double SpatialGrid::norm(const Vec& f) const {
  return std::sqrt(cell_) * f.norm();
}

struct SpectralTransform::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  Vec scratch;
};

SpectralTransform::SpectralTransform(const SpatialGrid& grid)
    : impl_(std::make_unique<Impl>()), S_(grid.size()) {
  impl_->scratch.resize(S_);
  std::vector<int> n(grid.dimension(), grid.points_per_dim());
  auto* buf = reinterpret_cast<fftw_complex*>(impl_->scratch.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->fwd = fftw_plan_dft(grid.dimension(), n.data(), buf, buf,
                             FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  impl_->bwd = fftw_plan_dft(grid.dimension(), n.data(), buf, buf,
                             FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!impl_->fwd || !impl_->bwd) throw std::runtime_error("fftw plan failed");
}

SpectralTransform::~SpectralTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

void SpectralTransform::forward(Vec& f) const {
  auto* buf = reinterpret_cast<fftw_complex*>(f.data());
  fftw_execute_dft(impl_->fwd, buf, buf);
}

void SpectralTransform::backward(Vec& f) const {
  auto* buf = reinterpret_cast<fftw_complex*>(f.data());
  fftw_execute_dft(impl_->bwd, buf, buf);
  f /= static_cast<double>(S_);
}

Mat SpectralTransform::unitary_dft() const {
  Mat U = Mat::Zero(S_, S_);
  Vec e(S_);
  for (int c = 0; c < S_; ++c) {
    e.setZero();
    e[c] = 1.0;
    forward(e);
    U.col(c) = e / std::sqrt(static_cast<double>(S_));
  }
  return U;
}

}  // namespace nelson
