#include "theta_lab/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "theta_lab/parallel.hpp"

namespace theta_lab {

namespace {
int g_jobs = 0;
}

int default_jobs() {
  if (g_jobs > 0) return g_jobs;
  if (const char* env = std::getenv("THETA_LAB_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_default_jobs(int jobs) { g_jobs = jobs; }

TorusGrid::TorusGrid(int n, int per_dim, double offset)
    : n_(n), per_dim_(per_dim), offset_(offset), size_(1) {
  if (n < 1 || per_dim < 1) throw std::invalid_argument("grid needs n >= 1 and per_dim >= 1");
  for (int i = 0; i < 2 * n; ++i) size_ *= static_cast<std::size_t>(per_dim);
}

IntVector TorusGrid::coords(std::size_t index) const {
  IntVector c(2 * n_);
  for (int i = 2 * n_ - 1; i >= 0; --i) {
    c(i) = static_cast<int>(index % per_dim_);
    index /= per_dim_;
  }
  return c;
}

std::size_t TorusGrid::index(const IntVector& coords) const {
  std::size_t idx = 0;
  for (int i = 0; i < 2 * n_; ++i) {
    int c = coords(i) % per_dim_;
    if (c < 0) c += per_dim_;
    idx = idx * per_dim_ + static_cast<std::size_t>(c);
  }
  return idx;
}

RealVector TorusGrid::x(std::size_t index) const {
  const IntVector c = coords(index);
  RealVector out(n_);
  for (int i = 0; i < n_; ++i) out(i) = (c(i) + offset_) / per_dim_;
  return out;
}

RealVector TorusGrid::y(std::size_t index) const {
  const IntVector c = coords(index);
  RealVector out(n_);
  for (int i = 0; i < n_; ++i) out(i) = (c(n_ + i) + offset_) / per_dim_;
  return out;
}

RealVector reduce_mod1(const RealVector& v) {
  RealVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double r = v(i) - std::floor(v(i));
    if (r >= 1.0) r = 0.0;
    out(i) = r + 0.0;  // drop negative zero
  }
  return out;
}

RealVector reduce_centered(const RealVector& v) {
  RealVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double r = v(i) - std::floor(v(i) + 0.5);
    if (r >= 0.5) r -= 1.0;
    out(i) = r + 0.0;
  }
  return out;
}

std::vector<IntVector> torsion_indices(int n, int k) {
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(k);
  std::vector<IntVector> out;
  out.reserve(total);
  IntVector j = IntVector::Zero(n);
  for (std::size_t t = 0; t < total; ++t) {
    out.push_back(j);
    for (int i = n - 1; i >= 0; --i) {
      if (++j(i) < k) break;
      j(i) = 0;
    }
  }
  return out;
}

}  // namespace theta_lab
