#pragma once

#include <cstddef>
#include <vector>

#include "theta_lab/types.hpp"

namespace theta_lab {

/// Uniform grid on the (x, y) torus [0,1)^{2n} with `per_dim` nodes per
/// coordinate. Node coordinate i maps to (i + offset) / per_dim. Flat indices
/// are row-major over (x_1..x_n, y_1..y_n).
class TorusGrid {
 public:
  TorusGrid(int n, int per_dim, double offset = 0.0);

  int n() const { return n_; }
  int per_dim() const { return per_dim_; }
  double offset() const { return offset_; }
  std::size_t size() const { return size_; }
  double spacing() const { return 1.0 / per_dim_; }

  /// Integer coordinates (length 2n) of a flat index.
  IntVector coords(std::size_t index) const;
  std::size_t index(const IntVector& coords) const;  // coordinates taken mod per_dim
  RealVector x(std::size_t index) const;
  RealVector y(std::size_t index) const;

 private:
  int n_;
  int per_dim_;
  double offset_;
  std::size_t size_;
};

/// Reduce each entry into [0, 1).
RealVector reduce_mod1(const RealVector& v);
/// Reduce each entry into [-1/2, 1/2).
RealVector reduce_centered(const RealVector& v);

/// Row-major enumeration of {0..k-1}^n.
std::vector<IntVector> torsion_indices(int n, int k);

}  // namespace theta_lab
