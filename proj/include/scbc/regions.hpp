#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace scbc {

// Axis-aligned box.
struct Box {
  Eigen::VectorXd lo, hi;

  Box() = default;
  Box(Eigen::VectorXd l, Eigen::VectorXd h);
  static Box cube(int dim, double l, double h);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  bool intersects(const Box& other) const;
  Eigen::VectorXd midpoint() const { return 0.5 * (lo + hi); }
  // All 2^dim corner points, in a fixed bit order (bit i set -> hi on axis i).
  std::vector<Eigen::VectorXd> vertices() const;
};

// Safety geometry: state set X, initial set X_eta, unsafe union X_delta.
struct RegionSpec {
  Box state_box;
  Box initial_box;
  std::vector<Box> unsafe_boxes;
  std::optional<Eigen::VectorXd> z_eta;    // literal-mode vectors
  std::optional<Eigen::VectorXd> z_delta;

  int dim() const { return state_box.dim(); }
  bool in_unsafe(const Eigen::VectorXd& x) const;
  void validate() const;  // throws when the initial set meets an unsafe box
};

}  // namespace scbc
