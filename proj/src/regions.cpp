#include "scbc/regions.hpp"

#include <stdexcept>

namespace scbc {

Box::Box(Eigen::VectorXd l, Eigen::VectorXd h) : lo(std::move(l)), hi(std::move(h)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("Box: bound size mismatch");
  if (((hi - lo).array() < 0.0).any()) throw std::invalid_argument("Box: hi < lo");
}

Box Box::cube(int dim, double l, double h) {
  return Box(Eigen::VectorXd::Constant(dim, l), Eigen::VectorXd::Constant(dim, h));
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lo.size()) return false;
  return ((x - lo).array() >= -tol).all() && ((hi - x).array() >= -tol).all();
}

bool Box::intersects(const Box& other) const {
  if (other.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (hi[i] < other.lo[i] || other.hi[i] < lo[i]) return false;
  return true;
}

std::vector<Eigen::VectorXd> Box::vertices() const {
  const int n = dim();
  if (n > 24) throw std::invalid_argument("Box::vertices: dimension too large");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(1) << n);
  for (size_t mask = 0; mask < (static_cast<size_t>(1) << n); ++mask) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1 ? hi[i] : lo[i];
    out.push_back(std::move(v));
  }
  return out;
}

bool RegionSpec::in_unsafe(const Eigen::VectorXd& x) const {
  for (const auto& b : unsafe_boxes)
    if (b.contains(x)) return true;
  return false;
}

void RegionSpec::validate() const {
  for (const auto& b : unsafe_boxes) {
    if (b.dim() != dim()) throw std::invalid_argument("RegionSpec: unsafe box dimension mismatch");
    if (b.intersects(initial_box))
      throw std::invalid_argument("RegionSpec: initial set intersects an unsafe box");
  }
  if (initial_box.dim() != dim()) throw std::invalid_argument("RegionSpec: initial box dimension mismatch");
}

}  // namespace scbc
