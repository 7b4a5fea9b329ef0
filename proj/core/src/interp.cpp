#include "udcsim/interp.hpp"

#include <algorithm>

#include "udcsim/error.hpp"

namespace udc {

PiecewiseLinear::PiecewiseLinear(std::vector<Knot> knots, std::string what,
                                 std::size_t min_points)
    : knots_(std::move(knots)) {
  if (knots_.size() < min_points) {
    throw ConfigError(what + ": needs at least " + std::to_string(min_points) +
                      " points, got " + std::to_string(knots_.size()));
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].x > knots_[i - 1].x)) {
      throw ConfigError(what + ": abscissae must be strictly increasing (index " +
                        std::to_string(i) + ")");
    }
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (knots_.empty()) throw ConfigError("interpolation on empty table");
  if (x <= knots_.front().x) return knots_.front().y;
  if (x >= knots_.back().x) return knots_.back().y;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), x,
                             [](double v, const Knot& k) { return v < k.x; });
  auto lo = hi - 1;
  double w = (x - lo->x) / (hi->x - lo->x);
  return lo->y + w * (hi->y - lo->y);
}

bool PiecewiseLinear::non_increasing() const noexcept {
  return std::adjacent_find(knots_.begin(), knots_.end(), [](const Knot& a, const Knot& b) {
           return b.y > a.y;
         }) == knots_.end();
}

bool PiecewiseLinear::non_decreasing() const noexcept {
  return std::adjacent_find(knots_.begin(), knots_.end(), [](const Knot& a, const Knot& b) {
           return b.y < a.y;
         }) == knots_.end();
}

}  // namespace udc
