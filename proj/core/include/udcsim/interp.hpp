#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace udc {

struct Knot {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Knot&, const Knot&) = default;
};

// Piecewise-linear table over strictly increasing x, clamped to the end
// values outside the covered range.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;

  // Throws ConfigError when fewer than `min_points` knots are given or the
  // abscissae are not strictly increasing. `what` names the table in errors.
  explicit PiecewiseLinear(std::vector<Knot> knots, std::string what = "table",
                           std::size_t min_points = 2);

  double operator()(double x) const;

  std::span<const Knot> knots() const noexcept { return knots_; }
  bool empty() const noexcept { return knots_.empty(); }
  double front_x() const { return knots_.front().x; }
  double back_x() const { return knots_.back().x; }

  bool non_increasing() const noexcept;
  bool non_decreasing() const noexcept;

 private:
  std::vector<Knot> knots_;
};

}  // namespace udc
