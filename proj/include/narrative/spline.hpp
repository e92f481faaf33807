#pragma once

// Natural cubic spline interpolants over a control grid on [0, 1].

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace nd {

/// Control grid used for template curves unless configured otherwise.
inline constexpr std::array<double, 7> kDefaultGrid = {0.0, 0.2, 0.3, 0.5, 0.65, 0.8, 1.0};

std::vector<double> default_grid();

struct PieceValue {
  double value;
  double first;
  double second;
};

/// Natural cubic spline (zero second derivative at both ends) through
/// (xs[k], ys[k]). xs must be strictly increasing from exactly 0 to exactly 1.
/// Values between knots are not clamped and may overshoot the control range.
class TemplateCurve {
public:
  TemplateCurve(std::vector<double> xs, std::vector<double> ys);

  /// Throws std::domain_error outside [0, 1]. Exact at knots.
  double eval(double x) const;

  /// Value and derivatives of the cubic on [xs[interval], xs[interval+1]],
  /// evaluated at x (which may lie at either end of that interval).
  PieceValue piece(std::size_t interval, double x) const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const std::vector<double>& second_derivatives() const { return m_; }
  std::size_t size() const { return xs_.size(); }

private:
  std::vector<double> xs_, ys_, m_;
};

TemplateCurve build_spline(std::vector<double> xs, std::vector<double> ys);

inline double eval_curve(const TemplateCurve& c, double x) { return c.eval(x); }

/// Row-major (points.size() x xs.size()) weights B with
/// eval(points[r]) == sum_k B[r][k] * ys[k] for every choice of ys.
std::vector<double> spline_basis(std::span<const double> xs, std::span<const double> points);

}  // namespace nd
