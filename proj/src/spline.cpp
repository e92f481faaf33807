#include "narrative/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nd {

std::vector<double> default_grid() { return {kDefaultGrid.begin(), kDefaultGrid.end()}; }

namespace {

void validate(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("spline: xs/ys length mismatch (" + std::to_string(xs.size()) +
                                " vs " + std::to_string(ys.size()) + ")");
  if (xs.size() < 2) throw std::invalid_argument("spline: need at least two control points");
  if (xs.front() != 0.0 || xs.back() != 1.0)
    throw std::invalid_argument("spline: grid must start at 0 and end at 1");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw std::invalid_argument("spline: non-finite control point");
    if (i > 0 && !(xs[i] > xs[i - 1]))
      throw std::invalid_argument("spline: grid must be strictly increasing");
  }
}

}  // namespace

TemplateCurve::TemplateCurve(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  validate(xs_, ys_);
  const std::size_t q = xs_.size();
  m_.assign(q, 0.0);
  if (q < 3) return;

  // Tridiagonal system for interior second derivatives (Thomas algorithm).
  const std::size_t k = q - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 1; i + 1 < q; ++i) {
    const double h0 = xs_[i] - xs_[i - 1], h1 = xs_[i + 1] - xs_[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((ys_[i + 1] - ys_[i]) / h1 - (ys_[i] - ys_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = xs_[i + 1] - xs_[i];  // h_{i} multiplies M_{i} in row i+1
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m_[i + 1] = (rhs[i] - upper[i] * m_[i + 2]) / diag[i];
}

PieceValue TemplateCurve::piece(std::size_t i, double x) const {
  if (i + 1 >= xs_.size()) throw std::out_of_range("spline: interval index out of range");
  const double h = xs_[i + 1] - xs_[i];
  const double a = xs_[i + 1] - x, b = x - xs_[i];
  const double mi = m_[i], mj = m_[i + 1];
  const double ci = ys_[i] / h - mi * h / 6.0, cj = ys_[i + 1] / h - mj * h / 6.0;
  PieceValue out;
  out.value = (mi * a * a * a + mj * b * b * b) / (6.0 * h) + ci * a + cj * b;
  out.first = (-mi * a * a + mj * b * b) / (2.0 * h) - ci + cj;
  out.second = (mi * a + mj * b) / h;
  return out;
}

double TemplateCurve::eval(double x) const {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("spline: x=" + std::to_string(x) + " outside [0, 1]");
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
  if (hi > 0 && xs_[hi - 1] == x) return ys_[hi - 1];
  const std::size_t interval = std::min(hi, xs_.size() - 1) - 1;
  return piece(interval, x).value;
}

TemplateCurve build_spline(std::vector<double> xs, std::vector<double> ys) {
  return TemplateCurve(std::move(xs), std::move(ys));
}

std::vector<double> spline_basis(std::span<const double> xs, std::span<const double> points) {
  const std::size_t q = xs.size();
  std::vector<double> basis(points.size() * q);
  std::vector<double> grid(xs.begin(), xs.end());
  for (std::size_t k = 0; k < q; ++k) {
    std::vector<double> unit(q, 0.0);
    unit[k] = 1.0;
    TemplateCurve c(grid, std::move(unit));
    for (std::size_t r = 0; r < points.size(); ++r) basis[r * q + k] = c.eval(points[r]);
  }
  return basis;
}

}  // namespace nd
