#pragma once

#include "greytensor/sym_tensor.hpp"
#include "greytensor/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace greytensor {

enum class ShapeKind { ball, ellipse, rounded_box, halfspace };

[[nodiscard]] std::string to_string(ShapeKind kind);

/// Reference set. Balls exist in d = 2, 3; ellipses (axis-aligned) and rounded
/// boxes in d = 2. Halfspaces {<x,u> <= alpha} are for rendering only.
class Shape {
 public:
  static Shape ball(const Vec& center, double radius);
  /// Semi-axes a1 >= a2 > 0 along e1 and e2.
  static Shape ellipse(const Vec& center, double a1, double a2);
  /// Half-widths h with corner radius 0 < rc <= min(h).
  static Shape rounded_box(const Vec& center, const Vec& half_widths, double corner_radius);
  /// {x : <x, normal> <= offset}; `normal` is normalized.
  static Shape halfspace(const Vec& normal, double offset);

  [[nodiscard]] ShapeKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return static_cast<int>(center_.size()); }
  [[nodiscard]] bool bounded() const { return kind_ != ShapeKind::halfspace; }
  /// Center for bounded shapes, unit normal for halfspaces.
  [[nodiscard]] const Vec& center() const { return center_; }
  /// Ball radius; ellipse semi-axes; box half-widths.
  [[nodiscard]] const Vec& extents() const { return extents_; }
  [[nodiscard]] double corner_radius() const { return corner_radius_; }
  [[nodiscard]] double offset() const { return offset_; }

  /// Largest r such that the set is r-regular (infinite for halfspaces).
  [[nodiscard]] double regularity_radius() const;

  [[nodiscard]] double signed_distance(const Vec& x) const;
  [[nodiscard]] bool indicator(const Vec& x) const { return signed_distance(x) <= 0.0; }

  /// Axis-aligned bounding box (lo, hi); throws for unbounded shapes.
  [[nodiscard]] std::pair<Vec, Vec> bounding_box() const;

  /// Intersection of the line {p + t e_axis} with a bounded convex 2D shape,
  /// as an interval of the axis coordinate.
  [[nodiscard]] std::optional<Interval> chord(int axis, const Vec& p) const;

  [[nodiscard]] Shape translated(const Vec& shift) const;
  [[nodiscard]] Shape scaled(double factor) const;

  [[nodiscard]] std::string describe() const;

 private:
  Shape() = default;

  ShapeKind kind_ = ShapeKind::ball;
  Vec center_;
  Vec extents_;
  double corner_radius_ = 0.0;
  double offset_ = 0.0;
};

struct BoundaryPanel {
  Vec x;
  Vec u;
  /// Principal curvatures kappa_1..kappa_{d-1} (positive for convex).
  std::array<double, kMaxDim - 1> kappa{};
  double weight = 0.0;
};

inline constexpr int kOraclePanels = 256;
inline constexpr int kOracleMaxRank = 4;

/// Gauss-Legendre boundary nodes, 8 per panel. n_panels >= 8.
[[nodiscard]] std::vector<BoundaryPanel> boundary_quadrature(const Shape& shape, int n_panels);

/// Phi_d^{r,0} = (1/r!) int_X x^r dx.
[[nodiscard]] SymTensor volume_tensor_oracle(const Shape& shape, int r, int n_panels = kOraclePanels);
/// Phi_{d-1}^{r,s} = (1/(r! s!)) (2/omega_{s+1}) int_{dX} x^r u^s.
[[nodiscard]] SymTensor surface_tensor_oracle(const Shape& shape, int r, int s, int n_panels = kOraclePanels);
/// Phi_0^{r,0} = (1/r!) int_{dX} x^r kappa/(2 pi) in d = 2.
[[nodiscard]] SymTensor curvature_tensor_oracle(const Shape& shape, int r, int n_panels = kOraclePanels);
/// Any Phi_k^{r,s} available for the shape; curvature-type labels (k = d-2)
/// include normal exponents with the factor omega_2 / omega_{2+s}.
[[nodiscard]] SymTensor minkowski_tensor_oracle(const Shape& shape, const TensorIndex& idx,
                                                int n_panels = kOraclePanels);
/// Every defined label with r + s <= max_rank.
[[nodiscard]] TensorFamily oracle_family(const Shape& shape, int max_rank, int n_panels = kOraclePanels);

}  // namespace greytensor
