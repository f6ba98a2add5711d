#include "greytensor/shapes.hpp"

#include "greytensor/numerics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace greytensor {

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Distance from (y0, y1), y0, y1 >= 0, to the ellipse with semi-axes e0 >= e1.
double ellipse_distance_quadrant(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double n0 = r0 * z0;
      auto f = [&](double s) {
        const double q0 = n0 / (s + r0);
        const double q1 = z1 / (s + 1.0);
        return q0 * q0 + q1 * q1 - 1.0;
      };
      const double s0 = z1 - 1.0;
      const double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
      const double s = num::find_root(f, s0, s1, 1e-16);
      const double x0 = r0 * y0 / (s + r0);
      const double x1 = y1 / (s + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer = e0 * y0;
  const double denom = e0 * e0 - e1 * e1;
  if (numer < denom) {
    const double xde = numer / denom;
    const double x0 = e0 * xde;
    const double x1 = e1 * std::sqrt(1.0 - xde * xde);
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

void require_rank(int r, int s) {
  if (r < 0 || s < 0) throw ConfigError("tensor exponents must be non-negative");
  if (r + s > kOracleMaxRank)
    throw ConfigError(fmt::format("rank cap exceeded: r + s = {} > {}", r + s, kOracleMaxRank));
}

// Appends 8-node Gauss-Legendre samples of a parametrized arc piece.
template <class Param>
void add_arc(std::vector<BoundaryPanel>& out, double t0, double t1, int panels, Param&& param) {
  const auto& rule = num::gauss_legendre(8);
  const double h = (t1 - t0) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = t0 + (p + 0.5) * h;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      BoundaryPanel bp = param(mid + 0.5 * h * rule.nodes[i]);
      bp.weight *= 0.5 * h * rule.weights[i];
      out.push_back(std::move(bp));
    }
  }
}

SymTensor boundary_integral(const std::vector<BoundaryPanel>& panels, int r, int s, bool curvature_weight) {
  const int d = static_cast<int>(panels.front().x.size());
  SymTensor acc(d, r + s);
  for (const auto& bp : panels) {
    double w = bp.weight;
    if (curvature_weight) w *= bp.kappa[0];
    acc += w * sym_pow_product(bp.x, r, bp.u, s);
  }
  return acc;
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::ball: return "ball";
    case ShapeKind::ellipse: return "ellipse";
    case ShapeKind::rounded_box: return "rounded_box";
    case ShapeKind::halfspace: return "halfspace";
  }
  return "unknown";
}

Shape Shape::ball(const Vec& center, double radius) {
  if (center.size() < 2 || center.size() > 3) throw ConfigError("ball supports d = 2 and d = 3");
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
  Shape sh;
  sh.kind_ = ShapeKind::ball;
  sh.center_ = center;
  sh.extents_ = Vec::Constant(1, radius);
  return sh;
}

Shape Shape::ellipse(const Vec& center, double a1, double a2) {
  if (center.size() != 2) throw ConfigError("ellipse is two-dimensional");
  if (!(a2 > 0.0 && a1 >= a2)) throw ConfigError("ellipse needs semi-axes a1 >= a2 > 0");
  Shape sh;
  sh.kind_ = ShapeKind::ellipse;
  sh.center_ = center;
  sh.extents_ = vec2(a1, a2);
  return sh;
}

Shape Shape::rounded_box(const Vec& center, const Vec& half_widths, double corner_radius) {
  if (center.size() != 2 || half_widths.size() != 2) throw ConfigError("rounded_box is two-dimensional");
  if (!(corner_radius > 0.0 && corner_radius <= half_widths.minCoeff()))
    throw ConfigError("rounded_box needs 0 < corner radius <= half-widths");
  Shape sh;
  sh.kind_ = ShapeKind::rounded_box;
  sh.center_ = center;
  sh.extents_ = half_widths;
  sh.corner_radius_ = corner_radius;
  return sh;
}

Shape Shape::halfspace(const Vec& normal, double offset) {
  if (normal.size() < 1 || normal.size() > kMaxDim) throw ConfigError("halfspace dimension unsupported");
  const double n = normal.norm();
  if (!(n > 0.0)) throw ConfigError("halfspace normal must be nonzero");
  Shape sh;
  sh.kind_ = ShapeKind::halfspace;
  sh.center_ = normal / n;
  sh.extents_ = Vec::Zero(1);
  sh.offset_ = offset / n;
  return sh;
}

double Shape::regularity_radius() const {
  switch (kind_) {
    case ShapeKind::ball: return extents_[0];
    case ShapeKind::ellipse: return extents_[1] * extents_[1] / extents_[0];
    case ShapeKind::rounded_box: return corner_radius_;
    case ShapeKind::halfspace: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double Shape::signed_distance(const Vec& x) const {
  if (x.size() != center_.size()) throw DomainError("signed_distance: dimension mismatch");
  switch (kind_) {
    case ShapeKind::ball: return (x - center_).norm() - extents_[0];
    case ShapeKind::ellipse: {
      const double y0 = std::abs(x[0] - center_[0]);
      const double y1 = std::abs(x[1] - center_[1]);
      const double e0 = extents_[0];
      const double e1 = extents_[1];
      const double dist = e0 == e1 ? std::abs(std::hypot(y0, y1) - e0) : ellipse_distance_quadrant(e0, e1, y0, y1);
      const double level = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1);
      return level < 1.0 ? -dist : dist;
    }
    case ShapeKind::rounded_box: {
      const Vec q = (x - center_).cwiseAbs() - (extents_.array() - corner_radius_).matrix();
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(q.maxCoeff(), 0.0);
      return outside + inside - corner_radius_;
    }
    case ShapeKind::halfspace: return x.dot(center_) - offset_;
  }
  return 0.0;
}

std::pair<Vec, Vec> Shape::bounding_box() const {
  switch (kind_) {
    case ShapeKind::ball: {
      const Vec r = Vec::Constant(center_.size(), extents_[0]);
      return {center_ - r, center_ + r};
    }
    case ShapeKind::ellipse:
    case ShapeKind::rounded_box: return {center_ - extents_, center_ + extents_};
    case ShapeKind::halfspace: break;
  }
  throw DomainError("bounding_box: shape is unbounded");
}

std::optional<Interval> Shape::chord(int axis, const Vec& p) const {
  if (center_.size() != 2 || axis < 0 || axis > 1) throw DomainError("chord is defined for 2D shapes");
  const int other = 1 - axis;
  const double delta = std::abs(p[other] - center_[other]);
  double half = 0.0;
  switch (kind_) {
    case ShapeKind::ball: {
      const double r = extents_[0];
      if (delta >= r) return std::nullopt;
      half = std::sqrt((r - delta) * (r + delta));
      break;
    }
    case ShapeKind::ellipse: {
      const double rel = delta / extents_[other];
      if (rel >= 1.0) return std::nullopt;
      half = extents_[axis] * std::sqrt((1.0 - rel) * (1.0 + rel));
      break;
    }
    case ShapeKind::rounded_box: {
      const double rc = corner_radius_;
      if (delta >= extents_[other]) return std::nullopt;
      const double straight = extents_[other] - rc;
      if (delta <= straight) {
        half = extents_[axis];
      } else {
        const double dy = delta - straight;
        half = extents_[axis] - rc + std::sqrt((rc - dy) * (rc + dy));
      }
      break;
    }
    case ShapeKind::halfspace: throw DomainError("chord: halfspace is unbounded");
  }
  return Interval{center_[axis] - half, center_[axis] + half};
}

Shape Shape::translated(const Vec& shift) const {
  if (shift.size() != center_.size()) throw DomainError("translate: dimension mismatch");
  Shape sh = *this;
  if (kind_ == ShapeKind::halfspace) sh.offset_ += shift.dot(center_);
  else sh.center_ += shift;
  return sh;
}

Shape Shape::scaled(double factor) const {
  if (!(factor > 0.0)) throw DomainError("scale factor must be positive");
  Shape sh = *this;
  if (kind_ == ShapeKind::halfspace) {
    sh.offset_ *= factor;
    return sh;
  }
  sh.center_ *= factor;
  sh.extents_ *= factor;
  sh.corner_radius_ *= factor;
  return sh;
}

std::string Shape::describe() const {
  auto v = [](const Vec& x) {
    std::string s = "(";
    for (int i = 0; i < x.size(); ++i) s += fmt::format("{}{:g}", i ? "," : "", x[i]);
    return s + ")";
  };
  switch (kind_) {
    case ShapeKind::ball: return fmt::format("ball{}R{:g}", v(center_), extents_[0]);
    case ShapeKind::ellipse: return fmt::format("ellipse{}a{}", v(center_), v(extents_));
    case ShapeKind::rounded_box: return fmt::format("rounded_box{}h{}rc{:g}", v(center_), v(extents_), corner_radius_);
    case ShapeKind::halfspace: return fmt::format("halfspace{}alpha{:g}", v(center_), offset_);
  }
  return "shape";
}

std::vector<BoundaryPanel> boundary_quadrature(const Shape& shape, int n_panels) {
  if (n_panels < 8) throw ConfigError("boundary_quadrature needs at least 8 panels");
  std::vector<BoundaryPanel> out;
  const Vec& c = shape.center();
  switch (shape.kind()) {
    case ShapeKind::ball: {
      const double R = shape.extents()[0];
      if (shape.dim() == 2) {
        out.reserve(8 * n_panels);
        add_arc(out, 0.0, 2 * kPi, n_panels, [&](double t) {
          BoundaryPanel bp;
          bp.u = vec2(std::cos(t), std::sin(t));
          bp.x = c + R * bp.u;
          bp.kappa[0] = 1.0 / R;
          bp.weight = R;
          return bp;
        });
        return out;
      }
      // Gauss-Legendre in the polar angle, uniform (trapezoidal) in azimuth.
      const int polar = std::max(2, n_panels / 8);
      const int azimuth = std::max(32, 2 * n_panels);
      std::vector<BoundaryPanel> rings;
      add_arc(rings, 0.0, kPi, polar, [&](double t) {
        BoundaryPanel bp;
        bp.x = Vec::Constant(1, t);
        bp.weight = R * R * std::sin(t);
        return bp;
      });
      out.reserve(rings.size() * azimuth);
      for (const auto& ring : rings) {
        const double t = ring.x[0];
        for (int j = 0; j < azimuth; ++j) {
          const double ph = 2 * kPi * j / azimuth;
          BoundaryPanel bp;
          bp.u = Vec(3);
          bp.u << std::sin(t) * std::cos(ph), std::sin(t) * std::sin(ph), std::cos(t);
          bp.x = c + R * bp.u;
          bp.kappa = {1.0 / R, 1.0 / R};
          bp.weight = ring.weight * 2 * kPi / azimuth;
          out.push_back(std::move(bp));
        }
      }
      return out;
    }
    case ShapeKind::ellipse: {
      const double a1 = shape.extents()[0];
      const double a2 = shape.extents()[1];
      out.reserve(8 * n_panels);
      add_arc(out, 0.0, 2 * kPi, n_panels, [&](double t) {
        const double ct = std::cos(t);
        const double st = std::sin(t);
        const double speed = std::hypot(a1 * st, a2 * ct);
        BoundaryPanel bp;
        bp.x = c + vec2(a1 * ct, a2 * st);
        bp.u = vec2(a2 * ct, a1 * st) / speed;
        bp.kappa[0] = a1 * a2 / (speed * speed * speed);
        bp.weight = speed;
        return bp;
      });
      return out;
    }
    case ShapeKind::rounded_box: {
      const double rc = shape.corner_radius();
      const double s1 = shape.extents()[0] - rc;
      const double s2 = shape.extents()[1] - rc;
      const double perimeter = 4 * (s1 + s2) + 2 * kPi * rc;
      auto panels_for = [&](double len) {
        return std::max(1, static_cast<int>(std::lround(n_panels * len / perimeter)));
      };
      // Counter-clockwise: right edge, top-right arc, top edge, ...
      const std::array<Vec, 4> corners = {vec2(s1, s2), vec2(-s1, s2), vec2(-s1, -s2), vec2(s1, -s2)};
      for (int q = 0; q < 4; ++q) {
        const double angle0 = q * kPi / 2;
        const Vec u = vec2(std::cos(angle0), std::sin(angle0));
        const Vec tangent = vec2(-u[1], u[0]);
        const double half_len = (q % 2 == 0) ? s2 : s1;
        if (half_len > 0.0) {
          const Vec base = c + (q % 2 == 0 ? s1 + rc : s2 + rc) * u;
          add_arc(out, -half_len, half_len, panels_for(2 * half_len), [&](double t) {
            BoundaryPanel bp;
            bp.x = base + t * tangent;
            bp.u = u;
            bp.kappa[0] = 0.0;
            bp.weight = 1.0;
            return bp;
          });
        }
        const Vec corner = c + corners[q];
        add_arc(out, angle0, angle0 + kPi / 2, panels_for(kPi / 2 * rc), [&](double t) {
          BoundaryPanel bp;
          bp.u = vec2(std::cos(t), std::sin(t));
          bp.x = corner + rc * bp.u;
          bp.kappa[0] = 1.0 / rc;
          bp.weight = rc;
          return bp;
        });
      }
      return out;
    }
    case ShapeKind::halfspace: break;
  }
  throw ConfigError(fmt::format("unsupported shape kind '{}'", to_string(shape.kind())));
}

SymTensor volume_tensor_oracle(const Shape& shape, int r, int n_panels) {
  require_rank(r, 0);
  const auto panels = boundary_quadrature(shape, n_panels);
  const int d = shape.dim();
  // Divergence theorem: int_X p = (1/(r+d)) int_dX p <x,u> for p homogeneous of degree r.
  SymTensor acc(d, r);
  for (const auto& bp : panels) acc += (bp.weight * bp.x.dot(bp.u)) * sym_pow(bp.x, r);
  return acc * (1.0 / ((r + d) * num::factorial(r)));
}

SymTensor surface_tensor_oracle(const Shape& shape, int r, int s, int n_panels) {
  require_rank(r, s);
  const auto panels = boundary_quadrature(shape, n_panels);
  const double c = 2.0 / num::sphere_area(s + 1) / (num::factorial(r) * num::factorial(s));
  return boundary_integral(panels, r, s, false) * c;
}

SymTensor curvature_tensor_oracle(const Shape& shape, int r, int n_panels) {
  return minkowski_tensor_oracle(shape, {0, r, 0}, n_panels);
}

SymTensor minkowski_tensor_oracle(const Shape& shape, const TensorIndex& idx, int n_panels) {
  const int d = shape.dim();
  require_rank(idx.r, idx.s);
  if (idx.k == d) {
    if (idx.s != 0) throw ConfigError("volume tensors carry no normal exponent");
    return volume_tensor_oracle(shape, idx.r, n_panels);
  }
  if (idx.k == d - 1) return surface_tensor_oracle(shape, idx.r, idx.s, n_panels);
  if (idx.k == 0 && d == 2) {
    const auto panels = boundary_quadrature(shape, n_panels);
    const double c = num::sphere_area(2) / num::sphere_area(2 + idx.s) / (2 * kPi) /
                     (num::factorial(idx.r) * num::factorial(idx.s));
    return boundary_integral(panels, idx.r, idx.s, true) * c;
  }
  throw DomainError(fmt::format("oracle for {} needs d = 2", to_string(idx)));
}

TensorFamily oracle_family(const Shape& shape, int max_rank, int n_panels) {
  const int d = shape.dim();
  TensorFamily fam;
  const int k_min = d == 2 ? 0 : d - 1;
  for (int k = k_min; k <= d; ++k)
    for (int r = 0; r <= max_rank; ++r)
      for (int s = 0; r + s <= max_rank; ++s) {
        if (k == d && s != 0) continue;
        fam.emplace(TensorIndex{k, r, s}, minkowski_tensor_oracle(shape, {k, r, s}, n_panels));
      }
  return fam;
}

}  // namespace greytensor
