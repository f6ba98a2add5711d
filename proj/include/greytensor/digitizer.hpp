#pragma once

#include "greytensor/psf.hpp"
#include "greytensor/shapes.hpp"
#include "greytensor/types.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace greytensor {

/// Observation lattice a(Lambda + c) with Lambda spanned by the columns of `basis`.
struct Lattice {
  Mat basis;
  double a = 1.0;
  /// Translation in unscaled lattice space, inside the fundamental cell.
  Vec c;

  /// Validates |det basis| = 1, a > 0 and c in the fundamental cell.
  static Lattice make(const Mat& basis, double a, const Vec& c);
  static Lattice standard(int dim, double a);
  /// Translation drawn uniformly from the fundamental cell by a counter-based
  /// generator; depends only on (seed, index).
  static Lattice random_translation(const Mat& basis, double a, std::uint64_t seed, std::uint64_t index);

  [[nodiscard]] int dim() const { return static_cast<int>(basis.cols()); }
  /// V = max |v_i|.
  [[nodiscard]] double diameter() const;
  /// Physical position a(B z + c).
  [[nodiscard]] Vec position(const IVec& z) const;
};

/// Box of lattice indices lo <= z < lo + size.
struct Window {
  IVec lo;
  IVec size;

  [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] bool contains(const IVec& z) const;
  /// Linear position with axis 0 fastest.
  [[nodiscard]] std::size_t linear(const IVec& z) const;
  [[nodiscard]] IVec index(std::size_t linear) const;
};

/// Lattice-sampled intensities theta_a^X(a(z + c)) over a window.
class GreyImage {
 public:
  GreyImage() = default;
  GreyImage(Lattice lattice, Window window, std::vector<double> values);

  [[nodiscard]] const Lattice& lattice() const { return lattice_; }
  [[nodiscard]] const Window& window() const { return window_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] double at(const IVec& z) const;

  /// True when some sample came from a path that could not certify 1e-6 accuracy.
  bool degraded = false;
  std::map<std::string, std::string> metadata;

 private:
  Lattice lattice_;
  Window window_;
  std::vector<double> values_;
};

/// Ordered offset set S in lattice coordinates, inside an n x ... x n block.
struct ConfigOffsets {
  std::vector<IVec> offsets;
  int block = 1;
  /// Block anchor w: the block is w + {0..n-1}^d.
  IVec anchor;

  static ConfigOffsets single(int dim);
  /// {0, v_1, ..., v_d}, block 2 anchored at 0.
  static ConfigOffsets forward(int dim);
  /// {0, +v_1, -v_1, ..., +v_d, -v_d}, block 3 anchored at -(1,...,1).
  static ConfigOffsets symmetric(int dim);

  [[nodiscard]] int dim() const { return static_cast<int>(anchor.size()); }
  [[nodiscard]] std::size_t size() const { return offsets.size(); }
  [[nodiscard]] std::string describe() const;
};

enum class IntensityMethod { automatic, supersampled };

struct Intensity {
  double value = 0.0;
  bool degraded = false;
};

/// Supersampling factor of the generic path (subgrid spacing a / factor).
inline constexpr int kSupersample = 8;

/// theta_a^X(x) = int_X rho_a(z - x) dz.
[[nodiscard]] Intensity intensity(const Shape& shape, const Psf& psf, double a, const Vec& x,
                                  IntensityMethod method = IntensityMethod::automatic);

/// Unit-scale intensity of a ball of radius `rho` whose center lies at
/// distance `lambda` from the sample point (closed forms or smooth 1D quadrature).
[[nodiscard]] double ball_intensity(const Psf& psf, double lambda, double rho);

/// Window covering X + B(2 a D_eff) plus `margin` extra cells on every side.
[[nodiscard]] Window window_for(const Shape& shape, const Psf& psf, const Lattice& lattice, int margin);

struct RenderOptions {
  std::size_t max_points = std::size_t{1} << 26;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
  IntensityMethod method = IntensityMethod::automatic;
};

[[nodiscard]] GreyImage render(const Shape& shape, const Psf& psf, const Lattice& lattice, const Window& window,
                               const RenderOptions& options = {});

/// {theta(a(z + s))}_{s in S}; throws DomainError if some z + s is outside the window.
[[nodiscard]] std::vector<double> extract_config(const GreyImage& image, const IVec& z, const ConfigOffsets& offsets);

}  // namespace greytensor
