#pragma once

#include "greytensor/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace greytensor {

/// Non-decreasing multi-index (0-based axis numbers).
using MultiIndex = std::vector<int>;

/// Symmetric rank-p tensor over R^d.
///
/// One value is stored per non-decreasing multi-index i1 <= ... <= ip; the
/// stored value is T(e_i1, ..., e_ip). Multiplicities of permuted tuples are
/// applied at evaluation time, never in storage, so two tensors are equal iff
/// their component vectors are equal.
class SymTensor {
 public:
  static constexpr int kMaxRank = 8;

  SymTensor() = default;
  SymTensor(int dim, int rank);

  static SymTensor scalar(double value, int dim);
  /// The metric tensor Q (identity), rank 2.
  static SymTensor metric(int dim);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int rank() const { return rank_; }
  [[nodiscard]] std::size_t size() const { return comps_.size(); }

  /// Sorted multi-indices in storage order.
  [[nodiscard]] const std::vector<MultiIndex>& indices() const;
  [[nodiscard]] std::span<const double> components() const { return comps_; }
  [[nodiscard]] std::span<double> components() { return comps_; }

  double& operator[](std::size_t i) { return comps_[i]; }
  double operator[](std::size_t i) const { return comps_[i]; }

  /// Component for an arbitrary (unsorted) index tuple.
  [[nodiscard]] double at(std::span<const int> index) const;
  double& at(std::span<const int> index);
  [[nodiscard]] double at(std::initializer_list<int> index) const;
  double& at(std::initializer_list<int> index);

  /// Storage position of an arbitrary index tuple.
  [[nodiscard]] std::size_t position(std::span<const int> index) const;

  /// Multilinear evaluation T(w1, ..., wp).
  [[nodiscard]] double eval(std::span<const Vec> args) const;

  SymTensor& operator+=(const SymTensor& other);
  SymTensor& operator-=(const SymTensor& other);
  SymTensor& operator*=(double s);

  [[nodiscard]] double max_abs() const;
  [[nodiscard]] bool approx_equal(const SymTensor& other, double tol) const;

  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
  friend SymTensor operator*(double s, SymTensor a) { return a *= s; }
  friend bool operator==(const SymTensor&, const SymTensor&) = default;

 private:
  void check_compatible(const SymTensor& other) const;

  int dim_ = 1;
  int rank_ = 0;
  std::vector<double> comps_{0.0};
};

/// Max-norm of a - b over distinct components.
[[nodiscard]] double max_abs_diff(const SymTensor& a, const SymTensor& b);

/// x^r, the r-fold symmetric power; evaluates to <x,w>^r at (w, ..., w).
[[nodiscard]] SymTensor sym_pow(const Vec& x, int r);

/// Symmetrized tensor product, normalized by averaging over slot permutations.
[[nodiscard]] SymTensor sym_product(const SymTensor& a, const SymTensor& b);

/// x^r u^s as a symmetric (r+s)-tensor. Same as sym_product(sym_pow(x,r), sym_pow(u,s)).
[[nodiscard]] SymTensor sym_pow_product(const Vec& x, int r, const Vec& u, int s);

/// Contracts the last two slots against the metric; rank drops by 2.
[[nodiscard]] SymTensor trace_contract(const SymTensor& t);

/// Builds the symmetric tensor whose evaluations on the basis columns
/// (v_i1, ..., v_ip) are given by `table` (row-major over {0..d-1}^p).
/// The table need not be symmetric; the result is its symmetrization
/// expressed in the standard basis via the dual basis of `basis`.
[[nodiscard]] SymTensor from_basis_evaluations(std::span<const double> table, int rank,
                                               const Mat& basis);

// Text record: "dim <d>", "rank <p>", then one line per sorted multi-index
// (1-based axis numbers) followed by the value with 17 significant digits.
void write_tensor(std::ostream& os, const SymTensor& t);
[[nodiscard]] SymTensor read_tensor(std::istream& is);
[[nodiscard]] std::string to_text(const SymTensor& t);

/// Minkowski tensor label Phi_k^{r,s}.
struct TensorIndex {
  int k = 0;
  int r = 0;
  int s = 0;

  friend auto operator<=>(const TensorIndex&, const TensorIndex&) = default;
};

[[nodiscard]] std::string to_string(const TensorIndex& idx);

using TensorFamily = std::map<TensorIndex, SymTensor>;

namespace detail {
/// Number of tuples d^p, with overflow guard.
std::size_t tuple_count(int dim, int rank);
/// For every tuple in {0..d-1}^p (row-major), its sorted storage position.
const std::vector<std::uint32_t>& tuple_positions(int dim, int rank);
}  // namespace detail

}  // namespace greytensor
