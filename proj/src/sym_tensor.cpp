#include "greytensor/sym_tensor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>

namespace greytensor {

namespace {

struct Layout {
  std::vector<MultiIndex> indices;
  std::vector<std::uint32_t> tuple_pos;
};

void enumerate_sorted(int dim, int rank, int start, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (static_cast<int>(cur.size()) == rank) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < dim; ++i) {
    cur.push_back(i);
    enumerate_sorted(dim, rank, i, cur, out);
    cur.pop_back();
  }
}

const Layout& layout(int dim, int rank) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<Layout>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{dim, rank}];
  if (!slot) {
    auto lay = std::make_unique<Layout>();
    MultiIndex cur;
    enumerate_sorted(dim, rank, 0, cur, lay->indices);
    std::map<MultiIndex, std::uint32_t> lookup;
    for (std::uint32_t i = 0; i < lay->indices.size(); ++i) lookup[lay->indices[i]] = i;
    const std::size_t n = detail::tuple_count(dim, rank);
    lay->tuple_pos.resize(n);
    MultiIndex tuple(rank);
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t rest = t;
      for (int k = rank - 1; k >= 0; --k) {
        tuple[k] = static_cast<int>(rest % dim);
        rest /= dim;
      }
      MultiIndex sorted = tuple;
      std::sort(sorted.begin(), sorted.end());
      lay->tuple_pos[t] = lookup.at(sorted);
    }
    slot = std::move(lay);
  }
  return *slot;
}

// Decodes tuple number t into digits base dim (row-major).
void decode(std::size_t t, int dim, int rank, int* digits) {
  for (int k = rank - 1; k >= 0; --k) {
    digits[k] = static_cast<int>(t % dim);
    t /= dim;
  }
}

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

namespace detail {

std::size_t tuple_count(int dim, int rank) {
  std::size_t n = 1;
  for (int k = 0; k < rank; ++k) n *= static_cast<std::size_t>(dim);
  return n;
}

const std::vector<std::uint32_t>& tuple_positions(int dim, int rank) {
  return layout(dim, rank).tuple_pos;
}

}  // namespace detail

SymTensor::SymTensor(int dim, int rank) : dim_(dim), rank_(rank) {
  if (dim < 1 || dim > kMaxDim) throw DomainError(fmt::format("tensor dimension {} out of range", dim));
  if (rank < 0 || rank > kMaxRank) throw DomainError(fmt::format("tensor rank {} out of range", rank));
  comps_.assign(layout(dim, rank).indices.size(), 0.0);
}

SymTensor SymTensor::scalar(double value, int dim) {
  SymTensor t(dim, 0);
  t.comps_[0] = value;
  return t;
}

SymTensor SymTensor::metric(int dim) {
  SymTensor t(dim, 2);
  for (int i = 0; i < dim; ++i) t.at({i, i}) = 1.0;
  return t;
}

const std::vector<MultiIndex>& SymTensor::indices() const { return layout(dim_, rank_).indices; }

std::size_t SymTensor::position(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != rank_)
    throw DomainError(fmt::format("index of length {} for rank {} tensor", index.size(), rank_));
  std::size_t t = 0;
  for (int i : index) {
    if (i < 0 || i >= dim_) throw DomainError(fmt::format("axis {} out of range for dim {}", i, dim_));
    t = t * dim_ + static_cast<std::size_t>(i);
  }
  return layout(dim_, rank_).tuple_pos[t];
}

double SymTensor::at(std::span<const int> index) const { return comps_[position(index)]; }
double& SymTensor::at(std::span<const int> index) { return comps_[position(index)]; }
double SymTensor::at(std::initializer_list<int> index) const {
  return at(std::span<const int>(index.begin(), index.size()));
}
double& SymTensor::at(std::initializer_list<int> index) {
  return at(std::span<const int>(index.begin(), index.size()));
}

double SymTensor::eval(std::span<const Vec> args) const {
  if (static_cast<int>(args.size()) != rank_)
    throw DomainError(fmt::format("{} arguments for rank {} tensor", args.size(), rank_));
  for (const auto& w : args)
    if (w.size() != dim_) throw DomainError("argument dimension mismatch");
  const auto& pos = layout(dim_, rank_).tuple_pos;
  int digits[kMaxRank];
  double sum = 0.0;
  for (std::size_t t = 0; t < pos.size(); ++t) {
    decode(t, dim_, rank_, digits);
    double prod = comps_[pos[t]];
    for (int k = 0; k < rank_; ++k) prod *= args[k][digits[k]];
    sum += prod;
  }
  return sum;
}

void SymTensor::check_compatible(const SymTensor& other) const {
  if (dim_ != other.dim_ || rank_ != other.rank_)
    throw DomainError(fmt::format("tensor shape mismatch: (d={}, p={}) vs (d={}, p={})", dim_, rank_,
                                  other.dim_, other.rank_));
}

SymTensor& SymTensor::operator+=(const SymTensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < comps_.size(); ++i) comps_[i] += other.comps_[i];
  return *this;
}

SymTensor& SymTensor::operator-=(const SymTensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < comps_.size(); ++i) comps_[i] -= other.comps_[i];
  return *this;
}

SymTensor& SymTensor::operator*=(double s) {
  for (double& c : comps_) c *= s;
  return *this;
}

double SymTensor::max_abs() const {
  double m = 0.0;
  for (double c : comps_) m = std::max(m, std::abs(c));
  return m;
}

bool SymTensor::approx_equal(const SymTensor& other, double tol) const {
  return dim_ == other.dim_ && rank_ == other.rank_ && max_abs_diff(*this, other) <= tol;
}

double max_abs_diff(const SymTensor& a, const SymTensor& b) { return (a - b).max_abs(); }

SymTensor sym_pow(const Vec& x, int r) {
  const int d = static_cast<int>(x.size());
  SymTensor t(d, r);
  const auto& idx = t.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double p = 1.0;
    for (int a : idx[i]) p *= x[a];
    t[i] = p;
  }
  return t;
}

SymTensor sym_product(const SymTensor& a, const SymTensor& b) {
  if (a.dim() != b.dim()) throw DomainError("sym_product dimension mismatch");
  const int p = a.rank();
  const int q = b.rank();
  const int n = p + q;
  SymTensor out(a.dim(), n);
  const auto& idx = out.indices();
  const double norm = 1.0 / binomial(n, p);
  int left[SymTensor::kMaxRank];
  int right[SymTensor::kMaxRank];
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double sum = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != p) continue;
      int nl = 0;
      int nr = 0;
      for (int k = 0; k < n; ++k) {
        if (mask & (1u << k)) left[nl++] = idx[i][k];
        else right[nr++] = idx[i][k];
      }
      sum += a.at(std::span<const int>(left, nl)) * b.at(std::span<const int>(right, nr));
    }
    out[i] = sum * norm;
  }
  return out;
}

SymTensor sym_pow_product(const Vec& x, int r, const Vec& u, int s) {
  if (x.size() != u.size()) throw DomainError("sym_pow_product dimension mismatch");
  const int n = r + s;
  SymTensor out(static_cast<int>(x.size()), n);
  const auto& idx = out.indices();
  if (r == 0 || s == 0) {
    const Vec& v = (r == 0) ? u : x;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double p = 1.0;
      for (int a : idx[i]) p *= v[a];
      out[i] = p;
    }
    return out;
  }
  const double norm = 1.0 / binomial(n, r);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double sum = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != r) continue;
      double p = 1.0;
      for (int k = 0; k < n; ++k) p *= (mask & (1u << k)) ? x[idx[i][k]] : u[idx[i][k]];
      sum += p;
    }
    out[i] = sum * norm;
  }
  return out;
}

SymTensor trace_contract(const SymTensor& t) {
  if (t.rank() < 2) throw DomainError("trace_contract needs rank >= 2");
  SymTensor out(t.dim(), t.rank() - 2);
  const auto& idx = out.indices();
  int full[SymTensor::kMaxRank];
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int p = t.rank() - 2;
    std::copy(idx[i].begin(), idx[i].end(), full);
    double sum = 0.0;
    for (int j = 0; j < t.dim(); ++j) {
      full[p] = j;
      full[p + 1] = j;
      sum += t.at(std::span<const int>(full, p + 2));
    }
    out[i] = sum;
  }
  return out;
}

SymTensor from_basis_evaluations(std::span<const double> table, int rank, const Mat& basis) {
  const int d = static_cast<int>(basis.rows());
  const std::size_t n = detail::tuple_count(d, rank);
  if (table.size() != n) throw DomainError("evaluation table has wrong size");
  // e_j = sum_i W(i, j) v_i with W = B^{-1}.
  const Mat w = basis.inverse();
  std::vector<double> std_table(n, 0.0);
  int out_digits[SymTensor::kMaxRank];
  int in_digits[SymTensor::kMaxRank];
  for (std::size_t o = 0; o < n; ++o) {
    decode(o, d, rank, out_digits);
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      decode(t, d, rank, in_digits);
      double c = table[t];
      for (int k = 0; k < rank && c != 0.0; ++k) c *= w(in_digits[k], out_digits[k]);
      sum += c;
    }
    std_table[o] = sum;
  }
  SymTensor out(d, rank);
  std::vector<int> counts(out.size(), 0);
  const auto& pos = detail::tuple_positions(d, rank);
  for (std::size_t t = 0; t < n; ++t) {
    out[pos[t]] += std_table[t];
    ++counts[pos[t]];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= counts[i];
  return out;
}

void write_tensor(std::ostream& os, const SymTensor& t) {
  os << "dim " << t.dim() << '\n' << "rank " << t.rank() << '\n';
  const auto& idx = t.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::string line;
    for (int a : idx[i]) line += fmt::format("{} ", a + 1);
    line += fmt::format("{:.17g}", t[i]);
    os << line << '\n';
  }
}

SymTensor read_tensor(std::istream& is) {
  std::string key;
  int dim = 0;
  int rank = 0;
  if (!(is >> key >> dim) || key != "dim") throw ConfigError("tensor record: expected 'dim'");
  if (!(is >> key >> rank) || key != "rank") throw ConfigError("tensor record: expected 'rank'");
  SymTensor t(dim, rank);
  MultiIndex index(rank);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (int k = 0; k < rank; ++k) {
      if (!(is >> index[k])) throw ConfigError("tensor record: truncated index");
      --index[k];
    }
    double v = 0.0;
    if (!(is >> v)) throw ConfigError("tensor record: missing value");
    if (!std::is_sorted(index.begin(), index.end()))
      throw ConfigError("tensor record: multi-index not sorted");
    t.at(index) = v;
  }
  return t;
}

std::string to_text(const SymTensor& t) {
  std::ostringstream os;
  write_tensor(os, t);
  return os.str();
}

std::string to_string(const TensorIndex& idx) {
  return fmt::format("Phi_{}^{{{},{}}}", idx.k, idx.r, idx.s);
}

}  // namespace greytensor
