#include "greytensor/mcmullen.hpp"

#include <fmt/format.h>

#include <numbers>

namespace greytensor {

namespace {

bool defined(const TensorIndex& idx, int dim) {
  if (idx.r < 0 || idx.s < 0 || idx.k < 0 || idx.k > dim) return false;
  if (idx.k == dim && idx.s != 0) return false;
  return true;
}

struct Term {
  TensorIndex idx;
  double coeff;
  bool times_metric;
};

std::vector<Term> terms(int k, int r, int dim) {
  std::vector<Term> out;
  for (int s = 0; s <= r; ++s) {
    const TensorIndex lhs{k - r + s, r - s, s};
    if (s > 0 && defined(lhs, dim)) out.push_back({lhs, 2.0 * std::numbers::pi * s, false});
    if (s >= 2) {
      const TensorIndex rhs{k - r + s, r - s, s - 2};
      if (defined(rhs, dim)) out.push_back({rhs, -1.0, true});
    }
  }
  return out;
}

}  // namespace

double mcmullen_member_scale(const TensorIndex& idx, int dim) { return idx.k == dim - 1 ? 0.5 : 1.0; }

std::vector<TensorIndex> mcmullen_required(int k, int r, int dim) {
  std::vector<TensorIndex> out;
  for (const auto& t : terms(k, r, dim)) out.push_back(t.idx);
  return out;
}

McMullenResidual mcmullen_relation(int k, int r, const TensorFamily& family, int dim) {
  if (r < 0 || k < 0) throw ConfigError("McMullen relation needs k, r >= 0");
  McMullenResidual out{SymTensor(dim, r), 0.0, {}};
  const SymTensor q = SymTensor::metric(dim);
  for (const auto& term : terms(k, r, dim)) {
    auto it = family.find(term.idx);
    if (it == family.end())
      throw ConfigError(fmt::format("McMullen ({}, {}): missing family member {}", k, r, to_string(term.idx)));
    const SymTensor& member = it->second;
    if (member.dim() != dim || member.rank() != term.idx.r + term.idx.s)
      throw ConfigError(fmt::format("McMullen ({}, {}): member {} has wrong shape", k, r, to_string(term.idx)));
    const double c = term.coeff * mcmullen_member_scale(term.idx, dim);
    if (term.times_metric) out.residual += c * sym_product(q, member);
    else out.residual += c * member;
    out.used.push_back(term.idx);
  }
  out.max_norm = out.residual.max_abs();
  return out;
}

}  // namespace greytensor
