#include "greytensor/mcmullen.hpp"
#include "greytensor/shapes.hpp"
#include "greytensor/sym_tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace greytensor;

namespace {

Vec random_vec(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> N;
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = N(rng);
  return v;
}

SymTensor random_tensor(std::mt19937_64& rng, int d, int p) {
  std::normal_distribution<double> N;
  SymTensor t(d, p);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = N(rng);
  return t;
}

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("storage holds C(d+p-1, p) components") {
  for (int d = 1; d <= 3; ++d)
    for (int p = 0; p <= 5; ++p) CHECK(SymTensor(d, p).size() == static_cast<std::size_t>(binomial(d + p - 1, p)));
}

TEST_CASE("sym_pow examples") {
  const SymTensor e = sym_pow((Vec(2) << 1, 0).finished(), 2);
  CHECK(e.at({0, 0}) == 1.0);
  CHECK(e.at({0, 1}) == 0.0);
  CHECK(e.at({1, 1}) == 0.0);
  const SymTensor s = sym_pow((Vec(2) << 1, 2).finished(), 0);
  CHECK(s.rank() == 0);
  CHECK(s[0] == 1.0);
  const SymTensor x = sym_pow((Vec(2) << 1, 2).finished(), 2);
  CHECK(x.at({0, 0}) == 1.0);
  CHECK(x.at({0, 1}) == 2.0);
  CHECK(x.at({1, 0}) == 2.0);
  CHECK(x.at({1, 1}) == 4.0);
}

TEST_CASE("evaluation identities") {
  std::mt19937_64 rng(1);
  for (int d = 1; d <= 3; ++d) {
    const Vec x = random_vec(rng, d);
    const Vec w = random_vec(rng, d);
    const std::vector<Vec> www{w, w, w};
    CHECK(sym_pow(x, 3).eval(www) == doctest::Approx(std::pow(x.dot(w), 3)).epsilon(1e-12));
    const std::vector<Vec> ww{w, w};
    CHECK(SymTensor::metric(d).eval(ww) == doctest::Approx(w.squaredNorm()).epsilon(1e-12));
    const SymTensor T = random_tensor(rng, d, 3);
    const SymTensor U = random_tensor(rng, d, 3);
    const std::vector<Vec> args{random_vec(rng, d), random_vec(rng, d), random_vec(rng, d)};
    CHECK((T + U).eval(args) == doctest::Approx(T.eval(args) + U.eval(args)).epsilon(1e-12));
    // Permuting the arguments does not change the value.
    const std::vector<Vec> perm{args[2], args[0], args[1]};
    CHECK(T.eval(perm) == doctest::Approx(T.eval(args)).epsilon(1e-12));
  }
}

TEST_CASE("trace contraction") {
  CHECK(trace_contract(SymTensor::metric(2))[0] == doctest::Approx(2.0));
  const Vec x = (Vec(3) << 0.3, -1.2, 2.0).finished();
  CHECK(trace_contract(sym_pow(x, 2))[0] == doctest::Approx(x.squaredNorm()));
  const Shape circle = Shape::ball(Vec::Zero(2), 1.0);
  CHECK(trace_contract(surface_tensor_oracle(circle, 0, 2))[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sym_product is commutative and matches sym_pow_product") {
  std::mt19937_64 rng(2);
  const Vec x = random_vec(rng, 3);
  const Vec u = random_vec(rng, 3);
  const SymTensor a = sym_product(sym_pow(x, 2), sym_pow(u, 1));
  const SymTensor b = sym_product(sym_pow(u, 1), sym_pow(x, 2));
  CHECK(max_abs_diff(a, b) < 1e-14);
  CHECK(max_abs_diff(a, sym_pow_product(x, 2, u, 1)) < 1e-14);
}

TEST_CASE("from_basis_evaluations inverts evaluation on a sheared basis") {
  std::mt19937_64 rng(3);
  Mat B(2, 2);
  B << 1, 1, 0, 1;
  for (int p = 0; p <= 3; ++p) {
    const SymTensor T = random_tensor(rng, 2, p);
    const std::size_t n = static_cast<std::size_t>(std::pow(2, p));
    std::vector<double> table(n);
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<Vec> args;
      std::size_t rem = t;
      std::vector<int> digits(p);
      for (int k = p - 1; k >= 0; --k) {
        digits[k] = static_cast<int>(rem % 2);
        rem /= 2;
      }
      for (int k = 0; k < p; ++k) args.push_back(B.col(digits[k]));
      table[t] = T.eval(args);
    }
    CHECK(max_abs_diff(from_basis_evaluations(table, p, B), T) < 1e-12);
  }
}

TEST_CASE("text roundtrip") {
  std::mt19937_64 rng(4);
  const SymTensor T = random_tensor(rng, 3, 2);
  std::stringstream ss;
  write_tensor(ss, T);
  CHECK(read_tensor(ss) == T);
}

TEST_CASE("incompatible tensors are rejected") {
  SymTensor a(2, 1);
  SymTensor b(3, 1);
  CHECK_THROWS(a += b);
}

TEST_CASE("McMullen residuals") {
  SUBCASE("all-zero family") {
    TensorFamily fam;
    for (const auto& idx : mcmullen_required(1, 2, 2)) fam[idx] = SymTensor(2, idx.r + idx.s);
    CHECK(mcmullen_residual(1, 2, fam, 2) == 0.0);
  }
  SUBCASE("oracle families of convex shapes") {
    for (const Shape& s : {Shape::ball(Vec::Zero(2), 1.0), Shape::ellipse((Vec(2) << 0.2, -0.1).finished(), 1.2, 0.7),
                           Shape::rounded_box((Vec(2) << 0.3, 0.1).finished(), (Vec(2) << 1.0, 0.6).finished(), 0.3)}) {
      const TensorFamily fam = oracle_family(s, 3);
      for (int k = 0; k <= 2; ++k)
        for (int r = 0; k + r <= 3; ++r) CHECK(mcmullen_residual(k, r, fam, 2) < 1e-8);
    }
  }
  SUBCASE("perturbation is detected") {
    TensorFamily fam = oracle_family(Shape::ball(Vec::Zero(2), 1.0), 3);
    fam[{1, 0, 1}][0] += 0.1;
    CHECK(mcmullen_residual(1, 1, fam, 2) >= 0.1 * std::numbers::pi - 1e-12);
  }
  SUBCASE("missing member") {
    TensorFamily fam;
    CHECK_THROWS_AS((void)mcmullen_residual(1, 1, fam, 2), ConfigError);
  }
}
