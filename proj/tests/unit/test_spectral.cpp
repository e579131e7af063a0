#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "rlab/errors.hpp"
#include "rlab/fixtures.hpp"
#include "rlab/measure.hpp"
#include "rlab/parallel.hpp"
#include "rlab/spectral.hpp"
#include "rlab/sphere_net.hpp"

using namespace rlab;

namespace {

using Key = std::tuple<int, int, int, int>;

SparseField random_field(std::mt19937_64& rng, double h, int spread, int count, bool spatial = false) {
  std::uniform_int_distribution<int> u(-spread, spread);
  std::normal_distribution<double> g;
  std::set<Key> seen;
  std::vector<std::pair<LatticePoint, Complex>> e;
  while (static_cast<int>(e.size()) < count) {
    LatticePoint k{spatial ? 0 : u(rng), u(rng), u(rng), u(rng)};
    if (k.x == 0 && k.y == 0 && k.z == 0) continue;
    if (!seen.insert({k.t, k.x, k.y, k.z}).second) continue;
    e.push_back({k, Complex(g(rng), g(rng))});
  }
  return SparseField::from_entries(spatial ? 1.0 : h, h, std::move(e));
}

std::map<Key, Complex> brute_product(const SparseField& u1, const SparseField& u2, SymbolKind s, Sign s1, Sign s2) {
  std::map<Key, Complex> out;
  const double h4 = u1.cell_volume();
  for (std::size_t i = 0; i < u1.size(); ++i) {
    for (std::size_t j = 0; j < u2.size(); ++j) {
      const auto& a = u1.points()[i];
      const auto& b = u2.points()[j];
      const Vec3 x1 = u1.h_xi() * Vec3(a.x, a.y, a.z), x2 = u2.h_xi() * Vec3(b.x, b.y, b.z);
      double w = 1.0;
      if (s.kind != SymbolKind::One) {
        const Vec3 a1 = value(s1) * x1, a2 = value(s2) * x2;
        const double th = std::atan2(a1.cross(a2).norm(), a1.dot(a2));
        w = s.kind == SymbolKind::Theta12 ? th : std::sqrt(th);
      }
      out[{a.t + b.t, a.x + b.x, a.y + b.y, a.z + b.z}] += h4 * w * u1.coeffs()[i] * u2.coeffs()[j];
    }
  }
  return out;
}

// v(k) = conj(u(-k))
SparseField reflected(const SparseField& u) {
  std::vector<std::pair<LatticePoint, Complex>> e;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& k = u.points()[i];
    e.push_back({{-k.t, -k.x, -k.y, -k.z}, std::conj(u.coeffs()[i])});
  }
  return SparseField::from_entries(u.h_tau(), u.h_xi(), std::move(e));
}

}  // namespace

TEST_CASE("l2 norm examples") {
  CHECK(l2_norm(SparseField(1, 1)) == 0.0);
  const auto one = SparseField::from_entries(1, 1, {{{0, 1, 0, 0}, Complex(1, 0)}});
  CHECK(l2_norm(one) == 1.0);
  std::mt19937_64 rng(1);
  const auto u = random_field(rng, 0.5, 4, 50);
  CHECK(l2_norm(u.scaled(Complex(0, -3))) == doctest::Approx(3 * l2_norm(u)).epsilon(1e-14));
}

TEST_CASE("populate_region counts and determinism") {
  CHECK(populate_region(Region::intersect({Region::ball(Vec3::Zero(), 1), Region::ball(Vec3(5, 0, 0), 1)}), 0.25,
                        FillMode::ones())
            .empty());
  const double N = 8, L = 1, h = 0.25;
  const auto u = populate_region(Region::thick_cone(Sign::Plus, N, L), h, FillMode::ones());
  const auto vol = mc_volume(Region::thick_cone(Sign::Plus, N, L), 400000, 12);
  const double predicted = vol.value / std::pow(h, 4);
  CHECK(std::abs(u.size() - predicted) <= 0.1 * predicted);
  const auto a = populate_region(Region::ball(Vec3(1, 1, 1), 2), 0.5, FillMode::gaussian(5));
  const auto b = populate_region(Region::ball(Vec3(1, 1, 1), 2), 0.5, FillMode::gaussian(5));
  CHECK(a.coeffs() == b.coeffs());
  CHECK_THROWS_AS(populate_region(Region::ball(Vec3::Zero(), 100), 0.25, FillMode::ones(), 1000), ResourceError);
}

TEST_CASE("projection is idempotent, contractive and splits the norm") {
  std::mt19937_64 rng(2);
  const auto u = random_field(rng, 0.5, 6, 400);
  const Region A = Region::cylinder(Region::ball(Vec3(0.5, 0, 0), 1.6));
  const auto pa = project(u, A);
  CHECK(project(u, Region::whole(4)).size() == u.size());
  CHECK(project(pa, A).coeffs() == pa.coeffs());
  CHECK(l2_norm(pa) <= l2_norm(u));
  const auto pc = project(u, Region::complement(A));
  const double lhs = std::pow(l2_norm(pa), 2) + std::pow(l2_norm(pc), 2);
  CHECK(lhs == doctest::Approx(std::pow(l2_norm(u), 2)).epsilon(1e-13));
  CHECK(pa.size() + pc.size() == u.size());
}

TEST_CASE("bilinear product equals a brute-force convolution") {
  std::mt19937_64 rng(3);
  for (SymbolKind s : {SymbolKind::one(), SymbolKind::theta12(), SymbolKind::sqrt_theta12()}) {
    for (auto signs : {std::pair{Sign::Plus, Sign::Plus}, std::pair{Sign::Plus, Sign::Minus}}) {
      const auto u1 = random_field(rng, 0.5, 3, 60);
      const auto u2 = random_field(rng, 0.5, 3, 60);
      const auto p = bilinear_product(u1, u2, s, signs);
      const auto ref = brute_product(u1, u2, s, signs.first, signs.second);
      double scale = 0;
      for (const auto& [k, v] : ref) scale = std::max(scale, std::abs(v));
      double err = 0;
      std::size_t nonzero = 0;
      for (const auto& [k, v] : ref) {
        const auto got = p.at({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)});
        err = std::max(err, std::abs(got.value_or(Complex(0, 0)) - v));
        if (v != Complex(0, 0)) ++nonzero;
      }
      CHECK(err <= 1e-12 * scale);
      CHECK(p.size() <= nonzero);
      for (const auto& k : p.points()) CHECK(ref.count({k.t, k.x, k.y, k.z}) == 1);
    }
  }
}

TEST_CASE("single pair product") {
  const double h = 0.5;
  const auto u1 = SparseField::from_entries(h, h, {{{1, 2, 0, 0}, Complex(2, 0)}});
  const auto u2 = SparseField::from_entries(h, h, {{{0, 0, 3, 0}, Complex(0, 1)}});
  const auto p = bilinear_product(u1, u2, SymbolKind::theta12(), {Sign::Plus, Sign::Plus});
  REQUIRE(p.size() == 1);
  CHECK(p.points()[0] == LatticePoint{1, 2, 3, 0});
  CHECK(std::abs(p.coeffs()[0] - std::pow(h, 4) * Complex(0, 2) * (M_PI / 2)) <= 1e-15);
  CHECK(bilinear_product(SparseField(h, h), u2, SymbolKind::one(), {Sign::Plus, Sign::Plus}).empty());
  CHECK_THROWS(bilinear_product(u1, SparseField::from_entries(0.25, 0.25, {{{0, 1, 0, 0}, 1.0}}), SymbolKind::one(),
                                {Sign::Plus, Sign::Plus}));
}

TEST_CASE("output frequencies obey the triangle constraints") {
  const double N1 = 4, N2 = 1.5, h = 0.25;
  const auto u1 = populate_region(Region::annulus(N1), h, FillMode::gaussian(1));
  const auto u2 = populate_region(Region::annulus(N2), h, FillMode::gaussian(2));
  const auto p = bilinear_product(u1, u2, SymbolKind::one(), {Sign::Plus, Sign::Plus});
  const double lo = std::max({0.0, N1 / 2 - N2, N2 / 2 - N1});
  int violations = 0;
  for (const auto& g : p.groups()) {
    const double n = p.xi_of(g).norm();
    if (n > N1 + N2 + 1e-12 || n < lo - 1e-12) ++violations;
  }
  CHECK(violations == 0);
  CHECK(p.size() > 0);
}

TEST_CASE("trilinear form equals the paired product on random triples") {
  std::mt19937_64 rng(4);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto u0 = random_field(rng, 0.5, 4, 150);
    const auto u1 = random_field(rng, 0.5, 2, 40);
    const auto u2 = random_field(rng, 0.5, 2, 40);
    const Complex t = trilinear_form(u0, u1, u2);
    const Complex ref = inner_product(bilinear_product(u1, u2, SymbolKind::one(), {Sign::Plus, Sign::Plus}), u0);
    worst = std::max(worst, std::abs(t - ref) / std::max(std::abs(ref), 1e-300));
  }
  CHECK(worst <= 1e-10);
  std::mt19937_64 r2(5);
  const auto a = random_field(r2, 0.5, 2, 10);
  CHECK(trilinear_form(SparseField(0.5, 0.5), a, a) == Complex(0, 0));
}

TEST_CASE("trilinear form of a product with itself is its squared norm") {
  std::mt19937_64 rng(6);
  const auto u1 = random_field(rng, 0.5, 2, 30);
  const auto u2 = random_field(rng, 0.5, 2, 30);
  const auto u0 = bilinear_product(u1, u2, SymbolKind::one(), {Sign::Plus, Sign::Plus});
  const Complex t = trilinear_form(u0, u1, u2);
  CHECK(t.real() == doctest::Approx(std::pow(l2_norm(u0), 2)).epsilon(1e-12));
  CHECK(std::abs(t.imag()) <= 1e-12 * t.real());
}

TEST_CASE("trilinear form is invariant under the reflected swap") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto u0 = random_field(rng, 0.5, 4, 150);
    const auto u1 = random_field(rng, 0.5, 2, 40);
    const auto u2 = random_field(rng, 0.5, 2, 40);
    const Complex a = trilinear_form(u0, u1, u2);
    const Complex b = trilinear_form(u1, u0, reflected(u2));
    CHECK(std::abs(std::abs(a) - std::abs(b)) <= 1e-10 * std::max(std::abs(a), 1e-300));
  }
}

TEST_CASE("products are bit identical for any worker count") {
  std::mt19937_64 rng(8);
  const auto u1 = random_field(rng, 0.5, 4, 300);
  const auto u2 = random_field(rng, 0.5, 4, 300);
  set_jobs(1);
  const auto a = bilinear_product(u1, u2, SymbolKind::theta12(), {Sign::Plus, Sign::Minus});
  set_jobs(4);
  const auto b = bilinear_product(u1, u2, SymbolKind::theta12(), {Sign::Plus, Sign::Minus});
  set_jobs(0);
  CHECK(a.points() == b.points());
  CHECK(a.coeffs() == b.coeffs());
}

TEST_CASE("null collinear pairs vanish under the angle symbol") {
  const double h = 0.5;
  const auto u1 = SparseField::from_entries(h, h, {{{2, 2, 0, 0}, Complex(1, 0)}});
  const auto u2 = SparseField::from_entries(h, h, {{{4, 4, 0, 0}, Complex(1, 0)}});
  CHECK(bilinear_product(u1, u2, SymbolKind::theta12(), {Sign::Plus, Sign::Plus}).empty());
  CHECK(bilinear_product(u1, u2, SymbolKind::one(), {Sign::Plus, Sign::Plus}).size() == 1);
  CHECK(bilinear_product(u1, u2, SymbolKind::theta12(), {Sign::Plus, Sign::Minus}).size() == 1);
}

TEST_CASE("binary and JSON round trips") {
  std::mt19937_64 rng(9);
  const auto u = random_field(rng, 0.25, 5, 200);
  std::stringstream ss;
  write_binary(u, ss);
  ss.seekg(0);
  const auto b = read_binary(ss);
  CHECK(b.points() == u.points());
  CHECK(b.coeffs() == u.coeffs());
  CHECK(b.h_tau() == u.h_tau());
  const auto j = field_from_json(nlohmann::json::parse(to_json(u).dump()));
  CHECK(j.points() == u.points());
  CHECK(j.coeffs() == u.coeffs());
  std::stringstream bad("XXXX");
  CHECK_THROWS(read_binary(bad));
}

TEST_CASE("tube norm of a field inside one tube") {
  const double N = 16, r = 2, h = 0.5;
  const Vec3 w = Vec3(1, 2, 2) / 3.0;
  const Region tube = Region::intersect({Region::annulus(N), Region::tube(0.5 * r, w)});
  const auto u = populate_region(tube, h, FillMode::gaussian(3));
  const SphereNet net = build_net(r / N, 0);
  const TubeSup t = tube_sup_norm(u, N, r, net);
  CHECK(t.value == doctest::Approx((N / r) * l2_norm(u)).epsilon(1e-12));
  CHECK(std::min(angle(t.best_omega, w), angle(t.best_omega, -w)) <= 0.5 * r / N + 1e-9);
  CHECK_THROWS_AS(tube_sup_norm(u, N, N, net), PreconditionError);
}

TEST_CASE("tube norm dominates every net direction and the plain norm") {
  const double N = 8, r = 1, h = 0.5;
  const auto u = populate_region(Region::annulus(N), h, FillMode::gaussian(4));
  const SphereNet net = build_net(r / N, 0);
  const TubeSup t = tube_sup_norm(u, N, r, net);
  double best = 0;
  for (const Vec3& d : net.directions()) {
    best = std::max(best, l2_norm(project(u, Region::tube(r, d))));
  }
  CHECK(t.value >= (N / r) * best * (1 - 1e-12));
  CHECK(t.value <= (N / r) * l2_norm(u) * (1 + 1e-12));
  CHECK(t.plain_norm == doctest::Approx(l2_norm(u)));
  std::optional<Fixtures> fx;
  try {
    fx = Fixtures::load();
  } catch (const UsageError&) {
  }
  if (fx && fx->has("spectral.tube_symmetric_lo")) {
    const auto radial = radial_gaussian(u, 5);
    const TubeSup tr = tube_sup_norm(radial, N, r, net);
    CHECK(tr.plain_norm / tr.value <= 1.0 / fx->get("spectral.tube_symmetric_lo") + 1e-12);
  }
}

TEST_CASE("radial gaussian coefficients depend only on the shell") {
  const auto u = populate_region(Region::thick_cone(Sign::Plus, 4, 1), 0.5, 1.0, FillMode::ones());
  const auto r = radial_gaussian(u, 6);
  std::map<std::pair<int, int>, Complex> seen;
  int mismatches = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& k = r.points()[i];
    const auto key = std::pair{k.x * k.x + k.y * k.y + k.z * k.z, k.t};
    if (auto it = seen.find(key); it != seen.end() && it->second != r.coeffs()[i]) ++mismatches;
    seen.emplace(key, r.coeffs()[i]);
  }
  CHECK(mismatches == 0);
  CHECK(seen.size() > 1);
}

TEST_CASE("slab sup norm examples") {
  const double h = 0.5;
  const Vec3 w = Vec3::UnitX();
  const auto single = populate_region(Region::intersect({Region::slab(w, 1.0, 1.4), Region::ball(Vec3(1, 0, 0), 3)}),
                                      1.0, h, FillMode::gaussian(1));
  CHECK(slab_sup_norm(single, w, 0.5) == doctest::Approx(l2_norm(single)).epsilon(1e-14));
  // Equal unit masses on M separated slabs.
  const int M = 8;
  std::vector<std::pair<LatticePoint, Complex>> e;
  for (int m = 0; m < M; ++m) e.push_back({{0, 4 * m + 1, 0, 0}, Complex(1, 0)});
  const auto spread = SparseField::from_entries(1.0, h, std::move(e));
  CHECK(slab_sup_norm(spread, w, 1.0) == doctest::Approx(l2_norm(spread) / std::sqrt(M)).epsilon(1e-14));
  std::mt19937_64 rng(10);
  const auto u = random_field(rng, h, 6, 300, true);
  double prev = 0;
  for (double len : {0.25, 0.5, 1.0, 2.0, 4.0, 100.0}) {
    const double v = slab_sup_norm(u, Vec3(1, 1, 0), len);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == doctest::Approx(l2_norm(u)).epsilon(1e-14));
}
