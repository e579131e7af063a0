#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/measure.hpp"

using namespace rlab;

namespace {

// Simpson integral of the cross-section area of the thick sphere.
double zone_oracle(double rho, double eps, double a, double b) {
  auto area = [&](double x) {
    return M_PI * (std::max(0.0, (rho + eps) * (rho + eps) - x * x) - std::max(0.0, (rho - eps) * (rho - eps) - x * x));
  };
  const int n = 200000;
  const double h = (b - a) / n;
  double s = area(a) + area(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * area(a + i * h);
  return s * h / 3.0;
}

bool within_sigma(const MeasureEstimate& m, double truth, double k) {
  return std::abs(m.value - truth) <= k * m.std_error + 1e-12;
}

}  // namespace

TEST_CASE("ball and shell volumes by Monte Carlo") {
  const auto ball = mc_volume(Region::ball(Vec3(1, 2, 3), 1.5), 400000, 1);
  CHECK(within_sigma(ball, 4.0 / 3.0 * M_PI * 1.5 * 1.5 * 1.5, 4));
  const double r = 3, d = 0.5;
  const auto shell = mc_volume(Region::thick_sphere(r, d), 400000, 2);
  CHECK(within_sigma(shell, 4.0 / 3.0 * M_PI * (std::pow(r + d, 3) - std::pow(r - d, 3)), 4));
  CHECK(ball.method == Method::MonteCarlo);
}

TEST_CASE("thick cone volume by Monte Carlo") {
  // Annulus N/2 < |xi| <= N times a tau interval of length 2L.
  const double N = 8, L = 0.5;
  const auto v = mc_volume(Region::thick_cone(Sign::Plus, N, L), 400000, 3);
  CHECK(within_sigma(v, 2 * L * 4.0 / 3.0 * M_PI * (N * N * N - N * N * N / 8), 4));
}

TEST_CASE("mc_volume rejects small samples and unbounded regions") {
  CHECK_THROWS_AS(mc_volume(Region::ball(Vec3::Zero(), 1), 10, 0), PreconditionError);
  CHECK_THROWS_AS(mc_volume(Region::whole(3), 10000, 0), DomainError);
}

TEST_CASE("mc_volume is deterministic per seed") {
  const auto a = mc_volume(Region::ball(Vec3::Zero(), 1), 100000, 9);
  const auto b = mc_volume(Region::ball(Vec3::Zero(), 1), 100000, 9);
  CHECK(a.value == b.value);
}

TEST_CASE("slab sphere interior value") {
  const double rho = 4, eps = 0.25;
  const auto v = slab_sphere_volume(rho, eps, -1.0, 2.5);
  CHECK(v.method == Method::Exact);
  CHECK(std::abs(v.value - 4 * M_PI * rho * eps * 3.5) <= 1e-12 * v.value);
}

TEST_CASE("slab sphere matches the zone integral across cases") {
  const double rho = 2, eps = 0.4;
  const std::vector<std::pair<double, double>> slabs = {
      {-3, 3}, {-2.3, -1.7}, {1.5, 2.2}, {-0.5, 1.9}, {2.1, 2.6}, {-2.5, 0.0}, {2.5, 3.0}};
  for (const auto& [a, b] : slabs) {
    const double truth = zone_oracle(rho, eps, a, b);
    const double got = slab_sphere_volume(rho, eps, a, b).value;
    CHECK(std::abs(got - truth) <= 1e-9 * std::max(1.0, truth));
  }
  CHECK(slab_sphere_volume(rho, eps, 5, 6).value == 0.0);
  const double full = 4.0 / 3.0 * M_PI * (std::pow(rho + eps, 3) - std::pow(rho - eps, 3));
  CHECK(slab_sphere_volume(rho, eps, -10, 10).value == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("slab sphere preconditions") {
  CHECK_THROWS_AS(slab_sphere_volume(1, 0.5, 0, 1), PreconditionError);
  CHECK_THROWS_AS(slab_sphere_volume(1, 0.1, 1, 0), DomainError);
  CHECK_THROWS_AS(slab_sphere_volume(-1, 0.1, 0, 1), DomainError);
}

TEST_CASE("sphere sphere volume against Monte Carlo") {
  const Vec3 xi0(3, 1, 0);
  const double r = 4, delta = 0.3, R = 2, Delta = 0.2;
  const auto s = sphere_sphere_volume(r, delta, R, Delta, xi0);
  const Region E = Region::intersect({Region::thick_sphere(r, delta),
                                      Region::translate(Region::thick_sphere(R, Delta), xi0)});
  const auto mc = mc_volume(E, 1000000, 5);
  CHECK(std::abs(s.volume.value - mc.value) <= 4 * mc.std_error);
  CHECK(s.bound == doctest::Approx(r * R * delta * Delta / xi0.norm()));
  CHECK(s.volume.value <= s.reduction * (1 + 1e-12));
}

TEST_CASE("sphere sphere volume vanishes for separated shells") {
  const auto s = sphere_sphere_volume(1, 0.1, 1, 0.1, Vec3(5, 0, 0));
  CHECK(s.volume.value == 0.0);
}

TEST_CASE("cone cone volume against a direct hit-or-miss count") {
  const ConeSpec k1{Sign::Plus, 8, 1}, k2{Sign::Plus, 8, 1};
  const SpacetimePoint X0{12.0, Vec3(6, 6, 0)};
  const auto cc = cone_cone_volume(k1, k2, X0, 2000000, 4);
  // Independent sampler over the bounding box of the first cone.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1, 1);
  const long long n = 2000000;
  long long hits = 0;
  for (long long i = 0; i < n; ++i) {
    const Vec3 xi = 8.0 * Vec3(u(rng), u(rng), u(rng));
    const double tau = 4.5 + 4.5 * u(rng);
    const double a = xi.norm();
    if (!(a > 4 && a <= 8 && std::abs(tau - a) <= 1)) continue;
    const Vec3 eta = X0.xi - xi;
    const double b = eta.norm();
    if (b > 4 && b <= 8 && std::abs((X0.tau - tau) - b) <= 1) ++hits;
  }
  const double box = 16.0 * 16.0 * 16.0 * 9.0;
  const double p = static_cast<double>(hits) / n;
  const double v = p * box, se = box * std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(cc.volume.value - v) <= 4 * std::hypot(se, cc.volume.std_error));
  CHECK(cc.bounds.count("C40") == 1);
  CHECK(cc.bounds.at("C40") == 64.0);
  CHECK(cc.min_bound() <= cc.bounds.at("fallback"));
}

TEST_CASE("cone cone volume is zero far from the double cone") {
  const auto cc = cone_cone_volume({Sign::Plus, 4, 0.5}, {Sign::Plus, 4, 0.5}, {-50.0, Vec3(1, 0, 0)}, 100000, 1);
  CHECK(cc.volume.value == 0.0);
}

TEST_CASE("cone ball constant is bounded") {
  const auto cb = cone_ball_constant(16, 1, 1, Vec3(12, 0, 0), 400000, 3);
  CHECK(cb.bound == 16.0);
  CHECK(cb.volume.value > 0.0);
  CHECK(cb.volume.value / cb.bound < 20.0);
  CHECK_THROWS_AS(cone_ball_constant(16, 1, 4, Vec3(12, 0, 0), 1000, 0), PreconditionError);
}

TEST_CASE("gauss legendre integrates polynomials exactly") {
  std::vector<double> x, w;
  gauss_legendre(8, x, w);
  double sum = 0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-14));
  for (int deg = 0; deg <= 15; ++deg) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], deg);
    const double truth = deg % 2 ? 0.0 : 2.0 / (deg + 1);
    CHECK(std::abs(s - truth) <= 1e-13);
  }
}

TEST_CASE("sphere zone area through a thick plane") {
  // A unit sphere cut by a slab of width w has area 2 pi w.
  const QuadricSurface s{QuadricKind::Ellipsoid, 1.0, 1.0, Sign::Plus};
  const auto zone = quadric_area(s, 2.0, {0.0, -0.3, 0.5}, 64);
  CHECK(zone.area.value == doctest::Approx(M_PI).epsilon(1e-9));
  const auto full = quadric_area(s, 2.0, {0.0, -5.0, 10.0}, 64);
  CHECK(full.area.value == doctest::Approx(4 * M_PI).epsilon(1e-9));
}

TEST_CASE("prolate spheroid surface area") {
  const double a = 2, b = 1;
  const double e = std::sqrt(1 - b * b / (a * a));
  const double truth = 2 * M_PI * b * b * (1 + a / (b * e) * std::asin(e));
  const QuadricSurface s{QuadricKind::Ellipsoid, a, b, Sign::Minus};
  const auto full = quadric_area(s, 10.0, {0.0, -5.0, 10.0}, 64);
  CHECK(full.area.value == doctest::Approx(truth).epsilon(1e-8));
}

TEST_CASE("quadric regime window and plane miss") {
  const QuadricSurface h{QuadricKind::HyperboloidSheet, 4.0, 1.0, Sign::Minus};
  const auto in = quadric_area(h, 2.0, {0.0, -0.1, 0.2}, 64);
  CHECK(in.in_regime);
  CHECK(in.bound == doctest::Approx(0.4));
  const auto out = quadric_area(h, 100.0, {0.0, -0.1, 0.2}, 64);
  CHECK_FALSE(out.in_regime);
  const auto miss = quadric_area(h, 2.0, {0.0, 50.0, 0.2}, 64);
  CHECK(miss.area.value == 0.0);
  CHECK_THROWS_AS(quadric_area(h, 2.0, {0.0, 0.0, 0.0}, 64), DomainError);
}

TEST_CASE("measure csv rows") {
  CHECK(measure_csv_header() == "op,params,value,stderr,bound,ratio");
  MeasureEstimate m;
  m.value = 2.0;
  const std::string row = measure_csv_row("slab", {{"rho", 1.0}, {"eps", 0.25}}, m, 4.0);
  CHECK(row.rfind("slab,rho=1;eps=0.25,2,", 0) == 0);
  CHECK(row.substr(row.size() - 3) == "0.5");
}
