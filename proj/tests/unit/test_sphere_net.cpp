#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/sphere_net.hpp"

using namespace rlab;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

double brute_angle(const Vec3& a, const Vec3& b) { return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)); }

std::vector<int> brute_within(const SphereNet& net, const Vec3& w, double phi) {
  std::vector<int> out;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (angle(net.directions()[i], w) <= phi) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

TEST_CASE("net points are gamma separated") {
  for (double gamma : {M_PI / 4, M_PI / 8, M_PI / 16}) {
    const SphereNet net = build_net(gamma, 11);
    double min_angle = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < net.size(); ++i)
      for (std::size_t j = i + 1; j < net.size(); ++j)
        min_angle = std::min(min_angle, brute_angle(net.directions()[i], net.directions()[j]));
    CHECK(min_angle >= gamma * (1 - 1e-9));
  }
}

TEST_CASE("net is maximal: every direction lies within gamma of a net point") {
  const double gamma = M_PI / 16;
  const SphereNet net = build_net(gamma, 5);
  std::mt19937_64 rng(99);
  int uncovered = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vec3 w = random_unit(rng);
    double best = M_PI;
    for (const Vec3& d : net.directions()) best = std::min(best, brute_angle(d, w));
    if (best > gamma * (1 + 1e-9)) ++uncovered;
  }
  CHECK(uncovered == 0);
}

TEST_CASE("cardinality between covering and packing bounds") {
  // Caps of radius gamma cover the sphere; caps of radius gamma/2 are disjoint.
  for (double gamma : {M_PI / 8, M_PI / 32, M_PI / 64}) {
    const SphereNet net = build_net(gamma, 3);
    const double lower = 2.0 / (1.0 - std::cos(gamma));
    const double upper = 2.0 / (1.0 - std::cos(gamma / 2));
    CHECK(net.size() >= lower);
    CHECK(net.size() <= upper);
    CHECK(net.size() <= net_size_estimate(gamma));
  }
}

TEST_CASE("within matches brute force") {
  const SphereNet net = build_net(M_PI / 32, 8);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> phi(0.0, 0.5);
  for (int i = 0; i < 300; ++i) {
    const Vec3 w = random_unit(rng);
    const double p = phi(rng);
    CHECK(net.within(w, p) == brute_within(net, w, p));
  }
}

TEST_CASE("covering multiplicity and count_within bounds") {
  const double gamma = M_PI / 64;
  const SphereNet net = build_net(gamma, 2);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 w = random_unit(rng);
    const int m = covering_multiplicity(net, w);
    CHECK(m == static_cast<int>(brute_within(net, w, gamma).size()));
    CHECK(m >= 1);
    CHECK(m <= 25);
    for (int k = 1; k <= 3; ++k) {
      const int c = count_within(net, w, k);
      CHECK(c == static_cast<int>(brute_within(net, w, k * gamma).size()));
      CHECK(c <= (2 * k + 1) * (2 * k + 1));
    }
  }
}

TEST_CASE("nets are deterministic per seed and round trip through JSON") {
  const SphereNet a = build_net(M_PI / 16, 42);
  const SphereNet b = build_net(M_PI / 16, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.directions()[i] == b.directions()[i]);
  const SphereNet c = SphereNet::from_json(a.to_json());
  REQUIRE(c.size() == a.size());
  CHECK(c.gamma() == a.gamma());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((c.directions()[i] - a.directions()[i]).norm() <= 1e-15);
}

TEST_CASE("invalid gamma is rejected") {
  CHECK_THROWS_AS(build_net(0.0, 0), DomainError);
  CHECK_THROWS_AS(build_net(2 * M_PI, 0), DomainError);
  CHECK(build_net(M_PI, 0).size() == 2);
}

TEST_CASE("separated pair decomposition terms satisfy their constraints") {
  NetLibrary nets(0);
  std::mt19937_64 rng(17);
  const double gstar = 1.0;
  const int m = 3;
  const double M = separated_pair_M(gstar, m);
  int checked = 0;
  while (checked < 100) {
    const Vec3 a = random_unit(rng), b = random_unit(rng);
    if (brute_angle(a, b) < 0.1) continue;
    const auto pairs = separated_pair_decomposition(a, b, gstar, m, nets);
    CHECK(!pairs.empty());
    for (const auto& p : pairs) {
      CHECK(brute_angle(a, p.omega1) <= p.gamma * (1 + 1e-9));
      CHECK(brute_angle(b, p.omega2) <= p.gamma * (1 + 1e-9));
      const double th = brute_angle(p.omega1, p.omega2);
      CHECK(th >= m * p.gamma * (1 - 1e-9));
      CHECK(th <= M * p.gamma * (1 + 1e-9));
    }
    ++checked;
  }
  CHECK_THROWS_AS(separated_pair_decomposition(Vec3::UnitX(), Vec3::UnitX(), gstar, m, nets), DomainError);
}

TEST_CASE("near pair decomposition lists every admissible pair") {
  NetLibrary nets(0);
  std::mt19937_64 rng(23);
  const double gamma = M_PI / 32;
  for (int i = 0; i < 50; ++i) {
    const Vec3 a = random_unit(rng);
    const Vec3 b = (a + 0.05 * random_unit(rng)).normalized();
    const auto pairs = near_pair_decomposition(a, b, gamma, 2, nets);
    const SphereNet& net = nets.get(gamma);
    const std::size_t n1 = brute_within(net, a, gamma).size();
    const std::size_t n2 = brute_within(net, b, gamma).size();
    CHECK(pairs.size() <= n1 * n2);
    CHECK(pairs.size() <= 625);
    for (const auto& p : pairs) {
      CHECK(brute_angle(a, p.omega1) <= gamma * (1 + 1e-9));
      CHECK(brute_angle(b, p.omega2) <= gamma * (1 + 1e-9));
    }
  }
}

TEST_CASE("hyperplane overlap preconditions") {
  const SphereNet net = build_net(M_PI / 64, 0);
  const SpacetimePoint X{8.0, Vec3(8, 0, 0)};
  CHECK_THROWS_AS(hyperplane_overlap_count(net, Vec3::UnitX(), 0.01, 1.0, 8.0, X), PreconditionError);
  CHECK_THROWS_AS(hyperplane_overlap_count(net, Vec3::UnitX(), 0.5, 1.0, 100.0, X), PreconditionError);
  const OverlapCount oc = hyperplane_overlap_count(net, Vec3::UnitX(), 0.5, 1.0, 8.0, X);
  CHECK(oc.count >= 1);
  CHECK(oc.bound == doctest::Approx(0.5 / net.gamma() + 1.0 / (8.0 * net.gamma() * net.gamma())));
}

TEST_CASE("sector points lie near the null hyperplane") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 w = Vec3(1, 2, 2) / 3.0;
  const double N = 64, L = 1, gamma = 0.1;
  int in = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vec3 xi = w * N * (0.5 + 0.5 * std::abs(u(rng))) + N * gamma * Vec3(u(rng), u(rng), u(rng));
    const SpacetimePoint X{xi.norm() + L * u(rng), xi};
    const auto r = sector_in_hyperplane_check(Sign::Plus, N, L, gamma, w, X, 2.0);
    if (r.in_sector) ++in;
    CHECK(r.holds);
  }
  CHECK(in > 100);
}

TEST_CASE("net library caches by gamma") {
  NetLibrary lib(7);
  const SphereNet& a = lib.get(M_PI / 8);
  const SphereNet& b = lib.get(M_PI / 8);
  CHECK(&a == &b);
  CHECK(a.seed() == 7);
}
