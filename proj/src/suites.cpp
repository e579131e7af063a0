#include "rlab/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/measure.hpp"
#include "rlab/parallel.hpp"
#include "rlab/sphere_net.hpp"
#include "rlab/spectral.hpp"

namespace rlab {

namespace {

constexpr double kFixtureSlack = 1.05;
const double kInf = std::numeric_limits<double>::infinity();

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v;
  do v = Vec3(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-12);
  return v.normalized();
}

// Uniform direction within angle gamma of omega.
Vec3 random_in_cap(std::mt19937_64& rng, const Vec3& omega, double gamma) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double c = 1.0 - U(rng) * (1.0 - std::cos(gamma));
  const double phi = 2.0 * M_PI * U(rng);
  const Vec3 e1 = unit(omega.unitOrthogonal());
  const Vec3 e2 = omega.cross(e1);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return unit(c * omega + s * (std::cos(phi) * e1 + std::sin(phi) * e2));
}

std::string key_for(Theorem t) { return "estimate.K." + theorem_name(t); }

// Fixture comparison: value <= slack * fixture, skipped when absent.
void check_upper(SuiteResult& r, const Fixtures* fx, const std::string& key, double value, double slack,
                 const std::string& what) {
  r.report["measured"][key] = value;
  if (!fx) return;
  if (!fx->has(key)) {
    r.require(false, "fixture " + key + " missing");
    return;
  }
  const double lim = fx->get(key) * slack;
  r.require(value <= lim, what + " " + std::to_string(value) + " exceeds fixture " + std::to_string(lim));
}

std::vector<double> default_gammas() {
  std::vector<double> g;
  for (int k = 2; k <= 8; ++k) g.push_back(M_PI / std::ldexp(1.0, k));
  return g;
}

}  // namespace

void SuiteResult::require(bool ok, const std::string& what) {
  if (ok) return;
  pass = false;
  if (failures.size() < 20) failures.push_back(what);
}

nlohmann::json SuiteResult::to_json() const {
  return {{"suite", name}, {"pass", pass}, {"failures", failures}, {"report", report}, {"seconds", seconds}};
}

SuiteResult net_suite(const NetSuiteConfig& cfg, const Fixtures* fx) {
  Timer timer;
  SuiteResult r;
  r.name = "net";
  const std::vector<double> gammas = cfg.gammas.empty() ? default_gammas() : cfg.gammas;
  for (double g : gammas)
    if (!(g > 0.0 && g <= M_PI)) throw UsageError("net gamma must lie in (0, pi]");
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    const double g = gammas[gi];
    const SphereNet net = build_net(g, cfg.seed);
    long long separation_bad = 0;
    for (std::size_t i = 0; i < net.size(); ++i)
      if (net.within(net.directions()[i], g * (1.0 - 1e-9)).size() != 1) ++separation_bad;
    constexpr std::size_t blocks = 64;
    std::vector<int> mult_min(blocks, 1 << 30), mult_max(blocks, 0);
    std::vector<std::array<int, 3>> cw_max(blocks, {0, 0, 0});
    parallel_for(blocks, [&](std::size_t b) {
      std::mt19937_64 rng(substream_seed(cfg.seed, 1000 * (gi + 1) + b));
      const long long lo = cfg.directions * static_cast<long long>(b) / static_cast<long long>(blocks);
      const long long hi = cfg.directions * static_cast<long long>(b + 1) / static_cast<long long>(blocks);
      for (long long i = lo; i < hi; ++i) {
        const Vec3 xi = random_unit(rng);
        const int m = covering_multiplicity(net, xi);
        mult_min[b] = std::min(mult_min[b], m);
        mult_max[b] = std::max(mult_max[b], m);
        for (int k = 1; k <= 3; ++k) cw_max[b][k - 1] = std::max(cw_max[b][k - 1], count_within(net, xi, k));
      }
    });
    int mmin = 1 << 30, mmax = 0;
    std::array<int, 3> cmax{0, 0, 0};
    for (std::size_t b = 0; b < blocks; ++b) {
      mmin = std::min(mmin, mult_min[b]);
      mmax = std::max(mmax, mult_max[b]);
      for (int k = 0; k < 3; ++k) cmax[k] = std::max(cmax[k], cw_max[b][k]);
    }
    const std::string tag = "gamma=" + std::to_string(g);
    r.require(separation_bad == 0, tag + ": " + std::to_string(separation_bad) + " net points closer than gamma");
    r.require(mmin >= 1, tag + ": uncovered direction (maximality)");
    r.require(mmax <= 25, tag + ": covering multiplicity " + std::to_string(mmax) + " > 25");
    for (int k = 1; k <= 3; ++k)
      r.require(cmax[k - 1] <= (2 * k + 1) * (2 * k + 1),
                tag + ": count_within k=" + std::to_string(k) + " is " + std::to_string(cmax[k - 1]));
    levels.push_back({{"gamma", g},
                      {"size", net.size()},
                      {"separation_violations", separation_bad},
                      {"multiplicity_min", mmin},
                      {"multiplicity_max", mmax},
                      {"count_within_max", cmax}});
  }
  r.report["levels"] = levels;
  r.report["directions"] = cfg.directions;

  if (cfg.lemmas) {
    // Cardinality at gamma = pi/8, normalised by gamma^2.
    const double g8 = M_PI / 8.0;
    double cmin = kInf, cmax = 0.0;
    for (int s = 0; s < std::max(1, cfg.cardinality_seeds); ++s) {
      const double c = static_cast<double>(build_net(g8, cfg.seed + static_cast<std::uint64_t>(s)).size()) * g8 * g8;
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
    }
    r.report["measured"]["net.cardinality_min"] = cmin;
    r.report["measured"]["net.cardinality_max"] = cmax;
    if (fx) {
      if (fx->has("net.cardinality_min") && fx->has("net.cardinality_max")) {
        r.require(cmin >= fx->get("net.cardinality_min") / kFixtureSlack, "net cardinality below fixture window");
        r.require(cmax <= fx->get("net.cardinality_max") * kFixtureSlack, "net cardinality above fixture window");
      } else {
        r.require(false, "fixture net.cardinality window missing");
      }
    }

    NetLibrary nets(cfg.seed);
    std::mt19937_64 rng(substream_seed(cfg.seed, 7));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int m = 3;
    const double M = separated_pair_M(1.0, m);
    std::size_t longest = 0;
    long long bad = 0;
    for (int i = 0; i < 2000; ++i) {
      const Vec3 a = random_unit(rng);
      Vec3 b;
      do b = random_unit(rng);
      while (angle(a, b) < 0.1);
      const auto pairs = separated_pair_decomposition(a * std::exp2(4 * U(rng)), b, 1.0, m, nets);
      if (pairs.empty()) ++bad;
      for (const auto& p : pairs) {
        const double t = angle(p.omega1, p.omega2);
        const double lg = std::log2(p.gamma);
        if (t < m * p.gamma * (1 - 1e-12) || t > M * p.gamma * (1 + 1e-12) || angle(a, p.omega1) > p.gamma ||
            angle(b, p.omega2) > p.gamma || p.gamma > 1.0 || std::abs(lg - std::round(lg)) > 1e-12)
          ++bad;
      }
      longest = std::max(longest, pairs.size());
    }
    r.require(bad == 0, std::to_string(bad) + " separated-pair violations");
    check_upper(r, fx, "net.pair_count_max", static_cast<double>(longest), kFixtureSlack, "separated-pair list length");

    long long near_bad = 0;
    std::size_t near_longest = 0;
    for (int i = 0; i < 1000; ++i) {
      const double g = i % 2 ? 1.0 / 8 : 1.0 / 16;
      const int k = 1 + i % 3;
      const Vec3 a = random_unit(rng);
      const Vec3 b = random_in_cap(rng, a, k * g);
      const auto pairs = near_pair_decomposition(a, b * 3.0, g, k, nets);
      if (pairs.empty()) ++near_bad;
      for (const auto& p : pairs)
        if (angle(p.omega1, p.omega2) > (k + 2) * g * (1 + 1e-12)) ++near_bad;
      near_longest = std::max(near_longest, pairs.size());
    }
    r.require(near_bad == 0, std::to_string(near_bad) + " near-pair violations");
    r.require(near_longest <= 625, "near-pair list longer than 25^2");
    r.report["measured"]["net.near_pair_count_max"] = near_longest;

    double overlap = 0.0;
    for (double g : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
      const SphereNet& net = nets.get(g);
      for (double gp : {2 * g, 4 * g, 8 * g}) {
        if (gp >= 1.0) continue;
        for (double N : {1.0, 16.0}) {
          for (double d : {N / 256, N / 16, N}) {
            for (int i = 0; i < 100; ++i) {
              const Vec3 w0 = random_unit(rng);
              const Vec3 dir = random_in_cap(rng, w0, gp);
              const double n = N * (0.5 + 1.5 * U(rng));
              const SpacetimePoint X{n + d * (2 * U(rng) - 1), n * dir};
              const OverlapCount oc = hyperplane_overlap_count(net, w0, gp, d, N, X);
              overlap = std::max(overlap, oc.count / oc.bound);
            }
          }
        }
      }
    }
    check_upper(r, fx, "net.overlap_ratio_max", overlap, kFixtureSlack, "hyperplane overlap ratio");

    double sector_c = 0.0;
    for (Sign s : {Sign::Plus, Sign::Minus}) {
      for (double N : {1.0, 64.0}) {
        for (double L : {N / 1024, N / 32}) {
          for (double g : {0.05, 0.2, 0.8}) {
            for (int i = 0; i < 20000; ++i) {
              const Vec3 w = random_unit(rng);
              const Vec3 u = random_in_cap(rng, w, g);
              const double n = N * (0.5 + 0.5 * U(rng));
              const Vec3 xi = value(s) * n * u;
              const double h = L * (2 * U(rng) - 1);
              const SpacetimePoint X{value(s) * n - h, xi};
              const auto chk = sector_in_hyperplane_check(s, N, L, g, w, X, kInf);
              if (chk.in_sector) sector_c = std::max(sector_c, chk.weight / chk.scale);
            }
          }
        }
      }
    }
    check_upper(r, fx, "net.sector_hyperplane_c", sector_c, kFixtureSlack, "sector-hyperplane constant");
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult slab_sphere_suite(int draws, std::uint64_t seed) {
  Timer timer;
  SuiteResult r;
  r.name = "slab_sphere";
  double worst_rel = 0.0;
  std::mt19937_64 rng(substream_seed(seed, 11));
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double rho = std::exp2(-3 + 8 * U(rng));
    const double eps = rho * std::exp2(-2 - 8 * U(rng));
    const double lim = rho - eps;
    double a = -lim + 2 * lim * U(rng), b = -lim + 2 * lim * U(rng);
    if (a > b) std::swap(a, b);
    if (!(b > a)) continue;
    const double exact = 4 * M_PI * rho * eps * (b - a);
    const double v = slab_sphere_volume(rho, eps, a, b).value;
    worst_rel = std::max(worst_rel, std::abs(v - exact) / exact);
  }
  r.require(worst_rel <= 1e-12, "interior slab-sphere relative error " + std::to_string(worst_rel));
  r.report["interior_max_relative_error"] = worst_rel;
  r.require(slab_sphere_volume(1.0, 0.01, 1.2, 1.5).value == 0.0, "empty slab must have zero volume");

  int misses = 0;
  double worst_z = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < draws; ++i) {
    const double rho = 0.5 + 3.5 * U(rng);
    const double eps = rho * (1.0 / 64 + (0.25 - 1.0 / 64) * U(rng));
    const double span = rho + 1.5 * eps;
    double a = -span + 2 * span * U(rng), b = -span + 2 * span * U(rng);
    if (a > b) std::swap(a, b);
    const MeasureEstimate ex = slab_sphere_volume(rho, eps, a, b);
    const Region E = Region::intersect({Region::thick_sphere(rho, eps), Region::slab(Vec3::UnitX(), a, b)});
    const MeasureEstimate mc = mc_volume(E, 400000, substream_seed(seed, 100 + i));
    const double z = mc.std_error > 0 ? std::abs(ex.value - mc.value) / mc.std_error : (ex.value == mc.value ? 0 : kInf);
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++misses;
    rows.push_back({{"rho", rho}, {"eps", eps}, {"a", a}, {"b", b}, {"exact", ex.value}, {"mc", mc.value},
                    {"stderr", mc.std_error}});
    const std::vector<std::pair<std::string, double>> ps{{"rho", rho}, {"eps", eps}, {"a", a}, {"b", b}};
    r.csv.push_back(measure_csv_row("slab_sphere_volume", ps, ex, ex.value));
    r.csv.push_back(measure_csv_row("mc_volume", ps, mc, ex.value));
  }
  r.require(misses == 0, std::to_string(misses) + " draws outside 3 stderr");
  r.report["draws"] = rows;
  r.report["max_z"] = worst_z;
  r.seconds = timer.seconds();
  return r;
}

SuiteResult sphere_sphere_suite(std::uint64_t seed, const Fixtures* fx) {
  Timer timer;
  SuiteResult r;
  r.name = "sphere_sphere";
  const Vec3 dir = unit(Vec3(1.0, 0.37, -0.21));
  std::map<int, double> decade_max;
  double cmax = 0.0;
  long long evaluated = 0;
  for (int kr = 0; kr <= 6; ++kr)
    for (int kR = 0; kR <= 6; ++kR)
      for (int kd = -10; kd <= -4; ++kd)
        for (int kD = -10; kD <= -4; ++kD)
          for (int j = 0; j <= 4; ++j) {
            const double rr = std::ldexp(1.0, kr), R = std::ldexp(1.0, kR);
            const double d = std::ldexp(1.0, kd), D = std::ldexp(1.0, kD);
            const double lo = 0.5 * std::max(rr, R);
            const double n = lo + (rr + R - lo) * j / 4.0;
            const auto v = sphere_sphere_volume(rr, d, R, D, n * dir);
            ++evaluated;
            r.csv.push_back(measure_csv_row("sphere_sphere_volume",
                                            {{"r", rr}, {"delta", d}, {"R", R}, {"Delta", D}, {"xi0", n}}, v.volume,
                                            v.bound));
            if (!(v.volume.value > 0.0)) continue;
            const double ratio = v.volume.value / v.bound;
            const int dec = static_cast<int>(std::floor(std::log10(v.bound)));
            decade_max[dec] = std::max(decade_max[dec], ratio);
            cmax = std::max(cmax, ratio);
          }
  double dmin = kInf, dmax = 0.0;
  nlohmann::json dec = nlohmann::json::object();
  for (const auto& [k, v] : decade_max) {
    dec[std::to_string(k)] = v;
    dmin = std::min(dmin, v);
    dmax = std::max(dmax, v);
  }
  r.report["decade_max_ratio"] = dec;
  r.report["evaluated"] = evaluated;
  r.report["stability"] = dmax / dmin;
  r.require(std::isfinite(cmax), "unbounded sphere-sphere ratio");
  r.require(decade_max.size() >= 4, "sweep spans fewer than 4 decades");
  r.require(dmax / dmin < 4.0, "decade maxima vary by " + std::to_string(dmax / dmin));
  check_upper(r, fx, "measure.sphere_sphere_C", cmax, kFixtureSlack, "sphere-sphere ratio");

  const auto v = sphere_sphere_volume(1.0, 0.01, 1.0, 0.01, Vec3(1, 0, 0));
  const Region E = Region::intersect({Region::thick_sphere(1.0, 0.01),
                                      Region::translate(Region::thick_sphere(1.0, 0.01), Vec3(1, 0, 0))});
  const MeasureEstimate mc = mc_volume(E, 4000000, substream_seed(seed, 3));
  r.require(std::abs(mc.value - v.volume.value) <= 3 * mc.std_error, "sphere-sphere exact value disagrees with MC");
  r.report["mc_check"] = {{"exact", v.volume.value}, {"mc", mc.value}, {"stderr", mc.std_error}};
  r.seconds = timer.seconds();
  return r;
}

SuiteResult cone_cone_suite(std::uint64_t seed, const Fixtures* fx) {
  Timer timer;
  SuiteResult r;
  r.name = "cone_cone";
  const Vec3 dir = unit(Vec3(0.3, -0.5, 0.81));
  std::uint64_t stream = 0;
  double worst = 0.0;
  std::map<std::string, double> by_bound;
  auto run = [&](ConeSpec k1, ConeSpec k2, const SpacetimePoint& X0, long long n) {
    const ConeConeVolume v = cone_cone_volume(k1, k2, X0, n, substream_seed(seed, stream++));
    r.csv.push_back(measure_csv_row("cone_cone_volume",
                                    {{"s1", value(k1.sign)}, {"N1", k1.N}, {"L1", k1.L}, {"s2", value(k2.sign)},
                                     {"N2", k2.N}, {"L2", k2.L}, {"tau0", X0.tau}, {"xi0", X0.xi.norm()}},
                                    v.volume, v.min_bound()));
    const double ratio = v.volume.value / v.min_bound();
    worst = std::max(worst, ratio);
    for (const auto& [k, b] : v.bounds) by_bound[k] = std::max(by_bound[k], v.volume.value / b);
    return v;
  };
  for (double N : {1.0, 4.0})
    for (double f : {1.0 / 64, 1.0 / 16, 1.0 / 4})
      for (Sign s2 : {Sign::Plus, Sign::Minus})
        for (double m : {0.5, 1.0, 1.5})
          for (double eta : {0.0, 1.0, 8.0}) {
            const double L = f * N;
            const double n0 = m * N;
            const double t0 = s2 == Sign::Plus ? n0 + eta * L : n0 * 0.3 + eta * L;
            run({Sign::Plus, N, L}, {s2, N, L}, {t0, n0 * dir}, 300000);
          }
  for (double N2 : {2.0, 4.0})
    for (double L1 : {1.0 / 32, 1.0 / 8})
      for (double L2 : {1.0 / 32, 1.0 / 4})
        for (double m : {0.5, 1.0}) {
          const double n0 = m * N2;
          run({Sign::Plus, 1.0, L1}, {Sign::Plus, N2, L2}, {n0 + L1, n0 * dir}, 300000);
        }
  for (double L : {1.0, 2.0}) run({Sign::Plus, 1.0, L}, {Sign::Plus, 1.0, L}, {1.0, 0.8 * dir}, 300000);
  for (const auto& [k, v] : by_bound) r.report["max_ratio_by_bound"][k] = v;
  r.require(std::isfinite(worst), "unbounded cone-cone ratio");
  check_upper(r, fx, "measure.cone_cone_C", worst, kFixtureSlack, "cone-cone ratio");

  std::vector<std::pair<double, double>> pts;
  nlohmann::json lrows = nlohmann::json::array();
  const SpacetimePoint X0{1.5, Vec3(0.75, 0.75, 0.0)};
  for (double L : {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8}) {
    const auto v = cone_cone_volume({Sign::Plus, 1.0, L}, {Sign::Plus, 1.0, L}, X0, 4000000,
                                    substream_seed(seed, 500 + stream++));
    pts.emplace_back(L, v.volume.value);
    lrows.push_back({{"L", L}, {"volume", v.volume.value}, {"stderr", v.volume.std_error}});
  }
  const Fit fit = fit_exponent(pts);
  r.report["L_sweep"] = lrows;
  r.report["L_exponent"] = fit.slope;
  r.report["L_exponent_stderr"] = fit.stderr_;
  r.require(std::abs(fit.slope - 2.0) <= 0.2, "cone-cone L exponent " + std::to_string(fit.slope));

  double ball = 0.0;
  const Vec3 cdir = unit(Vec3(2.0, 3.0, 6.0));
  for (double N : {8.0, 16.0, 32.0})
    for (double L : {N / 64, N / 16})
      for (double rr : {N / 32, N / 8}) {
        const auto v = cone_ball_constant(N, L, rr, 0.75 * N * cdir, 400000, substream_seed(seed, 900 + stream++));
        r.csv.push_back(measure_csv_row("cone_ball_constant", {{"N", N}, {"L", L}, {"r", rr}}, v.volume, v.bound));
        ball = std::max(ball, v.volume.value / v.bound);
      }
  r.require(std::isfinite(ball), "unbounded cone-ball ratio");
  check_upper(r, fx, "measure.cone_ball_C", ball, kFixtureSlack, "cone-ball ratio");
  r.seconds = timer.seconds();
  return r;
}

SuiteResult quadric_suite(std::uint64_t seed, const Fixtures* fx) {
  Timer timer;
  SuiteResult r;
  r.name = "quadric";
  std::mt19937_64 rng(substream_seed(seed, 13));
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double in_max = 0.0;
  long long in_count = 0;
  for (QuadricKind kind : {QuadricKind::Ellipsoid, QuadricKind::HyperboloidSheet})
    for (double a : {1.0, 4.0, 16.0})
      for (double ba : {1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0})
        for (Sign fs : {Sign::Plus, Sign::Minus}) {
          const QuadricSurface S{kind, a, ba * a, fs};
          const double b = ba * a;
          for (double R = std::exp2(std::ceil(std::log2(b * b / a))); R <= a; R *= 2) {
            for (int i = 0; i < 6; ++i) {
              const double beta = M_PI * (U(rng) - 0.5) * 0.98;
              const double p = std::tan(beta);
              const double delta = R * std::exp2(-8 + 4 * U(rng));
              const double off = R * (2 * U(rng) - 1);
              const ThickPlane P{p, off / std::cos(beta) - p * S.focus_x(), delta};
              const QuadricArea q = quadric_area(S, R, P, 48);
              r.csv.push_back(measure_csv_row(
                  "quadric_area",
                  {{"kind", kind == QuadricKind::Ellipsoid ? 0.0 : 1.0}, {"a", a}, {"b", b}, {"focus", value(fs)},
                   {"R", R}, {"p", p}, {"q", P.q}, {"delta", delta}, {"in_regime", q.in_regime ? 1.0 : 0.0}},
                  q.area, q.bound));
              if (!q.in_regime) continue;
              ++in_count;
              if (q.area.value / q.bound > in_max) {
                in_max = q.area.value / q.bound;
                r.report["worst_in_regime"] = {{"kind", kind == QuadricKind::Ellipsoid ? "ellipsoid" : "hyperboloid"},
                                               {"a", a}, {"b", b}, {"focus", symbol(fs) == '+' ? 1 : -1},
                                               {"R", R}, {"p", p}, {"q", P.q}, {"delta", delta}};
              }
            }
          }
        }
  r.report["in_regime_samples"] = in_count;
  r.require(in_count > 0, "no in-regime samples");
  r.require(std::isfinite(in_max), "unbounded in-regime ratio");
  check_upper(r, fx, "measure.quadric_C", in_max, kFixtureSlack, "in-regime area ratio");

  const QuadricSurface H{QuadricKind::HyperboloidSheet, 1.0, 1.0, Sign::Minus};
  nlohmann::json wit = nlohmann::json::array();
  double witness64 = 0.0;
  for (double R : {8.0, 64.0}) {
    const double d = 1.0 / R;
    const QuadricArea q = quadric_area(H, R, {-1.0, -d * std::sqrt(2.0), d}, 64);
    wit.push_back({{"R_over_a", R}, {"ratio", q.area.value / q.bound}, {"in_regime", q.in_regime}});
    if (R == 64.0) witness64 = q.area.value / q.bound;
  }
  r.report["witness"] = wit;
  const double ref = fx && fx->has("measure.quadric_C") ? fx->get("measure.quadric_C") : in_max;
  r.report["witness_factor"] = witness64 / ref;
  r.require(witness64 >= 4.0 * ref, "tangent witness exceeds the in-regime bound only by " +
                                        std::to_string(witness64 / ref));
  r.require(quadric_area(H, 1.0, {0.0, 50.0, 0.1}, 16).area.value == 0.0, "plane missing the ball must give 0");
  r.seconds = timer.seconds();
  return r;
}

SuiteResult battery_suite(Theorem t, int trials, std::uint64_t seed_begin, const Fixtures* fx, NetLibrary* nets) {
  Timer timer;
  SuiteResult r;
  r.name = "battery_" + theorem_name(t);
  const double K = fx && fx->has(key_for(t)) ? fx->get(key_for(t)) : kInf;
  if (fx && !fx->has(key_for(t))) r.require(false, "fixture " + key_for(t) + " missing");
  const BatteryResult b = run_battery(canonical_cell(t), trials, seed_begin, K, nets);
  r.report = b.to_json();
  r.report["limit"] = std::isfinite(K) ? nlohmann::json(K) : nlohmann::json(nullptr);
  r.report["measured"][key_for(t)] = b.max_ratio;
  r.require(b.violations == 0, std::to_string(b.violations) + " of " + std::to_string(b.evaluations) +
                                   " trials exceed the calibrated constant");
  r.seconds = timer.seconds();
  return r;
}

EstimateCase l1_sweep_template(Theorem t) {
  EstimateCase c;
  c.theorem = t;
  c.N = {16.0, 8.0, 8.0};
  c.L = {1.0 / 16, 1.0, 1.0 / 16};
  c.signs = {Sign::Plus, Sign::Plus, Sign::Plus};
  c.omega = Vec3(2.0, 3.0, 6.0) / 7.0;
  c.sector = 1.0;
  c.h = 0.5;
  c.h_tau = 1.0 / 16;
  return c;
}

SuiteResult l1_sweep_suite(Theorem t, int trials, std::uint64_t seed) {
  Timer timer;
  SuiteResult r;
  r.name = "l1_sweep_" + theorem_name(t);
  const SweepReport rep = dyadic_sweep(l1_sweep_template(t), "L1", {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0}, trials,
                                       seed);
  r.report = rep.to_json();
  r.require(std::abs(rep.fit.slope - 0.5) <= 0.15, "L1 exponent " + std::to_string(rep.fit.slope));
  r.seconds = timer.seconds();
  return r;
}

namespace {

std::pair<double, double> window(const std::vector<double>& v) {
  return {*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
}

}  // namespace

SuiteResult z16_suite() {
  Timer timer;
  SuiteResult r;
  r.name = "z16";
  std::vector<double> ratios;
  nlohmann::json rows = nlohmann::json::array();
  for (int k = 6; k <= 10; ++k) {
    const double N = std::ldexp(1.0, k);
    const Extremizer x = make_extremizer(ExtremizerKind::Z16, N, std::sqrt(N) / 4, 0.5);
    const Evaluation e = evaluate(x.ecase, x.u1, x.u2);
    ratios.push_back(e.ratio);
    rows.push_back({{"N", N}, {"ratio", e.ratio}, {"lhs", e.lhs}, {"constant", e.constant}});
  }
  const auto [lo, hi] = window(ratios);
  r.report["window"] = rows;
  r.report["window_spread"] = hi / lo;
  r.require(lo > 0.0 && hi / lo <= 8.0, "Z16 ratio window spread " + std::to_string(hi / lo));

  const double N = 4096.0;
  const Extremizer x = make_extremizer(ExtremizerKind::Z16, N, std::sqrt(N) / 4, 0.5);
  EstimateCase c = x.ecase;
  c.alpha.reset();
  c.interval_length = 2.0 * std::sqrt(N);
  const SweepReport rep = dyadic_sweep(c, "alpha", {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2}, 0, 0);
  r.report["alpha_sweep"] = rep.to_json();
  r.require(std::abs(rep.fit.slope + 0.5) <= 0.15, "alpha exponent " + std::to_string(rep.fit.slope));
  r.seconds = timer.seconds();
  return r;
}

SuiteResult null_form_suite() {
  Timer timer;
  SuiteResult r;
  r.name = "null_forms";
  for (ExtremizerKind kind : {ExtremizerKind::Z16, ExtremizerKind::Z16Shortened}) {
    std::vector<double> ratios;
    nlohmann::json rows = nlohmann::json::array();
    for (int k = 6; k <= 10; ++k) {
      const double N = std::ldexp(1.0, k);
      const Extremizer x = make_extremizer(kind, N, std::sqrt(N) / 4, 0.5);
      EstimateCase c = x.ecase;
      if (kind == ExtremizerKind::Z16) {
        c.theorem = Theorem::NThm2;
        c.omega = Vec3::UnitZ();
      }
      const Evaluation e = evaluate(c, x.u1, x.u2);
      ratios.push_back(e.ratio);
      rows.push_back({{"N", N}, {"ratio", e.ratio}});
    }
    const auto [lo, hi] = window(ratios);
    const std::string name = kind == ExtremizerKind::Z16 ? "NThm2" : "NThm3";
    r.report[name] = rows;
    r.report[name + "_spread"] = hi / lo;
    r.require(lo > 0.0 && hi / lo <= 8.0, name + " window spread " + std::to_string(hi / lo));
  }

  // Exactly null collinear same-sign pairs.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> U(1, 20);
  std::uniform_int_distribution<int> D(-3, 3);
  long long nonzero = 0, pairs = 0;
  for (int i = 0; i < 500; ++i) {
    const int dx = D(rng), dy = D(rng), dz = D(rng);
    const int n2 = dx * dx + dy * dy + dz * dz;
    const int s = static_cast<int>(std::lround(std::sqrt(double(n2))));
    if (n2 == 0 || s * s != n2) continue;
    const int a = U(rng), b = U(rng);
    const Sign sg = i % 2 ? Sign::Plus : Sign::Minus;
    const int st = sg == Sign::Plus ? 1 : -1;
    const auto u1 = SparseField::from_entries(1.0, 1.0, {{{st * a * s, a * dx, a * dy, a * dz}, Complex(1.0, 0.5)}});
    const auto u2 = SparseField::from_entries(1.0, 1.0, {{{st * b * s, b * dx, b * dy, b * dz}, Complex(-0.3, 2.0)}});
    ++pairs;
    if (l2_norm(bilinear_product(u1, u2, SymbolKind::theta12(), {sg, sg})) != 0.0) ++nonzero;
    if (l2_norm(bilinear_product(u1, u2, SymbolKind::one(), {sg, sg})) == 0.0) ++nonzero;
  }
  r.report["null_pairs"] = pairs;
  r.require(pairs > 0 && nonzero == 0, std::to_string(nonzero) + " null collinear pairs not annihilated");
  r.seconds = timer.seconds();
  return r;
}

SuiteResult nthm4_suite() {
  Timer timer;
  SuiteResult r;
  r.name = "nthm4";
  const double N = 1024.0;
  const Extremizer x = make_extremizer(ExtremizerKind::Z16, N, std::sqrt(N) / 4, 0.5);
  EstimateCase c = x.ecase;
  c.theorem = Theorem::NThm4;
  c.r.reset();
  c.interval_length.reset();
  c = resolved(c);
  const SweepReport rep = dyadic_sweep(c, "interval_length", {64.0, 128.0, 256.0, 512.0}, 0, 0);
  r.report = rep.to_json();
  r.require(std::abs(rep.fit.slope - 0.5) <= 0.15, "delta exponent " + std::to_string(rep.fit.slope));
  r.seconds = timer.seconds();
  return r;
}

namespace {

std::pair<double, double> tube_window(int trials, std::uint64_t seed_begin, NetLibrary& lib) {
  double lo = kInf, hi = 0.0;
  for (const EstimateCase& c : canonical_cell(Theorem::LThm1)) {
    const double rr = low_output_radius(c);
    const SphereNet& net = lib.get(rr / c.N[2]);
    for (int t = 0; t < std::min(trials, 10); ++t) {
      const auto f = case_fields(c, static_cast<long long>(seed_begin) + t);
      const TubeSup ts = tube_sup_norm(f.second, c.N[2], rr, net);
      const double q = ts.value / ts.plain_norm;
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
  }
  return {lo, hi};
}

}  // namespace

SuiteResult lthm1_suite(int trials, std::uint64_t seed_begin, const Fixtures* fx, NetLibrary* nets) {
  Timer timer;
  SuiteResult r;
  r.name = "lthm1";
  NetLibrary local(0);
  NetLibrary& lib = nets ? *nets : local;
  const auto [lo, hi] = tube_window(trials, seed_begin, lib);
  r.report["measured"]["spectral.tube_symmetric_lo"] = lo;
  r.report["measured"]["spectral.tube_symmetric_hi"] = hi;
  if (fx) {
    if (fx->has("spectral.tube_symmetric_lo") && fx->has("spectral.tube_symmetric_hi")) {
      r.require(lo >= fx->get("spectral.tube_symmetric_lo"), "tube norm ratio below fixture window");
      r.require(hi <= fx->get("spectral.tube_symmetric_hi"), "tube norm ratio above fixture window");
    } else {
      r.require(false, "fixture tube window missing");
    }
  }
  const SuiteResult b = battery_suite(Theorem::LThm1, trials, seed_begin, fx, &lib);
  r.report["battery"] = b.report;
  for (const auto& f : b.failures) r.require(false, f);
  r.seconds = timer.seconds();
  return r;
}

SuiteResult weights_suite(long long samples, std::uint64_t seed, const Fixtures* fx) {
  Timer timer;
  SuiteResult r;
  r.name = "weights";
  const WeightScan w = weight_geometry_scan(samples, seed);
  r.report = w.to_json();
  r.require(w.low_output_count > 0 && w.filtered_count > 0, "scan produced empty subsamples");
  // Analytic floors 1/(3 pi^2) and 1/(15 pi^2); low-output interactions force a large angle.
  r.require(w.min_angle_bound >= 1.0 / (3 * M_PI * M_PI), "angle bound below analytic floor");
  r.require(w.min_product_bound >= 1.0 / (15 * M_PI * M_PI), "product bound below analytic floor");
  r.require(w.min_theta_low_output >= 2.6, "low-output sample with small angle");
  r.report["measured"]["weights.c"] = std::min(w.min_angle_bound, w.min_product_bound);
  r.report["measured"]["weights.g12_lo"] = w.g_min;
  r.report["measured"]["weights.g12_hi"] = w.g_max;
  if (fx) {
    if (fx->has("weights.c") && fx->has("weights.g12_lo") && fx->has("weights.g12_hi")) {
      const double c = fx->get("weights.c");
      r.require(w.min_angle_bound >= c, "angle bound fails with the fixture constant");
      r.require(w.min_product_bound >= c, "product bound fails with the fixture constant");
      r.require(w.g_min >= fx->get("weights.g12_lo") && w.g_max <= fx->get("weights.g12_hi"),
                "modulation ratio outside the fixture window");
    } else {
      r.require(false, "weights fixtures missing");
    }
  }
  r.seconds = timer.seconds();
  return r;
}

Fixtures calibrate(const CalibrationConfig& cfg, const std::optional<std::string>& net_cache) {
  Fixtures fx;
  auto take = [&](const SuiteResult& s) {
    if (!s.report.contains("measured")) return;
    for (const auto& [k, v] : s.report["measured"].items()) fx.set(k, v.get<double>());
  };
  NetSuiteConfig nc;
  nc.seed = cfg.seed;
  nc.gammas = {M_PI / 8};
  nc.directions = 10000;
  nc.cardinality_seeds = cfg.net_seeds;
  take(net_suite(nc, nullptr));
  take(sphere_sphere_suite(cfg.seed, nullptr));
  take(cone_cone_suite(cfg.seed, nullptr));
  take(quadric_suite(cfg.seed, nullptr));

  NetLibrary nets(0, net_cache);
  for (Theorem t : all_theorems()) {
    const bool major = t == Theorem::A110 || t == Theorem::A112 || t == Theorem::A114 || t == Theorem::LThm1;
    const BatteryResult b =
        run_battery(canonical_cell(t), major ? cfg.trials : cfg.minor_trials, cfg.seed, kInf, &nets);
    fx.set(key_for(t), 1.1 * b.max_ratio);
  }
  const auto [lo, hi] = tube_window(cfg.trials, cfg.seed, nets);
  fx.set("spectral.tube_symmetric_lo", lo / 1.1);
  fx.set("spectral.tube_symmetric_hi", hi * 1.1);

  const WeightScan w = weight_geometry_scan(cfg.weight_samples, cfg.seed);
  fx.set("weights.c", std::min(w.min_angle_bound, w.min_product_bound) / 1.1);
  fx.set("weights.g12_lo", w.g_min / 1.1);
  fx.set("weights.g12_hi", w.g_max * 1.1);
  fx.set("calibration.seed", static_cast<double>(cfg.seed));
  fx.set("calibration.trials", cfg.trials);
  return fx;
}

}  // namespace rlab
