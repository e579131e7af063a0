#include "rlab/measure.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

namespace {

constexpr int kMcBlocks = 64;

// c0 + c1 x + c2 x^2
struct Quad {
  double c0 = 0, c1 = 0, c2 = 0;
  double operator()(double x) const { return c0 + x * (c1 + x * c2); }
  Quad operator-(const Quad& o) const { return {c0 - o.c0, c1 - o.c1, c2 - o.c2}; }
};

// Real roots of q, appended to out.
void roots(const Quad& q, std::vector<double>& out) {
  const double scale = std::max({std::abs(q.c0), std::abs(q.c1), std::abs(q.c2), 1e-300});
  if (std::abs(q.c2) <= 1e-14 * scale) {
    if (std::abs(q.c1) > 1e-14 * scale) out.push_back(-q.c0 / q.c1);
    return;
  }
  const double disc = q.c1 * q.c1 - 4.0 * q.c2 * q.c0;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  const double t = -0.5 * (q.c1 + std::copysign(sq, q.c1));
  if (t != 0.0) {
    out.push_back(t / q.c2);
    out.push_back(q.c0 / t);
  } else {
    out.push_back(0.0);
  }
}

std::vector<double> breakpoints(double lo, double hi, std::vector<double> extra) {
  std::vector<double> xs = {lo, hi};
  for (double x : extra) {
    if (x > lo && x < hi) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Exact: return "exact";
    case Method::MonteCarlo: return "mc";
    default: return "quadrature";
  }
}

MeasureEstimate mc_volume(const Region& region, long long n, std::uint64_t seed) {
  if (n < 1000) throw PreconditionError("mc_volume needs n >= 1000");
  const Box box = region.bounding_box();
  if (!box.bounded()) throw DomainError("mc_volume needs a bounded region");
  MeasureEstimate out;
  out.n_samples = n;
  if (box.empty() || box.volume() == 0.0) {
    out.method = Method::Exact;
    return out;
  }
  const int first = region.dim() == 3 ? 1 : 0;
  std::vector<long long> hits(kMcBlocks, 0);
  parallel_for(kMcBlocks, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(seed, b));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const long long count = n / kMcBlocks + (static_cast<long long>(b) < n % kMcBlocks ? 1 : 0);
    long long h = 0;
    Vec4 p = Vec4::Zero();
    for (long long i = 0; i < count; ++i) {
      for (int k = first; k < 4; ++k) p[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * u(rng);
      if (region.contains_raw(p)) ++h;
    }
    hits[b] = h;
  });
  long long total = 0;
  for (long long h : hits) total += h;
  const double V = box.volume();
  const double p = static_cast<double>(total) / static_cast<double>(n);
  const double pe = std::clamp(p, 1.0 / n, 1.0 - 1.0 / n);
  out.value = V * p;
  out.std_error = V * std::sqrt(pe * (1.0 - pe) / static_cast<double>(n));
  out.method = Method::MonteCarlo;
  return out;
}

MeasureEstimate slab_sphere_volume(double rho, double eps, double a, double b) {
  if (!(rho > 0.0 && eps > 0.0)) throw DomainError("rho and eps must be positive");
  if (eps > rho / 4.0) throw PreconditionError("slab_sphere_volume needs eps <= rho/4");
  if (!(a < b)) throw DomainError("slab needs a < b");
  const double in = rho - eps;
  const double out = rho + eps;
  const double core = 4.0 * M_PI * rho * eps;
  // Antiderivative of pi (out^2 - x^2).
  auto cap = [&](double x) { return M_PI * (out * out * x - x * x * x / 3.0); };
  const auto xs = breakpoints(a, b, {-out, -in, in, out});
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i], x1 = xs[i + 1];
    const double m = 0.5 * (x0 + x1);
    if (std::abs(m) <= in) {
      v += core * (x1 - x0);
    } else if (std::abs(m) < out) {
      v += cap(x1) - cap(x0);
    }
  }
  MeasureEstimate r;
  r.value = std::max(0.0, v);
  r.method = Method::Exact;
  return r;
}

SphereSphereVolume sphere_sphere_volume(double r, double delta, double R, double Delta, const Vec3& xi0) {
  if (!(r > 0.0 && R > 0.0 && delta > 0.0 && Delta > 0.0)) throw DomainError("radii and thicknesses must be positive");
  if (delta > r / 4.0 || Delta > R / 4.0) throw PreconditionError("need delta <= r/4 and Delta <= R/4");
  const double s = xi0.norm();
  if (!(s > 0.0)) throw DomainError("concentric shells (xi0 = 0) are excluded");

  // Along the xi0 axis, each section is a disk annulus in |xi'|^2.
  const Quad l1{(r - delta) * (r - delta), 0.0, -1.0};
  const Quad u1{(r + delta) * (r + delta), 0.0, -1.0};
  const Quad l2{(R - Delta) * (R - Delta) - s * s, 2.0 * s, -1.0};
  const Quad u2{(R + Delta) * (R + Delta) - s * s, 2.0 * s, -1.0};
  const Quad zero{};
  const std::vector<Quad> fs = {l1, u1, l2, u2, zero};
  std::vector<double> cuts;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (std::size_t j = i + 1; j < fs.size(); ++j) roots(fs[i] - fs[j], cuts);
  }
  const double lo = std::max(-(r + delta), s - (R + Delta));
  const double hi = std::min(r + delta, s + (R + Delta));
  auto area = [&](double x) {
    const double top = std::min(u1(x), u2(x));
    const double bottom = std::max({l1(x), l2(x), 0.0});
    return M_PI * std::max(0.0, top - bottom);
  };
  double v = 0.0;
  if (lo < hi) {
    const auto xs = breakpoints(lo, hi, cuts);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double x0 = xs[i], x1 = xs[i + 1];
      v += (x1 - x0) / 6.0 * (area(x0) + 4.0 * area(0.5 * (x0 + x1)) + area(x1));
    }
  }
  SphereSphereVolume out;
  out.volume.value = v;
  out.volume.method = Method::Exact;
  out.bound = r * R * delta * Delta / s;

  const double mid = s * s + r * r - R * R + delta * delta - Delta * Delta;
  const double half = 2.0 * (r * delta + R * Delta);
  const double a = (mid - half) / (2.0 * s);
  const double b = (mid + half) / (2.0 * s);
  out.reduction = r * delta <= R * Delta ? slab_sphere_volume(r, delta, a, b).value
                                         : slab_sphere_volume(R, Delta, a - s, b - s).value;
  return out;
}

double ConeConeVolume::min_bound() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [k, v] : bounds) m = std::min(m, v);
  return m;
}

ConeConeVolume cone_cone_volume(const ConeSpec& k1, const ConeSpec& k2, const SpacetimePoint& X0, long long n,
                                std::uint64_t seed) {
  const Region A = Region::thick_cone(k1.sign, k1.N, k1.L);
  const Region B = Region::translate(Region::reflect(Region::thick_cone(k2.sign, k2.N, k2.L)), X0);
  ConeConeVolume out;
  out.volume = mc_volume(Region::intersect({A, B}), n, seed);
  if (k1.sign == k2.sign && k1.N == k2.N && k1.L == k2.L && k1.L <= k1.N / 4.0) {
    out.bounds["C40"] = k1.N * k1.N * k1.L * k1.L;
  }
  if (k1.N <= k2.N && std::max(k1.L, k2.L) <= k1.N / 4.0) out.bounds["C92_2"] = k1.N * k1.N * k1.L * k2.L;
  const double nmin = std::min(k1.N, k2.N);
  out.bounds["fallback"] = nmin * nmin * nmin * std::min(k1.L, k2.L);
  return out;
}

ConeBallVolume cone_ball_constant(double N, double L, double r, const Vec3& center, long long n, std::uint64_t seed,
                                  std::optional<SpacetimePoint> X0) {
  if (!(N > 0.0 && L > 0.0 && r > 0.0)) throw DomainError("N, L, r must be positive");
  if (r > N / 8.0) throw PreconditionError("cone_ball_constant needs r <= N/8");
  const SpacetimePoint x0 = X0.value_or(SpacetimePoint{2.0 * center.norm(), 2.0 * center});
  const Region A = Region::intersect({Region::thick_cone(Sign::Plus, N, L), Region::cylinder(Region::ball(center, r))});
  const Region E = Region::intersect({A, Region::translate(Region::reflect(A), x0)});
  ConeBallVolume out;
  out.volume = mc_volume(E, n, seed);
  out.bound = r * N * L * L;
  return out;
}

double QuadricSurface::focal_distance() const {
  return kind == QuadricKind::Ellipsoid ? std::sqrt(std::max(0.0, a * a - b * b)) : std::sqrt(a * a + b * b);
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("quadrature order must be positive");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = beta;
    J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = 2.0 * v0 * v0;
  }
}

namespace {

// Integral over [x0, x1] with x = x0 + u^2 on the left half and x = x1 - u^2
// on the right half, removing square-root endpoint behaviour.
template <class F>
double endpoint_regular_integral(const F& f, double x0, double x1, const std::vector<double>& t,
                                 const std::vector<double>& w) {
  const double m = 0.5 * (x0 + x1);
  const double U = std::sqrt(std::max(0.0, m - x0));
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = 0.5 * U * (t[i] + 1.0);
    const double jac = 2.0 * u * 0.5 * U * w[i];
    s += jac * (f(x0 + u * u) + f(x1 - u * u));
  }
  return s;
}

}  // namespace

QuadricArea quadric_area(const QuadricSurface& S, double R, const ThickPlane& plane, int n_quad, double c1,
                         double c2) {
  if (!(S.a > 0.0 && S.b > 0.0 && S.a >= S.b)) throw DomainError("quadric needs a >= b > 0");
  if (!(R > 0.0)) throw DomainError("ball radius must be positive");
  if (!(plane.delta > 0.0) || !std::isfinite(plane.p) || !std::isfinite(plane.q)) {
    throw DomainError("plane needs finite slope and intercept and positive thickness");
  }
  if (n_quad < 2) throw DomainError("n_quad must be at least 2");
  const double a = S.a, b = S.b, c = S.focal_distance();
  const bool ell = S.kind == QuadricKind::Ellipsoid;
  // Work with the ball at the left focus; mirror x for the right one.
  const double p = S.focus_sign == Sign::Plus ? -plane.p : plane.p;
  const double q = plane.q;
  const double width = plane.delta * std::sqrt(1.0 + p * p);

  double lo, hi;
  if (ell) {
    lo = -a;
    if (c == 0.0) {
      hi = R >= a ? a : -a;
    } else {
      hi = std::min(a, (R - a) * a / c);
    }
  } else {
    lo = -(R + a) * a / c;
    hi = -a;
  }

  const double ba2 = b * b / (a * a);
  auto f2 = [&](double x) { return ell ? ba2 * (a * a - x * x) : ba2 * (x * x - a * a); };
  auto weight = [&](double x) {
    const double v = ell ? a * a - x * x + ba2 * x * x : x * x - a * a + ba2 * x * x;
    return (b / a) * std::sqrt(std::max(0.0, v));
  };
  auto integrand = [&](double x) {
    const double f = std::sqrt(std::max(0.0, f2(x)));
    if (f == 0.0) return 0.0;
    const double g = p * x + q;
    const double s = g / f;
    const double t = (g + width) / f;
    if (s >= 1.0 || t <= -1.0) return 0.0;
    const double dtheta = 2.0 * (std::acos(std::max(s, -1.0)) - std::acos(std::min(t, 1.0)));
    return weight(x) * std::max(0.0, dtheta);
  };

  QuadricArea out;
  out.bound = R * plane.delta;
  out.in_regime = b * b / a <= c1 * R && R <= c2 * a;
  out.area.method = Method::Quadrature;
  if (!(lo < hi)) {
    out.area.std_error = std::numeric_limits<double>::min();
    return out;
  }
  const Quad fq = ell ? Quad{b * b, 0.0, -ba2} : Quad{-b * b, 0.0, ba2};
  std::vector<double> cuts;
  for (double off : {0.0, width}) {
    const Quad line2{(q + off) * (q + off), 2.0 * p * (q + off), p * p};
    roots(fq - line2, cuts);
  }
  const auto xs = breakpoints(lo, hi, cuts);
  std::vector<double> t, w, th, wh;
  gauss_legendre(n_quad, t, w);
  gauss_legendre(std::max(2, n_quad / 2), th, wh);
  double full = 0.0, coarse = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    full += endpoint_regular_integral(integrand, xs[i], xs[i + 1], t, w);
    coarse += endpoint_regular_integral(integrand, xs[i], xs[i + 1], th, wh);
  }
  out.area.value = std::max(0.0, full);
  out.area.n_samples = static_cast<long long>(xs.size() - 1) * 2 * n_quad;
  out.area.std_error = std::max(std::abs(full - coarse), std::numeric_limits<double>::min());
  return out;
}

std::string measure_csv_header() { return "op,params,value,stderr,bound,ratio"; }

std::string measure_csv_row(const std::string& op, const std::vector<std::pair<std::string, double>>& params,
                            const MeasureEstimate& m, double bound) {
  std::string ps;
  char buf[64];
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", params[i].second);
    ps += (i ? ";" : "") + params[i].first + "=" + buf;
  }
  char tail[160];
  std::snprintf(tail, sizeof tail, "%.17g,%.17g,%.17g,%.17g", m.value, m.std_error, bound,
                bound > 0.0 ? m.value / bound : 0.0);
  return op + "," + ps + "," + tail;
}

}  // namespace rlab
