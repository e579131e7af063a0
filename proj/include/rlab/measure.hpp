#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlab/geometry.hpp"

namespace rlab {

enum class Method { Exact, MonteCarlo, Quadrature };

const char* method_name(Method m);

struct MeasureEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long n_samples = 0;
  Method method = Method::Exact;
};

// Hit-or-miss volume over the region's bounding box. Samples are split into
// a fixed number of blocks, each with its own seeded substream.
MeasureEstimate mc_volume(const Region& region, long long n, std::uint64_t seed);

// |S_eps(rho) cap {a < xi^1 < b}| by exact piecewise integration.
MeasureEstimate slab_sphere_volume(double rho, double eps, double a, double b);

struct SphereSphereVolume {
  MeasureEstimate volume;  // exact |S_delta(r) cap (xi0 + S_Delta(R))|
  double reduction = 0.0;  // slab-reduction upper bound from the proof
  double bound = 0.0;      // r R delta Delta / |xi0|
};

SphereSphereVolume sphere_sphere_volume(double r, double delta, double R, double Delta, const Vec3& xi0);

struct ConeSpec {
  Sign sign = Sign::Plus;
  double N = 1.0;
  double L = 1.0;
};

struct ConeConeVolume {
  MeasureEstimate volume;
  // "C40" (equal cones, L <= N/4): N^2 L^2
  // "C92_2" (N1 <= N2, L1, L2 <= N1/4): N1^2 L1 L2
  // "fallback": Nmin^3 Lmin
  std::map<std::string, double> bounds;
  double min_bound() const;
};

// Volume of K1 cap (X0 - K2).
ConeConeVolume cone_cone_volume(const ConeSpec& k1, const ConeSpec& k2, const SpacetimePoint& X0, long long n,
                                std::uint64_t seed);

struct ConeBallVolume {
  MeasureEstimate volume;
  double bound = 0.0;  // r N L^2
};

// E = A cap (X0 - A) with A = K+_{N,L} cap (R x B(center, r)); X0 defaults
// to (2|center|, 2 center).
ConeBallVolume cone_ball_constant(double N, double L, double r, const Vec3& center, long long n,
                                  std::uint64_t seed, std::optional<SpacetimePoint> X0 = std::nullopt);

enum class QuadricKind { Ellipsoid, HyperboloidSheet };

struct QuadricSurface {
  QuadricKind kind = QuadricKind::Ellipsoid;
  double a = 1.0;
  double b = 1.0;
  Sign focus_sign = Sign::Plus;  // ball centred at (focus_sign * c, 0, 0)

  double focal_distance() const;
  double focus_x() const { return value(focus_sign) * focal_distance(); }
};

// Region between the planes y = p x + q and y = p x + q + delta / cos(beta),
// p = tan(beta).
struct ThickPlane {
  double p = 0.0;
  double q = 0.0;
  double delta = 0.0;
};

struct QuadricArea {
  MeasureEstimate area;
  double bound = 0.0;  // R delta
  bool in_regime = false;
};

// sigma(S cap B cap P_delta); regime window b^2/a <= c1 R and R <= c2 a.
QuadricArea quadric_area(const QuadricSurface& s, double R, const ThickPlane& plane, int n_quad, double c1 = 1.0,
                         double c2 = 1.0);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// One CSV row: op,params,value,stderr,bound,ratio with params as k=v;k=v.
std::string measure_csv_header();
std::string measure_csv_row(const std::string& op, const std::vector<std::pair<std::string, double>>& params,
                            const MeasureEstimate& m, double bound);

}  // namespace rlab
