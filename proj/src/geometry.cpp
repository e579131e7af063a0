#include "rlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "rlab/errors.hpp"

namespace rlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be nonnegative and finite");
}

bool in_annulus(double n, double N) { return n > 0.5 * N && n <= N; }

// Index of the axis when omega is a signed coordinate vector, else -1.
int axis_of(const Vec3& omega) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(omega[i]) == 1.0 && omega[(i + 1) % 3] == 0.0 && omega[(i + 2) % 3] == 0.0) return i;
  }
  return -1;
}

}  // namespace

Sign sign_from_int(int v) {
  if (v == 1) return Sign::Plus;
  if (v == -1) return Sign::Minus;
  throw UsageError("sign must be +1 or -1");
}

double angle(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("angle of a zero vector");
  const Vec3 ua = a / na;
  const Vec3 ub = b / nb;
  return std::atan2(ua.cross(ub).norm(), std::clamp(ua.dot(ub), -1.0, 1.0));
}

double hyperbolic_weight(const SpacetimePoint& X, Sign sign) { return -X.tau + value(sign) * X.xi.norm(); }

IdentityDefect angle_identity_defect(const Vec3& a, const Vec3& b, Identity which) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("angle identity needs nonzero vectors");
  const double theta = angle(a, b);
  const double s = std::sin(0.5 * theta);
  const double one_minus_cos = 2.0 * s * s;
  IdentityDefect out;
  if (which == Identity::Sum) {
    out.lhs = 2.0 * na * nb * one_minus_cos / (na + nb + (a + b).norm());
    out.comparator = std::min(na, nb) * theta * theta;
  } else {
    const double d = (a - b).norm();
    if (!(d > 0.0)) throw DomainError("difference identity needs a != b");
    out.lhs = 2.0 * na * nb * one_minus_cos / (d + std::abs(na - nb));
    out.comparator = na * nb * theta * theta / d;
  }
  return out;
}

DiskProbe disk_contains_projected_rectangle(double beta, double theta, const Vec3& probe, DiskPart part,
                                            std::optional<double> x) {
  constexpr double half_pi = M_PI / 2.0;
  if (!(beta > 0.0 && beta <= half_pi)) throw DomainError("beta must lie in (0, pi/2]");
  if (!(theta > 0.0 && theta <= half_pi)) throw DomainError("theta must lie in (0, pi/2]");
  const double n = probe.norm();
  if (!(n > 0.0)) throw DomainError("probe must be nonzero");
  const Vec3 e = probe / n;
  const Vec3 w(std::cos(beta), 0.0, std::sin(beta));
  const double st = std::sin(theta);
  const double centre = std::cos(beta) * std::cos(theta);

  double xx = 0.0;
  if (part == DiskPart::One) {
    xx = x.value_or(0.5 * st);
    if (!(xx > 0.0 && xx <= st)) throw DomainError("x must lie in (0, sin theta]");
  } else {
    if (!(beta < theta)) throw DomainError("part two needs beta < theta");
    if (x) throw UsageError("part two fixes x itself");
    const double cb = std::cos(beta);
    const double ct = std::cos(theta);
    xx = std::sqrt(std::max(0.0, 1.0 - ct * ct / (cb * cb)));
  }
  const double y = std::sin(beta) * std::sqrt(std::max(0.0, st * st - xx * xx));

  DiskProbe out;
  out.in_disk = angle(e, w) <= theta;
  const bool upper = e.z() > 0.0;
  const bool in_unit = e.x() * e.x() + e.y() * e.y() < 1.0;
  const bool in_band = std::abs(e.y()) <= xx;
  const bool in_x = part == DiskPart::One ? std::abs(e.x() - centre) <= y : e.x() >= centre - y;
  out.in_rectangle_set = upper && in_unit && in_band && in_x;
  return out;
}

bool Box::bounded() const {
  for (int i = (dim == 3 ? 1 : 0); i < 4; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
  }
  return true;
}

bool Box::empty() const {
  for (int i = (dim == 3 ? 1 : 0); i < 4; ++i) {
    if (lo[i] > hi[i]) return true;
  }
  return false;
}

double Box::volume() const {
  if (empty()) return 0.0;
  double v = 1.0;
  for (int i = (dim == 3 ? 1 : 0); i < 4; ++i) v *= hi[i] - lo[i];
  return v;
}

Vec3 unit(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw DomainError("direction must be nonzero");
  return v / n;
}

namespace {

Vec3 checked_unit(const Vec3& v) {
  const double n = v.norm();
  if (!(std::abs(n - 1.0) < 1e-6)) throw DomainError("direction is not a unit vector");
  return v / n;
}

}  // namespace

namespace detail {
struct RegionFactory {
  static Region build(RegionVariant v, int dim) {
    return Region(std::make_shared<const RegionNode>(RegionNode{std::move(v), dim}));
  }
};
}  // namespace detail

namespace {
Region make(RegionVariant v, int dim) { return detail::RegionFactory::build(std::move(v), dim); }
}  // namespace

Region Region::ball(const Vec3& center, double radius) {
  require_nonnegative(radius, "ball radius");
  return make(shape::Ball{center, radius}, 3);
}

Region Region::annulus(double N) {
  require_positive(N, "annulus N");
  return make(shape::Annulus{N}, 3);
}

Region Region::thick_sphere(double r, double delta) {
  require_positive(r, "sphere radius");
  require_nonnegative(delta, "sphere thickness");
  return make(shape::ThickSphere{r, delta}, 3);
}

Region Region::thick_cone(Sign sign, double N, double L) {
  require_positive(N, "cone N");
  require_nonnegative(L, "cone L");
  return make(shape::ThickCone{sign, N, L}, 4);
}

Region Region::sector_cone(Sign sign, double N, double L, double gamma, const Vec3& omega) {
  require_positive(N, "sector N");
  require_nonnegative(L, "sector L");
  require_positive(gamma, "sector gamma");
  return make(shape::SectorCone{sign, N, L, gamma, unit(omega)}, 4);
}

Region Region::tube(double r, const Vec3& omega) {
  require_nonnegative(r, "tube radius");
  return make(shape::Tube{r, unit(omega)}, 3);
}

Region Region::slab(const Vec3& omega, double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw DomainError("slab interval must satisfy lo <= hi");
  return make(shape::Slab{unit(omega), lo, hi}, 3);
}

Region Region::null_hyperplane(double d, const Vec3& omega) {
  require_nonnegative(d, "hyperplane thickness");
  return make(shape::NullHyperplane{d, unit(omega)}, 4);
}

Region Region::half_space_cone(const Vec3& omega, double alpha) {
  if (!(alpha >= 0.0 && alpha <= M_PI / 2.0)) throw DomainError("alpha must lie in [0, pi/2]");
  return make(shape::HalfSpaceCone{unit(omega), alpha}, 3);
}

Region Region::whole(int dim) {
  if (dim != 3 && dim != 4) throw UsageError("dimension must be 3 or 4");
  return make(shape::Whole{dim}, dim);
}

Region Region::cylinder(const Region& base) {
  if (base.dim() != 3) throw UsageError("cylinder base must be spatial");
  return make(shape::Cylinder{base}, 4);
}

Region Region::translate(const Region& base, const Vec3& offset) {
  if (base.dim() != 3) throw UsageError("spatial offset needs a spatial region");
  return make(shape::Translate{base, Vec4(0.0, offset.x(), offset.y(), offset.z())}, 3);
}

Region Region::translate(const Region& base, const SpacetimePoint& offset) {
  if (base.dim() != 4) throw UsageError("spacetime offset needs a spacetime region");
  return make(shape::Translate{base, offset.as_vec4()}, 4);
}

Region Region::reflect(const Region& base) { return make(shape::Reflect{base}, base.dim()); }

Region Region::intersect(std::vector<Region> parts) {
  if (parts.empty()) throw UsageError("intersection of no regions");
  const int d = parts.front().dim();
  for (const auto& p : parts) {
    if (p.dim() != d) throw UsageError("intersection mixes dimensions");
  }
  return make(shape::Intersect{std::move(parts)}, d);
}

Region Region::unite(std::vector<Region> parts) {
  if (parts.empty()) throw UsageError("union of no regions");
  const int d = parts.front().dim();
  for (const auto& p : parts) {
    if (p.dim() != d) throw UsageError("union mixes dimensions");
  }
  return make(shape::Union{std::move(parts)}, d);
}

Region Region::complement(const Region& base) { return make(shape::Complement{base}, base.dim()); }

int Region::dim() const {
  if (!node_) throw UsageError("empty region handle");
  return node_->dim;
}

bool Region::contains(const Vec3& p) const {
  if (dim() != 3) throw UsageError("spatial point given to a spacetime region");
  return contains_raw(Vec4(0.0, p.x(), p.y(), p.z()));
}

bool Region::contains(const SpacetimePoint& p) const {
  if (dim() != 4) throw UsageError("spacetime point given to a spatial region");
  return contains_raw(p.as_vec4());
}

bool Region::contains_raw(const Vec4& p) const {
  const Vec3 xi = p.tail<3>();
  const double tau = p[0];
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, shape::Ball>) {
          return (xi - s.center).norm() <= s.radius;
        } else if constexpr (std::is_same_v<T, shape::Annulus>) {
          return in_annulus(xi.norm(), s.N);
        } else if constexpr (std::is_same_v<T, shape::ThickSphere>) {
          const double n = xi.norm();
          return n >= s.r - s.delta && n <= s.r + s.delta;
        } else if constexpr (std::is_same_v<T, shape::ThickCone>) {
          const double n = xi.norm();
          return in_annulus(n, s.N) && std::abs(-tau + value(s.sign) * n) <= s.L;
        } else if constexpr (std::is_same_v<T, shape::SectorCone>) {
          const double n = xi.norm();
          if (!in_annulus(n, s.N) || std::abs(-tau + value(s.sign) * n) > s.L) return false;
          return angle(value(s.sign) * xi, s.omega) <= s.gamma;
        } else if constexpr (std::is_same_v<T, shape::Tube>) {
          return (xi - xi.dot(s.omega) * s.omega).norm() <= s.r;
        } else if constexpr (std::is_same_v<T, shape::Slab>) {
          const double t = xi.dot(s.omega);
          return t >= s.lo && t <= s.hi;
        } else if constexpr (std::is_same_v<T, shape::NullHyperplane>) {
          return std::abs(-tau + xi.dot(s.omega)) <= s.d;
        } else if constexpr (std::is_same_v<T, shape::HalfSpaceCone>) {
          if (xi.squaredNorm() == 0.0) return false;
          const double along = std::abs(xi.dot(s.omega));
          const double across = xi.cross(s.omega).norm();
          return std::atan2(along, across) >= s.alpha;
        } else if constexpr (std::is_same_v<T, shape::Whole>) {
          return true;
        } else if constexpr (std::is_same_v<T, shape::Cylinder>) {
          return s.base.contains_raw(Vec4(0.0, xi.x(), xi.y(), xi.z()));
        } else if constexpr (std::is_same_v<T, shape::Translate>) {
          return s.base.contains_raw(p - s.offset);
        } else if constexpr (std::is_same_v<T, shape::Reflect>) {
          return s.base.contains_raw(-p);
        } else if constexpr (std::is_same_v<T, shape::Intersect>) {
          for (const auto& r : s.parts) {
            if (!r.contains_raw(p)) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, shape::Union>) {
          for (const auto& r : s.parts) {
            if (r.contains_raw(p)) return true;
          }
          return false;
        } else {
          return !s.base.contains_raw(p);
        }
      },
      node_->shape);
}

bool Region::shadow_contains(const Vec3& xi) const {
  if (dim() == 3) return contains_raw(Vec4(0.0, xi.x(), xi.y(), xi.z()));
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, shape::ThickCone>) {
          return in_annulus(xi.norm(), s.N);
        } else if constexpr (std::is_same_v<T, shape::SectorCone>) {
          return in_annulus(xi.norm(), s.N) && angle(value(s.sign) * xi, s.omega) <= s.gamma;
        } else if constexpr (std::is_same_v<T, shape::Cylinder>) {
          return s.base.contains_raw(Vec4(0.0, xi.x(), xi.y(), xi.z()));
        } else if constexpr (std::is_same_v<T, shape::Translate>) {
          return s.base.shadow_contains(xi - s.offset.template tail<3>());
        } else if constexpr (std::is_same_v<T, shape::Reflect>) {
          return s.base.shadow_contains(-xi);
        } else if constexpr (std::is_same_v<T, shape::Intersect>) {
          for (const auto& r : s.parts) {
            if (!r.shadow_contains(xi)) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, shape::Union>) {
          for (const auto& r : s.parts) {
            if (r.shadow_contains(xi)) return true;
          }
          return false;
        } else {
          return true;
        }
      },
      node_->shape);
}

Box Region::bounding_box() const {
  Box b;
  b.dim = dim();
  if (b.dim == 3) {
    b.lo[0] = 0.0;
    b.hi[0] = 0.0;
  }
  auto spatial = [&](double lo, double hi) {
    for (int i = 1; i < 4; ++i) {
      b.lo[i] = lo;
      b.hi[i] = hi;
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, shape::Ball>) {
          for (int i = 0; i < 3; ++i) {
            b.lo[i + 1] = s.center[i] - s.radius;
            b.hi[i + 1] = s.center[i] + s.radius;
          }
        } else if constexpr (std::is_same_v<T, shape::Annulus>) {
          spatial(-s.N, s.N);
        } else if constexpr (std::is_same_v<T, shape::ThickSphere>) {
          spatial(-(s.r + s.delta), s.r + s.delta);
        } else if constexpr (std::is_same_v<T, shape::ThickCone> || std::is_same_v<T, shape::SectorCone>) {
          spatial(-s.N, s.N);
          if (s.sign == Sign::Plus) {
            b.lo[0] = 0.5 * s.N - s.L;
            b.hi[0] = s.N + s.L;
          } else {
            b.lo[0] = -s.N - s.L;
            b.hi[0] = -0.5 * s.N + s.L;
          }
        } else if constexpr (std::is_same_v<T, shape::Tube>) {
          const int ax = axis_of(s.omega);
          if (ax >= 0) {
            for (int i = 0; i < 3; ++i) {
              if (i == ax) continue;
              b.lo[i + 1] = -s.r;
              b.hi[i + 1] = s.r;
            }
          }
        } else if constexpr (std::is_same_v<T, shape::Slab>) {
          const int ax = axis_of(s.omega);
          if (ax >= 0) {
            const double sg = s.omega[ax];
            b.lo[ax + 1] = sg > 0 ? s.lo : -s.hi;
            b.hi[ax + 1] = sg > 0 ? s.hi : -s.lo;
          }
        } else if constexpr (std::is_same_v<T, shape::Cylinder>) {
          const Box inner = s.base.bounding_box();
          b.lo = inner.lo;
          b.hi = inner.hi;
          b.lo[0] = -kInf;
          b.hi[0] = kInf;
        } else if constexpr (std::is_same_v<T, shape::Translate>) {
          const Box inner = s.base.bounding_box();
          b.lo = inner.lo + s.offset;
          b.hi = inner.hi + s.offset;
        } else if constexpr (std::is_same_v<T, shape::Reflect>) {
          const Box inner = s.base.bounding_box();
          b.lo = -inner.hi;
          b.hi = -inner.lo;
        } else if constexpr (std::is_same_v<T, shape::Intersect>) {
          bool first = true;
          for (const auto& r : s.parts) {
            const Box inner = r.bounding_box();
            if (first) {
              b.lo = inner.lo;
              b.hi = inner.hi;
              first = false;
            } else {
              b.lo = b.lo.cwiseMax(inner.lo);
              b.hi = b.hi.cwiseMin(inner.hi);
            }
          }
        } else if constexpr (std::is_same_v<T, shape::Union>) {
          bool first = true;
          for (const auto& r : s.parts) {
            const Box inner = r.bounding_box();
            if (first) {
              b.lo = inner.lo;
              b.hi = inner.hi;
              first = false;
            } else {
              b.lo = b.lo.cwiseMin(inner.lo);
              b.hi = b.hi.cwiseMax(inner.hi);
            }
          }
        }
      },
      node_->shape);
  if (b.dim == 3) {
    b.lo[0] = 0.0;
    b.hi[0] = 0.0;
  }
  return b;
}

nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw UsageError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Vec3 unit_from_json(const nlohmann::json& j) { return checked_unit(vec3_from_json(j)); }

nlohmann::json Region::to_json() const {
  using nlohmann::json;
  return std::visit(
      [&](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, shape::Ball>) {
          return {{"kind", "ball"}, {"center", rlab::to_json(s.center)}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<T, shape::Annulus>) {
          return {{"kind", "annulus"}, {"N", s.N}};
        } else if constexpr (std::is_same_v<T, shape::ThickSphere>) {
          return {{"kind", "thick_sphere"}, {"r", s.r}, {"delta", s.delta}};
        } else if constexpr (std::is_same_v<T, shape::ThickCone>) {
          return {{"kind", "thick_cone"}, {"sign", static_cast<int>(s.sign)}, {"N", s.N}, {"L", s.L}};
        } else if constexpr (std::is_same_v<T, shape::SectorCone>) {
          return {{"kind", "sector_cone"}, {"sign", static_cast<int>(s.sign)}, {"N", s.N},
                  {"L", s.L},          {"gamma", s.gamma},                  {"omega", rlab::to_json(s.omega)}};
        } else if constexpr (std::is_same_v<T, shape::Tube>) {
          return {{"kind", "tube"}, {"r", s.r}, {"omega", rlab::to_json(s.omega)}};
        } else if constexpr (std::is_same_v<T, shape::Slab>) {
          return {{"kind", "slab"}, {"omega", rlab::to_json(s.omega)}, {"interval", {s.lo, s.hi}}};
        } else if constexpr (std::is_same_v<T, shape::NullHyperplane>) {
          return {{"kind", "null_hyperplane"}, {"d", s.d}, {"omega", rlab::to_json(s.omega)}};
        } else if constexpr (std::is_same_v<T, shape::HalfSpaceCone>) {
          return {{"kind", "half_space_cone"}, {"omega", rlab::to_json(s.omega)}, {"alpha", s.alpha}};
        } else if constexpr (std::is_same_v<T, shape::Whole>) {
          return {{"kind", "whole"}, {"dim", s.dim}};
        } else if constexpr (std::is_same_v<T, shape::Cylinder>) {
          return {{"kind", "cylinder"}, {"base", s.base.to_json()}};
        } else if constexpr (std::is_same_v<T, shape::Translate>) {
          json off = node_->dim == 4 ? json::array({s.offset[0], s.offset[1], s.offset[2], s.offset[3]})
                                     : json::array({s.offset[1], s.offset[2], s.offset[3]});
          return {{"kind", "translate"}, {"base", s.base.to_json()}, {"offset", off}};
        } else if constexpr (std::is_same_v<T, shape::Reflect>) {
          return {{"kind", "reflect"}, {"base", s.base.to_json()}};
        } else if constexpr (std::is_same_v<T, shape::Complement>) {
          return {{"kind", "complement"}, {"base", s.base.to_json()}};
        } else {
          json parts = json::array();
          for (const auto& r : s.parts) parts.push_back(r.to_json());
          const char* kind = std::is_same_v<T, shape::Intersect> ? "intersect" : "union";
          return {{"kind", kind}, {"parts", parts}};
        }
      },
      node_->shape);
}

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  ok.insert("kind");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw UsageError("unknown region key '" + it.key() + "'");
  }
  for (const char* k : allowed) {
    if (!j.contains(k)) throw UsageError(std::string("region missing key '") + k + "'");
  }
}

}  // namespace

Region Region::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw UsageError("region JSON needs a kind");
  const std::string kind = j.at("kind").get<std::string>();
  auto num = [&](const char* k) { return j.at(k).get<double>(); };
  auto sign = [&]() { return sign_from_int(j.at("sign").get<int>()); };
  if (kind == "ball") {
    check_keys(j, {"center", "radius"});
    return ball(vec3_from_json(j["center"]), num("radius"));
  }
  if (kind == "annulus") {
    check_keys(j, {"N"});
    return annulus(num("N"));
  }
  if (kind == "thick_sphere") {
    check_keys(j, {"r", "delta"});
    return thick_sphere(num("r"), num("delta"));
  }
  if (kind == "thick_cone") {
    check_keys(j, {"sign", "N", "L"});
    return thick_cone(sign(), num("N"), num("L"));
  }
  if (kind == "sector_cone") {
    check_keys(j, {"sign", "N", "L", "gamma", "omega"});
    return sector_cone(sign(), num("N"), num("L"), num("gamma"), unit_from_json(j["omega"]));
  }
  if (kind == "tube") {
    check_keys(j, {"r", "omega"});
    return tube(num("r"), unit_from_json(j["omega"]));
  }
  if (kind == "slab") {
    check_keys(j, {"omega", "interval"});
    const auto& iv = j["interval"];
    if (!iv.is_array() || iv.size() != 2) throw UsageError("slab interval must be [lo, hi]");
    return slab(unit_from_json(j["omega"]), iv[0].get<double>(), iv[1].get<double>());
  }
  if (kind == "null_hyperplane") {
    check_keys(j, {"d", "omega"});
    return null_hyperplane(num("d"), unit_from_json(j["omega"]));
  }
  if (kind == "half_space_cone") {
    check_keys(j, {"omega", "alpha"});
    return half_space_cone(unit_from_json(j["omega"]), num("alpha"));
  }
  if (kind == "whole") {
    check_keys(j, {"dim"});
    return whole(j["dim"].get<int>());
  }
  if (kind == "cylinder") {
    check_keys(j, {"base"});
    return cylinder(from_json(j["base"]));
  }
  if (kind == "translate") {
    check_keys(j, {"base", "offset"});
    const Region base = from_json(j["base"]);
    const auto& off = j["offset"];
    if (base.dim() == 4) {
      if (!off.is_array() || off.size() != 4) throw UsageError("spacetime offset needs 4 components");
      return translate(base, SpacetimePoint{off[0].get<double>(),
                                            Vec3(off[1].get<double>(), off[2].get<double>(), off[3].get<double>())});
    }
    return translate(base, vec3_from_json(off));
  }
  if (kind == "reflect") {
    check_keys(j, {"base"});
    return reflect(from_json(j["base"]));
  }
  if (kind == "complement") {
    check_keys(j, {"base"});
    return complement(from_json(j["base"]));
  }
  if (kind == "intersect" || kind == "union") {
    check_keys(j, {"parts"});
    std::vector<Region> parts;
    for (const auto& p : j["parts"]) parts.push_back(from_json(p));
    return kind == "intersect" ? intersect(std::move(parts)) : unite(std::move(parts));
  }
  throw UsageError("unknown region kind '" + kind + "'");
}

}  // namespace rlab
