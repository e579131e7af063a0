#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace rlab {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;  // (tau, xi1, xi2, xi3)

struct SpacetimePoint {
  double tau = 0.0;
  Vec3 xi = Vec3::Zero();

  Vec4 as_vec4() const { return Vec4(tau, xi.x(), xi.y(), xi.z()); }
  static SpacetimePoint from(const Vec4& v) { return {v[0], v.tail<3>()}; }
};

enum class Sign : int { Plus = 1, Minus = -1 };

inline double value(Sign s) { return static_cast<double>(static_cast<int>(s)); }
inline Sign flip(Sign s) { return s == Sign::Plus ? Sign::Minus : Sign::Plus; }
inline char symbol(Sign s) { return s == Sign::Plus ? '+' : '-'; }
Sign sign_from_int(int v);

// Angle between nonzero vectors in [0, pi]; atan2 form keeps full precision
// near 0 and pi.
double angle(const Vec3& a, const Vec3& b);

// -tau +/- |xi|
double hyperbolic_weight(const SpacetimePoint& X, Sign sign);

enum class Identity { Sum, Difference };

struct IdentityDefect {
  double lhs = 0.0;
  double comparator = 0.0;
  double ratio() const { return comparator > 0.0 ? lhs / comparator : 0.0; }
};

// Sum: |a|+|b|-|a+b| against min(|a|,|b|) theta^2.
// Difference: |a-b|-||a|-|b|| against |a||b| theta^2 / |a-b|.
// The lhs is evaluated through the equivalent 1-cos form so that small
// angles do not cancel catastrophically.
IdentityDefect angle_identity_defect(const Vec3& a, const Vec3& b, Identity which);

// Disk D of angular radius theta around (cos beta, 0, sin beta). Part one
// uses the rectangle R built from the supplied x; part two (beta < theta)
// uses R' with x fixed by the equator crossing.
enum class DiskPart { One, Two };

struct DiskProbe {
  bool in_rectangle_set = false;
  bool in_disk = false;
};

DiskProbe disk_contains_projected_rectangle(double beta, double theta, const Vec3& probe,
                                            DiskPart part = DiskPart::One,
                                            std::optional<double> x = std::nullopt);

class Region;
struct RegionNode;
namespace detail {
struct RegionFactory;
}

struct Box {
  int dim = 3;
  Vec4 lo = Vec4::Constant(-std::numeric_limits<double>::infinity());
  Vec4 hi = Vec4::Constant(std::numeric_limits<double>::infinity());

  bool bounded() const;
  bool empty() const;
  double volume() const;
};

namespace shape {

struct Ball { Vec3 center; double radius; };
struct Annulus { double N; };
struct ThickSphere { double r, delta; };
struct ThickCone { Sign sign; double N, L; };
struct SectorCone { Sign sign; double N, L, gamma; Vec3 omega; };
struct Tube { double r; Vec3 omega; };
struct Slab { Vec3 omega; double lo, hi; };
struct NullHyperplane { double d; Vec3 omega; };
struct HalfSpaceCone { Vec3 omega; double alpha; };
struct Whole { int dim; };

}  // namespace shape

// Immutable geometric set in R^3 or R^{1+3}. Spatial shapes are three
// dimensional; Cylinder lifts one to R x A.
class Region {
 public:
  Region() = default;

  static Region ball(const Vec3& center, double radius);
  static Region annulus(double N);
  static Region thick_sphere(double r, double delta);
  static Region thick_cone(Sign sign, double N, double L);
  static Region sector_cone(Sign sign, double N, double L, double gamma, const Vec3& omega);
  static Region tube(double r, const Vec3& omega);
  static Region slab(const Vec3& omega, double lo, double hi);
  static Region null_hyperplane(double d, const Vec3& omega);
  static Region half_space_cone(const Vec3& omega, double alpha);
  static Region whole(int dim);
  static Region cylinder(const Region& base);
  static Region translate(const Region& base, const Vec3& offset);
  static Region translate(const Region& base, const SpacetimePoint& offset);
  static Region reflect(const Region& base);
  static Region intersect(std::vector<Region> parts);
  static Region unite(std::vector<Region> parts);
  static Region complement(const Region& base);

  int dim() const;
  bool valid() const { return node_ != nullptr; }
  const RegionNode& node() const { return *node_; }

  bool contains(const Vec3& p) const;
  bool contains(const SpacetimePoint& p) const;

  // Unchecked membership on (tau, xi); tau is ignored for spatial regions.
  bool contains_raw(const Vec4& p) const;

  // False only when no tau puts (tau, xi) inside; exact for spatial regions.
  bool shadow_contains(const Vec3& xi) const;

  Box bounding_box() const;

  nlohmann::json to_json() const;
  static Region from_json(const nlohmann::json& j);

 private:
  friend struct detail::RegionFactory;
  explicit Region(std::shared_ptr<const RegionNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const RegionNode> node_;
};

namespace shape {

struct Cylinder { Region base; };
struct Translate { Region base; Vec4 offset; };
struct Reflect { Region base; };
struct Intersect { std::vector<Region> parts; };
struct Union { std::vector<Region> parts; };
struct Complement { Region base; };

}  // namespace shape

using RegionVariant =
    std::variant<shape::Ball, shape::Annulus, shape::ThickSphere, shape::ThickCone,
                 shape::SectorCone, shape::Tube, shape::Slab, shape::NullHyperplane,
                 shape::HalfSpaceCone, shape::Whole, shape::Cylinder, shape::Translate,
                 shape::Reflect, shape::Intersect, shape::Union, shape::Complement>;

struct RegionNode {
  RegionVariant shape;
  int dim;
};

// Unit vector from JSON; renormalised within 1e-6 of unit length, else rejected.
Vec3 unit_from_json(const nlohmann::json& j);
Vec3 unit(const Vec3& v);

nlohmann::json to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j);

}  // namespace rlab
