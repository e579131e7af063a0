#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlab/geometry.hpp"

namespace rlab {

inline constexpr int kNetBuilderVersion = 1;

// Maximal gamma-separated subset of S^2 with a uniform-grid neighbor index.
class SphereNet {
 public:
  SphereNet() = default;
  SphereNet(double gamma, std::uint64_t seed, std::vector<Vec3> directions);

  double gamma() const { return gamma_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Vec3>& directions() const { return dirs_; }
  std::size_t size() const { return dirs_.size(); }

  // Indices i with angle(directions[i], omega) <= phi, in increasing order.
  std::vector<int> within(const Vec3& omega, double phi) const;
  // Smallest angle to a net point among those within phi, or +inf.
  double min_angle_within(const Vec3& omega, double phi) const;

  nlohmann::json to_json() const;
  static SphereNet from_json(const nlohmann::json& j);

 private:
  friend class NetBuilder;
  void index_point(int i);
  std::uint64_t cell_key(int ix, int iy, int iz) const;
  int cell_coord(double x) const;

  double gamma_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<Vec3> dirs_;
  double cell_ = 2.0;
  int ncell_ = 1;
  std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

SphereNet build_net(double gamma, std::uint64_t seed);

// Rough upper estimate of the cardinality of a maximal gamma-net.
double net_size_estimate(double gamma);

// Thread-safe per-(gamma, seed) net store with an optional JSON disk cache.
class NetLibrary {
 public:
  explicit NetLibrary(std::uint64_t seed = 0, std::optional<std::string> cache_dir = std::nullopt,
                      std::size_t max_directions = 4000000);
  const SphereNet& get(double gamma);
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::optional<std::string> cache_dir_;
  std::size_t max_directions_;
  std::mutex mu_;
  std::map<double, std::unique_ptr<SphereNet>> nets_;
};

int covering_multiplicity(const SphereNet& net, const Vec3& xi);
int count_within(const SphereNet& net, const Vec3& omega, int k);

struct SectorPair {
  double gamma = 0.0;
  Vec3 omega1 = Vec3::Zero();
  Vec3 omega2 = Vec3::Zero();
};

double separated_pair_M(double gamma_star, int m);

// All (gamma, w1, w2) with gamma = 2^-k gamma_star >= 2^-20, w_j in Omega(gamma),
// xi_j in Gamma_gamma(w_j) and m gamma <= angle(w1, w2) <= M gamma.
std::vector<SectorPair> separated_pair_decomposition(const Vec3& xi1, const Vec3& xi2, double gamma_star, int m,
                                                     NetLibrary& nets);

// All (w1, w2) in Omega(gamma)^2 with xi_j in Gamma_gamma(w_j).
std::vector<SectorPair> near_pair_decomposition(const Vec3& xi1, const Vec3& xi2, double gamma, int k,
                                                NetLibrary& nets);

struct OverlapCount {
  int count = 0;
  double bound = 0.0;
};

OverlapCount hyperplane_overlap_count(const SphereNet& net, const Vec3& omega0, double gamma_prime, double d,
                                      double N, const SpacetimePoint& X);

struct SectorHyperplaneCheck {
  bool in_sector = false;
  double weight = 0.0;     // |-tau + xi.omega|
  double scale = 0.0;      // max(L, N gamma^2)
  bool holds = true;       // in_sector implies weight <= c * scale
};

SectorHyperplaneCheck sector_in_hyperplane_check(Sign sign, double N, double L, double gamma, const Vec3& omega,
                                                 const SpacetimePoint& X, double c);

}  // namespace rlab
