#include "rlab/sphere_net.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double chord(double phi) { return 2.0 * std::sin(0.5 * std::min(phi, M_PI)); }

// angle(p, w) <= phi for unit p, w; the dot product decides unless it is
// within rounding distance of the threshold.
struct AngleTest {
  double phi, cos_phi;
  explicit AngleTest(double p) : phi(p), cos_phi(std::cos(std::min(p, M_PI))) {}
  bool operator()(const Vec3& p, const Vec3& w) const {
    const double d = p.dot(w);
    if (d > cos_phi + 1e-9) return true;
    if (d < cos_phi - 1e-9) return false;
    return angle(p, w) <= phi;
  }
};

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= M_PI)) throw DomainError("gamma must lie in (0, pi]");
}

}  // namespace

SphereNet::SphereNet(double gamma, std::uint64_t seed, std::vector<Vec3> directions)
    : gamma_(gamma), seed_(seed), dirs_(std::move(directions)) {
  check_gamma(gamma);
  cell_ = std::max(chord(gamma), 1e-6);
  ncell_ = static_cast<int>(std::floor(2.0 / cell_)) + 1;
  for (int i = 0; i < static_cast<int>(dirs_.size()); ++i) index_point(i);
}

int SphereNet::cell_coord(double x) const {
  return std::clamp(static_cast<int>(std::floor((x + 1.0) / cell_)), 0, ncell_ - 1);
}

std::uint64_t SphereNet::cell_key(int ix, int iy, int iz) const {
  return (static_cast<std::uint64_t>(ix) << 42) | (static_cast<std::uint64_t>(iy) << 21) |
         static_cast<std::uint64_t>(iz);
}

void SphereNet::index_point(int i) {
  const Vec3& p = dirs_[i];
  grid_[cell_key(cell_coord(p.x()), cell_coord(p.y()), cell_coord(p.z()))].push_back(i);
}

std::vector<int> SphereNet::within(const Vec3& omega, double phi) const {
  const Vec3 w = unit(omega);
  std::vector<int> out;
  if (phi < 0.0) return out;
  const AngleTest inside(phi);
  const double c = chord(phi) + 1e-12;
  const int span = static_cast<int>(std::ceil(c / cell_)) * 2 + 1;
  const double cells = static_cast<double>(span) * span * span;
  if (cells > static_cast<double>(dirs_.size()) / 4.0) {
    for (int i = 0; i < static_cast<int>(dirs_.size()); ++i) {
      if (inside(dirs_[i], w)) out.push_back(i);
    }
    return out;
  }
  const int x0 = cell_coord(w.x() - c), x1 = cell_coord(w.x() + c);
  const int y0 = cell_coord(w.y() - c), y1 = cell_coord(w.y() + c);
  const int z0 = cell_coord(w.z() - c), z1 = cell_coord(w.z() + c);
  for (int ix = x0; ix <= x1; ++ix) {
    for (int iy = y0; iy <= y1; ++iy) {
      for (int iz = z0; iz <= z1; ++iz) {
        const auto it = grid_.find(cell_key(ix, iy, iz));
        if (it == grid_.end()) continue;
        for (int i : it->second) {
          if (inside(dirs_[i], w)) out.push_back(i);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double SphereNet::min_angle_within(const Vec3& omega, double phi) const {
  double best = kInf;
  for (int i : within(omega, phi)) best = std::min(best, angle(dirs_[i], omega));
  return best;
}

nlohmann::json SphereNet::to_json() const {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& v : dirs_) d.push_back({v.x(), v.y(), v.z()});
  return {{"gamma", gamma_}, {"seed", seed_}, {"builder_version", kNetBuilderVersion}, {"directions", d}};
}

SphereNet SphereNet::from_json(const nlohmann::json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "gamma" && k != "seed" && k != "builder_version" && k != "directions") {
      throw UsageError("unknown net key '" + k + "'");
    }
  }
  std::vector<Vec3> dirs;
  for (const auto& v : j.at("directions")) dirs.push_back(vec3_from_json(v));
  return SphereNet(j.at("gamma").get<double>(), j.at("seed").get<std::uint64_t>(), std::move(dirs));
}

class NetBuilder {
 public:
  NetBuilder(double gamma, std::uint64_t seed) : net_(gamma, seed, {}), rng_(substream_seed(seed, 0x6e6574)) {
    std::normal_distribution<double> g;
    Eigen::Quaterniond q(g(rng_), g(rng_), g(rng_), g(rng_));
    rot_ = q.normalized().toRotationMatrix();
  }

  bool try_insert(const Vec3& p) {
    if (net_.min_angle_within(p, net_.gamma_) < net_.gamma_) return false;
    net_.dirs_.push_back(p);
    net_.index_point(static_cast<int>(net_.dirs_.size()) - 1);
    return true;
  }

  void fibonacci() {
    const double g = net_.gamma_;
    const long m = std::max<long>(16, std::lround(16.0 * M_PI / (g * g)));
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (long i = 0; i < m; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(m);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double ph = golden * static_cast<double>(i);
      try_insert((rot_ * Vec3(r * std::cos(ph), r * std::sin(ph), z)).normalized());
    }
  }

  void random_refill(long patience) {
    std::normal_distribution<double> g;
    long misses = 0;
    while (misses < patience) {
      Vec3 v(g(rng_), g(rng_), g(rng_));
      if (v.norm() < 1e-12) continue;
      misses = try_insert(v.normalized()) ? 0 : misses + 1;
    }
  }

  // Recursive cube-map sweep: every cell is either certified covered or
  // refined until it is tiny, at which point its centre is inserted if free.
  void gap_fill() {
    const double g = net_.gamma_;
    const int n = std::max(1, static_cast<int>(std::ceil((M_PI / 2.0) / (0.5 * g))));
    for (int face = 0; face < 6; ++face) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double u0 = -1.0 + 2.0 * a / n, u1 = -1.0 + 2.0 * (a + 1) / n;
          const double v0 = -1.0 + 2.0 * b / n, v1 = -1.0 + 2.0 * (b + 1) / n;
          refine(face, u0, u1, v0, v1);
        }
      }
    }
  }

  SphereNet take() { return std::move(net_); }

 private:
  static Vec3 face_point(int face, double u, double v) {
    const double s = (face % 2 == 0) ? 1.0 : -1.0;
    Vec3 p;
    switch (face / 2) {
      case 0: p = Vec3(s, u, v); break;
      case 1: p = Vec3(u, s, v); break;
      default: p = Vec3(u, v, s); break;
    }
    return p.normalized();
  }

  void refine(int face, double u0, double u1, double v0, double v1) {
    const double g = net_.gamma_;
    const Vec3 c = face_point(face, 0.5 * (u0 + u1), 0.5 * (v0 + v1));
    double rho = 0.0;
    for (double u : {u0, u1}) {
      for (double v : {v0, v1}) rho = std::max(rho, angle(c, face_point(face, u, v)));
    }
    const double d = net_.min_angle_within(c, g);
    if (d + rho <= g) return;
    if (rho < 1e-3 * g) {
      if (d >= g) try_insert(c);
      return;
    }
    const double um = 0.5 * (u0 + u1), vm = 0.5 * (v0 + v1);
    refine(face, u0, um, v0, vm);
    refine(face, um, u1, v0, vm);
    refine(face, u0, um, vm, v1);
    refine(face, um, u1, vm, v1);
  }

  SphereNet net_;
  std::mt19937_64 rng_;
  Eigen::Matrix3d rot_;
};

double net_size_estimate(double gamma) { return 4.0 * M_PI / (0.7 * gamma * gamma) + 2.0; }

SphereNet build_net(double gamma, std::uint64_t seed) {
  check_gamma(gamma);
  NetBuilder b(gamma, seed);
  if (gamma == M_PI) {
    std::mt19937_64 rng(substream_seed(seed, 0x6e6574));
    std::normal_distribution<double> g;
    Vec3 p(g(rng), g(rng), g(rng));
    p.normalize();
    b.try_insert(p);
    b.try_insert(-p);
    return b.take();
  }
  b.fibonacci();
  b.random_refill(100000);
  b.gap_fill();
  return b.take();
}

NetLibrary::NetLibrary(std::uint64_t seed, std::optional<std::string> cache_dir, std::size_t max_directions)
    : seed_(seed), cache_dir_(std::move(cache_dir)), max_directions_(max_directions) {}

const SphereNet& NetLibrary::get(double gamma) {
  check_gamma(gamma);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = nets_.find(gamma);
  if (it != nets_.end()) return *it->second;
  if (net_size_estimate(gamma) > static_cast<double>(max_directions_)) {
    throw ResourceError("net for gamma " + std::to_string(gamma) + " would need about " +
                        std::to_string(static_cast<long>(net_size_estimate(gamma))) + " directions");
  }
  std::string path;
  if (cache_dir_) {
    char name[128];
    std::snprintf(name, sizeof name, "net_%a_%llu_v%d.json", gamma, static_cast<unsigned long long>(seed_),
                  kNetBuilderVersion);
    path = (std::filesystem::path(*cache_dir_) / name).string();
    std::ifstream in(path);
    if (in) {
      nlohmann::json j;
      in >> j;
      if (j.value("builder_version", -1) == kNetBuilderVersion && j.at("gamma").get<double>() == gamma &&
          j.at("seed").get<std::uint64_t>() == seed_) {
        auto net = std::make_unique<SphereNet>(SphereNet::from_json(j));
        return *nets_.emplace(gamma, std::move(net)).first->second;
      }
    }
  }
  auto net = std::make_unique<SphereNet>(build_net(gamma, seed_));
  if (cache_dir_) {
    std::filesystem::create_directories(*cache_dir_);
    std::ofstream out(path);
    if (out) out << net->to_json().dump();
  }
  return *nets_.emplace(gamma, std::move(net)).first->second;
}

int covering_multiplicity(const SphereNet& net, const Vec3& xi) {
  if (!(xi.norm() > 0.0)) throw DomainError("covering multiplicity of the zero vector");
  return static_cast<int>(net.within(xi, net.gamma()).size());
}

int count_within(const SphereNet& net, const Vec3& omega, int k) {
  if (k < 1) throw DomainError("k must be a positive integer");
  return static_cast<int>(net.within(omega, k * net.gamma()).size());
}

double separated_pair_M(double gamma_star, int m) { return 2.0 * (1.0 + (m + 2.0) / gamma_star); }

std::vector<SectorPair> separated_pair_decomposition(const Vec3& xi1, const Vec3& xi2, double gamma_star, int m,
                                                     NetLibrary& nets) {
  if (!(gamma_star > 0.0 && gamma_star <= 1.0)) throw DomainError("gamma* must lie in (0, 1]");
  if (m < 3) throw DomainError("m must be at least 3");
  const double theta = angle(xi1, xi2);
  if (!(theta > 0.0)) throw DomainError("separated decomposition needs non-collinear inputs");
  const double M = separated_pair_M(gamma_star, m);
  std::vector<SectorPair> out;
  for (int k = 0; k <= 20; ++k) {
    const double g = std::ldexp(gamma_star, -k);
    if (g < std::ldexp(1.0, -20)) break;
    if (g > theta / (m - 2.0)) continue;
    if (g < theta / (M + 2.0)) break;
    const SphereNet& net = nets.get(g);
    const auto w1 = net.within(xi1, g);
    const auto w2 = net.within(xi2, g);
    for (int i : w1) {
      for (int j : w2) {
        const double a = angle(net.directions()[i], net.directions()[j]);
        if (a >= m * g && a <= M * g) out.push_back({g, net.directions()[i], net.directions()[j]});
      }
    }
  }
  return out;
}

std::vector<SectorPair> near_pair_decomposition(const Vec3& xi1, const Vec3& xi2, double gamma, int k,
                                                NetLibrary& nets) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
  if (k < 1) throw DomainError("k must be a positive integer");
  if (angle(xi1, xi2) > k * gamma) throw PreconditionError("angle(xi1, xi2) exceeds k gamma");
  const SphereNet& net = nets.get(gamma);
  std::vector<SectorPair> out;
  for (int i : net.within(xi1, gamma)) {
    for (int j : net.within(xi2, gamma)) {
      const Vec3& a = net.directions()[i];
      const Vec3& b = net.directions()[j];
      if (angle(a, b) <= (k + 2) * gamma) out.push_back({gamma, a, b});
    }
  }
  return out;
}

OverlapCount hyperplane_overlap_count(const SphereNet& net, const Vec3& omega0, double gamma_prime, double d,
                                      double N, const SpacetimePoint& X) {
  const double g = net.gamma();
  if (!(g < gamma_prime && gamma_prime < 1.0)) throw PreconditionError("need 0 < gamma < gamma' < 1");
  if (!(d > 0.0 && N > 0.0)) throw PreconditionError("d and N must be positive");
  const double n = X.xi.norm();
  if (!(n >= 0.5 * N && n <= 2.0 * N)) throw PreconditionError("|xi| must lie in [N/2, 2N]");
  OverlapCount out;
  for (int i : net.within(omega0, gamma_prime)) {
    if (std::abs(-X.tau + X.xi.dot(net.directions()[i])) <= d) ++out.count;
  }
  out.bound = gamma_prime / g + d / (N * g * g);
  return out;
}

SectorHyperplaneCheck sector_in_hyperplane_check(Sign sign, double N, double L, double gamma, const Vec3& omega,
                                                 const SpacetimePoint& X, double c) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("gamma must lie in (0, 1)");
  const Vec3 w = unit(omega);
  SectorHyperplaneCheck out;
  out.in_sector = Region::sector_cone(sign, N, L, gamma, w).contains(X);
  out.weight = std::abs(-X.tau + X.xi.dot(w));
  out.scale = std::max(L, N * gamma * gamma);
  out.holds = !out.in_sector || out.weight <= c * out.scale;
  return out;
}

}  // namespace rlab
