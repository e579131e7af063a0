#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rlab/geometry.hpp"

namespace rlab {

using Complex = std::complex<double>;

struct LatticePoint {
  int t = 0, x = 0, y = 0, z = 0;
  bool operator==(const LatticePoint&) const = default;
};

// Fourier-side field: lattice points k with physical frequency
// (h_tau k_t, h_xi k_x, h_xi k_y, h_xi k_z) and nonzero coefficients. Spatial
// fields in R^3 use t = 0 and h_tau = 1.
class SparseField {
 public:
  struct Group {
    int x, y, z;
    int begin, end;  // entry range, sorted by t
  };

  SparseField() = default;
  SparseField(double h_tau, double h_xi);

  // Entries are sorted; zero coefficients are dropped; duplicates rejected.
  static SparseField from_entries(double h_tau, double h_xi, std::vector<std::pair<LatticePoint, Complex>> entries);

  double h_tau() const { return h_tau_; }
  double h_xi() const { return h_xi_; }
  double cell_volume() const { return h_tau_ * h_xi_ * h_xi_ * h_xi_; }
  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }

  const std::vector<LatticePoint>& points() const { return pts_; }
  const std::vector<Complex>& coeffs() const { return coef_; }
  const std::vector<Group>& groups() const { return groups_; }

  Vec3 xi_of(const Group& g) const { return h_xi_ * Vec3(g.x, g.y, g.z); }
  SpacetimePoint point(std::size_t i) const;
  std::optional<Complex> at(const LatticePoint& k) const;
  // Index of the group at spatial key, or -1.
  int find_group(int x, int y, int z) const;

  SparseField scaled(Complex lambda) const;
  // Same support with new coefficients (size must match; zeros are dropped).
  SparseField with_coeffs(std::vector<Complex> c) const;

 private:
  void build_groups();

  double h_tau_ = 1.0;
  double h_xi_ = 1.0;
  std::vector<LatticePoint> pts_;
  std::vector<Complex> coef_;
  std::vector<Group> groups_;
  std::vector<std::pair<std::uint64_t, int>> group_index_;  // sorted by key
};

std::uint64_t spatial_key(int x, int y, int z);

struct FillMode {
  enum Kind { Ones, Gaussian } kind = Ones;
  std::uint64_t seed = 0;
  static FillMode ones() { return {Ones, 0}; }
  static FillMode gaussian(std::uint64_t s) { return {Gaussian, s}; }
};

// Lattice points of the region (4D, or 3D giving a spatial field) with unit
// or complex standard normal coefficients in enumeration order.
SparseField populate_region(const Region& region, double h_tau, double h_xi, FillMode mode,
                            std::size_t cap = 2000000);
inline SparseField populate_region(const Region& region, double h, FillMode mode, std::size_t cap = 2000000) {
  return populate_region(region, h, h, mode, cap);
}

// Fresh gaussian coefficients on the support of u.
SparseField regaussian(const SparseField& u, std::uint64_t seed);

// Gaussian coefficients that depend only on (k_t, |k_xi|^2), so the field is
// spherically symmetric in xi on the lattice.
SparseField radial_gaussian(const SparseField& u, std::uint64_t seed);

double l2_norm(const SparseField& u);

// Entries whose physical frequency lies in region; spatial regions act as R x A.
SparseField project(const SparseField& u, const Region& region);

struct SymbolKind {
  enum Kind { One, Theta12, SqrtTheta12, Theta12Small } kind = One;
  double threshold = 0.125;

  static SymbolKind one() { return {One, 0.125}; }
  static SymbolKind theta12() { return {Theta12, 0.125}; }
  static SymbolKind sqrt_theta12() { return {SqrtTheta12, 0.125}; }
  static SymbolKind theta12_small(double t = 0.125);

  double weight(const Vec3& xi1, const Vec3& xi2, Sign s1, Sign s2) const;
};

struct ProductOptions {
  std::optional<Region> output_region;
  double pair_cap = 1e10;
  int chunks = 64;
};

// Exact lattice convolution h^4 sum w(k1, k2) u1(k1) u2(k2) over k1 + k2 = k0,
// skipping pairs with a zero spatial frequency.
SparseField bilinear_product(const SparseField& u1, const SparseField& u2, SymbolKind symbol,
                             std::pair<Sign, Sign> signs, const ProductOptions& opt = {});

// h^8 sum conj(u0(k1 + k2)) u1(k1) u2(k2) without materialising the product.
Complex trilinear_form(const SparseField& u0, const SparseField& u1, const SparseField& u2);

// <u, v> = h^4 sum u conj(v)
Complex inner_product(const SparseField& u, const SparseField& v);

struct TubeSup {
  double value = 0.0;       // (N/r) sup_w ||P_{dB_N cap T_r(w)} u||
  double plain_norm = 0.0;  // ||u||
  Vec3 best_omega = Vec3::UnitZ();
};

class SphereNet;

TubeSup tube_sup_norm(const SparseField& u, double N, double r, const SphereNet& net);

// sup over translates I1 of |I| = slab_length of ||P_{xi.omega in I1} u||.
double slab_sup_norm(const SparseField& u, const Vec3& omega, double slab_length);

// Binary layout (little endian): "RLSF", u32 version, f64 h_tau, f64 h_xi,
// u64 run count, then per run i32 kx, ky, kz, kt0, u32 len, len x (f64 re, f64 im).
void write_binary(const SparseField& u, std::ostream& out);
SparseField read_binary(std::istream& in);

// {"h_tau": .., "h_xi": .., "entries": [[t, x, y, z, re, im], ...]}
nlohmann::json to_json(const SparseField& u);
SparseField field_from_json(const nlohmann::json& j);

}  // namespace rlab
