#include "rlab/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <unordered_map>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"
#include "rlab/sphere_net.hpp"

namespace rlab {

namespace {

constexpr std::uint32_t kBinaryVersion = 1;
constexpr int kKeyBits = 21;
constexpr int kKeyBias = 1 << (kKeyBits - 1);

bool less_point(const LatticePoint& a, const LatticePoint& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  if (a.z != b.z) return a.z < b.z;
  return a.t < b.t;
}

void check_spacing(double h_tau, double h_xi) {
  if (!(h_tau > 0.0) || !(h_xi > 0.0) || !std::isfinite(h_tau) || !std::isfinite(h_xi))
    throw DomainError("lattice spacing must be positive and finite");
}

void check_same_spacing(const SparseField& a, const SparseField& b) {
  if (a.h_tau() != b.h_tau() || a.h_xi() != b.h_xi())
    throw PreconditionError("fields have different lattice spacing");
}

Vec4 physical(const LatticePoint& k, double h_tau, double h_xi) {
  return Vec4(h_tau * k.t, h_xi * k.x, h_xi * k.y, h_xi * k.z);
}

}  // namespace

std::uint64_t spatial_key(int x, int y, int z) {
  auto part = [](int v) -> std::uint64_t {
    const long long b = static_cast<long long>(v) + kKeyBias;
    if (b < 0 || b >= (1LL << kKeyBits)) throw ResourceError("lattice index out of range: " + std::to_string(v));
    return static_cast<std::uint64_t>(b);
  };
  return (part(x) << (2 * kKeyBits)) | (part(y) << kKeyBits) | part(z);
}

SparseField::SparseField(double h_tau, double h_xi) : h_tau_(h_tau), h_xi_(h_xi) { check_spacing(h_tau, h_xi); }

SparseField SparseField::from_entries(double h_tau, double h_xi, std::vector<std::pair<LatticePoint, Complex>> entries) {
  SparseField f(h_tau, h_xi);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return less_point(a.first, b.first); });
  f.pts_.reserve(entries.size());
  f.coef_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].first == entries[i - 1].first) throw DomainError("duplicate lattice point in field");
    const Complex c = entries[i].second;
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw DomainError("non-finite coefficient");
    if (c == Complex(0.0, 0.0)) continue;
    f.pts_.push_back(entries[i].first);
    f.coef_.push_back(c);
  }
  f.build_groups();
  return f;
}

void SparseField::build_groups() {
  groups_.clear();
  group_index_.clear();
  const int n = static_cast<int>(pts_.size());
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && pts_[j].x == pts_[i].x && pts_[j].y == pts_[i].y && pts_[j].z == pts_[i].z) ++j;
    groups_.push_back({pts_[i].x, pts_[i].y, pts_[i].z, i, j});
    i = j;
  }
  group_index_.reserve(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g)
    group_index_.emplace_back(spatial_key(groups_[g].x, groups_[g].y, groups_[g].z), static_cast<int>(g));
  std::sort(group_index_.begin(), group_index_.end());
}

SpacetimePoint SparseField::point(std::size_t i) const {
  return SpacetimePoint::from(physical(pts_.at(i), h_tau_, h_xi_));
}

int SparseField::find_group(int x, int y, int z) const {
  const long long lim = kKeyBias;
  if (x < -lim || x >= lim || y < -lim || y >= lim || z < -lim || z >= lim) return -1;
  const std::uint64_t key = spatial_key(x, y, z);
  auto it = std::lower_bound(group_index_.begin(), group_index_.end(), std::make_pair(key, -1));
  if (it == group_index_.end() || it->first != key) return -1;
  return it->second;
}

std::optional<Complex> SparseField::at(const LatticePoint& k) const {
  const int g = find_group(k.x, k.y, k.z);
  if (g < 0) return std::nullopt;
  const Group& gr = groups_[g];
  auto first = pts_.begin() + gr.begin;
  auto last = pts_.begin() + gr.end;
  auto it = std::lower_bound(first, last, k.t, [](const LatticePoint& p, int t) { return p.t < t; });
  if (it == last || it->t != k.t) return std::nullopt;
  return coef_[it - pts_.begin()];
}

SparseField SparseField::scaled(Complex lambda) const {
  std::vector<Complex> c(coef_);
  for (auto& v : c) v *= lambda;
  return with_coeffs(std::move(c));
}

SparseField SparseField::with_coeffs(std::vector<Complex> c) const {
  if (c.size() != coef_.size()) throw PreconditionError("coefficient count does not match support");
  SparseField f(h_tau_, h_xi_);
  bool any_zero = false;
  for (const auto& v : c) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError("non-finite coefficient");
    any_zero = any_zero || v == Complex(0.0, 0.0);
  }
  if (!any_zero) {
    f.pts_ = pts_;
    f.coef_ = std::move(c);
    f.groups_ = groups_;
    f.group_index_ = group_index_;
    return f;
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == Complex(0.0, 0.0)) continue;
    f.pts_.push_back(pts_[i]);
    f.coef_.push_back(c[i]);
  }
  f.build_groups();
  return f;
}

SparseField populate_region(const Region& region, double h_tau, double h_xi, FillMode mode, std::size_t cap) {
  check_spacing(h_tau, h_xi);
  const bool spatial = region.dim() == 3;
  if (spatial) h_tau = 1.0;
  const Box box = region.bounding_box();
  for (int i = 0; i < 4; ++i)
    if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]))
      throw DomainError("populate_region needs a bounded region");
  auto range = [](double lo, double hi, double h) {
    return std::make_pair(static_cast<long long>(std::ceil(lo / h)), static_cast<long long>(std::floor(hi / h)));
  };
  const auto rt = spatial ? std::make_pair(0LL, 0LL) : range(box.lo[0], box.hi[0], h_tau);
  const auto rx = range(box.lo[1], box.hi[1], h_xi);
  const auto ry = range(box.lo[2], box.hi[2], h_xi);
  const auto rz = range(box.lo[3], box.hi[3], h_xi);
  for (const auto& r : {rt, rx, ry, rz})
    if (r.first < -kKeyBias || r.second >= kKeyBias)
      throw ResourceError("lattice index range too large for region");

  std::mt19937_64 rng(mode.seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<std::pair<LatticePoint, Complex>> entries;
  for (long long x = rx.first; x <= rx.second; ++x)
    for (long long y = ry.first; y <= ry.second; ++y)
      for (long long z = rz.first; z <= rz.second; ++z) {
        const Vec3 xi = h_xi * Vec3(double(x), double(y), double(z));
        if (!region.shadow_contains(xi)) continue;
        for (long long t = rt.first; t <= rt.second; ++t) {
          if (!region.contains_raw(Vec4(h_tau * double(t), xi[0], xi[1], xi[2]))) continue;
          if (entries.size() >= cap)
            throw ResourceError("populate_region exceeds the lattice point cap of " + std::to_string(cap) +
                                " (count so far " + std::to_string(entries.size() + 1) + ")");
          Complex c(1.0, 0.0);
          if (mode.kind == FillMode::Gaussian) {
            const double re = normal(rng);
            const double im = normal(rng);
            c = Complex(re, im);
          }
          entries.push_back({LatticePoint{int(t), int(x), int(y), int(z)}, c});
        }
      }
  return SparseField::from_entries(h_tau, h_xi, std::move(entries));
}

SparseField regaussian(const SparseField& u, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<Complex> c(u.size());
  for (auto& v : c) {
    const double re = normal(rng);
    const double im = normal(rng);
    v = Complex(re, im);
  }
  return u.with_coeffs(std::move(c));
}

SparseField radial_gaussian(const SparseField& u, std::uint64_t seed) {
  std::vector<Complex> c(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& k = u.points()[i];
    const std::uint64_t r2 = std::uint64_t(std::int64_t(k.x) * k.x + std::int64_t(k.y) * k.y + std::int64_t(k.z) * k.z);
    const std::uint64_t shell = (r2 << 24) ^ std::uint64_t(std::uint32_t(k.t));
    std::mt19937_64 rng(substream_seed(seed, shell));
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(rng);
    const double im = normal(rng);
    c[i] = Complex(re, im);
  }
  return u.with_coeffs(std::move(c));
}

double l2_norm(const SparseField& u) {
  double s = 0.0;
  for (const auto& c : u.coeffs()) s += std::norm(c);
  return std::sqrt(u.cell_volume() * s);
}

SparseField project(const SparseField& u, const Region& region) {
  std::vector<std::pair<LatticePoint, Complex>> kept;
  for (const auto& g : u.groups()) {
    const Vec3 xi = u.xi_of(g);
    if (!region.shadow_contains(xi)) continue;
    for (int i = g.begin; i < g.end; ++i) {
      const LatticePoint& k = u.points()[i];
      if (region.contains_raw(physical(k, u.h_tau(), u.h_xi()))) kept.push_back({k, u.coeffs()[i]});
    }
  }
  return SparseField::from_entries(u.h_tau(), u.h_xi(), std::move(kept));
}

SymbolKind SymbolKind::theta12_small(double t) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("Theta12Small threshold must lie in (0, 1)");
  return {Theta12Small, t};
}

double SymbolKind::weight(const Vec3& xi1, const Vec3& xi2, Sign s1, Sign s2) const {
  if (kind == One) return 1.0;
  const double th = angle(value(s1) * xi1, value(s2) * xi2);
  switch (kind) {
    case Theta12:
      return th;
    case SqrtTheta12:
      return std::sqrt(th);
    case Theta12Small:
      return th <= threshold ? th : 0.0;
    default:
      return 1.0;
  }
}

namespace {

struct Bin {
  int x, y, z;
  int base = 0;
  std::vector<Complex> v;

  void cover(int lo, int hi) {
    if (v.empty()) {
      base = lo;
      v.assign(static_cast<std::size_t>(hi - lo + 1), Complex(0.0, 0.0));
      return;
    }
    const int top = base + static_cast<int>(v.size()) - 1;
    if (lo < base) {
      v.insert(v.begin(), static_cast<std::size_t>(base - lo), Complex(0.0, 0.0));
      base = lo;
    }
    if (hi > top) v.resize(v.size() + static_cast<std::size_t>(hi - top), Complex(0.0, 0.0));
  }
};

using BinMap = std::unordered_map<std::uint64_t, Bin>;

struct LatticeBox {
  bool bounded = false;
  long long lo[3] = {0, 0, 0};
  long long hi[3] = {0, 0, 0};

  double count() const {
    double c = 1.0;
    for (int i = 0; i < 3; ++i) c *= std::max(0.0, double(hi[i] - lo[i] + 1));
    return c;
  }
  bool inside(long long x, long long y, long long z) const {
    return !bounded || (x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1] && z >= lo[2] && z <= hi[2]);
  }
};

LatticeBox output_lattice_box(const std::optional<Region>& out, double h_xi) {
  LatticeBox b;
  if (!out) return b;
  const Box box = out->bounding_box();
  for (int i = 1; i < 4; ++i)
    if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i])) return b;
  b.bounded = true;
  for (int i = 0; i < 3; ++i) {
    b.lo[i] = static_cast<long long>(std::ceil(box.lo[i + 1] / h_xi));
    b.hi[i] = static_cast<long long>(std::floor(box.hi[i + 1] / h_xi));
  }
  return b;
}

// Candidate u2 groups for one u1 group: either every group or a lookup over
// the output box shifted by -k1, whichever is smaller.
template <class F>
void for_each_partner(const SparseField& partner, const LatticeBox& box, int x1, int y1, int z1, F&& f) {
  const auto& groups = partner.groups();
  if (box.bounded && box.count() < double(groups.size())) {
    for (long long x = box.lo[0]; x <= box.hi[0]; ++x)
      for (long long y = box.lo[1]; y <= box.hi[1]; ++y)
        for (long long z = box.lo[2]; z <= box.hi[2]; ++z) {
          const int g = partner.find_group(int(x - x1), int(y - y1), int(z - z1));
          if (g >= 0) f(g);
        }
    return;
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& gr = groups[g];
    if (box.inside((long long)x1 + gr.x, (long long)y1 + gr.y, (long long)z1 + gr.z)) f(static_cast<int>(g));
  }
}

bool is_origin(const SparseField::Group& g) { return g.x == 0 && g.y == 0 && g.z == 0; }

}  // namespace

SparseField bilinear_product(const SparseField& u1, const SparseField& u2, SymbolKind symbol,
                             std::pair<Sign, Sign> signs, const ProductOptions& opt) {
  check_same_spacing(u1, u2);
  const double h_tau = u1.h_tau();
  const double h_xi = u1.h_xi();
  if (u1.empty() || u2.empty()) return SparseField(h_tau, h_xi);
  const double pairs = double(u1.size()) * double(u2.size());
  if (pairs > opt.pair_cap)
    throw ResourceError("bilinear_product pair count " + std::to_string(pairs) + " exceeds cap " +
                        std::to_string(opt.pair_cap));
  const LatticeBox box = output_lattice_box(opt.output_region, h_xi);
  long long t_lo = std::numeric_limits<long long>::min(), t_hi = std::numeric_limits<long long>::max();
  if (opt.output_region && opt.output_region->dim() == 4) {
    const Box ob = opt.output_region->bounding_box();
    if (std::isfinite(ob.lo[0])) t_lo = static_cast<long long>(std::ceil(ob.lo[0] / h_tau));
    if (std::isfinite(ob.hi[0])) t_hi = static_cast<long long>(std::floor(ob.hi[0] / h_tau));
  }
  const auto& g1s = u1.groups();
  const auto& g2s = u2.groups();
  const auto& c1 = u1.coeffs();
  const auto& c2 = u2.coeffs();
  const auto& p1 = u1.points();
  const auto& p2 = u2.points();

  long long t2min = std::numeric_limits<long long>::max(), t2max = std::numeric_limits<long long>::min();
  for (const auto& k : p2) {
    t2min = std::min<long long>(t2min, k.t);
    t2max = std::max<long long>(t2max, k.t);
  }

  const std::size_t chunks = static_cast<std::size_t>(std::max(1, opt.chunks));
  const std::size_t wave = static_cast<std::size_t>(std::max(1, jobs()));
  BinMap total;
  for (std::size_t w0 = 0; w0 < chunks; w0 += wave) {
    const std::size_t wn = std::min(wave, chunks - w0);
    std::vector<BinMap> local(wn);
    parallel_for(wn, [&](std::size_t b) {
      const std::size_t chunk = w0 + b;
      const std::size_t lo = g1s.size() * chunk / chunks;
      const std::size_t hi = g1s.size() * (chunk + 1) / chunks;
      BinMap& bins = local[b];
      for (std::size_t i1 = lo; i1 < hi; ++i1) {
        const auto& a = g1s[i1];
        if (is_origin(a)) continue;
        if (p1[a.begin].t + t2min > t_hi || p1[a.end - 1].t + t2max < t_lo) continue;
        const Vec3 xi1 = u1.xi_of(a);
        for_each_partner(u2, box, a.x, a.y, a.z, [&](int i2) {
          const auto& b2 = g2s[i2];
          if (is_origin(b2)) return;
          const int x0 = a.x + b2.x, y0 = a.y + b2.y, z0 = a.z + b2.z;
          const long long tmin = (long long)p1[a.begin].t + p2[b2.begin].t;
          const long long tmax = (long long)p1[a.end - 1].t + p2[b2.end - 1].t;
          if (tmax < t_lo || tmin > t_hi) return;
          if (opt.output_region && !opt.output_region->shadow_contains(h_xi * Vec3(x0, y0, z0))) return;
          const double w = symbol.weight(xi1, u2.xi_of(b2), signs.first, signs.second);
          if (w == 0.0) return;
          Bin& bin = bins[spatial_key(x0, y0, z0)];
          bin.x = x0;
          bin.y = y0;
          bin.z = z0;
          bin.cover(p1[a.begin].t + p2[b2.begin].t, p1[a.end - 1].t + p2[b2.end - 1].t);
          for (int i = a.begin; i < a.end; ++i) {
            const Complex wa = w * c1[i];
            Complex* row = bin.v.data() + (p1[i].t - bin.base);
            for (int j = b2.begin; j < b2.end; ++j) row[p2[j].t] += wa * c2[j];
          }
        });
      }
    });
    for (auto& m : local) {
      std::vector<std::uint64_t> keys;
      keys.reserve(m.size());
      for (const auto& kv : m) keys.push_back(kv.first);
      std::sort(keys.begin(), keys.end());
      for (auto key : keys) {
        Bin& src = m[key];
        Bin& dst = total[key];
        dst.x = src.x;
        dst.y = src.y;
        dst.z = src.z;
        dst.cover(src.base, src.base + static_cast<int>(src.v.size()) - 1);
        for (std::size_t t = 0; t < src.v.size(); ++t) dst.v[src.base - dst.base + t] += src.v[t];
      }
    }
  }

  const double cell = u1.cell_volume();
  std::vector<std::pair<LatticePoint, Complex>> out;
  for (const auto& kv : total) {
    const Bin& bin = kv.second;
    for (std::size_t t = 0; t < bin.v.size(); ++t) {
      if (bin.v[t] == Complex(0.0, 0.0)) continue;
      const LatticePoint k{bin.base + int(t), bin.x, bin.y, bin.z};
      if (opt.output_region && !opt.output_region->contains_raw(physical(k, h_tau, h_xi))) continue;
      out.push_back({k, cell * bin.v[t]});
    }
  }
  return SparseField::from_entries(h_tau, h_xi, std::move(out));
}

Complex trilinear_form(const SparseField& u0, const SparseField& u1, const SparseField& u2) {
  check_same_spacing(u0, u1);
  check_same_spacing(u1, u2);
  if (u0.empty() || u1.empty() || u2.empty()) return {0.0, 0.0};
  const auto& g0s = u0.groups();
  const auto& g1s = u1.groups();
  const auto& g2s = u2.groups();
  const auto& p0 = u0.points();
  const auto& p1 = u1.points();
  const auto& p2 = u2.points();
  const auto& c0 = u0.coeffs();
  const auto& c1 = u1.coeffs();
  const auto& c2 = u2.coeffs();

  // Dense t rows of conj(u0) per group.
  std::vector<int> base(g0s.size());
  std::vector<std::vector<Complex>> rows(g0s.size());
  for (std::size_t g = 0; g < g0s.size(); ++g) {
    const auto& gr = g0s[g];
    base[g] = p0[gr.begin].t;
    rows[g].assign(static_cast<std::size_t>(p0[gr.end - 1].t - base[g] + 1), Complex(0.0, 0.0));
    for (int i = gr.begin; i < gr.end; ++i) rows[g][p0[i].t - base[g]] = std::conj(c0[i]);
  }

  const std::size_t chunks = 64;
  std::vector<Complex> partial(chunks, Complex(0.0, 0.0));
  const bool via_u0 = g0s.size() < g2s.size();
  parallel_for(chunks, [&](std::size_t chunk) {
    const std::size_t lo = g1s.size() * chunk / chunks;
    const std::size_t hi = g1s.size() * (chunk + 1) / chunks;
    Complex acc(0.0, 0.0);
    for (std::size_t i1 = lo; i1 < hi; ++i1) {
      const auto& a = g1s[i1];
      if (is_origin(a)) continue;
      auto visit = [&](int i2, int i0) {
        const auto& b = g2s[i2];
        if (is_origin(b)) return;
        const auto& row = rows[i0];
        const int rb = base[i0];
        const int rt = rb + static_cast<int>(row.size()) - 1;
        for (int i = a.begin; i < a.end; ++i) {
          Complex s(0.0, 0.0);
          for (int j = b.begin; j < b.end; ++j) {
            const int t0 = p1[i].t + p2[j].t;
            if (t0 < rb || t0 > rt) continue;
            s += row[t0 - rb] * c2[j];
          }
          acc += c1[i] * s;
        }
      };
      if (via_u0) {
        for (std::size_t i0 = 0; i0 < g0s.size(); ++i0) {
          const auto& g = g0s[i0];
          const int i2 = u2.find_group(g.x - a.x, g.y - a.y, g.z - a.z);
          if (i2 >= 0) visit(i2, static_cast<int>(i0));
        }
      } else {
        for (std::size_t i2 = 0; i2 < g2s.size(); ++i2) {
          const auto& b = g2s[i2];
          const int i0 = u0.find_group(a.x + b.x, a.y + b.y, a.z + b.z);
          if (i0 >= 0) visit(static_cast<int>(i2), i0);
        }
      }
    }
    partial[chunk] = acc;
  });
  Complex total(0.0, 0.0);
  for (const auto& p : partial) total += p;
  const double cell = u1.cell_volume();
  return cell * cell * total;
}

Complex inner_product(const SparseField& u, const SparseField& v) {
  check_same_spacing(u, v);
  Complex s(0.0, 0.0);
  std::size_t j = 0;
  const auto& pu = u.points();
  const auto& pv = v.points();
  for (std::size_t i = 0; i < pu.size(); ++i) {
    while (j < pv.size() && less_point(pv[j], pu[i])) ++j;
    if (j < pv.size() && pv[j] == pu[i]) s += u.coeffs()[i] * std::conj(v.coeffs()[j]);
  }
  return u.cell_volume() * s;
}

namespace {

struct GroupMass {
  Vec3 xi;
  double mass;
};

std::vector<GroupMass> group_masses(const SparseField& u, const Region* filter) {
  std::vector<GroupMass> out;
  out.reserve(u.groups().size());
  for (const auto& g : u.groups()) {
    const Vec3 xi = u.xi_of(g);
    if (filter && !filter->shadow_contains(xi)) continue;
    double m = 0.0;
    for (int i = g.begin; i < g.end; ++i) m += std::norm(u.coeffs()[i]);
    out.push_back({xi, u.cell_volume() * m});
  }
  return out;
}

double tube_mass(const std::vector<GroupMass>& gm, double r, const Vec3& omega) {
  double s = 0.0;
  for (const auto& g : gm) {
    const double along = g.xi.dot(omega);
    const double d2 = std::max(0.0, g.xi.squaredNorm() - along * along);
    if (d2 <= r * r) s += g.mass;
  }
  return s;
}

}  // namespace

TubeSup tube_sup_norm(const SparseField& u, double N, double r, const SphereNet& net) {
  if (!(r > 0.0) || !(N > 0.0)) throw DomainError("tube_sup_norm needs N, r > 0");
  if (r >= N) throw PreconditionError("tube_sup_norm needs r < N");
  TubeSup res;
  res.plain_norm = l2_norm(u);
  const Region shell = Region::annulus(N);
  const auto gm = group_masses(u, &shell);
  if (gm.empty()) return res;

  const auto& dirs = net.directions();
  std::vector<double> acc(dirs.size(), 0.0);
  double everywhere = 0.0;
  for (const auto& g : gm) {
    const double n = g.xi.norm();
    if (n <= r) {
      everywhere += g.mass;
      continue;
    }
    const double phi = std::asin(r / n);
    const Vec3 d = g.xi / n;
    for (int idx : net.within(d, phi)) acc[idx] += g.mass;
    for (int idx : net.within(-d, phi)) acc[idx] += g.mass;
  }

  std::vector<int> order(dirs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const std::size_t top = std::min<std::size_t>(8, order.size());
  std::partial_sort(order.begin(), order.begin() + top, order.end(),
                    [&](int a, int b) { return acc[a] != acc[b] ? acc[a] > acc[b] : a < b; });

  double best = -1.0;
  Vec3 best_omega = dirs.empty() ? Vec3::UnitZ() : dirs[order[0]];
  for (std::size_t k = 0; k < top; ++k) {
    Vec3 w = dirs[order[k]];
    double m = tube_mass(gm, r, w);
    // Hill climb on the exact tube mass with shrinking steps.
    for (double step = net.gamma(); step > 1e-3 * net.gamma(); step *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        const Vec3 e1 = unit(w.unitOrthogonal());
        const Vec3 e2 = w.cross(e1);
        for (int q = 0; q < 8; ++q) {
          const double ang = q * M_PI / 4.0;
          const Vec3 cand = unit(std::cos(step) * w + std::sin(step) * (std::cos(ang) * e1 + std::sin(ang) * e2));
          const double cm = tube_mass(gm, r, cand);
          if (cm > m) {
            m = cm;
            w = cand;
            moved = true;
          }
        }
      }
    }
    if (m > best) {
      best = m;
      best_omega = w;
    }
  }
  best = std::max(best, 0.0) + everywhere;
  res.value = (N / r) * std::sqrt(best);
  res.best_omega = best_omega;
  return res;
}

double slab_sup_norm(const SparseField& u, const Vec3& omega, double slab_length) {
  if (!(slab_length > 0.0)) throw DomainError("slab_length must be positive");
  const Vec3 w = unit(omega);
  auto gm = group_masses(u, nullptr);
  if (gm.empty()) return 0.0;
  std::vector<std::pair<double, double>> s;
  s.reserve(gm.size());
  for (const auto& g : gm) s.emplace_back(g.xi.dot(w), g.mass);
  std::sort(s.begin(), s.end());
  // Optimal closed windows can be taken to start at a data point.
  double best = 0.0, cur = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (j < i) {
      j = i;
      cur = 0.0;
    }
    while (j < s.size() && s[j].first <= s[i].first + slab_length) cur += s[j++].second;
    best = std::max(best, cur);
    cur -= s[i].second;
  }
  return std::sqrt(best);
}

namespace {

template <class T>
void put(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw DomainError("truncated field data");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void write_binary(const SparseField& u, std::ostream& out) {
  struct Run {
    int begin, end;
  };
  std::vector<Run> runs;
  const auto& p = u.points();
  for (const auto& g : u.groups()) {
    int s = g.begin;
    for (int i = g.begin + 1; i <= g.end; ++i) {
      if (i == g.end || p[i].t != p[i - 1].t + 1) {
        runs.push_back({s, i});
        s = i;
      }
    }
  }
  out.write("RLSF", 4);
  put<std::uint32_t>(out, kBinaryVersion);
  put<double>(out, u.h_tau());
  put<double>(out, u.h_xi());
  put<std::uint64_t>(out, runs.size());
  for (const auto& r : runs) {
    put<std::int32_t>(out, p[r.begin].x);
    put<std::int32_t>(out, p[r.begin].y);
    put<std::int32_t>(out, p[r.begin].z);
    put<std::int32_t>(out, p[r.begin].t);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.end - r.begin));
    for (int i = r.begin; i < r.end; ++i) {
      put<double>(out, u.coeffs()[i].real());
      put<double>(out, u.coeffs()[i].imag());
    }
  }
}

SparseField read_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "RLSF", 4) != 0) throw DomainError("not a field file");
  const auto version = get<std::uint32_t>(in);
  if (version != kBinaryVersion) throw DomainError("unsupported field version " + std::to_string(version));
  const double h_tau = get<double>(in);
  const double h_xi = get<double>(in);
  check_spacing(h_tau, h_xi);
  const auto nruns = get<std::uint64_t>(in);
  std::vector<std::pair<LatticePoint, Complex>> entries;
  for (std::uint64_t r = 0; r < nruns; ++r) {
    const int x = get<std::int32_t>(in);
    const int y = get<std::int32_t>(in);
    const int z = get<std::int32_t>(in);
    const int t0 = get<std::int32_t>(in);
    const auto len = get<std::uint32_t>(in);
    if (len == 0) throw DomainError("empty run in field data");
    for (std::uint32_t i = 0; i < len; ++i) {
      const double re = get<double>(in);
      const double im = get<double>(in);
      entries.push_back({LatticePoint{t0 + int(i), x, y, z}, Complex(re, im)});
    }
  }
  return SparseField::from_entries(h_tau, h_xi, std::move(entries));
}

nlohmann::json to_json(const SparseField& u) {
  nlohmann::json e = nlohmann::json::array();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& k = u.points()[i];
    e.push_back({k.t, k.x, k.y, k.z, u.coeffs()[i].real(), u.coeffs()[i].imag()});
  }
  return {{"h_tau", u.h_tau()}, {"h_xi", u.h_xi()}, {"entries", e}};
}

SparseField field_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("field JSON must be an object");
  for (const auto& kv : j.items())
    if (kv.key() != "h_tau" && kv.key() != "h_xi" && kv.key() != "entries")
      throw DomainError("unknown field key: " + kv.key());
  try {
    const double h_tau = j.at("h_tau").get<double>();
    const double h_xi = j.at("h_xi").get<double>();
    std::vector<std::pair<LatticePoint, Complex>> entries;
    for (const auto& e : j.at("entries")) {
      if (!e.is_array() || e.size() != 6) throw DomainError("field entry must have 6 components");
      entries.push_back({LatticePoint{e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>()},
                         Complex(e[4].get<double>(), e[5].get<double>())});
    }
    return SparseField::from_entries(h_tau, h_xi, std::move(entries));
  } catch (const nlohmann::json::exception& ex) {
    throw DomainError(std::string("malformed field JSON: ") + ex.what());
  }
}

}  // namespace rlab
