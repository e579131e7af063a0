#include "rlab/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"
#include "rlab/sphere_net.hpp"

namespace rlab {

namespace {

const std::vector<std::pair<Theorem, std::string>>& theorem_table() {
  static const std::vector<std::pair<Theorem, std::string>> t = {
      {Theorem::A110, "A110"},   {Theorem::A112, "A112"},   {Theorem::A114, "A114"},
      {Theorem::Z14, "Z14"},     {Theorem::NThm1, "NThm1"}, {Theorem::NThm2, "NThm2"},
      {Theorem::NThm3, "NThm3"}, {Theorem::NThm4, "NThm4"}, {Theorem::LThm1, "LThm1"},
      {Theorem::StrichartzA58, "StrichartzA58"}, {Theorem::SteinTomasA40, "SteinTomasA40"},
      {Theorem::CThm, "CThm"}};
  return t;
}

bool is_dyadic(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return false;
  const double l = std::log2(v);
  return std::abs(l - std::round(l)) < 1e-9;
}

double median3(std::array<double, 3> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

Vec3 vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw UsageError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

bool uses_output_cone(Theorem t) {
  return t == Theorem::A110 || t == Theorem::A112 || t == Theorem::A114 || t == Theorem::NThm1 ||
         t == Theorem::LThm1;
}

NetLibrary& default_nets() {
  static NetLibrary lib(0);
  return lib;
}

// Median of xi . omega over the groups of u, weighted by mass.
double weighted_median_projection(const SparseField& u, const Vec3& omega) {
  std::vector<std::pair<double, double>> s;
  double total = 0.0;
  for (const auto& g : u.groups()) {
    double m = 0.0;
    for (int i = g.begin; i < g.end; ++i) m += std::norm(u.coeffs()[i]);
    s.emplace_back(u.xi_of(g).dot(omega), m);
    total += m;
  }
  if (s.empty()) return 0.0;
  std::sort(s.begin(), s.end());
  double acc = 0.0;
  for (const auto& p : s) {
    acc += p.second;
    if (acc >= 0.5 * total) return p.first;
  }
  return s.back().first;
}

}  // namespace

std::string theorem_name(Theorem t) {
  for (const auto& p : theorem_table())
    if (p.first == t) return p.second;
  return "?";
}

Theorem theorem_from_name(const std::string& s) {
  for (const auto& p : theorem_table())
    if (p.second == s) return p.first;
  throw UsageError("unknown theorem id: " + s);
}

const std::vector<Theorem>& all_theorems() {
  static const std::vector<Theorem> v = [] {
    std::vector<Theorem> out;
    for (const auto& p : theorem_table()) out.push_back(p.first);
    return out;
  }();
  return v;
}

std::string extremizer_name(ExtremizerKind k) {
  switch (k) {
    case ExtremizerKind::Z16:
      return "Z16";
    case ExtremizerKind::Z16Shortened:
      return "Z16_shortened";
    case ExtremizerKind::NullRay:
      return "null_ray";
  }
  return "?";
}

ExtremizerKind extremizer_from_name(const std::string& s) {
  if (s == "Z16") return ExtremizerKind::Z16;
  if (s == "Z16_shortened") return ExtremizerKind::Z16Shortened;
  if (s == "null_ray") return ExtremizerKind::NullRay;
  throw UsageError("unknown extremizer kind: " + s);
}

nlohmann::json EstimateCase::to_json() const {
  nlohmann::json j;
  j["theorem"] = theorem_name(theorem);
  j["N"] = {N[0], N[1], N[2]};
  j["L"] = {L[0], L[1], L[2]};
  j["signs"] = std::string{symbol(signs[0]), symbol(signs[1]), symbol(signs[2])};
  j["omega"] = vec_json(omega);
  if (r) j["r"] = *r;
  if (alpha) j["alpha"] = *alpha;
  if (interval_length) j["interval_length"] = *interval_length;
  if (interval_center) j["interval_center"] = *interval_center;
  if (gamma_threshold) j["gamma_threshold"] = *gamma_threshold;
  if (center) j["center"] = vec_json(*center);
  if (sector) j["sector"] = *sector;
  if (extremizer) j["extremizer"] = extremizer_name(*extremizer);
  j["h"] = h;
  if (h_tau) j["h_tau"] = *h_tau;
  j["seed"] = seed;
  return j;
}

EstimateCase EstimateCase::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> keys = {"theorem", "N",      "L",     "signs",           "omega",
                                                "r",       "alpha",  "interval_length", "interval_center",
                                                "gamma_threshold", "center", "sector", "extremizer", "h", "h_tau", "seed"};
  if (!j.is_object()) throw UsageError("case must be a JSON object");
  for (const auto& kv : j.items())
    if (std::find(keys.begin(), keys.end(), kv.key()) == keys.end()) throw UsageError("unknown case key: " + kv.key());
  EstimateCase c;
  try {
    if (!j.contains("theorem")) throw UsageError("case needs a theorem id");
    c.theorem = theorem_from_name(j.at("theorem").get<std::string>());
    auto triple = [&](const char* k, std::array<double, 3>& out) {
      if (!j.contains(k)) return;
      const auto& a = j.at(k);
      if (!a.is_array() || a.size() != 3) throw UsageError(std::string(k) + " must have three entries");
      for (int i = 0; i < 3; ++i) out[i] = a[i].get<double>();
    };
    triple("N", c.N);
    triple("L", c.L);
    if (j.contains("signs")) {
      const auto s = j.at("signs").get<std::string>();
      if (s.size() != 3) throw UsageError("signs must be three characters from +-");
      for (int i = 0; i < 3; ++i) {
        if (s[i] != '+' && s[i] != '-') throw UsageError("signs must be three characters from +-");
        c.signs[i] = s[i] == '+' ? Sign::Plus : Sign::Minus;
      }
    }
    if (j.contains("omega")) c.omega = unit_from_json(j.at("omega"));
    auto opt = [&](const char* k, std::optional<double>& out) {
      if (j.contains(k)) out = j.at(k).get<double>();
    };
    opt("r", c.r);
    opt("alpha", c.alpha);
    opt("interval_length", c.interval_length);
    opt("interval_center", c.interval_center);
    opt("gamma_threshold", c.gamma_threshold);
    if (j.contains("center")) c.center = vec_from(j.at("center"));
    opt("sector", c.sector);
    if (j.contains("extremizer")) c.extremizer = extremizer_from_name(j.at("extremizer").get<std::string>());
    if (j.contains("h")) c.h = j.at("h").get<double>();
    opt("h_tau", c.h_tau);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed case: ") + e.what());
  } catch (const DomainError& e) {
    throw UsageError(std::string("malformed case: ") + e.what());
  }
  return c;
}

ExtremizerGeometry extremizer_geometry(double N) {
  ExtremizerGeometry g;
  g.N = N;
  g.beta = 1.0 / std::sqrt(N);
  g.omega = Vec3(2.0, 3.0, 6.0) / 7.0;
  g.e1 = Vec3(3.0, -2.0, 0.0) / std::sqrt(13.0);
  g.e2 = g.omega.cross(g.e1);
  g.omega_prime = std::cos(g.beta) * g.omega + std::sin(g.beta) * g.e1;
  return g;
}

Vec3 slab_direction(const ExtremizerGeometry& g, double alpha) {
  const double t = alpha + g.beta;
  return unit(std::cos(t) * g.e2 + std::sin(t) * g.omega_prime);
}

Region extremizer_support(ExtremizerKind k, double N, int j) {
  const ExtremizerGeometry g = extremizer_geometry(N);
  const Vec3 axis = (j == 1 && k != ExtremizerKind::NullRay) ? g.omega_prime : g.omega;
  std::vector<Region> parts = {Region::null_hyperplane(1.0, g.omega), Region::thick_cone(Sign::Plus, N, 4.0),
                               Region::cylinder(Region::half_space_cone(axis, M_PI / 2 - g.beta)),
                               Region::cylinder(Region::slab(axis, 0.0, 2.0 * N))};
  if (k == ExtremizerKind::Z16Shortened) {
    const double len = std::sqrt(N);
    parts.push_back(Region::cylinder(Region::thick_sphere(N - 0.5 * len, 0.5 * len)));
  }
  return Region::intersect(parts);
}

EstimateCase resolved(const EstimateCase& c) {
  EstimateCase out = c;
  if (!c.extremizer) return out;
  const double N = c.N[1];
  if (!(N > 0.0)) return out;
  const ExtremizerGeometry g = extremizer_geometry(N);
  if (!out.r) out.r = 2.0 * std::sqrt(N);
  if (!out.alpha) out.alpha = g.beta;
  if (!out.interval_length) out.interval_length = c.theorem == Theorem::Z14 ? 2.0 * std::sqrt(N) : 0.5 * N;
  if (!out.gamma_threshold) out.gamma_threshold = 0.125;
  if (c.theorem == Theorem::Z14) out.omega = slab_direction(g, *out.alpha);
  else out.omega = g.omega;
  if (!out.center) {
    const double rad = *c.extremizer == ExtremizerKind::Z16Shortened ? N - 0.5 * std::sqrt(N) : 0.75 * N;
    out.center = rad * (*c.extremizer == ExtremizerKind::NullRay ? g.omega : g.omega_prime);
  }
  return out;
}

void validate(const EstimateCase& in) {
  const EstimateCase c = resolved(in);
  for (int i = 0; i < 3; ++i) {
    if (!is_dyadic(c.N[i])) throw PreconditionError("N" + std::to_string(i) + " must be a positive dyadic number");
    if (!is_dyadic(c.L[i])) throw PreconditionError("L" + std::to_string(i) + " must be a positive dyadic number");
  }
  if (c.sector && !(*c.sector > 0.0 && *c.sector <= M_PI)) throw PreconditionError("sector must lie in (0, pi]");
  if (!(c.h > 0.0) || !std::isfinite(c.h)) throw PreconditionError("lattice step h must be positive");
  if (!(c.h_time() > 0.0) || !std::isfinite(c.h_time())) throw PreconditionError("lattice step h_tau must be positive");
  auto need = [&](const std::optional<double>& v, const char* name) {
    if (!v) throw PreconditionError(std::string("missing parameter ") + name + " for " + theorem_name(c.theorem));
    if (!(*v > 0.0) || !std::isfinite(*v)) throw PreconditionError(std::string("parameter ") + name + " must be positive");
  };
  switch (c.theorem) {
    case Theorem::Z14:
      need(c.alpha, "alpha");
      need(c.interval_length, "interval_length");
      if (*c.alpha >= M_PI / 2) throw PreconditionError("alpha must be below pi/2");
      break;
    case Theorem::NThm2:
      need(c.r, "r");
      break;
    case Theorem::NThm3:
    case Theorem::CThm:
      need(c.r, "r");
      if (!c.center) throw PreconditionError("missing parameter center for " + theorem_name(c.theorem));
      break;
    case Theorem::NThm4:
      need(c.r, "r");
      need(c.interval_length, "interval_length");
      if (c.gamma_threshold && !(*c.gamma_threshold > 0.0 && *c.gamma_threshold < 1.0))
        throw PreconditionError("gamma_threshold must lie in (0, 1)");
      break;
    case Theorem::LThm1:
      if (low_output_radius(c) >= c.N[2]) throw PreconditionError("LThm1 needs r = (N0 Lmax)^{1/2} < N2");
      break;
    default:
      break;
  }
  if (c.theorem == Theorem::StrichartzA58 || c.theorem == Theorem::CThm) {
    if (c.N[1] != c.N[2] || c.L[1] != c.L[2])
      throw PreconditionError(theorem_name(c.theorem) + " needs both factors on the same cone (N1 = N2, L1 = L2)");
  }
}

void set_param(EstimateCase& c, const std::string& name, double v) {
  if (name == "N0") c.N[0] = v;
  else if (name == "N1") c.N[1] = v;
  else if (name == "N2") c.N[2] = v;
  else if (name == "N") c.N = {v, v, v};
  else if (name == "L0") c.L[0] = v;
  else if (name == "L1") c.L[1] = v;
  else if (name == "L2") c.L[2] = v;
  else if (name == "r") c.r = v;
  else if (name == "alpha") c.alpha = v;
  else if (name == "interval_length" || name == "delta") c.interval_length = v;
  else if (name == "interval_center") c.interval_center = v;
  else if (name == "gamma_threshold") c.gamma_threshold = v;
  else if (name == "sector") c.sector = v;
  else if (name == "h") c.h = v;
  else if (name == "h_tau") c.h_tau = v;
  else throw UsageError("unknown sweep parameter: " + name);
}

double get_param(const EstimateCase& in, const std::string& name) {
  const EstimateCase c = resolved(in);
  auto opt = [&](const std::optional<double>& v) {
    if (!v) throw UsageError("parameter not set: " + name);
    return *v;
  };
  if (name == "N0") return c.N[0];
  if (name == "N1" || name == "N") return c.N[1];
  if (name == "N2") return c.N[2];
  if (name == "L0") return c.L[0];
  if (name == "L1") return c.L[1];
  if (name == "L2") return c.L[2];
  if (name == "r") return opt(c.r);
  if (name == "alpha") return opt(c.alpha);
  if (name == "interval_length" || name == "delta") return opt(c.interval_length);
  if (name == "interval_center") return opt(c.interval_center);
  if (name == "gamma_threshold") return opt(c.gamma_threshold);
  if (name == "sector") return opt(c.sector);
  if (name == "h") return c.h;
  if (name == "h_tau") return c.h_time();
  throw UsageError("unknown parameter: " + name);
}

double low_output_radius(const EstimateCase& c) {
  return std::sqrt(c.N[0] * std::max({c.L[0], c.L[1], c.L[2]}));
}

double theoretical_constant(const EstimateCase& in) {
  validate(in);
  const EstimateCase c = resolved(in);
  const auto& N = c.N;
  const auto& L = c.L;
  const double nmin012 = std::min({N[0], N[1], N[2]});
  const double nmin12 = std::min(N[1], N[2]);
  switch (c.theorem) {
    case Theorem::A110:
      return std::sqrt(nmin012 * nmin12 * L[1] * L[2]);
    case Theorem::A112: {
      const double c1 = nmin012 * std::min(N[0], N[1]) * L[0] * L[1];
      const double c2 = nmin012 * std::min(N[0], N[2]) * L[0] * L[2];
      return std::sqrt(std::min(c1, c2));
    }
    case Theorem::A114: {
      const double lmin = std::min({L[0], L[1], L[2]});
      return std::sqrt(N[0] * nmin12 * lmin * median3(L));
    }
    case Theorem::Z14:
      return std::sqrt(*c.interval_length * nmin12 * L[1] * L[2] / *c.alpha);
    case Theorem::NThm1:
    case Theorem::LThm1:
      return std::sqrt(N[0] * L[0] * L[1] * L[2]);
    case Theorem::NThm2:
    case Theorem::NThm3:
    case Theorem::NThm4:
      return std::sqrt(*c.r * *c.r * L[1] * L[2]);
    case Theorem::StrichartzA58:
      return N[1] * L[1];
    case Theorem::SteinTomasA40:
      return L[1];
    case Theorem::CThm:
      return std::sqrt(*c.r * N[1]) * L[1];
  }
  return 0.0;
}

namespace {

Region conformity_region(const EstimateCase& c, int j) {
  if (c.theorem == Theorem::SteinTomasA40) return Region::thick_sphere(1.0, c.L[1]);
  Region k = Region::thick_cone(c.signs[j], c.N[j], c.L[j]);
  if (c.theorem == Theorem::Z14 && j == 1)
    return Region::intersect({k, Region::cylinder(Region::half_space_cone(c.omega, *c.alpha))});
  if (c.theorem == Theorem::CThm) return Region::intersect({k, Region::cylinder(Region::ball(*c.center, *c.r))});
  return k;
}

}  // namespace

Region factor_support(const EstimateCase& in, int j) {
  if (j != 1 && j != 2) throw UsageError("factor index must be 1 or 2");
  validate(in);
  const EstimateCase c = resolved(in);
  if (c.extremizer) return extremizer_support(*c.extremizer, c.N[1], j);
  if (c.sector && c.theorem != Theorem::SteinTomasA40)
    return Region::intersect(
        {conformity_region(c, j), Region::sector_cone(c.signs[j], c.N[j], c.L[j], *c.sector, c.omega)});
  return conformity_region(c, j);
}

void check_conformity(const EstimateCase& in, const SparseField& u1, const SparseField& u2) {
  validate(in);
  const EstimateCase c = resolved(in);
  if (!u1.empty() && !u2.empty() && (u1.h_tau() != u2.h_tau() || u1.h_xi() != u2.h_xi()))
    throw PreconditionError("fields have different lattice spacing");
  std::ostringstream bad;
  int count = 0;
  for (int j = 1; j <= 2; ++j) {
    const SparseField& u = j == 1 ? u1 : u2;
    const Region reg = conformity_region(c, j);
    const bool spatial = c.theorem == Theorem::SteinTomasA40;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto& k = u.points()[i];
      const SpacetimePoint X = u.point(i);
      const bool ok = spatial ? (k.t == 0 && reg.contains(X.xi)) : reg.contains(X);
      if (ok) continue;
      if (count < 5) bad << " u" << j << "(t=" << k.t << ",x=" << k.x << ",y=" << k.y << ",z=" << k.z << ")";
      ++count;
    }
  }
  if (count > 0)
    throw PreconditionError("supports do not conform to " + theorem_name(c.theorem) + ": " + std::to_string(count) +
                            " offending entries:" + bad.str());
}

double empirical_lhs(const EstimateCase& in, const SparseField& u1, const SparseField& u2) {
  check_conformity(in, u1, u2);
  const EstimateCase c = resolved(in);
  if (u1.empty() || u2.empty()) return 0.0;
  SymbolKind symbol = SymbolKind::one();
  SparseField p1 = u1;
  ProductOptions opt;
  switch (c.theorem) {
    case Theorem::NThm1:
      symbol = SymbolKind::theta12();
      break;
    case Theorem::NThm2:
      symbol = SymbolKind::theta12();
      p1 = project(u1, Region::tube(*c.r, c.omega));
      break;
    case Theorem::NThm3:
      symbol = SymbolKind::sqrt_theta12();
      p1 = project(u1, Region::ball(*c.center, *c.r));
      break;
    case Theorem::NThm4:
      symbol = SymbolKind::theta12_small(c.gamma_threshold.value_or(0.125));
      p1 = project(u1, Region::tube(*c.r, c.omega));
      break;
    default:
      break;
  }
  if (uses_output_cone(c.theorem)) opt.output_region = Region::thick_cone(c.signs[0], c.N[0], c.L[0]);
  if (c.theorem == Theorem::Z14 || c.theorem == Theorem::NThm4) {
    const double len = *c.interval_length;
    const double mid = c.interval_center ? *c.interval_center
                                         : weighted_median_projection(p1, c.omega) +
                                               weighted_median_projection(u2, c.omega);
    opt.output_region = Region::cylinder(Region::slab(c.omega, mid - 0.5 * len, mid + 0.5 * len));
  }
  const SparseField prod = bilinear_product(p1, u2, symbol, {c.signs[1], c.signs[2]}, opt);
  return l2_norm(prod);
}

Evaluation evaluate(const EstimateCase& in, const SparseField& u1, const SparseField& u2, NetLibrary* nets) {
  Evaluation e;
  e.lhs = empirical_lhs(in, u1, u2);
  const EstimateCase c = resolved(in);
  e.constant = theoretical_constant(c);
  e.plain = l2_norm(u1) * l2_norm(u2);
  switch (c.theorem) {
    case Theorem::LThm1: {
      const double r = low_output_radius(c);
      NetLibrary& lib = nets ? *nets : default_nets();
      const SphereNet& net = lib.get(r / c.N[2]);
      e.rhs = l2_norm(u1) * tube_sup_norm(u2, c.N[2], r, net).value;
      break;
    }
    case Theorem::NThm4:
      e.rhs = slab_sup_norm(u1, c.omega, *c.interval_length) * l2_norm(u2);
      break;
    default:
      e.rhs = e.plain;
      break;
  }
  if (e.lhs == 0.0) {
    e.ratio = 0.0;
  } else {
    if (!(e.rhs > 0.0)) throw DomainError("undefined ratio: right side vanishes");
    e.ratio = e.lhs / (e.constant * e.rhs);
  }
  return e;
}

double empirical_ratio(const EstimateCase& c, const SparseField& u1, const SparseField& u2, NetLibrary* nets) {
  return evaluate(c, u1, u2, nets).ratio;
}

Extremizer make_extremizer(ExtremizerKind kind, double N, double h, double h_tau) {
  if (!is_dyadic(N) || N < 4.0) throw PreconditionError("extremizer N must be dyadic and at least 4");
  if (!(h > 0.0) || h > std::sqrt(N) / 4.0 || !(h_tau > 0.0) || h_tau > 0.5)
    throw PreconditionError("unresolved lattice: need h <= N^{1/2}/4 and h_tau <= 1/2");
  Extremizer x;
  EstimateCase& c = x.ecase;
  c.theorem = kind == ExtremizerKind::Z16 ? Theorem::Z14
              : kind == ExtremizerKind::Z16Shortened ? Theorem::NThm3
                                                     : Theorem::NThm2;
  c.N = {N, N, N};
  c.L = {1.0, 4.0, 4.0};
  c.signs = {Sign::Plus, Sign::Plus, Sign::Plus};
  c.extremizer = kind;
  c.h = h;
  c.h_tau = h_tau;
  c = resolved(c);
  x.u1 = populate_region(extremizer_support(kind, N, 1), h_tau, h, FillMode::ones());
  x.u2 = populate_region(extremizer_support(kind, N, 2), h_tau, h, FillMode::ones());
  return x;
}

namespace {

struct Supports {
  SparseField s1, s2;
};

Supports case_supports(const EstimateCase& in) {
  validate(in);
  const EstimateCase c = resolved(in);
  Supports s;
  s.s1 = populate_region(factor_support(c, 1), c.h_time(), c.h, FillMode::ones());
  s.s2 = populate_region(factor_support(c, 2), c.h_time(), c.h, FillMode::ones());
  return s;
}

std::pair<SparseField, SparseField> trial_fields(const EstimateCase& c, const Supports& s, long long trial) {
  if (trial < 0) return {s.s1, s.s2};
  const auto t = static_cast<std::uint64_t>(trial);
  SparseField u1 = regaussian(s.s1, substream_seed(c.seed, 2 * t));
  SparseField u2 = c.theorem == Theorem::LThm1 ? radial_gaussian(s.s2, substream_seed(c.seed, 2 * t + 1))
                                               : regaussian(s.s2, substream_seed(c.seed, 2 * t + 1));
  return {std::move(u1), std::move(u2)};
}

}  // namespace

std::pair<SparseField, SparseField> case_fields(const EstimateCase& c, long long trial) {
  return trial_fields(c, case_supports(c), trial);
}

Fit fit_exponent(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    if (!(p.first > 0.0) || !(p.second > 0.0)) throw DomainError("fit_exponent needs positive data");
    xs.push_back(std::log2(p.first));
    ys.push_back(std::log2(p.second));
  }
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  if (n == 0) throw DomainError("fit_exponent needs data");
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_exponent needs at least two distinct x");
  Fit f;
  f.slope = sxy / sxx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = ys[i] - my - f.slope * (xs[i] - mx);
      rss += e * e;
    }
    f.stderr_ = std::sqrt(rss / double(n - 2) / sxx);
  }
  return f;
}

SweepReport dyadic_sweep(const EstimateCase& base, const std::string& vary, const std::vector<double>& grid,
                         int trials, std::uint64_t seed, NetLibrary* nets) {
  if (grid.size() < 4) throw UsageError("sweep grid needs at least 4 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!is_dyadic(grid[i])) throw UsageError("sweep grid values must be dyadic");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw UsageError("sweep grid must be strictly increasing");
  }
  if (trials < 0) throw UsageError("trials must be non-negative");
  SweepReport rep;
  rep.base = base;
  rep.base.seed = seed;
  rep.vary = vary;
  rep.grid = grid;
  rep.trials = trials;
  rep.seed = seed;
  std::vector<EstimateCase> cases;
  for (double v : grid) {
    EstimateCase c = rep.base;
    set_param(c, vary, v);
    validate(c);
    cases.push_back(c);
  }
  std::vector<std::pair<double, double>> pts;
  rep.max_ratio = 0.0;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const EstimateCase& c = cases[g];
    const Supports s = case_supports(c);
    SweepPoint p;
    p.value = grid[g];
    p.min_ratio = std::numeric_limits<double>::infinity();
    for (long long t = 0; t <= trials; ++t) {
      const long long trial = t < trials ? t : -1;
      const auto f = trial_fields(c, s, trial);
      const Evaluation e = evaluate(c, f.first, f.second, nets);
      p.trials.push_back(e);
      p.max_scaled = std::max(p.max_scaled, e.scaled());
      p.max_ratio = std::max(p.max_ratio, e.ratio);
      p.min_ratio = std::min(p.min_ratio, e.ratio);
    }
    rep.max_ratio = std::max(rep.max_ratio, p.max_ratio);
    rep.min_ratio = std::min(rep.min_ratio, p.min_ratio);
    pts.emplace_back(p.value, p.max_scaled);
    rep.points.push_back(std::move(p));
  }
  rep.fit = fit_exponent(pts);
  return rep;
}

nlohmann::json SweepReport::to_json(const std::string& fixture_hash) const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["environment"] = {{"version", "0.1.0"}, {"seed", seed}, {"fixture_hash", fixture_hash}};
  j["case"] = base.to_json();
  j["vary"] = vary;
  j["grid"] = grid;
  j["trials"] = trials;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& e : p.trials)
      tr.push_back({{"lhs", e.lhs}, {"constant", e.constant}, {"rhs", e.rhs}, {"plain", e.plain}, {"ratio", e.ratio}});
    pts.push_back({{"value", p.value}, {"max_scaled", p.max_scaled}, {"max_ratio", p.max_ratio},
                   {"min_ratio", p.min_ratio}, {"trials", tr}});
  }
  j["points"] = pts;
  j["exponent"] = fit.slope;
  j["exponent_stderr"] = fit.stderr_;
  j["max_ratio"] = max_ratio;
  j["min_ratio"] = min_ratio;
  return j;
}

std::string SweepReport::to_csv() const {
  std::ostringstream out;
  out << "theorem,vary,value,trial,lhs,constant,rhs,plain,ratio\n";
  for (const auto& p : points) {
    for (std::size_t t = 0; t < p.trials.size(); ++t) {
      const auto& e = p.trials[t];
      const std::string label = t + 1 == p.trials.size() ? "unit" : std::to_string(t);
      out << theorem_name(base.theorem) << ',' << vary << ',' << fmt(p.value) << ',' << label << ',' << fmt(e.lhs)
          << ',' << fmt(e.constant) << ',' << fmt(e.rhs) << ',' << fmt(e.plain) << ',' << fmt(e.ratio) << '\n';
    }
  }
  return out.str();
}

std::vector<EstimateCase> canonical_cell(Theorem t) {
  std::vector<EstimateCase> out;
  const std::array<double, 3> ns{2.0, 4.0, 8.0};
  const int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  auto signs = [](int s) {
    return std::array<Sign, 3>{(s & 1) ? Sign::Minus : Sign::Plus, (s & 2) ? Sign::Minus : Sign::Plus,
                               (s & 4) ? Sign::Minus : Sign::Plus};
  };
  EstimateCase base;
  base.theorem = t;
  base.L = {0.25, 0.5, 1.0};
  base.h = 0.5;
  switch (t) {
    case Theorem::A110:
    case Theorem::A112:
    case Theorem::A114:
    case Theorem::NThm1:
      for (const auto& p : perm)
        for (int s = 0; s < 8; ++s) {
          EstimateCase c = base;
          c.N = {ns[p[0]], ns[p[1]], ns[p[2]]};
          c.signs = signs(s);
          out.push_back(c);
        }
      break;
    case Theorem::LThm1:
      for (const auto& l : {std::array<double, 3>{0.25, 0.5, 1.0}, std::array<double, 3>{1.0, 0.5, 0.25}})
        for (int s = 0; s < 8; ++s) {
          EstimateCase c = base;
          c.N = {2.0, 4.0, 4.0};
          c.L = l;
          c.signs = signs(s);
          out.push_back(c);
        }
      break;
    case Theorem::StrichartzA58:
      for (double n : {2.0, 4.0})
        for (double l : {0.25, 0.5})
          for (int s = 0; s < 8; s += 2) {
            EstimateCase c = base;
            c.N = {n, n, n};
            c.L = {l, l, l};
            c.signs = signs(s);
            out.push_back(c);
          }
      break;
    case Theorem::SteinTomasA40:
      for (double l : {1.0 / 8, 1.0 / 4, 1.0 / 2}) {
        EstimateCase c = base;
        c.L = {l, l, l};
        c.h = 1.0 / 8;
        out.push_back(c);
      }
      break;
    case Theorem::CThm:
      for (double r : {1.0, 2.0})
        for (int s = 0; s < 8; s += 2) {
          EstimateCase c = base;
          c.N = {16.0, 16.0, 16.0};
          c.L = {1.0, 1.0, 1.0};
          c.r = r;
          c.center = Vec3(2.0, 3.0, 6.0) / 7.0 * 12.0;
          c.signs = signs(s);
          out.push_back(c);
        }
      break;
    case Theorem::Z14:
    case Theorem::NThm2:
    case Theorem::NThm3:
    case Theorem::NThm4:
      for (double n : {64.0, 128.0}) {
        EstimateCase c = base;
        const auto kind = t == Theorem::NThm3 ? ExtremizerKind::Z16Shortened : ExtremizerKind::Z16;
        c.N = {n, n, n};
        c.L = {1.0, 4.0, 4.0};
        c.extremizer = kind;
        c.h = std::sqrt(n) / 4.0;
        out.push_back(c);
      }
      break;
  }
  return out;
}

nlohmann::json BatteryResult::to_json() const {
  return {{"evaluations", evaluations}, {"max_ratio", max_ratio},   {"violations", violations},
          {"worst_case", worst.to_json()}, {"worst_trial", worst_trial}};
}

BatteryResult run_battery(const std::vector<EstimateCase>& cases, int trials, std::uint64_t seed_begin, double limit,
                          NetLibrary* nets) {
  if (trials < 1) throw UsageError("battery needs at least one trial");
  BatteryResult r;
  for (const auto& c : cases) {
    const Supports s = case_supports(c);
    for (int t = 0; t < trials; ++t) {
      const long long trial = static_cast<long long>(seed_begin) + t;
      const auto f = trial_fields(c, s, trial);
      const double ratio = evaluate(c, f.first, f.second, nets).ratio;
      ++r.evaluations;
      if (ratio > limit) ++r.violations;
      if (ratio > r.max_ratio || r.evaluations == 1) {
        r.max_ratio = std::max(r.max_ratio, ratio);
        r.worst = c;
        r.worst_trial = trial;
      }
    }
  }
  return r;
}

nlohmann::json WeightScan::to_json() const {
  return {{"samples", samples},
          {"min_angle_bound", min_angle_bound},
          {"min_product_bound", min_product_bound},
          {"min_theta_low_output", min_theta_low_output},
          {"low_output_count", low_output_count},
          {"filtered_count", filtered_count},
          {"g_min", g_min},
          {"g_max", g_max}};
}

WeightScan weight_geometry_scan(long long n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("weight scan needs at least one sample");
  constexpr std::size_t blocks = 64;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<WeightScan> part(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    WeightScan& w = part[b];
    w.min_angle_bound = w.min_product_bound = w.min_theta_low_output = w.g_min = inf;
    w.g_max = 0.0;
    std::mt19937_64 rng(substream_seed(seed, b));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> G(0.0, 1.0);
    const long long lo = n * static_cast<long long>(b) / static_cast<long long>(blocks);
    const long long hi = n * static_cast<long long>(b + 1) / static_cast<long long>(blocks);
    auto random_unit = [&]() {
      Vec3 v;
      do v = Vec3(G(rng), G(rng), G(rng));
      while (v.norm() < 1e-12);
      return Vec3(v.normalized());
    };
    for (long long i = lo; i < hi; ++i) {
      const Sign s1 = U(rng) < 0.5 ? Sign::Plus : Sign::Minus;
      const Sign s2 = U(rng) < 0.5 ? Sign::Plus : Sign::Minus;
      const double n1 = std::exp2(-4.0 + 8.0 * U(rng));
      const double n2 = n1 * std::exp2(-6.0 + 12.0 * U(rng));
      const double theta = std::exp2(std::log2(1e-3) + (std::log2(M_PI) - std::log2(1e-3)) * U(rng));
      const Vec3 a = random_unit();
      const Vec3 perp = unit(a.cross(random_unit()));
      // theta12 is the angle between s1 xi1 and s2 xi2.
      const Vec3 b = std::cos(theta) * a + std::sin(theta) * perp;
      const Vec3 xi1 = value(s1) * n1 * a;
      const Vec3 xi2 = value(s2) * n2 * b;
      auto weight = [&](double nrm) {
        if (U(rng) < 0.1) return 0.0;
        const double mag = nrm * std::exp2(-16.0 + 16.0 * U(rng));
        return U(rng) < 0.5 ? mag : -mag;
      };
      const double h1 = weight(n1), h2 = weight(n2);
      const double tau1 = value(s1) * n1 - h1;
      const double tau2 = value(s2) * n2 - h2;
      const double tau0 = tau1 + tau2;
      const Vec3 xi0 = xi1 + xi2;
      const double n0 = xi0.norm();
      if (!(n0 > 0.0)) continue;
      const double th12 = angle(value(s1) * xi1, value(s2) * xi2);
      if (!(th12 > 0.0)) continue;
      ++w.samples;
      const double nmin = std::min(n1, n2);
      const bool low_output = s1 == s2 && n0 <= 0.25 * nmin;
      for (Sign s0 : {Sign::Plus, Sign::Minus}) {
        const double h0 = -tau0 + value(s0) * n0;
        const double hmax = std::max({std::abs(h0), std::abs(h1), std::abs(h2)});
        w.min_angle_bound = std::min(w.min_angle_bound, hmax / (nmin * th12 * th12));
        if (!low_output) w.min_product_bound = std::min(w.min_product_bound, hmax / (n1 * n2 * th12 * th12 / n0));
        const bool g8 = (tau0 >= 0.0) == (s0 == Sign::Plus);
        const bool g10 = std::max(std::abs(h1), std::abs(h2)) <= std::abs(h0) / 8.0;
        if (g8 && g10) {
          const double D = s1 == s2 ? nmin * th12 * th12 : n1 * n2 * th12 * th12 / n0;
          const double q = std::abs(h0) / D;
          ++w.filtered_count;
          w.g_min = std::min(w.g_min, q);
          w.g_max = std::max(w.g_max, q);
        }
      }
      if (low_output) {
        ++w.low_output_count;
        w.min_theta_low_output = std::min(w.min_theta_low_output, th12);
      }
    }
  });
  WeightScan out;
  out.min_angle_bound = out.min_product_bound = out.min_theta_low_output = out.g_min = inf;
  for (const auto& w : part) {
    out.samples += w.samples;
    out.low_output_count += w.low_output_count;
    out.filtered_count += w.filtered_count;
    out.min_angle_bound = std::min(out.min_angle_bound, w.min_angle_bound);
    out.min_product_bound = std::min(out.min_product_bound, w.min_product_bound);
    out.min_theta_low_output = std::min(out.min_theta_low_output, w.min_theta_low_output);
    out.g_min = std::min(out.g_min, w.g_min);
    out.g_max = std::max(out.g_max, w.g_max);
  }
  return out;
}

}  // namespace rlab
