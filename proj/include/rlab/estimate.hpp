#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rlab/geometry.hpp"
#include "rlab/spectral.hpp"

namespace rlab {

class NetLibrary;

enum class Theorem { A110, A112, A114, Z14, NThm1, NThm2, NThm3, NThm4, LThm1, StrichartzA58, SteinTomasA40, CThm };
enum class ExtremizerKind { Z16, Z16Shortened, NullRay };

std::string theorem_name(Theorem t);
Theorem theorem_from_name(const std::string& s);
const std::vector<Theorem>& all_theorems();
std::string extremizer_name(ExtremizerKind k);
ExtremizerKind extremizer_from_name(const std::string& s);

struct EstimateCase {
  Theorem theorem = Theorem::A110;
  std::array<double, 3> N{1.0, 1.0, 1.0};
  std::array<double, 3> L{1.0, 1.0, 1.0};
  std::array<Sign, 3> signs{Sign::Plus, Sign::Plus, Sign::Plus};
  Vec3 omega = Vec3::UnitZ();
  std::optional<double> r;
  std::optional<double> alpha;
  std::optional<double> interval_length;
  std::optional<double> interval_center;  // defaults to the median of xi0 . omega
  std::optional<double> gamma_threshold;
  std::optional<Vec3> center;
  // Angular half-width of sectors around +-omega that trial supports are
  // restricted to (null-ray concentration).
  std::optional<double> sector;
  // When set, trial fields live on the extremizer supports with N = N1 and
  // omega, center, r, alpha take their extremizer defaults.
  std::optional<ExtremizerKind> extremizer;
  double h = 0.5;
  std::optional<double> h_tau;
  std::uint64_t seed = 0;

  double h_time() const { return h_tau.value_or(h); }
  nlohmann::json to_json() const;
  static EstimateCase from_json(const nlohmann::json& j);
};

// Throws PreconditionError when a parameter required by the theorem is
// missing or invalid.
void validate(const EstimateCase& c);

// Case with extremizer-derived geometry filled in.
EstimateCase resolved(const EstimateCase& c);

// Set a named numeric parameter (N0..N2, L0..L2, N, r, alpha,
// interval_length, interval_center, gamma_threshold, h, h_tau).
void set_param(EstimateCase& c, const std::string& name, double value);
double get_param(const EstimateCase& c, const std::string& name);

double theoretical_constant(const EstimateCase& c);
// r = (N0 Lmax)^{1/2}
double low_output_radius(const EstimateCase& c);

// Region that supp u_j must lie in (j = 1, 2).
Region factor_support(const EstimateCase& c, int j);

// Throws PreconditionError listing offending entries.
void check_conformity(const EstimateCase& c, const SparseField& u1, const SparseField& u2);

struct Evaluation {
  double lhs = 0.0;
  double constant = 0.0;
  double rhs = 0.0;    // right-side norm product of the theorem
  double plain = 0.0;  // ||u1|| ||u2||
  double ratio = 0.0;  // lhs / (constant * rhs)
  double scaled() const { return plain > 0.0 ? lhs / plain : 0.0; }
};

double empirical_lhs(const EstimateCase& c, const SparseField& u1, const SparseField& u2);
Evaluation evaluate(const EstimateCase& c, const SparseField& u1, const SparseField& u2, NetLibrary* nets = nullptr);
double empirical_ratio(const EstimateCase& c, const SparseField& u1, const SparseField& u2, NetLibrary* nets = nullptr);

struct ExtremizerGeometry {
  double N = 1.0;
  double beta = 1.0;  // N^{-1/2}
  Vec3 omega;         // axis of u2
  Vec3 omega_prime;   // axis of u1
  Vec3 e1, e2;        // omega_prime in span(omega, e1); e2 normal to both
};

ExtremizerGeometry extremizer_geometry(double N);
// Slab direction at angle alpha + N^{-1/2} from the plane normal to omega'.
Vec3 slab_direction(const ExtremizerGeometry& g, double alpha);
Region extremizer_support(ExtremizerKind k, double N, int j);

struct Extremizer {
  SparseField u1, u2;
  EstimateCase ecase;
};

// Unit coefficient fields on the extremizer supports. h is the spatial step
// (at most N^{1/2}/4) and h_tau the time step.
Extremizer make_extremizer(ExtremizerKind kind, double N, double h, double h_tau = 0.5);

// Trial fields: gaussian (trial >= 0) or unit coefficients (trial < 0) on the
// case supports. LThm1 uses spherically symmetric gaussian u2.
std::pair<SparseField, SparseField> case_fields(const EstimateCase& c, long long trial);

struct Fit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

// Least squares of log2 y against log2 x.
Fit fit_exponent(const std::vector<std::pair<double, double>>& points);

struct SweepPoint {
  double value = 0.0;
  std::vector<Evaluation> trials;  // gaussian trials, then the unit-coefficient trial
  double max_scaled = 0.0;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
};

struct SweepReport {
  EstimateCase base;
  std::string vary;
  std::vector<double> grid;
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<SweepPoint> points;
  Fit fit;
  double max_ratio = 0.0;
  double min_ratio = 0.0;

  nlohmann::json to_json(const std::string& fixture_hash = "") const;
  std::string to_csv() const;
};

SweepReport dyadic_sweep(const EstimateCase& base, const std::string& vary, const std::vector<double>& grid,
                         int trials, std::uint64_t seed, NetLibrary* nets = nullptr);

// Standard parameter cell of a theorem: the trial battery runs every case.
std::vector<EstimateCase> canonical_cell(Theorem t);

struct BatteryResult {
  long long evaluations = 0;
  double max_ratio = 0.0;
  long long violations = 0;  // ratio > limit
  EstimateCase worst;
  long long worst_trial = 0;
  nlohmann::json to_json() const;
};

// Gaussian trials seed_begin .. seed_begin + trials - 1 on every case; the
// trial index doubles as the substream of the case seed.
BatteryResult run_battery(const std::vector<EstimateCase>& cases, int trials, std::uint64_t seed_begin, double limit,
                          NetLibrary* nets = nullptr);

struct WeightScan {
  long long samples = 0;
  double min_angle_bound = 0.0;       // max|h| / (min|xi| theta^2)
  double min_product_bound = 0.0;     // max|h| / (|xi1||xi2| theta^2 / |xi0|) outside the low-output regime
  double min_theta_low_output = 0.0;  // theta12 in the low-output regime
  long long low_output_count = 0;
  long long filtered_count = 0;  // samples passing the modulation filter
  double g_min = 0.0;            // |h0| / D on the filtered samples
  double g_max = 0.0;
  nlohmann::json to_json() const;
};

// Random bilinear interactions across scales, angles and signs.
WeightScan weight_geometry_scan(long long n, std::uint64_t seed);

}  // namespace rlab
