#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rlab/estimate.hpp"
#include "rlab/fixtures.hpp"

namespace rlab {

class NetLibrary;

// Outcome of one verification suite. report carries every measured quantity
// so calibration can read raw maxima from it.
struct SuiteResult {
  std::string name;
  bool pass = true;
  std::vector<std::string> failures;
  nlohmann::json report = nlohmann::json::object();
  std::vector<std::string> csv;  // measure rows, see measure_csv_header
  double seconds = 0.0;

  void require(bool ok, const std::string& what);
  nlohmann::json to_json() const;
};

struct NetSuiteConfig {
  std::vector<double> gammas;  // empty means pi/4 .. pi/256
  long long directions = 100000;
  std::uint64_t seed = 0;
  bool lemmas = true;  // pair decompositions, overlap and sector checks
  int cardinality_seeds = 1;
};

SuiteResult net_suite(const NetSuiteConfig& cfg, const Fixtures* fx);

SuiteResult slab_sphere_suite(int draws, std::uint64_t seed);
SuiteResult sphere_sphere_suite(std::uint64_t seed, const Fixtures* fx);
SuiteResult cone_cone_suite(std::uint64_t seed, const Fixtures* fx);
SuiteResult quadric_suite(std::uint64_t seed, const Fixtures* fx);

// Canonical-cell battery against the calibrated constant estimate.K.<theorem>.
SuiteResult battery_suite(Theorem t, int trials, std::uint64_t seed_begin, const Fixtures* fx,
                          NetLibrary* nets = nullptr);

// Template of the L1 sweep: all-plus signs, N = (16, 8, 8), L0 = L2 = 1/16 and
// trial supports restricted to a 1 rad sector.
EstimateCase l1_sweep_template(Theorem t);
SuiteResult l1_sweep_suite(Theorem t, int trials, std::uint64_t seed);

SuiteResult z16_suite();
SuiteResult null_form_suite();
SuiteResult nthm4_suite();
SuiteResult lthm1_suite(int trials, std::uint64_t seed_begin, const Fixtures* fx, NetLibrary* nets = nullptr);
SuiteResult weights_suite(long long samples, std::uint64_t seed, const Fixtures* fx);

struct CalibrationConfig {
  std::uint64_t seed = 0;
  int trials = 100;        // criterion batteries
  int minor_trials = 10;   // remaining theorems
  int net_seeds = 50;
  long long weight_samples = 10000000;
};

// Runs every calibration measurement and returns the fixture set.
Fixtures calibrate(const CalibrationConfig& cfg, const std::optional<std::string>& net_cache = std::nullopt);

}  // namespace rlab
