#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "rlab/errors.hpp"
#include "rlab/estimate.hpp"
#include "rlab/fixtures.hpp"
#include "rlab/sphere_net.hpp"
#include "rlab/suites.hpp"

using namespace rlab;

namespace {

constexpr std::uint64_t kSeed = 1000;

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<std::vector<SuiteResult>()> run;
};

SuiteResult merged(const std::string& name, const std::vector<SuiteResult>& parts) {
  SuiteResult r;
  r.name = name;
  for (const auto& p : parts) {
    for (const auto& f : p.failures) r.require(false, p.name + ": " + f);
    r.seconds += p.seconds;
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  Fixtures fx;
  try {
    fx = Fixtures::load();
  } catch (const std::exception& e) {
    std::cerr << "cannot load fixtures: " << e.what() << "\n";
    return 2;
  }
  std::cout << "fixtures " << fx.source() << " hash " << fx.hash() << "\n";

  std::vector<Criterion> criteria;
  criteria.push_back({1, "net covering and counting", 60, [&] {
                        NetSuiteConfig cfg;
                        cfg.directions = 100000;
                        cfg.seed = kSeed;
                        return std::vector<SuiteResult>{net_suite(cfg, &fx)};
                      }});
  criteria.push_back({2, "slab-sphere exactness", 60, [&] {
                        return std::vector<SuiteResult>{slab_sphere_suite(50, kSeed)};
                      }});
  criteria.push_back({3, "sphere-sphere boundedness", 180, [&] {
                        return std::vector<SuiteResult>{sphere_sphere_suite(kSeed, &fx)};
                      }});
  criteria.push_back({4, "cone-cone bounds and L scaling", 180, [&] {
                        return std::vector<SuiteResult>{cone_cone_suite(kSeed, &fx)};
                      }});
  criteria.push_back({5, "quadric area and failure witness", 120, [&] {
                        return std::vector<SuiteResult>{quadric_suite(kSeed, &fx)};
                      }});
  criteria.push_back({6, "bilinear estimates A110 A112 A114", 300, [&] {
                        std::vector<SuiteResult> out;
                        for (Theorem t : {Theorem::A110, Theorem::A112, Theorem::A114}) {
                          SuiteResult b = battery_suite(t, 100, kSeed, &fx);
                          SuiteResult s = l1_sweep_suite(t, 1, kSeed);
                          out.push_back(merged(theorem_name(t), {b, s}));
                        }
                        return out;
                      }});
  criteria.push_back({7, "Z16 sharpness", 300, [] { return std::vector<SuiteResult>{z16_suite()}; }});
  criteria.push_back({8, "null forms", 300, [] { return std::vector<SuiteResult>{null_form_suite()}; }});
  criteria.push_back({9, "concentration gain", 300, [] { return std::vector<SuiteResult>{nthm4_suite()}; }});
  criteria.push_back({10, "low-output estimate", 300, [&] {
                        return std::vector<SuiteResult>{lthm1_suite(100, kSeed, &fx)};
                      }});
  criteria.push_back({11, "weight geometry", 120, [&] {
                        return std::vector<SuiteResult>{weights_suite(1000000, kSeed, &fx)};
                      }});

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    std::vector<SuiteResult> parts;
    std::string error;
    try {
      parts = c.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = error.empty();
    std::vector<std::string> notes;
    if (!error.empty()) notes.push_back("exception: " + error);
    for (const auto& p : parts) {
      // Per-theorem runtime limits apply to each part.
      const double secs = parts.size() > 1 ? p.seconds : total;
      if (!p.pass) pass = false;
      for (const auto& f : p.failures) notes.push_back(f);
      if (secs > c.limit_seconds) {
        pass = false;
        notes.push_back(p.name + " took " + std::to_string(secs) + " s");
      }
    }
    if (!pass) ++failed;
    std::printf("criterion %2d %-36s %s (%.1f s)\n", c.id, c.name.c_str(), pass ? "PASS" : "FAIL", total);
    for (const auto& n : notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
