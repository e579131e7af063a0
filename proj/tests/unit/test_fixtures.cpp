#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rlab/errors.hpp"
#include "rlab/fixtures.hpp"

using namespace rlab;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rlab_" + name)).string();
}

}  // namespace

TEST_CASE("dotted keys") {
  Fixtures fx;
  fx.set("net.pair_count_max", 23);
  fx.set("estimate.K.A110", 0.5);
  CHECK(fx.has("net.pair_count_max"));
  CHECK(fx.get("estimate.K.A110") == 0.5);
  CHECK(fx.data()["estimate"]["K"]["A110"] == 0.5);
  CHECK_FALSE(fx.has("estimate.K.A112"));
  CHECK_FALSE(fx.has("estimate.K"));
  CHECK_THROWS_AS(fx.get("estimate.K.A112"), UsageError);
  CHECK(fx.get_or("estimate.K.A112", 3.0) == 3.0);
}

TEST_CASE("save, load and hash") {
  Fixtures fx;
  fx.set("measure.quadric_C", 9.5);
  const std::string p = temp_path("fixtures.json");
  fx.save(p);
  const Fixtures back = Fixtures::load(p);
  CHECK(back.get("measure.quadric_C") == 9.5);
  CHECK(back.hash() == fx.hash());
  CHECK(back.hash().size() == 16);
  Fixtures other = fx;
  other.set("measure.quadric_C", 9.6);
  CHECK(other.hash() != fx.hash());
  std::filesystem::remove(p);
}

TEST_CASE("path resolution and errors") {
  CHECK(Fixtures::resolve_path(std::string("a.json")) == "a.json");
  const std::string p = temp_path("env.json");
  {
    std::ofstream f(p);
    f << R"({"weights": {"c": 0.02}})";
  }
  setenv("RESTRICTION_LAB_FIXTURES", p.c_str(), 1);
  CHECK(Fixtures::resolve_path(std::nullopt) == p);
  CHECK(Fixtures::load().get("weights.c") == 0.02);
  unsetenv("RESTRICTION_LAB_FIXTURES");
  CHECK(Fixtures::resolve_path(std::nullopt) == "fixtures/fixtures.json");
  CHECK_THROWS_AS(Fixtures::load(temp_path("missing.json")), UsageError);
  {
    std::ofstream f(p);
    f << "{not json";
  }
  CHECK_THROWS_AS(Fixtures::load(p), UsageError);
  std::filesystem::remove(p);
}
