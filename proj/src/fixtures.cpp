#include "rlab/fixtures.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

namespace {

int g_jobs = 0;

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string p;
  while (std::getline(ss, p, '.')) parts.push_back(p);
  return parts;
}

}  // namespace

void set_jobs(int j) { g_jobs = j < 0 ? 0 : j; }

int jobs() {
  if (g_jobs > 0) return g_jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

Fixtures::Fixtures(nlohmann::json data, std::string source) : data_(std::move(data)), source_(std::move(source)) {
  if (!data_.is_object()) throw UsageError("fixtures must be a JSON object");
}

std::string Fixtures::resolve_path(const std::optional<std::string>& path) {
  if (path && !path->empty()) return *path;
  if (const char* env = std::getenv("RESTRICTION_LAB_FIXTURES"); env && *env) return env;
  return "fixtures/fixtures.json";
}

Fixtures Fixtures::load(const std::optional<std::string>& path) {
  const std::string p = resolve_path(path);
  std::ifstream in(p);
  if (!in) throw UsageError("cannot open fixtures file " + p);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed fixtures file " + p + ": " + e.what());
  }
  return Fixtures(std::move(j), p);
}

const nlohmann::json* Fixtures::find(const std::string& key) const {
  const nlohmann::json* cur = &data_;
  for (const auto& part : split_key(key)) {
    if (!cur->is_object() || !cur->contains(part)) return nullptr;
    cur = &(*cur)[part];
  }
  return cur;
}

bool Fixtures::has(const std::string& key) const {
  const auto* v = find(key);
  return v && v->is_number();
}

double Fixtures::get(const std::string& key) const {
  const auto* v = find(key);
  if (!v || !v->is_number()) throw UsageError("fixture '" + key + "' missing from " + source_);
  return v->get<double>();
}

double Fixtures::get_or(const std::string& key, double fallback) const { return has(key) ? get(key) : fallback; }

void Fixtures::set(const std::string& key, double value) {
  nlohmann::json* cur = &data_;
  for (const auto& part : split_key(key)) cur = &(*cur)[part];
  *cur = value;
}

std::string Fixtures::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data_.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Fixtures::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write fixtures file " + path);
  out << data_.dump(2) << "\n";
}

}  // namespace rlab
