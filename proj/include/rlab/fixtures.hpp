#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace rlab {

// Calibrated constants keyed by dotted path, e.g. "net.pair_count_max".
class Fixtures {
 public:
  Fixtures() = default;
  explicit Fixtures(nlohmann::json data, std::string source = {});

  // Explicit path, else RESTRICTION_LAB_FIXTURES, else fixtures/fixtures.json
  // relative to the working directory.
  static Fixtures load(const std::optional<std::string>& path = std::nullopt);
  static std::string resolve_path(const std::optional<std::string>& path);

  double get(const std::string& key) const;
  double get_or(const std::string& key, double fallback) const;
  bool has(const std::string& key) const;
  void set(const std::string& key, double value);

  const nlohmann::json& data() const { return data_; }
  const std::string& source() const { return source_; }
  // FNV-1a of the serialized content, as 16 hex digits.
  std::string hash() const;

  void save(const std::string& path) const;

 private:
  const nlohmann::json* find(const std::string& key) const;
  nlohmann::json data_ = nlohmann::json::object();
  std::string source_;
};

}  // namespace rlab
