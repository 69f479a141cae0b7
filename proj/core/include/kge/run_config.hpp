#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "kge/core.hpp"

namespace kge {

/// Flat key=value run configuration: one key per line, `#` comments.
/// Unknown keys are rejected; command-line flags override file values.
/// Every run writes the fully resolved configuration next to its outputs.
class RunConfig {
 public:
  static bool is_known(std::string_view key);

  /// Applies file entries that were not already set (flags win).
  void load_file(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);

  bool has(std::string_view key) const;
  std::string get(std::string_view key) const;  // missing -> InputError
  std::string get_or(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  void write_resolved(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace kge
