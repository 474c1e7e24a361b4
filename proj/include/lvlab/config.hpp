#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace lvlab {

// Flat "name = value" configuration, '#' starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::optional<std::string> raw(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  // Keys never read through a getter; useful for spotting typos.
  std::set<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> touched_;
  std::string origin_;
};

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

}  // namespace lvlab
