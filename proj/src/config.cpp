#include "lvlab/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lvlab/errors.hpp"

namespace lvlab {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'name = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty name or value");
    }
    if (cfg.entries_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::optional<std::string> KeyValueConfig::raw(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  touched_.insert(key);
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: " + *v);
  }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an unsigned integer: " + *v);
  }
  return out;
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: " + *v);
  }
  return out;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto v = raw(key);
  return v ? *v : fallback;
}

std::set<std::string> KeyValueConfig::unused_keys() const {
  std::set<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (!touched_.count(k)) out.insert(k);
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace lvlab
