#include "cavity/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cavity/units.hpp"

namespace cavity {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> unit_factor(Dimension dim, const std::string& unit,
                                  std::optional<double> energy_scale) {
  switch (dim) {
    case Dimension::energy:
      if (unit == "s^-1" || unit == "rad/s") return 1.0;
      if (unit == "K") return kelvin_to_rad_s(1.0);
      if (unit == "Omega" && energy_scale) return *energy_scale;
      return std::nullopt;
    case Dimension::temperature:
      if (unit == "K") return 1.0;
      return std::nullopt;
    case Dimension::field:
      if (unit == "T") return 1.0;
      if (unit == "mT") return 1e-3;
      return std::nullopt;
    case Dimension::density:
      if (unit == "cm^-3") return 1e6;
      if (unit == "m^-3") return 1.0;
      return std::nullopt;
    case Dimension::angle:
      if (unit == "deg") return std::numbers::pi / 180.0;
      if (unit == "rad") return 1.0;
      return std::nullopt;
    case Dimension::dimensionless:
      if (unit.empty() || unit == "1") return 1.0;
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::string internal_unit(Dimension dim) {
  switch (dim) {
    case Dimension::energy: return "rad/s";
    case Dimension::temperature: return "K";
    case Dimension::field: return "T";
    case Dimension::density: return "m^-3";
    case Dimension::angle: return "rad";
    case Dimension::dimensionless: return "1";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3)
        throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (cfg.sections_.count(section))
        throw ConfigError("duplicate section [" + section + "]", line);
      cfg.sections_[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    if (section.empty()) throw ConfigError("key outside of any section", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    auto& sec = cfg.sections_[section];
    if (sec.count(key)) throw ConfigError("duplicate key", line, section + "." + key);
    sec[key] = ConfigEntry{value, line, false};
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key);
}

ConfigEntry& ExperimentConfig::entry(const std::string& section, const std::string& key) {
  const auto it = sections_.find(section);
  if (it == sections_.end() || !it->second.count(key))
    throw ConfigError("missing required key", 0, section + "." + key);
  ConfigEntry& e = it->second.at(key);
  e.used = true;
  return e;
}

std::string ExperimentConfig::text(const std::string& section, const std::string& key) {
  return entry(section, key).value;
}

std::optional<std::string> ExperimentConfig::text_or(const std::string& section,
                                                     const std::string& key) {
  if (!has(section, key)) return std::nullopt;
  return text(section, key);
}

Quantity ExperimentConfig::quantity(const std::string& section, const std::string& key,
                                    Dimension dim, std::optional<double> energy_scale) {
  const ConfigEntry& e = entry(section, key);
  const std::string name = section + "." + key;
  std::string spaced = e.value;
  for (char& c : spaced)
    if (c == ',') c = ' ';
  std::istringstream tokens(spaced);
  std::vector<std::string> parts;
  for (std::string t; tokens >> t;) parts.push_back(t);
  if (parts.empty()) throw ConfigError("empty value", e.line, name);

  Quantity q;
  q.dimension = dim;
  if (!to_double(parts.back())) {
    q.unit = parts.back();
    parts.pop_back();
  }
  if (parts.empty()) throw ConfigError("value has a unit but no number", e.line, name);
  for (const auto& p : parts) {
    const auto v = to_double(p);
    if (!v) throw ConfigError("not a number: '" + p + "'", e.line, name);
    q.raw.push_back(*v);
  }
  if (q.unit.empty() && dim != Dimension::dimensionless)
    throw ConfigError("missing unit (expected " + internal_unit(dim) + " compatible)", e.line,
                      name);
  const auto factor = unit_factor(dim, q.unit, energy_scale);
  if (!factor) throw ConfigError("unsupported unit '" + q.unit + "'", e.line, name);
  q.factor = *factor;
  for (double r : q.raw) q.values.push_back(r * q.factor);
  echo_[name] = q;
  return q;
}

double ExperimentConfig::scalar(const std::string& section, const std::string& key, Dimension dim,
                                std::optional<double> energy_scale) {
  const Quantity q = quantity(section, key, dim, energy_scale);
  if (q.values.size() != 1)
    throw ConfigError("expected a single value", entry(section, key).line, section + "." + key);
  return q.values.front();
}

double ExperimentConfig::scalar_or(const std::string& section, const std::string& key,
                                   Dimension dim, double fallback,
                                   std::optional<double> energy_scale) {
  return has(section, key) ? scalar(section, key, dim, energy_scale) : fallback;
}

long long ExperimentConfig::integer(const std::string& section, const std::string& key) {
  const ConfigEntry& e = entry(section, key);
  long long v = 0;
  const auto* first = e.value.data();
  const auto* last = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("expected an integer", e.line, section + "." + key);
  return v;
}

long long ExperimentConfig::integer_or(const std::string& section, const std::string& key,
                                       long long fallback) {
  return has(section, key) ? integer(section, key) : fallback;
}

int ExperimentConfig::line_of(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return 0;
  const auto e = it->second.find(key);
  return e == it->second.end() ? 0 : e->second.line;
}

ConfigError ExperimentConfig::error(const std::string& section, const std::string& key,
                                    const std::string& message) const {
  return ConfigError(message, line_of(section, key), section + "." + key);
}

std::map<std::string, std::string> ExperimentConfig::entries() const {
  std::map<std::string, std::string> out;
  for (const auto& [section, keys] : sections_)
    for (const auto& [key, e] : keys) out[section + "." + key] = e.value;
  return out;
}

void ExperimentConfig::reject_unused() const {
  for (const auto& [section, keys] : sections_)
    for (const auto& [key, e] : keys)
      if (!e.used) throw ConfigError("unknown key", e.line, section + "." + key);
}

}  // namespace cavity
