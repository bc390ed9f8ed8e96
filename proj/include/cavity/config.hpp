#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavity {

/// Error raised for unreadable or invalid configuration; carries the offending location.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0, std::string key = {})
      : std::runtime_error(message), line_(line), key_(std::move(key)) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

enum class Dimension { energy, temperature, field, density, angle, dimensionless };

std::string internal_unit(Dimension dim);

/// A parsed value with its unit annotation and the factor that maps it to internal units.
struct Quantity {
  std::vector<double> values;      // internal units
  std::vector<double> raw;         // as written
  std::string unit;                // as written ("" for dimensionless)
  double factor = 1.0;             // internal = raw * factor
  Dimension dimension = Dimension::dimensionless;
};

struct ConfigEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

/// Sectioned key = value file:
///
///   [cavity]
///   Omega = 1.4e9 s^-1
///   nu = 0, 0.25, 1
///
/// Physical values carry a trailing unit token. Every key must be consumed by the
/// experiment that reads the file; leftovers are reported by `reject_unused`.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string text(const std::string& section, const std::string& key);
  std::optional<std::string> text_or(const std::string& section, const std::string& key);

  /// `energy_scale` resolves the "Omega" unit (multiples of the cavity frequency).
  Quantity quantity(const std::string& section, const std::string& key, Dimension dim,
                    std::optional<double> energy_scale = std::nullopt);
  double scalar(const std::string& section, const std::string& key, Dimension dim,
                std::optional<double> energy_scale = std::nullopt);
  double scalar_or(const std::string& section, const std::string& key, Dimension dim,
                   double fallback, std::optional<double> energy_scale = std::nullopt);
  long long integer(const std::string& section, const std::string& key);
  long long integer_or(const std::string& section, const std::string& key, long long fallback);

  /// Line of an entry, 0 when absent.
  int line_of(const std::string& section, const std::string& key) const;

  /// ConfigError located at `section.key`.
  ConfigError error(const std::string& section, const std::string& key,
                    const std::string& message) const;

  /// Throws ConfigError naming the first key no reader asked for.
  void reject_unused() const;

  /// Every quantity read so far, keyed "section.key".
  const std::map<std::string, Quantity>& echo() const { return echo_; }

  /// Every entry as written, keyed "section.key".
  std::map<std::string, std::string> entries() const;

 private:
  ConfigEntry& entry(const std::string& section, const std::string& key);
  std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
  std::map<std::string, Quantity> echo_;
};

}  // namespace cavity
