#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bgdp/catalog.hpp"
#include "bgdp/intensity_sim.hpp"
#include "bgdp/model.hpp"
#include "bgdp/sampler.hpp"
#include "bgdp/serialization.hpp"
#include "bgdp/summaries.hpp"

namespace bgdp {

inline constexpr int kConfigSchemaVersion = 1;

enum class TimeFormat { kDays, kIso8601 };

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::string experiment = "unnamed";

  // Exactly one data source is used: a catalog file when `catalog_path` is
  // set, otherwise the synthetic intensity simulated with `simulate_seed`.
  std::optional<std::filesystem::path> catalog_path;
  OutOfWindowPolicy out_of_window = OutOfWindowPolicy::kError;
  TimeFormat time_format = TimeFormat::kDays;
  std::string time_origin = "1970-01-01";
  std::optional<SyntheticIntensity> synthetic;
  std::uint64_t simulate_seed = 1;

  SpatialWindow window;
  double horizon = 1.0;
  std::vector<double> breakpoints;  // S_1 = 0 < ... < S_{P+1} = horizon

  Hyperparams hyper;
  SamplerConfig sampler;
  GridSpec grid;
  std::size_t k_max = 12;
  std::optional<std::size_t> clusters;  // fixed k; eigengap when unset
  std::size_t histogram_bins = 30;

  TimePartition partition() const { return TimePartition(breakpoints); }
  void validate() const;
};

// Parses and validates; relative catalog paths resolve against base_dir.
// Errors are ConfigError and name the offending field.
RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir = {});
json to_json(const RunConfig& c);

// A preset name ("synthetic-paper", "mexico-paper") or a path to a JSON file.
RunConfig load_run_config(const std::string& name_or_path);
std::optional<json> preset_config(std::string_view name);
std::vector<std::string> preset_names();

// Days between `origin` and `stamp`, both "YYYY-MM-DD[ HH:MM[:SS]]" (a 'T'
// separator is also accepted). Calendar is proleptic Gregorian, UTC.
double iso8601_days(std::string_view stamp, std::string_view origin);

LoadOptions load_options(const RunConfig& c);

}  // namespace bgdp
