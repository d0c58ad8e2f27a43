#include "bgdp/config.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "bgdp/errors.hpp"

namespace bgdp {

namespace {

template <class T>
T field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key) || j.at(key).is_null()) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string(key) + " must be an object");
  return j.at(key);
}

template <class Fn>
auto named(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

json synthetic_preset() {
  const SyntheticIntensity spec = paper_synthetic_intensity();
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["experiment"] = "synthetic-paper";
  j["window"] = to_json(spec.support);
  j["horizon"] = spec.horizon;
  j["partition"] = {{"periods", 8}};
  j["catalog"] = {{"path", nullptr}, {"out_of_window", "error"}, {"time_format", "days"}};
  j["synthetic"] = to_json(spec);
  j["simulate"] = {{"seed", 20240601}};
  Hyperparams h;
  h.niw.mu0 = Vec2(1.0, 1.0);
  h.niw.eta = 0.1;
  h.niw.sigma0 = Mat2::Identity();
  h.niw.nu = 3.0;
  h.alpha0 = 1.0;
  h.gamma0 = 70.0;
  h.k = 0.1;
  h.L = 8;
  h.P = 8;
  j["hyperparams"] = to_json(h);
  j["sampler"] = to_json(SamplerConfig{});
  j["grid"] = {{"nx", 100}, {"ny", 100}};
  j["clustering"] = {{"k_max", 12}, {"k", nullptr}};
  j["summaries"] = {{"histogram_bins", 30}};
  return j;
}

// Stand-in for the southern Mexico catalog: a coastal band of Gaussian
// clusters over the observed domain with a rate increase in the last period.
SyntheticIntensity mexico_standin_intensity() {
  SyntheticIntensity s;
  s.support = {-105.5, -96.5, 15.0, 19.5};
  s.horizon = 5844.0;
  s.rate.breaks = {0.0, 4383.0};
  s.rate.rates = {0.12, 0.25};
  auto comp = [](double w, double x, double y, double sxx, double sxy, double syy) {
    WeightedGaussian g;
    g.weight = w;
    g.component.mean = Vec2(x, y);
    g.component.cov << sxx, sxy, sxy, syy;
    return g;
  };
  s.g1.gaussians = {comp(0.30, -101.0, 17.2, 0.40, -0.10, 0.12), comp(0.25, -98.8, 16.6, 0.30, -0.05, 0.10),
                    comp(0.20, -103.8, 18.4, 0.20, -0.05, 0.10), comp(0.15, -97.6, 16.0, 0.15, 0.0, 0.08)};
  s.g1.uniform_weight = 0.10;
  s.g2 = s.g1;
  s.h.kind = TemporalWeight::Kind::kConstant;
  s.h.value = 1.0;
  return s;
}

json mexico_preset() {
  const SyntheticIntensity spec = mexico_standin_intensity();
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["experiment"] = "mexico-paper";
  j["window"] = to_json(spec.support);
  j["horizon"] = spec.horizon;  // 2000-01-01 .. 2015-12-31 in days
  j["partition"] = {{"periods", 4}};
  j["catalog"] = {{"path", nullptr},
                  {"out_of_window", "error"},
                  {"time_format", "days"},
                  {"time_origin", "2000-01-01"}};
  j["synthetic"] = to_json(spec);
  j["simulate"] = {{"seed", 20000101}};
  Hyperparams h;
  h.niw.mu0 = Vec2(-102.0, 17.0);
  h.niw.eta = 0.01;
  h.niw.sigma0 = 2.0 * Mat2::Identity();
  h.niw.nu = 6.0;
  h.alpha0 = 1.0;
  h.gamma0 = 1.0;
  h.k = 0.01;
  h.L = 12;
  h.P = 4;
  h.mu_domain = spec.support;
  j["hyperparams"] = to_json(h);
  j["sampler"] = to_json(SamplerConfig{});
  j["grid"] = {{"nx", 100}, {"ny", 100}};
  j["clustering"] = {{"k_max", 12}, {"k", nullptr}};
  j["summaries"] = {{"histogram_bins", 30}};
  return j;
}

std::chrono::sys_seconds parse_stamp(std::string_view s) {
  auto num = [&](std::size_t pos, std::size_t len) {
    if (pos + len > s.size()) throw DataError("bad timestamp \"" + std::string(s) + "\"");
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc() || ptr != s.data() + pos + len)
      throw DataError("bad timestamp \"" + std::string(s) + "\"");
    return v;
  };
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw DataError("bad timestamp \"" + std::string(s) + "\"");
  using namespace std::chrono;
  const year_month_day ymd{year{num(0, 4)}, month{static_cast<unsigned>(num(5, 2))},
                           day{static_cast<unsigned>(num(8, 2))}};
  if (!ymd.ok()) throw DataError("bad calendar date \"" + std::string(s) + "\"");
  int hh = 0, mm = 0, ss = 0;
  if (s.size() > 10) {
    if (s[10] != 'T' && s[10] != ' ') throw DataError("bad timestamp \"" + std::string(s) + "\"");
    hh = num(11, 2);
    if (s.size() > 13) mm = num(14, 2);
    if (s.size() > 16) ss = num(17, 2);
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

}  // namespace

double iso8601_days(std::string_view stamp, std::string_view origin) {
  const auto d = parse_stamp(stamp) - parse_stamp(origin);
  return static_cast<double>(d.count()) / 86400.0;
}

void RunConfig::validate() const {
  if (schema_version != kConfigSchemaVersion)
    throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported");
  named("window", [&] { window.validate(); return 0; });
  if (!(horizon > 0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive and finite");
  named("partition", [&] { return partition(); });
  if (std::abs(partition().horizon() - horizon) > 1e-9 * horizon)
    throw ConfigError("partition.breakpoints must end at the horizon");
  if (hyper.P != partition().periods())
    throw ConfigError("hyperparams.P must equal the number of partition periods");
  if (!catalog_path && !synthetic) throw ConfigError("catalog.path is missing and no synthetic spec is given");
  if (catalog_path && !std::filesystem::exists(*catalog_path))
    throw ConfigError("catalog.path \"" + catalog_path->string() + "\" does not exist");
  named("grid", [&] { grid.validate(); return 0; });
  if (k_max < 2) throw ConfigError("clustering.k_max must be >= 2");
  if (clusters && *clusters < 1) throw ConfigError("clustering.k must be >= 1");
  if (histogram_bins < 1) throw ConfigError("summaries.histogram_bins must be >= 1");
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.schema_version = field<int>(j, "schema_version", kConfigSchemaVersion, "config");
  c.experiment = field<std::string>(j, "experiment", c.experiment, "config");
  if (!j.contains("window")) throw ConfigError("window is missing");
  c.window = named("window", [&] { return window_from_json(j.at("window")); });
  c.horizon = field<double>(j, "horizon", 0.0, "config");

  const json& cat = section(j, "catalog");
  if (auto p = field<std::string>(cat, "path", "", "catalog"); !p.empty()) {
    std::filesystem::path path(p);
    c.catalog_path = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  }
  const auto policy = field<std::string>(cat, "out_of_window", "error", "catalog");
  if (policy == "error") c.out_of_window = OutOfWindowPolicy::kError;
  else if (policy == "drop") c.out_of_window = OutOfWindowPolicy::kDrop;
  else throw ConfigError("catalog.out_of_window must be \"error\" or \"drop\"");
  const auto fmt = field<std::string>(cat, "time_format", "days", "catalog");
  if (fmt == "days") c.time_format = TimeFormat::kDays;
  else if (fmt == "iso8601") c.time_format = TimeFormat::kIso8601;
  else throw ConfigError("catalog.time_format must be \"days\" or \"iso8601\"");
  c.time_origin = field<std::string>(cat, "time_origin", c.time_origin, "catalog");
  if (c.time_format == TimeFormat::kIso8601)
    named("catalog.time_origin", [&] { return iso8601_days(c.time_origin, c.time_origin); });

  if (j.contains("synthetic") && !j.at("synthetic").is_null())
    c.synthetic = named("synthetic", [&] { return intensity_from_json(j.at("synthetic")); });
  c.simulate_seed = field<std::uint64_t>(section(j, "simulate"), "seed", c.simulate_seed, "simulate");

  if (!j.contains("hyperparams")) throw ConfigError("hyperparams is missing");
  c.hyper = named("hyperparams", [&] { return hyperparams_from_json(j.at("hyperparams")); });

  const json& part = section(j, "partition");
  if (part.contains("breakpoints")) {
    c.breakpoints = field<std::vector<double>>(part, "breakpoints", {}, "partition");
  } else {
    const auto periods = field<std::size_t>(part, "periods", c.hyper.P, "partition");
    if (periods < 1) throw ConfigError("partition.periods must be >= 1");
    if (c.horizon > 0) c.breakpoints = regular_partition(c.horizon, periods).breakpoints();
  }

  c.sampler = named("sampler", [&] { return sampler_config_from_json(section(j, "sampler")); });
  const json& grid = section(j, "grid");
  c.grid.window = grid.contains("window") ? named("grid.window", [&] { return window_from_json(grid.at("window")); })
                                          : c.window;
  c.grid.nx = field<std::size_t>(grid, "nx", c.grid.nx, "grid");
  c.grid.ny = field<std::size_t>(grid, "ny", c.grid.ny, "grid");
  const json& cl = section(j, "clustering");
  c.k_max = field<std::size_t>(cl, "k_max", c.k_max, "clustering");
  if (cl.contains("k") && !cl.at("k").is_null()) c.clusters = field<std::size_t>(cl, "k", 0, "clustering");
  c.histogram_bins = field<std::size_t>(section(j, "summaries"), "histogram_bins", c.histogram_bins, "summaries");
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["experiment"] = c.experiment;
  j["window"] = to_json(c.window);
  j["horizon"] = c.horizon;
  j["partition"] = {{"breakpoints", c.breakpoints}};
  j["catalog"] = {{"path", c.catalog_path ? json(std::filesystem::absolute(*c.catalog_path).string()) : json(nullptr)},
                  {"out_of_window", c.out_of_window == OutOfWindowPolicy::kError ? "error" : "drop"},
                  {"time_format", c.time_format == TimeFormat::kDays ? "days" : "iso8601"},
                  {"time_origin", c.time_origin}};
  j["synthetic"] = c.synthetic ? to_json(*c.synthetic) : json(nullptr);
  j["simulate"] = {{"seed", c.simulate_seed}};
  j["hyperparams"] = to_json(c.hyper);
  j["sampler"] = to_json(c.sampler);
  j["grid"] = {{"window", to_json(c.grid.window)}, {"nx", c.grid.nx}, {"ny", c.grid.ny}};
  j["clustering"] = {{"k_max", c.k_max}, {"k", c.clusters ? json(*c.clusters) : json(nullptr)}};
  j["summaries"] = {{"histogram_bins", c.histogram_bins}};
  return j;
}

std::optional<json> preset_config(std::string_view name) {
  if (name == "synthetic-paper") return synthetic_preset();
  if (name == "mexico-paper") return mexico_preset();
  return std::nullopt;
}

std::vector<std::string> preset_names() { return {"synthetic-paper", "mexico-paper"}; }

RunConfig load_run_config(const std::string& name_or_path) {
  if (auto preset = preset_config(name_or_path)) return run_config_from_json(*preset);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("cannot open config \"" + name_or_path + "\"");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config \"" + name_or_path + "\" is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, std::filesystem::path(name_or_path).parent_path());
}

LoadOptions load_options(const RunConfig& c) {
  LoadOptions o;
  o.out_of_window = c.out_of_window;
  if (c.time_format == TimeFormat::kIso8601) {
    o.parse_time = [origin = c.time_origin](std::string_view s) { return iso8601_days(s, origin); };
  }
  return o;
}

}  // namespace bgdp
