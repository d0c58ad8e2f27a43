#include "bgdp/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "bgdp/errors.hpp"

namespace bgdp {

void SpatialWindow::validate() const {
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
        std::isfinite(y_max)))
    throw ConfigError("window: bounds must be finite");
  if (!(x_min < x_max)) throw ConfigError("window: x_min must be < x_max");
  if (!(y_min < y_max)) throw ConfigError("window: y_min must be < y_max");
}

TimePartition::TimePartition(std::vector<double> breakpoints) : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.size() < 2) throw ConfigError("partition: need at least two breakpoints");
  if (breakpoints_.front() != 0.0) throw ConfigError("partition: first breakpoint must be 0");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i]) || !(breakpoints_[i] > breakpoints_[i - 1]))
      throw ConfigError("partition: breakpoints must be finite and strictly increasing");
  }
}

std::size_t TimePartition::period_of(double t) const {
  if (!(t >= 0.0 && t <= horizon())) throw DataError("time out of range");
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  auto idx = static_cast<std::size_t>(it - breakpoints_.begin());
  // upper_bound gives the first breakpoint > t, so the period is idx - 1;
  // t == T falls past the end and belongs to the last period.
  return std::min(idx - 1, periods() - 1);
}

TimePartition regular_partition(double horizon, std::size_t periods) {
  if (periods == 0) throw ConfigError("partition: P must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("partition: horizon must be > 0");
  std::vector<double> b(periods + 1);
  for (std::size_t i = 0; i <= periods; ++i)
    b[i] = horizon * static_cast<double>(i) / static_cast<double>(periods);
  b.back() = horizon;
  return TimePartition(std::move(b));
}

Catalog make_catalog(std::vector<Event> events, const SpatialWindow& window, double horizon,
                     OutOfWindowPolicy policy) {
  window.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("catalog: horizon must be > 0");
  Catalog cat;
  cat.window = window;
  cat.horizon = horizon;
  cat.events.reserve(events.size());
  std::size_t dropped = 0;
  for (auto& e : events) {
    if (!std::isfinite(e.x) || !std::isfinite(e.y)) throw DataError("coordinate not finite");
    if (!(e.t >= 0.0 && e.t <= horizon)) throw DataError("time out of range");
    if (!window.contains(e.x, e.y)) {
      if (policy == OutOfWindowPolicy::kError) throw DataError("event outside spatial window");
      ++dropped;
      continue;
    }
    cat.events.push_back(e);
  }
  if (dropped > 0)
    std::cerr << "warning: dropped " << dropped << " events outside the spatial window\n";
  std::stable_sort(cat.events.begin(), cat.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return cat;
}

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  char delim = line.find(',') != std::string_view::npos ? ',' : '\0';
  if (delim == ',') {
    std::size_t start = 0;
    while (true) {
      auto pos = line.find(',', start);
      out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    // whitespace-delimited fallback
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j + 1;
    }
  }
  return out;
}

}  // namespace

Catalog read_catalog(std::istream& in, const SpatialWindow& window, double horizon,
                     const LoadOptions& options) {
  std::vector<Event> events;
  std::string line;
  std::size_t lineno = 0;
  bool seen_data_or_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (lineno == 1 && sv.size() >= 3 && static_cast<unsigned char>(sv[0]) == 0xEF &&
        static_cast<unsigned char>(sv[1]) == 0xBB && static_cast<unsigned char>(sv[2]) == 0xBF)
      sv.remove_prefix(3);  // UTF-8 BOM
    if (sv.empty() || sv.front() == '#') continue;
    auto fields = split_fields(sv);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (fields.size() < 3 || fields.size() > 4)
      throw DataError(where + "expected 3 or 4 columns (x,y,t[,magnitude])");
    double x = 0, y = 0, t = 0;
    bool numeric_xy = parse_double(fields[0], x) && parse_double(fields[1], y);
    if (!seen_data_or_header && !numeric_xy) {
      seen_data_or_header = true;  // header row
      continue;
    }
    seen_data_or_header = true;
    if (!numeric_xy) throw DataError(where + "malformed coordinate");
    if (options.parse_time) {
      try {
        t = options.parse_time(fields[2]);
      } catch (const std::exception& e) {
        throw DataError(where + "malformed time: " + e.what());
      }
    } else if (!parse_double(fields[2], t)) {
      throw DataError(where + "malformed time");
    }
    Event ev{x, y, t, std::nullopt};
    if (fields.size() == 4 && !fields[3].empty()) {
      double m = 0;
      if (!parse_double(fields[3], m)) throw DataError(where + "malformed magnitude");
      ev.magnitude = m;
    }
    if (!std::isfinite(x) || !std::isfinite(y)) throw DataError(where + "coordinate not finite");
    if (!(t >= 0.0 && t <= horizon)) throw DataError(where + "time out of range");
    if (!window.contains(x, y) && options.out_of_window == OutOfWindowPolicy::kError)
      throw DataError(where + "event outside spatial window");
    events.push_back(ev);
  }
  return make_catalog(std::move(events), window, horizon, options.out_of_window);
}

Catalog load_catalog(const std::string& path, const SpatialWindow& window, double horizon,
                     const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open catalog file: " + path);
  return read_catalog(in, window, horizon, options);
}

void write_catalog(std::ostream& out, const Catalog& catalog,
                   const std::vector<std::string>& provenance) {
  for (const auto& p : provenance) out << "# " << p << '\n';
  bool with_mag = std::any_of(catalog.events.begin(), catalog.events.end(),
                              [](const Event& e) { return e.magnitude.has_value(); });
  out << (with_mag ? "x,y,t,magnitude\n" : "x,y,t\n");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : catalog.events) {
    out << e.x << ',' << e.y << ',' << e.t;
    if (with_mag) {
      out << ',';
      if (e.magnitude) out << *e.magnitude;
    }
    out << '\n';
  }
}

void save_catalog(const std::string& path, const Catalog& catalog,
                  const std::vector<std::string>& provenance) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write catalog file: " + path);
  write_catalog(out, catalog, provenance);
}

std::vector<std::vector<Event>> partition_events(const Catalog& catalog,
                                                 const TimePartition& partition) {
  const double tol = 1e-9 * std::max(1.0, catalog.horizon);
  if (std::abs(partition.horizon() - catalog.horizon) > tol)
    throw DataError("partition horizon does not match catalog horizon");
  std::vector<std::vector<Event>> out(partition.periods());
  for (const auto& e : catalog.events) out[partition.period_of(e.t)].push_back(e);
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t catalog_hash(const Catalog& catalog) {
  std::ostringstream os;
  write_catalog(os, catalog);
  return fnv1a(os.str());
}

}  // namespace bgdp
