#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bgdp {

struct Event {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;  // days from the start of the observation window
  std::optional<double> magnitude;

  bool operator==(const Event&) const = default;
};

struct SpatialWindow {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  // Throws ConfigError unless x_min < x_max and y_min < y_max.
  void validate() const;
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  double area() const { return (x_max - x_min) * (y_max - y_min); }

  bool operator==(const SpatialWindow&) const = default;
};

// Breakpoints S_1 = 0 < S_2 < ... < S_{P+1} = T. Period p covers
// [S_p, S_{p+1}); the last period is closed at T.
class TimePartition {
 public:
  explicit TimePartition(std::vector<double> breakpoints);

  std::size_t periods() const { return breakpoints_.size() - 1; }
  double horizon() const { return breakpoints_.back(); }
  double length(std::size_t p) const { return breakpoints_[p + 1] - breakpoints_[p]; }
  double start(std::size_t p) const { return breakpoints_[p]; }
  double end(std::size_t p) const { return breakpoints_[p + 1]; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  // Index of the period containing t; t must lie in [0, T].
  std::size_t period_of(double t) const;

  bool operator==(const TimePartition&) const = default;

 private:
  std::vector<double> breakpoints_;
};

TimePartition regular_partition(double horizon, std::size_t periods);

enum class OutOfWindowPolicy { kError, kDrop };

struct Catalog {
  std::vector<Event> events;  // sorted by t
  SpatialWindow window;
  double horizon = 0.0;

  std::size_t size() const { return events.size(); }
  bool operator==(const Catalog&) const = default;
};

struct LoadOptions {
  OutOfWindowPolicy out_of_window = OutOfWindowPolicy::kError;
  // Converts the raw time field to days. Defaults to plain decimal parsing;
  // the CLI installs a calendar parser when the config asks for one.
  std::function<double(std::string_view)> parse_time;
};

// Validates, sorts (stable in t) and window-checks a list of events.
Catalog make_catalog(std::vector<Event> events, const SpatialWindow& window, double horizon,
                     OutOfWindowPolicy policy = OutOfWindowPolicy::kError);

Catalog load_catalog(const std::string& path, const SpatialWindow& window, double horizon,
                     const LoadOptions& options = {});
Catalog read_catalog(std::istream& in, const SpatialWindow& window, double horizon,
                     const LoadOptions& options = {});

// Writes `x,y,t[,magnitude]` with a header line. Comment lines from
// `provenance` are emitted first, each prefixed with "# ".
void write_catalog(std::ostream& out, const Catalog& catalog,
                   const std::vector<std::string>& provenance = {});
void save_catalog(const std::string& path, const Catalog& catalog,
                  const std::vector<std::string>& provenance = {});

std::vector<std::vector<Event>> partition_events(const Catalog& catalog,
                                                 const TimePartition& partition);

// FNV-1a over the catalog's serialized form; used as provenance in draw files.
std::uint64_t catalog_hash(const Catalog& catalog);
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace bgdp
