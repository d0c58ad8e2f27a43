// bgdp: simulate / fit / relabel / summarize / cluster driver.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bgdp/catalog.hpp"
#include "bgdp/clustering.hpp"
#include "bgdp/config.hpp"
#include "bgdp/errors.hpp"
#include "bgdp/intensity_sim.hpp"
#include "bgdp/relabel.hpp"
#include "bgdp/sampler.hpp"
#include "bgdp/serialization.hpp"
#include "bgdp/summaries.hpp"

namespace fs = std::filesystem;
using namespace bgdp;

namespace {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* v = std::getenv("BGDP_LOG");
    const std::string s = v ? v : "info";
    if (s == "error" || s == "quiet") return LogLevel::kError;
    if (s == "warn" || s == "warning") return LogLevel::kWarn;
    if (s == "debug" || s == "trace") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

std::mutex log_mutex;

void log(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(log_mutex);
  std::cerr << "[bgdp " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "bgdp-out";
  std::string catalog;
  std::string draws;
  std::string resume;
  std::string grid;
  std::size_t chains = 1;
  std::optional<std::size_t> k;
  bool dump_similarity = false;
};

RunConfig load_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  return load_run_config(o.config);
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// One file per subcommand so a later step never hides an earlier override.
void write_resolved_config(const RunConfig& cfg, const fs::path& dir, const std::string& command) {
  write_json(dir / (command + ".config.json"), to_json(cfg));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

// --------------------------------------------------------------- simulate

std::vector<std::string> simulation_provenance(const RunConfig& cfg, std::size_t events) {
  return {"experiment: " + cfg.experiment, "simulate.seed: " + std::to_string(cfg.simulate_seed),
          "spec_hash: " + std::to_string(json_hash(to_json(*cfg.synthetic))),
          "events: " + std::to_string(events)};
}

Catalog simulate_to(const RunConfig& cfg, const fs::path& dir) {
  if (!cfg.synthetic) throw ConfigError("synthetic is missing; nothing to simulate");
  auto sim = simulate_thinning(*cfg.synthetic, cfg.window, cfg.horizon, cfg.simulate_seed);
  save_catalog((dir / "catalog.csv").string(), sim.catalog, simulation_provenance(cfg, sim.catalog.size()));
  std::ofstream src(dir / "catalog_sources.csv");
  src << "event,source\n";
  for (std::size_t i = 0; i < sim.source.size(); ++i) src << i << ',' << sim.source[i] << '\n';
  log(LogLevel::kInfo, "simulated " + std::to_string(sim.catalog.size()) + " events -> " +
                           (dir / "catalog.csv").string());
  return sim.catalog;
}

int cmd_simulate(const Options& o) {
  RunConfig cfg = load_config(o);
  if (o.seed) cfg.simulate_seed = *o.seed;
  const fs::path dir = out_dir(o);
  simulate_to(cfg, dir);
  write_resolved_config(cfg, dir, "simulate");
  return 0;
}

// A catalog named on the command line or in the config wins; otherwise a
// previously simulated out/catalog.csv; otherwise simulate now.
Catalog obtain_catalog(const RunConfig& cfg, const Options& o, const fs::path& dir) {
  if (!o.catalog.empty()) return load_catalog(o.catalog, cfg.window, cfg.horizon, load_options(cfg));
  if (cfg.catalog_path) return load_catalog(cfg.catalog_path->string(), cfg.window, cfg.horizon, load_options(cfg));
  const fs::path simulated = dir / "catalog.csv";
  if (fs::exists(simulated)) {
    LoadOptions opts;
    opts.out_of_window = cfg.out_of_window;
    return load_catalog(simulated.string(), cfg.window, cfg.horizon, opts);
  }
  return simulate_to(cfg, dir);
}

// -------------------------------------------------------------------- fit

// Serializes all draw-file writes from the worker chains.
class ChainFiles {
 public:
  ChainFiles(const fs::path& dir, const json& header) : dir_(dir), header_(header) {}

  static fs::path chain_path(const fs::path& dir, int c) { return dir / ("chain-" + std::to_string(c) + ".jsonl"); }

  void open(int c, std::uint64_t seed, bool append) {
    std::lock_guard lock(mutex_);
    json h = header_;
    h["chain"] = c;
    h["seed"] = seed;
    writers_.insert_or_assign(c, std::make_unique<DrawWriter>(chain_path(dir_, c).string(), h, append));
  }
  void draw(int c, const Draw& d) {
    std::lock_guard lock(mutex_);
    writers_.at(c)->write(d);
  }
  void finish(int c, const AcceptanceSummary& acc) {
    std::lock_guard lock(mutex_);
    json r = to_json(acc);
    r["type"] = "acceptance";
    r["chain"] = c;
    writers_.at(c)->write_record(r);
    writers_.at(c)->flush();
    writers_.erase(c);
  }
  void checkpoint(const ChainState& chain, const Hyperparams& hyper, const SamplerConfig& config) {
    std::lock_guard lock(mutex_);
    if (auto it = writers_.find(chain.chain); it != writers_.end()) it->second->flush();
    save_checkpoint((dir_ / ("checkpoint-" + std::to_string(chain.chain) + ".json")).string(), chain, hyper,
                    config);
  }

 private:
  fs::path dir_;
  json header_;
  std::mutex mutex_;
  std::map<int, std::unique_ptr<DrawWriter>> writers_;
};

bool chain_complete(const fs::path& path) {
  if (!fs::exists(path)) return false;
  std::ifstream in(path);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return !last.empty() && json::parse(last).value("type", std::string()) == "acceptance";
}

// Drops draws recorded after the checkpoint so a resumed chain appends
// exactly the sweeps it replays.
void truncate_chain_file(const fs::path& path, std::size_t sweep) {
  if (!fs::exists(path)) throw DataError("cannot resume: " + path.string() + " is missing");
  std::ifstream in(path);
  std::vector<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const auto type = j.value("type", std::string());
    if (type == "header" || (type == "draw" && j.value("sweep", std::size_t{0}) <= sweep)) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

std::uint64_t chain_seed(std::uint64_t base, int c) {
  return c == 0 ? base : derive_seed(base, static_cast<std::uint64_t>(c));
}

int cmd_fit(const Options& o) {
  RunConfig cfg = load_config(o);
  if (o.seed) cfg.sampler.seed = *o.seed;
  if (o.chains < 1) throw ConfigError("--chains must be >= 1");
  const fs::path dir = out_dir(o);
  const Catalog catalog = obtain_catalog(cfg, o, dir);
  const TimePartition partition = cfg.partition();
  const ModelData data(catalog, partition);
  write_resolved_config(cfg, dir, "fit");
  log(LogLevel::kInfo, "fitting " + std::to_string(data.size()) + " events, P=" + std::to_string(cfg.hyper.P) +
                           ", L=" + std::to_string(cfg.hyper.L) + ", " + std::to_string(o.chains) + " chain(s)");

  json header{{"experiment", cfg.experiment},
              {"config", to_json(cfg)},
              {"hyperparams", to_json(cfg.hyper)},
              {"sampler", to_json(cfg.sampler)},
              {"catalog_hash", catalog_hash(catalog)},
              {"events", data.size()},
              {"breakpoints", partition.breakpoints()},
              {"config_hash", json_hash(to_json(cfg.sampler))}};
  ChainFiles files(dir, header);

  std::optional<ChainState> resumed;
  if (!o.resume.empty()) {
    resumed = load_checkpoint(o.resume, cfg.hyper, cfg.sampler);
    if (resumed->chain < 0 || static_cast<std::size_t>(resumed->chain) >= o.chains)
      throw ConfigError("--resume checkpoint belongs to chain " + std::to_string(resumed->chain) +
                        " but --chains is " + std::to_string(o.chains));
    log(LogLevel::kInfo, "resuming chain " + std::to_string(resumed->chain) + " at sweep " +
                             std::to_string(resumed->sweep));
  }

  std::vector<int> to_run;
  for (int c = 0; c < static_cast<int>(o.chains); ++c) {
    const bool is_resumed = resumed && resumed->chain == c;
    if (resumed && !is_resumed && chain_complete(ChainFiles::chain_path(dir, c))) continue;
    if (is_resumed) truncate_chain_file(ChainFiles::chain_path(dir, c), resumed->sweep);
    files.open(c, chain_seed(cfg.sampler.seed, c), is_resumed);
    to_run.push_back(c);
  }

  std::vector<std::exception_ptr> errors(o.chains);
  auto run_one = [&](int c) {
    try {
      RunOptions ro;
      ro.chain = c;
      ro.seed = chain_seed(cfg.sampler.seed, c);
      ro.keep_draws = false;
      if (resumed && resumed->chain == c) ro.resume_from = resumed;
      ro.on_draw = [&files, c](const Draw& d) { files.draw(c, d); };
      ro.on_checkpoint = [&](const ChainState& s) { files.checkpoint(s, cfg.hyper, cfg.sampler); };
      const std::size_t every = std::max<std::size_t>(1, cfg.sampler.sweeps / 10);
      ro.on_progress = [&, c, every](std::size_t sweep, const ChainState&) {
        if (sweep % every == 0)
          log(LogLevel::kInfo, "chain " + std::to_string(c) + ": sweep " + std::to_string(sweep) + "/" +
                                   std::to_string(cfg.sampler.sweeps));
      };
      const PosteriorDraws result = run_chain(data, cfg.hyper, cfg.sampler, ro);
      files.finish(c, result.acceptance);
      for (std::size_t p = 0; p < cfg.hyper.P; ++p)
        log(LogLevel::kDebug, "chain " + std::to_string(c) + " period " + std::to_string(p) +
                                  ": alpha acceptance " + format_double(result.acceptance.alpha[p].rate()) +
                                  ", beta acceptance " + format_double(result.acceptance.beta[p].rate()));
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> workers;
    for (int c : to_run) workers.emplace_back(run_one, c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // merge the per-chain files, chain order
  std::ofstream merged(dir / "draws.jsonl", std::ios::trunc);
  json mh = header;
  mh["type"] = "header";
  mh["chains"] = o.chains;
  json seeds = json::array();
  for (int c = 0; c < static_cast<int>(o.chains); ++c) seeds.push_back(chain_seed(cfg.sampler.seed, c));
  mh["seeds"] = seeds;
  mh["seed"] = cfg.sampler.seed;
  merged << mh.dump() << '\n';
  std::size_t total = 0;
  for (int c = 0; c < static_cast<int>(o.chains); ++c) {
    std::ifstream in(ChainFiles::chain_path(dir, c));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const auto type = j.value("type", std::string());
      if (type == "header") continue;
      if (type == "draw") ++total;
      merged << line << '\n';
    }
  }
  log(LogLevel::kInfo, "wrote " + std::to_string(total) + " draws -> " + (dir / "draws.jsonl").string());
  return 0;
}

// ---------------------------------------------------------------- relabel

fs::path default_draws(const Options& o, const fs::path& dir, bool prefer_relabeled) {
  if (!o.draws.empty()) return o.draws;
  if (prefer_relabeled && fs::exists(dir / "draws_relabeled.jsonl")) return dir / "draws_relabeled.jsonl";
  return dir / "draws.jsonl";
}

int cmd_relabel(const Options& o) {
  const RunConfig cfg = load_config(o);
  const fs::path dir = out_dir(o);
  const fs::path in = default_draws(o, dir, false);
  DrawFile file = read_draws(in.string());
  PosteriorDraws draws;
  draws.draws = std::move(file.draws);
  const Relabeling rel = compute_relabeling(draws);
  const PosteriorDraws relabeled = apply_relabeling(draws, rel);

  json header = file.header;
  header.erase("type");
  header["relabeled_from"] = in.string();
  DrawWriter writer((dir / "draws_relabeled.jsonl").string(), header);
  for (const auto& d : relabeled.draws) writer.write(d);
  for (const auto& r : file.records) writer.write_record(r);
  json record{{"type", "relabeling"},
              {"method", "ecr-map-pivot"},
              {"pivot_index", rel.pivot_index},
              {"pivot_sweep", draws.draws[rel.pivot_index].sweep},
              {"pivot_chain", draws.draws[rel.pivot_index].chain},
              {"permutations", rel.permutations},
              {"mismatches", rel.mismatches}};
  writer.write_record(record);
  writer.flush();

  const std::size_t max_lag = std::min<std::size_t>(20, relabeled.draws.size() > 1 ? relabeled.draws.size() - 1 : 0);
  json diag{{"pivot_index", rel.pivot_index}, {"max_lag", max_lag}};
  if (max_lag > 0) diag["component_mean_autocorrelation"] = component_trace_autocorrelation(relabeled, max_lag);
  write_json(dir / "relabel_diagnostics.json", diag);
  write_resolved_config(cfg, dir, "relabel");
  log(LogLevel::kInfo, "relabeled " + std::to_string(relabeled.draws.size()) + " draws against pivot " +
                           std::to_string(rel.pivot_index));
  return 0;
}

// -------------------------------------------------------------- summarize

GridSpec parse_grid(const std::string& spec, GridSpec grid) {
  const auto x = spec.find('x');
  if (x == std::string::npos) throw ConfigError("--grid must look like <nx>x<ny>");
  try {
    std::size_t used = 0;
    grid.nx = std::stoul(spec.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(spec);
    grid.ny = std::stoul(spec.substr(x + 1), &used);
    if (used != spec.size() - x - 1) throw std::invalid_argument(spec);
  } catch (const std::logic_error&) {
    throw ConfigError("--grid must look like <nx>x<ny>");
  }
  grid.validate();
  return grid;
}

int cmd_summarize(const Options& o) {
  RunConfig cfg = load_config(o);
  if (!o.grid.empty()) cfg.grid = parse_grid(o.grid, cfg.grid);
  const fs::path dir = out_dir(o);
  const fs::path in = default_draws(o, dir, true);

  FieldAccumulator acc(cfg.grid, cfg.hyper.P);
  std::vector<std::vector<double>> gammas(cfg.hyper.P);
  std::ofstream leak(dir / "leakage.csv");
  leak << "chain,sweep,period,leaked_mass\n";
  for_each_draw(in.string(), [&](const Draw& d) {
    if (d.state.periods() != cfg.hyper.P) throw DataError("draw period count does not match the config");
    acc.add(d.state);
    for (std::size_t p = 0; p < cfg.hyper.P; ++p) {
      gammas[p].push_back(d.state.gamma[p]);
      leak << d.chain << ',' << d.sweep << ',' << p << ',' << format_double(leaked_mass(d.state, p, cfg.window))
           << '\n';
    }
  });
  if (acc.draws() == 0) throw DataError("no draws");
  const IntensityField field = acc.finish();

  std::ofstream grid(dir / "intensity_grid.csv");
  grid << "period,x,y,mean,sd,cv,transparency\n";
  for (std::size_t p = 0; p < field.periods; ++p)
    for (std::size_t j = 0; j < cfg.grid.ny; ++j)
      for (std::size_t i = 0; i < cfg.grid.nx; ++i) {
        const std::size_t n = j * cfg.grid.nx + i;
        grid << p << ',' << format_double(cfg.grid.x(i)) << ',' << format_double(cfg.grid.y(j)) << ','
             << format_double(field.mean[p][n]) << ',' << format_double(field.sd[p][n]) << ','
             << format_double(field.cv[p][n]) << ',' << format_double(field.transparency[p][n]) << '\n';
      }

  json table = json::array();
  std::ofstream csv(dir / "gamma_summary.csv");
  csv << "period,mean,sd,median,q025,q975,q05,q95,q25,q75\n";
  for (std::size_t p = 0; p < cfg.hyper.P; ++p) {
    const GammaSummary g = summarize_values(gammas[p], p, cfg.histogram_bins);
    table.push_back({{"period", p},
                     {"start", cfg.partition().start(p)},
                     {"end", cfg.partition().end(p)},
                     {"mean", g.mean},
                     {"sd", g.sd},
                     {"median", g.median},
                     {"intervals",
                      {{"50", g.intervals[0]}, {"90", g.intervals[1]}, {"95", g.intervals[2]}}},
                     {"histogram", {{"lo", g.histogram.lo}, {"hi", g.histogram.hi}, {"counts", g.histogram.counts}}}});
    csv << p << ',' << format_double(g.mean) << ',' << format_double(g.sd) << ',' << format_double(g.median) << ','
        << format_double(g.intervals[2][0]) << ',' << format_double(g.intervals[2][1]) << ','
        << format_double(g.intervals[1][0]) << ',' << format_double(g.intervals[1][1]) << ','
        << format_double(g.intervals[0][0]) << ',' << format_double(g.intervals[0][1]) << '\n';
  }
  write_json(dir / "gamma_summary.json",
             {{"draws", acc.draws()}, {"cv_min", format_double(field.cv_min)}, {"periods", table}});
  write_resolved_config(cfg, dir, "summarize");
  log(LogLevel::kInfo, "summarized " + std::to_string(acc.draws()) + " draws on a " + std::to_string(cfg.grid.nx) +
                           "x" + std::to_string(cfg.grid.ny) + " grid");
  return 0;
}

// ---------------------------------------------------------------- cluster

int cmd_cluster(const Options& o) {
  RunConfig cfg = load_config(o);
  if (o.k) cfg.clusters = *o.k;
  const fs::path dir = out_dir(o);
  const fs::path in = default_draws(o, dir, false);
  const Catalog catalog = obtain_catalog(cfg, o, dir);
  const ModelData data(catalog, cfg.partition());

  std::vector<std::vector<int>> allocations;
  for_each_draw(in.string(), [&](const Draw& d) {
    if (d.state.z.size() != data.size())
      throw DataError("draw allocates " + std::to_string(d.state.z.size()) + " events but the catalog has " +
                      std::to_string(data.size()));
    allocations.push_back(d.state.z);
  });
  if (allocations.empty()) throw DataError("no draws");
  if (data.size() == 0) throw DataError("catalog has no events to cluster");

  const SimilarityMatrix sim = similarity_matrix(allocations);
  const DahlResult dahl = dahl_select(allocations, sim);
  const Eigen::VectorXd spectrum = laplacian_spectrum(sim);
  const bool fixed = cfg.clusters.has_value();
  const std::size_t k = fixed ? *cfg.clusters : eigengap_k(sim, cfg.k_max);
  if (k > data.size()) throw ConfigError("clustering.k exceeds the number of events");
  const std::vector<int> labels = spectral_cluster(sim, k);

  std::ofstream out(dir / "clusters.csv");
  out << "event,x,y,t,period,cluster,dahl_label\n";
  const auto events = data.events();
  for (std::size_t i = 0; i < data.size(); ++i)
    out << i << ',' << format_double(events[i].x) << ',' << format_double(events[i].y) << ','
        << format_double(events[i].t) << ',' << data.period_of(i) << ',' << labels[i] << ','
        << dahl.allocation[i] << '\n';

  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  const std::size_t shown = std::min<std::size_t>(static_cast<std::size_t>(spectrum.size()), cfg.k_max + 1);
  std::vector<double> eig(spectrum.data(), spectrum.data() + shown);
  write_json(dir / "cluster_summary.json", {{"k", k},
                                            {"k_source", fixed ? "fixed" : "eigengap"},
                                            {"k_max", cfg.k_max},
                                            {"eigenvalues", eig},
                                            {"cluster_sizes", sizes},
                                            {"draws", allocations.size()},
                                            {"dahl", {{"index", dahl.index}, {"loss", dahl.loss}}}});
  if (o.dump_similarity) {
    std::ofstream s(dir / "similarity.csv");
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
      for (Eigen::Index j = 0; j < sim.cols(); ++j) s << (j ? "," : "") << format_double(sim(i, j));
      s << '\n';
    }
  }
  write_resolved_config(cfg, dir, "cluster");
  log(LogLevel::kInfo, "clustered " + std::to_string(data.size()) + " events into k=" + std::to_string(k) +
                           (fixed ? " (fixed)" : " (eigengap)"));
  return 0;
}

int cmd_presets(const Options& o) {
  const fs::path dir = out_dir(o);
  for (const auto& name : preset_names()) write_json(dir / (name + ".json"), *preset_config(name));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal background intensity estimation with graphical Dirichlet process mixtures"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "preset name (synthetic-paper, mexico-paper) or JSON config path")
        ->required();
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  auto draws_opt = [&](CLI::App* sub) { sub->add_option("--draws", o.draws, "draws file (JSON lines)"); };
  auto catalog_opt = [&](CLI::App* sub) {
    sub->add_option("--catalog", o.catalog, "catalog file overriding the config");
  };

  auto* simulate = app.add_subcommand("simulate", "simulate a catalog from the configured intensity by thinning");
  common(simulate);
  simulate->add_option("--seed", o.seed, "simulation seed");

  auto* fit = app.add_subcommand("fit", "run the MCMC sampler and write posterior draws");
  common(fit);
  catalog_opt(fit);
  fit->add_option("--seed", o.seed, "sampler seed (chain c > 0 derives its own)");
  fit->add_option("--chains", o.chains, "number of parallel chains")->capture_default_str();
  fit->add_option("--resume", o.resume, "checkpoint file to continue from");

  auto* relabel = app.add_subcommand("relabel", "undo label switching across draws");
  common(relabel);
  draws_opt(relabel);

  auto* summarize = app.add_subcommand("summarize", "intensity grids, CV/transparency maps and gamma tables");
  common(summarize);
  draws_opt(summarize);
  summarize->add_option("--grid", o.grid, "grid resolution <nx>x<ny>");

  auto* cluster = app.add_subcommand("cluster", "posterior similarity, Dahl selection and spectral clustering");
  common(cluster);
  draws_opt(cluster);
  catalog_opt(cluster);
  cluster->add_option("--k", o.k, "fixed cluster count (skips the eigengap)");
  cluster->add_flag("--dump-similarity", o.dump_similarity, "write the dense similarity matrix");

  auto* presets = app.add_subcommand("presets", "write the bundled preset configs");
  presets->add_option("--out", o.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*fit) return cmd_fit(o);
    if (*relabel) return cmd_relabel(o);
    if (*summarize) return cmd_summarize(o);
    if (*cluster) return cmd_cluster(o);
    if (*presets) return cmd_presets(o);
  } catch (const ConfigError& e) {
    log(LogLevel::kError, std::string("config error: ") + e.what());
    return 2;
  } catch (const DataError& e) {
    log(LogLevel::kError, std::string("data error: ") + e.what());
    return 3;
  } catch (const NumericError& e) {
    log(LogLevel::kError, std::string("numeric failure: ") + e.what());
    return 4;
  } catch (const std::exception& e) {
    log(LogLevel::kError, e.what());
    return 1;
  }
  return 0;
}
