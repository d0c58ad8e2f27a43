#include "bgdp/serialization.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bgdp/errors.hpp"

namespace bgdp {

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_neg_inf(const json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + "." + key + " is missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <class T>
T optional_field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

Mat2 mat2_from_json(const json& j, const std::string& where) {
  Mat2 m;
  try {
    if (j.is_array() && j.size() == 2 && j[0].is_array()) {
      m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>();
    } else if (j.is_array() && j.size() == 3) {  // [s11, s12, s22]
      m << j[0].get<double>(), j[1].get<double>(), j[1].get<double>(), j[2].get<double>();
    } else if (j.is_number()) {  // multiple of the identity
      m = j.get<double>() * Mat2::Identity();
    } else {
      throw ConfigError(where + " must be a 2x2 matrix");
    }
  } catch (const json::exception&) {
    throw ConfigError(where + " must be a 2x2 matrix");
  }
  return m;
}

Vec2 vec2_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be a 2-vector");
  try {
    return Vec2(j[0].get<double>(), j[1].get<double>());
  } catch (const json::exception&) {
    throw ConfigError(where + " must be a 2-vector");
  }
}

json mat2_to_json(const Mat2& m) { return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})}); }

}  // namespace

json to_json(const GaussianComponent& c) {
  return {{"mean", {c.mean(0), c.mean(1)}}, {"cov", {c.cov(0, 0), c.cov(0, 1), c.cov(1, 1)}}};
}

GaussianComponent gaussian_from_json(const json& j) {
  GaussianComponent c;
  c.mean = vec2_from_json(j.at("mean"), "component.mean");
  c.cov = mat2_from_json(j.at("cov"), "component.cov");
  return c;
}

json to_json(const SpatialWindow& w) {
  return {{"x_min", w.x_min}, {"x_max", w.x_max}, {"y_min", w.y_min}, {"y_max", w.y_max}};
}

SpatialWindow window_from_json(const json& j) {
  SpatialWindow w;
  if (j.is_array() && j.size() == 2) {  // [[x_min, x_max], [y_min, y_max]]
    w = {j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>()};
  } else {
    w.x_min = require<double>(j, "x_min", "window");
    w.x_max = require<double>(j, "x_max", "window");
    w.y_min = require<double>(j, "y_min", "window");
    w.y_max = require<double>(j, "y_max", "window");
  }
  w.validate();
  return w;
}

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index p = 0; p < m.rows(); ++p) {
    json row = json::array();
    for (Eigen::Index l = 0; l < m.cols(); ++l) row.push_back(m(p, l));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, const char* name) {
  const auto P = static_cast<Eigen::Index>(rows.size());
  const auto L = P > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(P, L);
  for (Eigen::Index p = 0; p < P; ++p) {
    if (static_cast<Eigen::Index>(rows[p].size()) != L) throw DataError(std::string("ragged ") + name + " matrix");
    for (Eigen::Index l = 0; l < L; ++l) m(p, l) = rows[p][l].get<double>();
  }
  return m;
}

}  // namespace

json to_json(const LatentState& s) {
  json psi = json::array();
  for (const auto& c : s.psi) psi.push_back(to_json(c));
  json j = {{"alpha", s.alpha}, {"beta", matrix_rows(s.beta)}, {"gamma", s.gamma}, {"psi", psi}, {"z", s.z}};
  if (s.has_log_beta()) j["log_beta"] = matrix_rows(s.log_beta);
  return j;
}

LatentState latent_state_from_json(const json& j) {
  LatentState s;
  try {
    s.alpha = j.at("alpha").get<std::vector<double>>();
    s.gamma = j.at("gamma").get<std::vector<double>>();
    s.z = j.at("z").get<std::vector<int>>();
    // log weights are authoritative when present; beta is their exp
    if (j.contains("log_beta")) {
      s.set_log_beta(matrix_from_rows(j.at("log_beta"), "log_beta"));
    } else {
      s.beta = matrix_from_rows(j.at("beta"), "beta");
    }
    for (const auto& c : j.at("psi")) s.psi.push_back(gaussian_from_json(c));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed state record: ") + e.what());
  }
  return s;
}

json to_json(const Hyperparams& h) {
  json j = {{"niw",
             {{"mu0", {h.niw.mu0(0), h.niw.mu0(1)}},
              {"eta", h.niw.eta},
              {"sigma0", mat2_to_json(h.niw.sigma0)},
              {"nu", h.niw.nu}}},
            {"alpha0", h.alpha0},
            {"gamma0", h.gamma0},
            {"k", h.k},
            {"L", h.L},
            {"P", h.P},
            {"mu_domain", nullptr}};
  if (h.mu_domain) j["mu_domain"] = to_json(*h.mu_domain);
  return j;
}

Hyperparams hyperparams_from_json(const json& j) {
  const std::string w = "hyperparams";
  Hyperparams h;
  if (!j.contains("niw")) throw ConfigError("hyperparams.niw is missing");
  const json& n = j.at("niw");
  h.niw.mu0 = vec2_from_json(n.value("mu0", json()), "hyperparams.niw.mu0");
  h.niw.eta = require<double>(n, "eta", w + ".niw");
  h.niw.sigma0 = mat2_from_json(n.value("sigma0", json()), "hyperparams.niw.sigma0");
  h.niw.nu = require<double>(n, "nu", w + ".niw");
  h.alpha0 = require<double>(j, "alpha0", w);
  h.gamma0 = require<double>(j, "gamma0", w);
  h.k = require<double>(j, "k", w);
  h.L = require<std::size_t>(j, "L", w);
  h.P = optional_field<std::size_t>(j, "P", 1, w);
  if (j.contains("mu_domain") && !j.at("mu_domain").is_null()) h.mu_domain = window_from_json(j.at("mu_domain"));
  // Name the offending field in validation errors.
  if (!(h.alpha0 > 0)) throw ConfigError("hyperparams.alpha0 must be > 0");
  if (!(h.gamma0 > 0)) throw ConfigError("hyperparams.gamma0 must be > 0");
  if (!(h.k > 0)) throw ConfigError("hyperparams.k must be > 0");
  if (!(h.niw.eta > 0)) throw ConfigError("hyperparams.niw.eta must be > 0");
  if (!(h.niw.nu > 1)) throw ConfigError("hyperparams.niw.nu must be > 1");
  if (!is_spd2(h.niw.sigma0)) throw ConfigError("hyperparams.niw.sigma0 must be symmetric positive definite");
  if (h.L < 1) throw ConfigError("hyperparams.L must be >= 1");
  h.validate();
  return h;
}

json to_json(const SamplerConfig& c) {
  return {{"sweeps", c.sweeps},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"alpha_step", c.alpha_step},
          {"beta_step", c.beta_step},
          {"adapt", c.adapt},
          {"target_acceptance", c.target_acceptance},
          {"seed", c.seed},
          {"interior_beta", c.interior_beta == InteriorBetaMode::kExactMH ? "exact-mh" : "paper-gibbs"},
          {"beta_moves_per_row", c.beta_moves_per_row},
          {"checkpoint_every", c.checkpoint_every},
          {"init", c.init == InitMode::kPriorMean ? "prior-mean" : "prior"}};
}

SamplerConfig sampler_config_from_json(const json& j) {
  const std::string w = "sampler";
  SamplerConfig c;
  c.sweeps = optional_field<std::size_t>(j, "sweeps", c.sweeps, w);
  c.burn_in = optional_field<std::size_t>(j, "burn_in", c.burn_in, w);
  c.thin = optional_field<std::size_t>(j, "thin", c.thin, w);
  c.alpha_step = optional_field<double>(j, "alpha_step", c.alpha_step, w);
  c.beta_step = optional_field<double>(j, "beta_step", c.beta_step, w);
  c.adapt = optional_field<bool>(j, "adapt", c.adapt, w);
  c.target_acceptance = optional_field<double>(j, "target_acceptance", c.target_acceptance, w);
  c.seed = optional_field<std::uint64_t>(j, "seed", c.seed, w);
  const auto mode = optional_field<std::string>(j, "interior_beta", "exact-mh", w);
  if (mode == "exact-mh") c.interior_beta = InteriorBetaMode::kExactMH;
  else if (mode == "paper-gibbs") c.interior_beta = InteriorBetaMode::kPaperGibbs;
  else throw ConfigError("sampler.interior_beta must be \"exact-mh\" or \"paper-gibbs\"");
  c.beta_moves_per_row = optional_field<std::size_t>(j, "beta_moves_per_row", 0, w);
  c.checkpoint_every = optional_field<std::size_t>(j, "checkpoint_every", 0, w);
  const auto init = optional_field<std::string>(j, "init", "prior-mean", w);
  if (init == "prior-mean") c.init = InitMode::kPriorMean;
  else if (init == "prior") c.init = InitMode::kPrior;
  else throw ConfigError("sampler.init must be \"prior-mean\" or \"prior\"");
  c.validate();
  return c;
}

namespace {

json mixture_to_json(const SpatialMixture& g) {
  json comps = json::array();
  for (const auto& c : g.gaussians) {
    json cj = to_json(c.component);
    cj["weight"] = c.weight;
    comps.push_back(cj);
  }
  return {{"gaussians", comps}, {"uniform_weight", g.uniform_weight}};
}

SpatialMixture mixture_from_json(const json& j, const std::string& where) {
  SpatialMixture g;
  g.uniform_weight = optional_field<double>(j, "uniform_weight", 0.0, where);
  if (j.contains("gaussians")) {
    for (const auto& cj : j.at("gaussians")) {
      WeightedGaussian wg;
      wg.weight = require<double>(cj, "weight", where + ".gaussians[]");
      wg.component.mean = vec2_from_json(cj.value("mean", json()), where + ".gaussians[].mean");
      wg.component.cov = mat2_from_json(cj.value("cov", json(1.0)), where + ".gaussians[].cov");
      g.gaussians.push_back(wg);
    }
  }
  return g;
}

}  // namespace

json to_json(const SyntheticIntensity& s) {
  json h;
  if (s.h.kind == TemporalWeight::Kind::kConstant) h = {{"kind", "constant"}, {"value", s.h.value}};
  else h = {{"kind", "logistic"}, {"midpoint", s.h.midpoint}, {"scale", s.h.scale}};
  return {{"rate", {{"breaks", s.rate.breaks}, {"rates", s.rate.rates}}},
          {"h", h},
          {"g1", mixture_to_json(s.g1)},
          {"g2", mixture_to_json(s.g2)},
          {"support", to_json(s.support)},
          {"horizon", s.horizon}};
}

SyntheticIntensity intensity_from_json(const json& j) {
  const std::string w = "synthetic";
  SyntheticIntensity s;
  const json& rate = j.at("rate");
  s.rate.breaks = require<std::vector<double>>(rate, "breaks", w + ".rate");
  s.rate.rates = require<std::vector<double>>(rate, "rates", w + ".rate");
  if (j.contains("h")) {
    const json& h = j.at("h");
    const auto kind = optional_field<std::string>(h, "kind", "constant", w + ".h");
    if (kind == "constant") {
      s.h.kind = TemporalWeight::Kind::kConstant;
      s.h.value = optional_field<double>(h, "value", 1.0, w + ".h");
    } else if (kind == "logistic") {
      s.h.kind = TemporalWeight::Kind::kLogistic;
      s.h.midpoint = require<double>(h, "midpoint", w + ".h");
      s.h.scale = require<double>(h, "scale", w + ".h");
    } else {
      throw ConfigError("synthetic.h.kind must be \"constant\" or \"logistic\"");
    }
  }
  s.g1 = mixture_from_json(j.value("g1", json::object()), w + ".g1");
  s.g2 = j.contains("g2") ? mixture_from_json(j.at("g2"), w + ".g2") : s.g1;
  if (j.contains("support")) s.support = window_from_json(j.at("support"));
  s.horizon = require<double>(j, "horizon", w);
  s.validate();
  return s;
}

json to_json(const AcceptanceSummary& a) {
  auto tallies = [](const std::vector<MoveTally>& v) {
    json arr = json::array();
    for (const auto& t : v) arr.push_back({{"proposed", t.proposed}, {"accepted", t.accepted}});
    return arr;
  };
  return {{"alpha", tallies(a.alpha)}, {"beta", tallies(a.beta)}};
}

AcceptanceSummary acceptance_from_json(const json& j) {
  auto tallies = [](const json& arr) {
    std::vector<MoveTally> v;
    for (const auto& t : arr) v.push_back({t.at("proposed").get<std::uint64_t>(), t.at("accepted").get<std::uint64_t>()});
    return v;
  };
  return {tallies(j.at("alpha")), tallies(j.at("beta"))};
}

std::uint64_t json_hash(const json& j) { return fnv1a(j.dump()); }

json checkpoint_to_json(const ChainState& chain, const Hyperparams& hyper, const SamplerConfig& config) {
  return {{"type", "checkpoint"},
          {"version", 1},
          {"chain", chain.chain},
          {"sweep", chain.sweep},
          {"state", to_json(chain.state)},
          {"rng", chain.rng.state()},
          {"alpha_steps", chain.alpha_steps},
          {"beta_steps", chain.beta_steps},
          {"acceptance", to_json(chain.acceptance)},
          {"hyperparams_hash", json_hash(to_json(hyper))},
          {"sampler_hash", json_hash(to_json(config))}};
}

ChainState checkpoint_from_json(const json& j) {
  ChainState c;
  try {
    c.chain = j.at("chain").get<int>();
    c.sweep = j.at("sweep").get<std::size_t>();
    c.state = latent_state_from_json(j.at("state"));
    c.rng.set_state(j.at("rng").get<std::string>());
    c.alpha_steps = j.at("alpha_steps").get<std::vector<double>>();
    c.beta_steps = j.at("beta_steps").get<std::vector<double>>();
    c.acceptance = acceptance_from_json(j.at("acceptance"));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::string& path, const ChainState& chain, const Hyperparams& hyper,
                     const SamplerConfig& config) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << checkpoint_to_json(chain, hyper, config).dump() << '\n';
  }
  std::rename(tmp.c_str(), path.c_str());
}

ChainState load_checkpoint(const std::string& path, const Hyperparams& hyper, const SamplerConfig& config) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("hyperparams_hash", std::uint64_t{0}) != json_hash(to_json(hyper)))
    throw ConfigError("checkpoint was written with different hyperparameters");
  // The sweep budget may grow on resume, so only the chain's own fields
  // are compared against the sampler config.
  ChainState c = checkpoint_from_json(j);
  if (c.sweep > config.sweeps) throw ConfigError("checkpoint is past the configured sweep count");
  return c;
}

json draw_to_json(const Draw& d) {
  json j = to_json(d.state);
  j["type"] = "draw";
  j["sweep"] = d.sweep;
  j["chain"] = d.chain;
  j["log_posterior"] = number_or_null(d.log_posterior);
  return j;
}

Draw draw_from_json(const json& j) {
  Draw d;
  d.state = latent_state_from_json(j);
  d.sweep = j.value("sweep", std::size_t{0});
  d.chain = j.value("chain", 0);
  d.log_posterior = j.contains("log_posterior") ? number_or_neg_inf(j.at("log_posterior")) : 0.0;
  return d;
}

DrawWriter::DrawWriter(const std::string& path, const json& header, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw DataError("cannot write draws file: " + path);
  if (!append) {
    json h = header;
    h["type"] = "header";
    out_ << h.dump() << '\n';
  }
}

void DrawWriter::write(const Draw& d) { out_ << draw_to_json(d).dump() << '\n'; }

void DrawWriter::write_record(const json& record) { out_ << record.dump() << '\n'; }

namespace {

json parse_line(const std::string& line, std::size_t lineno, const std::string& path) {
  try {
    return json::parse(line);
  } catch (const json::exception&) {
    throw DataError(path + ": line " + std::to_string(lineno) + " is not valid JSON");
  }
}

}  // namespace

json for_each_draw(const std::string& path, const std::function<void(const Draw&)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open draws file: " + path);
  std::string line;
  std::size_t lineno = 0;
  json header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, lineno, path);
    const auto type = j.value("type", std::string());
    if (type == "header") header = std::move(j);
    else if (type == "draw") fn(draw_from_json(j));
  }
  if (lineno == 0) throw DataError("no draws: " + path + " is empty");
  if (header.is_null()) throw DataError("draws file has no header: " + path);
  return header;
}

DrawFile read_draws(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open draws file: " + path);
  DrawFile f;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, lineno, path);
    const auto type = j.value("type", std::string());
    if (type == "header") f.header = std::move(j);
    else if (type == "draw") f.draws.push_back(draw_from_json(j));
    else f.records.push_back(std::move(j));
  }
  if (lineno == 0) throw DataError("no draws: " + path + " is empty");
  if (f.header.is_null()) throw DataError("draws file has no header: " + path);
  return f;
}

}  // namespace bgdp
