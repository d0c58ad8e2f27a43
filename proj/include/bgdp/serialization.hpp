#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bgdp/intensity_sim.hpp"
#include "bgdp/model.hpp"
#include "bgdp/sampler.hpp"

namespace bgdp {

using json = nlohmann::json;

json to_json(const GaussianComponent& c);
GaussianComponent gaussian_from_json(const json& j);

json to_json(const SpatialWindow& w);
SpatialWindow window_from_json(const json& j);

json to_json(const LatentState& s);
LatentState latent_state_from_json(const json& j);

json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const json& j);

json to_json(const SamplerConfig& c);
SamplerConfig sampler_config_from_json(const json& j);

json to_json(const SyntheticIntensity& s);
SyntheticIntensity intensity_from_json(const json& j);

json to_json(const AcceptanceSummary& a);
AcceptanceSummary acceptance_from_json(const json& j);

std::uint64_t json_hash(const json& j);

// Checkpoint: the full chain (state, RNG engine, adapted steps, tallies,
// sweep counter) plus hashes of the hyperparameters and sampler config.
// Sufficient statistics are not stored; they are recomputed on load.
json checkpoint_to_json(const ChainState& chain, const Hyperparams& hyper, const SamplerConfig& config);
ChainState checkpoint_from_json(const json& j);
void save_checkpoint(const std::string& path, const ChainState& chain, const Hyperparams& hyper,
                     const SamplerConfig& config);
ChainState load_checkpoint(const std::string& path, const Hyperparams& hyper, const SamplerConfig& config);

// ---- draws file: JSON lines ---------------------------------------------
//   {"type":"header", ...}
//   {"type":"draw", "sweep":..., "chain":..., "alpha":[...], ...}
//   {"type":"acceptance", ...}     (one per chain, after its draws)
//   {"type":"relabeling", ...}     (appended by relabel)

json draw_to_json(const Draw& d);
Draw draw_from_json(const json& j);

class DrawWriter {
 public:
  DrawWriter(const std::string& path, const json& header, bool append = false);
  void write(const Draw& d);
  void write_record(const json& record);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

struct DrawFile {
  json header;
  std::vector<Draw> draws;
  std::vector<json> records;  // every non-draw record after the header
};

DrawFile read_draws(const std::string& path);
// Streams draws without holding them; returns the header.
json for_each_draw(const std::string& path, const std::function<void(const Draw&)>& fn);

}  // namespace bgdp
