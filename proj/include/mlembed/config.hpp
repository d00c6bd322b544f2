#pragma once

#include "mlembed/eval.hpp"
#include "mlembed/pipeline.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mlembed {

struct EvalOptions {
  int nc_folds = 3;
  int lp_folds = 5;
  std::vector<int> k_values{2, 3, 4, 5, 6, 7, 8, 9, 10};
  Aggregation aggregation = Aggregation::Mean;
  // Refinement defaults per task: on for classification and community
  // detection, off for link prediction.
  bool refine_nc = true;
  bool refine_lp = false;
  bool refine_cd = true;
  int kmeans_restarts = 10;
};

// Everything a run depends on. Serializes to a flat `key = value` file.
struct RunConfig {
  std::string edges;
  std::string labels;
  std::string embeddings;  // precomputed replica embeddings for refine/eval
  std::string planted;     // reference partition for NMI reporting
  std::string output_dir = ".";
  std::string dataset = "data";

  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool deterministic = false;
  bool strict = false;

  EmbedConfig embed{};
  EvalOptions eval{};
  SbmSpec sbm{};

  // Copies the global seed and thread count into the stage configs
  // (each stage gets its own derived seed) and validates them.
  EmbedConfig resolved_embed(bool refine) const;
  void validate() const;
};

// Applies one `key`, `value` assignment. Throws ValidationError on an unknown
// key or a malformed value.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Lines `key = value`; `#` starts a comment; later keys override earlier ones.
RunConfig read_config(std::istream& in, RunConfig base = {}, const std::string& source = "<stream>");
RunConfig load_config(const std::string& path, RunConfig base = {});
// Every key, in a fixed order, round-trippable through read_config.
void write_config(std::ostream& out, const RunConfig& config);
std::vector<std::string> config_keys();

}  // namespace mlembed
