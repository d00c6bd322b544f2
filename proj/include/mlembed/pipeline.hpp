#pragma once

#include "mlembed/refine.hpp"
#include "mlembed/sgns.hpp"
#include "mlembed/supra.hpp"
#include "mlembed/walks.hpp"

#include <optional>

namespace mlembed {

struct EmbedConfig {
  double threshold = kDefaultCouplingThreshold;
  WalkConfig walk{};
  SgnsConfig sgns{};
  bool refine = false;
  RefineConfig refine_config{};

  void validate() const;
};

struct EmbedOutput {
  SupraGraph supra;
  Matrix embeddings;                    // refined when refinement ran
  std::optional<RefineResult> refined;
  TrainReport training;
};

// Supra graph, walks, SGNS and (optionally) refinement in one call.
EmbedOutput embed_network(MultilayerNetwork net, const EmbedConfig& cfg);

}  // namespace mlembed
