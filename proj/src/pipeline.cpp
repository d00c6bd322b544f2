#include "mlembed/pipeline.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/log.hpp"

namespace mlembed {

void EmbedConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("coupling threshold must lie in [0, 1]");
  walk.validate();
  sgns.validate();
  if (refine) refine_config.validate();
}

EmbedOutput embed_network(MultilayerNetwork net, const EmbedConfig& cfg) {
  cfg.validate();
  EmbedOutput out{build_supra(std::move(net), cfg.threshold), {}, std::nullopt, {}};
  logger()->info("supra graph: {} replicas, {} intra edges, {} inter edges", out.supra.num_nodes(),
                 out.supra.num_intra_edges(), out.supra.inter_edges().size());
  const auto corpus = generate_walks(out.supra, cfg.walk);
  auto table = train(out.supra, corpus, cfg.sgns, &out.training);
  out.embeddings = std::move(table.input);
  if (cfg.refine) {
    out.refined = refine(out.embeddings, out.supra, cfg.refine_config);
    out.embeddings = out.refined->embeddings;
  }
  return out;
}

}  // namespace mlembed
