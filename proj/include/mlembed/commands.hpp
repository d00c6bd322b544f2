#pragma once

#include "mlembed/config.hpp"
#include "mlembed/eval.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mlembed {

enum class Task { Classification, LinkPrediction, Communities };

Task parse_task(const std::string& name);  // nc | lp | cd
std::string task_name(Task task);

// Subcommands. Each reads its inputs from the config, writes artifacts under
// config.output_dir and a short report to `out`. Failures carry the stage
// name in their message and keep their exception type.

// edges.txt + planted.txt from the sbm.* keys.
void cmd_generate_sbm(const RunConfig& config, std::ostream& out);
// supra_edges.txt; prints inter-layer edge counts per layer pair.
void cmd_build_supra(const RunConfig& config, std::ostream& out);
// embeddings.txt
void cmd_embed(const RunConfig& config, std::ostream& out);
// refined_embeddings.txt + partition.txt; prints Q_multi before and after,
// and NMI against config.planted when given.
void cmd_refine(const RunConfig& config, std::ostream& out);
// results_<task>.csv; prints a summary table.
std::vector<ResultRow> cmd_eval(const RunConfig& config, Task task, std::ostream& out);
// Every stage above plus results.csv and config.used.
void cmd_pipeline(const RunConfig& config, std::ostream& out);

}  // namespace mlembed
