#include "mlembed/config.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/sgns.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <type_traits>

namespace mlembed {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
void parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) throw ValidationError("invalid number `" + text + "`");
  out = value;
}

void parse(const std::string& text, int& out) { parse_number(text, out); }
void parse(const std::string& text, unsigned& out) { parse_number(text, out); }
void parse(const std::string& text, std::uint64_t& out) { parse_number(text, out); }
void parse(const std::string& text, double& out) { parse_number(text, out); }
void parse(const std::string& text, std::string& out) { out = text; }

void parse(const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes") out = true;
  else if (text == "false" || text == "0" || text == "no") out = false;
  else throw ValidationError("invalid boolean `" + text + "`");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, sep);) parts.push_back(trim(part));
  return parts;
}

// Comma list of integers and inclusive ranges `a-b`.
void parse(const std::string& text, std::vector<int>& out) {
  std::vector<int> values;
  for (const auto& part : split(text, ',')) {
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      int v = 0;
      parse(part, v);
      values.push_back(v);
      continue;
    }
    int lo = 0, hi = 0;
    parse(trim(part.substr(0, dash)), lo);
    parse(trim(part.substr(dash + 1)), hi);
    if (hi < lo) throw ValidationError("empty range `" + part + "`");
    for (int v = lo; v <= hi; ++v) values.push_back(v);
  }
  out = std::move(values);
}

void parse(const std::string& text, std::array<int, 3>& out) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw ValidationError("expected three comma-separated widths");
  for (std::size_t i = 0; i < 3; ++i) parse(parts[i], out[i]);
}

void parse(const std::string& text, std::vector<bool>& out) {
  out.clear();
  if (text.empty()) return;
  for (const auto& part : split(text, ',')) {
    bool b = false;
    parse(part, b);
    out.push_back(b);
  }
}

void parse(const std::string& text, Aggregation& out) {
  if (text == "mean") out = Aggregation::Mean;
  else if (text == "concat") out = Aggregation::Concat;
  else throw ValidationError("aggregation must be mean or concat");
}

void parse(const std::string& text, Coupling& out) {
  if (text == "all") out = Coupling::AllCounterparts;
  else if (text == "supra") out = Coupling::SupraEdges;
  else throw ValidationError("coupling must be all or supra");
}

std::string show(const std::string& v) { return v; }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(double v) { return format_double(v); }
template <typename T>
  requires std::is_integral_v<T>
std::string show(T v) {
  return std::to_string(v);
}
std::string show(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}
std::string show(const std::array<int, 3>& v) {
  return std::to_string(v[0]) + "," + std::to_string(v[1]) + "," + std::to_string(v[2]);
}
std::string show(const std::vector<bool>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += std::string(i ? "," : "") + (v[i] ? "true" : "false");
  return out;
}
std::string show(Aggregation v) { return v == Aggregation::Mean ? "mean" : "concat"; }
std::string show(Coupling v) { return v == Coupling::AllCounterparts ? "all" : "supra"; }

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Access>
Field field(std::string key, Access access) {
  return {std::move(key),
          [access](const RunConfig& c) { return show(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& text) { parse(text, access(c)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("edges", [](RunConfig& c) -> auto& { return c.edges; }),
      field("labels", [](RunConfig& c) -> auto& { return c.labels; }),
      field("embeddings", [](RunConfig& c) -> auto& { return c.embeddings; }),
      field("planted", [](RunConfig& c) -> auto& { return c.planted; }),
      field("output_dir", [](RunConfig& c) -> auto& { return c.output_dir; }),
      field("dataset", [](RunConfig& c) -> auto& { return c.dataset; }),
      field("seed", [](RunConfig& c) -> auto& { return c.seed; }),
      field("threads", [](RunConfig& c) -> auto& { return c.threads; }),
      field("deterministic", [](RunConfig& c) -> auto& { return c.deterministic; }),
      field("strict", [](RunConfig& c) -> auto& { return c.strict; }),
      field("supra.threshold", [](RunConfig& c) -> auto& { return c.embed.threshold; }),
      field("walk.walks_per_node", [](RunConfig& c) -> auto& { return c.embed.walk.walks_per_node; }),
      field("walk.length", [](RunConfig& c) -> auto& { return c.embed.walk.walk_length; }),
      field("sgns.dim", [](RunConfig& c) -> auto& { return c.embed.sgns.dim; }),
      field("sgns.window", [](RunConfig& c) -> auto& { return c.embed.sgns.window; }),
      field("sgns.negatives", [](RunConfig& c) -> auto& { return c.embed.sgns.negatives; }),
      field("sgns.epochs", [](RunConfig& c) -> auto& { return c.embed.sgns.epochs; }),
      field("sgns.lr_initial", [](RunConfig& c) -> auto& { return c.embed.sgns.lr_initial; }),
      field("sgns.lr_final", [](RunConfig& c) -> auto& { return c.embed.sgns.lr_final; }),
      field("sgns.noise_exponent", [](RunConfig& c) -> auto& { return c.embed.sgns.noise_exponent; }),
      field("refine.clusters", [](RunConfig& c) -> auto& { return c.embed.refine_config.clusters; }),
      field("refine.boost", [](RunConfig& c) -> auto& { return c.embed.refine_config.boost; }),
      field("refine.moves_per_iter", [](RunConfig& c) -> auto& { return c.embed.refine_config.moves_per_iter; }),
      field("refine.max_outer_iters", [](RunConfig& c) -> auto& { return c.embed.refine_config.max_outer_iters; }),
      field("refine.tol", [](RunConfig& c) -> auto& { return c.embed.refine_config.tol; }),
      field("refine.lr", [](RunConfig& c) -> auto& { return c.embed.refine_config.lr; }),
      field("refine.inner_epochs", [](RunConfig& c) -> auto& { return c.embed.refine_config.inner_epochs; }),
      field("refine.batch_size", [](RunConfig& c) -> auto& { return c.embed.refine_config.batch_size; }),
      field("refine.hidden", [](RunConfig& c) -> auto& { return c.embed.refine_config.hidden; }),
      field("refine.kmeans_restarts", [](RunConfig& c) -> auto& { return c.embed.refine_config.kmeans_restarts; }),
      field("refine.reseed_every", [](RunConfig& c) -> auto& { return c.embed.refine_config.reseed_every; }),
      field("refine.pretrain_epochs", [](RunConfig& c) -> auto& { return c.embed.refine_config.pretrain.epochs; }),
      field("refine.pretrain_lr", [](RunConfig& c) -> auto& { return c.embed.refine_config.pretrain.lr; }),
      field("refine.pretrain_batch_size",
            [](RunConfig& c) -> auto& { return c.embed.refine_config.pretrain.batch_size; }),
      field("modularity.gamma", [](RunConfig& c) -> auto& { return c.embed.refine_config.modularity.gamma; }),
      field("modularity.sigma", [](RunConfig& c) -> auto& { return c.embed.refine_config.modularity.sigma; }),
      field("modularity.coupling", [](RunConfig& c) -> auto& { return c.embed.refine_config.modularity.coupling; }),
      field("eval.nc_folds", [](RunConfig& c) -> auto& { return c.eval.nc_folds; }),
      field("eval.lp_folds", [](RunConfig& c) -> auto& { return c.eval.lp_folds; }),
      field("eval.k_values", [](RunConfig& c) -> auto& { return c.eval.k_values; }),
      field("eval.aggregation", [](RunConfig& c) -> auto& { return c.eval.aggregation; }),
      field("eval.refine_nc", [](RunConfig& c) -> auto& { return c.eval.refine_nc; }),
      field("eval.refine_lp", [](RunConfig& c) -> auto& { return c.eval.refine_lp; }),
      field("eval.refine_cd", [](RunConfig& c) -> auto& { return c.eval.refine_cd; }),
      field("eval.kmeans_restarts", [](RunConfig& c) -> auto& { return c.eval.kmeans_restarts; }),
      field("sbm.layers", [](RunConfig& c) -> auto& { return c.sbm.layers; }),
      field("sbm.nodes", [](RunConfig& c) -> auto& { return c.sbm.nodes; }),
      field("sbm.blocks", [](RunConfig& c) -> auto& { return c.sbm.blocks; }),
      field("sbm.p_in", [](RunConfig& c) -> auto& { return c.sbm.p_in; }),
      field("sbm.p_out", [](RunConfig& c) -> auto& { return c.sbm.p_out; }),
      field("sbm.shared", [](RunConfig& c) -> auto& { return c.sbm.shared; }),
      field("sbm.seed", [](RunConfig& c) -> auto& { return c.sbm.seed; }),
  };
  return table;
}

}  // namespace

EmbedConfig RunConfig::resolved_embed(bool refine) const {
  EmbedConfig out = embed;
  const unsigned workers = deterministic ? 1U : threads;
  out.walk.seed = derive_seed(seed, 1);
  out.walk.threads = workers;
  out.sgns.seed = derive_seed(seed, 2);
  out.sgns.threads = workers;
  out.refine = refine;
  out.refine_config.seed = derive_seed(seed, 3);
  return out;
}

void RunConfig::validate() const {
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (eval.nc_folds < 2 || eval.lp_folds < 2) throw ValidationError("evaluation needs at least 2 folds");
  if (eval.k_values.empty()) throw ValidationError("eval.k_values is empty");
  for (int k : eval.k_values) {
    if (k < 1) throw ValidationError("eval.k_values entries must be >= 1");
  }
  if (eval.kmeans_restarts < 1) throw ValidationError("eval.kmeans_restarts must be >= 1");
  resolved_embed(true).validate();
  sbm.validate();
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      try {
        f.set(config, value);
      } catch (const ValidationError& e) {
        throw ValidationError(key + ": " + e.what());
      }
      return;
    }
  }
  throw ValidationError("unknown config key `" + key + "`");
}

RunConfig read_config(std::istream& in, RunConfig base, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected `key = value`");
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return read_config(in, std::move(base), path);
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace mlembed
