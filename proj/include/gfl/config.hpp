// config.hpp -- experiment configuration: dotted key-value file with strict
// unknown-key rejection, canonical dump, and a stable fingerprint.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gfl/attack.hpp"
#include "gfl/common.hpp"
#include "gfl/defense.hpp"
#include "gfl/federation.hpp"
#include "gfl/manipulation.hpp"
#include "gfl/metrics.hpp"

namespace gfl {

struct ExperimentConfig {
  // dataset
  std::string dataset_source = "sbm";  // sbm | files
  std::string nodes_path;
  std::string edges_path;
  int sbm_blocks = 4;
  int sbm_nodes_per_block = 125;
  double sbm_p_in = 0.2;
  double sbm_p_out = 0.02;
  int sbm_feature_dim = 16;
  double sbm_feature_shift = 1.0;

  // split
  double train_frac = 0.6;
  double val_frac = 0.2;

  // federation
  int k = 3;
  int rounds = 100;
  int local_epochs = 1;
  double overlap = 0.0;
  int malicious_index = 0;
  double lr = 0.01;
  std::string server_arch = "gcn";
  int hidden_dim = 16;
  int num_layers = 2;
  int heads = 4;

  // manipulation
  bool manipulation_enabled = true;
  std::string surrogate_arch;  // empty: same as server_arch
  double alpha = 1.0;
  double beta = 0.01;
  double lambda = 1.0;
  double epsilon = 0.1;
  double eta = 0.01;
  int steps = 100;
  double manip_negative_ratio = 1.0;
  std::string smoothing = "uniform";  // uniform | loss_normalized
  int manipulate_round = 1;
  int refresh_every = 0;
  // snapshot: PGD against the client's freshly downloaded global parameters;
  // surrogate: a privately trained model of the malicious architecture;
  // auto: snapshot when the architectures coincide, surrogate otherwise
  std::string manipulation_mode = "auto";
  int surrogate_epochs = 100;
  bool full_local_labels = true;

  // attack
  std::string attack_variant = "mlp";  // mlp | attention
  int attack_epochs = 300;
  double attack_negative_ratio = 1.0;
  double attack_lr = 0.001;
  long query_budget = 0;  // 0 = unlimited
  bool entropy_summary = false;
  bool full_matrix = false;  // score every pair instead of the balanced set

  // defense
  std::string defense_kind = "none";
  double defense_strength = 0.0;
  bool defense_renormalize = true;

  // evaluation
  std::string eval_target = "all";  // all | benign
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string cus_similarity = "cosine";

  // output
  std::string output_dir;

  // sweep grid: existing config key -> list of values
  std::map<std::string, std::vector<std::string>> sweep_grid;

  // ---- parsing ----------------------------------------------------------

  void set(const std::string& key, const std::string& value);

  static ExperimentConfig from_stream(std::istream& in, const std::string& origin);

  static ExperimentConfig from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return from_stream(f, path);
  }

  static ExperimentConfig from_string(const std::string& text) {
    std::istringstream ss(text);
    return from_stream(ss, "<string>");
  }

  std::string canonical_dump() const;

  std::string fingerprint() const { return hex64(fnv1a64(canonical_dump())); }

  // ---- derived objects --------------------------------------------------

  ModelArch make_arch(const std::string& name) const {
    ModelArch a;
    a.kind = arch_from_name(name);
    a.hidden_dim = hidden_dim;
    a.num_layers = num_layers;
    a.heads = heads;
    a.validate();
    return a;
  }

  FederationConfig federation_config(uint64_t seed) const {
    FederationConfig fc;
    fc.rounds = rounds;
    fc.local_epochs = local_epochs;
    fc.k = k;
    fc.learning_rate = lr;
    fc.server_arch = make_arch(server_arch);
    fc.malicious_arch = make_arch(surrogate_arch.empty() ? server_arch : surrogate_arch);
    fc.seed = seed;
    fc.validate();
    return fc;
  }

  ManipulationPlan manipulation_plan(uint64_t seed) const {
    ManipulationPlan p;
    p.config.alpha = alpha;
    p.config.beta = beta;
    p.config.lambda = lambda;
    p.config.epsilon = epsilon;
    p.config.eta = eta;
    p.config.steps = steps;
    p.config.negative_sample_ratio = manip_negative_ratio;
    if (smoothing == "uniform") p.config.smoothing = SmoothingMode::Uniform;
    else if (smoothing == "loss_normalized") p.config.smoothing = SmoothingMode::LossNormalized;
    else throw ConfigError("manipulation.smoothing must be uniform|loss_normalized");
    p.config.validate();
    p.fire_round = manipulate_round;
    p.refresh_every = refresh_every;
    if (manipulation_mode == "snapshot") p.use_client_model = true;
    else if (manipulation_mode == "surrogate") p.use_client_model = false;
    else p.use_client_model = surrogate_arch.empty() || surrogate_arch == server_arch;
    p.surrogate_epochs = surrogate_epochs;
    p.full_local_labels = full_local_labels;
    p.seed = derive_seed(seed, "plan.manipulation");
    return p;
  }

  DefenseSetting defense_setting() const {
    DefenseSetting d;
    d.kind = defense_from_name(defense_kind);
    d.strength = defense_strength;
    d.renormalize = defense_renormalize;
    d.validate();
    return d;
  }

  AttackVariant attack_variant_id() const { return attack_variant_from_name(attack_variant); }

  SimilarityId cus_similarity_id() const { return similarity_from_name(cus_similarity); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected boolean, got '" + v + "'");
}

inline long parse_int(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    long r = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected integer, got '" + v + "'");
  }
}

inline double parse_real(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected real, got '" + v + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_int;
  using detail::parse_real;

  if (key.rfind("sweep.", 0) == 0) {
    std::string inner = key.substr(6);
    ExperimentConfig probe = *this;  // validates the inner key and each value
    for (const std::string& v : detail::split_list(value)) probe.set(inner, v);
    sweep_grid[inner] = detail::split_list(value);
    return;
  }

  if (key == "dataset.source") {
    if (value != "sbm" && value != "files")
      throw ConfigError("dataset.source must be sbm|files");
    dataset_source = value;
  } else if (key == "dataset.nodes") nodes_path = value;
  else if (key == "dataset.edges") edges_path = value;
  else if (key == "dataset.sbm.blocks") sbm_blocks = static_cast<int>(parse_int(value, key));
  else if (key == "dataset.sbm.nodes_per_block")
    sbm_nodes_per_block = static_cast<int>(parse_int(value, key));
  else if (key == "dataset.sbm.p_in") sbm_p_in = parse_real(value, key);
  else if (key == "dataset.sbm.p_out") sbm_p_out = parse_real(value, key);
  else if (key == "dataset.sbm.feature_dim")
    sbm_feature_dim = static_cast<int>(parse_int(value, key));
  else if (key == "dataset.sbm.feature_shift") sbm_feature_shift = parse_real(value, key);
  else if (key == "split.train_frac") train_frac = parse_real(value, key);
  else if (key == "split.val_frac") val_frac = parse_real(value, key);
  else if (key == "federation.k") k = static_cast<int>(parse_int(value, key));
  else if (key == "federation.rounds") rounds = static_cast<int>(parse_int(value, key));
  else if (key == "federation.local_epochs")
    local_epochs = static_cast<int>(parse_int(value, key));
  else if (key == "federation.overlap") overlap = parse_real(value, key);
  else if (key == "federation.malicious_index")
    malicious_index = static_cast<int>(parse_int(value, key));
  else if (key == "federation.lr") lr = parse_real(value, key);
  else if (key == "federation.server_arch") {
    arch_from_name(value);
    server_arch = value;
  } else if (key == "federation.hidden_dim") hidden_dim = static_cast<int>(parse_int(value, key));
  else if (key == "federation.num_layers") num_layers = static_cast<int>(parse_int(value, key));
  else if (key == "federation.heads") heads = static_cast<int>(parse_int(value, key));
  else if (key == "manipulation.enabled") manipulation_enabled = parse_bool(value, key);
  else if (key == "manipulation.surrogate_arch") {
    if (!value.empty()) arch_from_name(value);
    surrogate_arch = value;
  } else if (key == "manipulation.alpha") alpha = parse_real(value, key);
  else if (key == "manipulation.beta") beta = parse_real(value, key);
  else if (key == "manipulation.lambda") lambda = parse_real(value, key);
  else if (key == "manipulation.epsilon") epsilon = parse_real(value, key);
  else if (key == "manipulation.eta") eta = parse_real(value, key);
  else if (key == "manipulation.steps") steps = static_cast<int>(parse_int(value, key));
  else if (key == "manipulation.negative_ratio") manip_negative_ratio = parse_real(value, key);
  else if (key == "manipulation.smoothing") {
    if (value != "uniform" && value != "loss_normalized")
      throw ConfigError("manipulation.smoothing must be uniform|loss_normalized");
    smoothing = value;
  } else if (key == "manipulation.round")
    manipulate_round = static_cast<int>(parse_int(value, key));
  else if (key == "manipulation.refresh_every")
    refresh_every = static_cast<int>(parse_int(value, key));
  else if (key == "manipulation.mode") {
    if (value != "auto" && value != "snapshot" && value != "surrogate")
      throw ConfigError("manipulation.mode must be auto|snapshot|surrogate");
    manipulation_mode = value;
  } else if (key == "manipulation.surrogate_epochs")
    surrogate_epochs = static_cast<int>(parse_int(value, key));
  else if (key == "attack.variant") {
    attack_variant_from_name(value);
    attack_variant = value;
  } else if (key == "attack.epochs") attack_epochs = static_cast<int>(parse_int(value, key));
  else if (key == "attack.negative_ratio") attack_negative_ratio = parse_real(value, key);
  else if (key == "attack.lr") attack_lr = parse_real(value, key);
  else if (key == "attack.query_budget") query_budget = parse_int(value, key);
  else if (key == "attack.entropy_summary") entropy_summary = parse_bool(value, key);
  else if (key == "attack.full_matrix") full_matrix = parse_bool(value, key);
  else if (key == "defense.kind") {
    defense_from_name(value);
    defense_kind = value;
  } else if (key == "defense.strength") defense_strength = parse_real(value, key);
  else if (key == "defense.renormalize") defense_renormalize = parse_bool(value, key);
  else if (key == "evaluation.target") {
    if (value != "all" && value != "benign")
      throw ConfigError("evaluation.target must be all|benign");
    eval_target = value;
  } else if (key == "evaluation.seeds") {
    seeds.clear();
    for (const std::string& s : detail::split_list(value))
      seeds.push_back(static_cast<uint64_t>(parse_int(s, key)));
    if (seeds.empty()) throw ConfigError("evaluation.seeds: need at least one seed");
  } else if (key == "auc_cus.similarity") {
    similarity_from_name(value);
    cus_similarity = value;
  } else if (key == "output.dir") output_dir = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

inline ExperimentConfig ExperimentConfig::from_stream(std::istream& in,
                                                      const std::string& origin) {
  ExperimentConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

inline std::string ExperimentConfig::canonical_dump() const {
  std::ostringstream o;
  o << "dataset.source = " << dataset_source << "\n";
  o << "dataset.nodes = " << nodes_path << "\n";
  o << "dataset.edges = " << edges_path << "\n";
  o << "dataset.sbm.blocks = " << sbm_blocks << "\n";
  o << "dataset.sbm.nodes_per_block = " << sbm_nodes_per_block << "\n";
  o << "dataset.sbm.p_in = " << format_double(sbm_p_in) << "\n";
  o << "dataset.sbm.p_out = " << format_double(sbm_p_out) << "\n";
  o << "dataset.sbm.feature_dim = " << sbm_feature_dim << "\n";
  o << "dataset.sbm.feature_shift = " << format_double(sbm_feature_shift) << "\n";
  o << "split.train_frac = " << format_double(train_frac) << "\n";
  o << "split.val_frac = " << format_double(val_frac) << "\n";
  o << "federation.k = " << k << "\n";
  o << "federation.rounds = " << rounds << "\n";
  o << "federation.local_epochs = " << local_epochs << "\n";
  o << "federation.overlap = " << format_double(overlap) << "\n";
  o << "federation.malicious_index = " << malicious_index << "\n";
  o << "federation.lr = " << format_double(lr) << "\n";
  o << "federation.server_arch = " << server_arch << "\n";
  o << "federation.hidden_dim = " << hidden_dim << "\n";
  o << "federation.num_layers = " << num_layers << "\n";
  o << "federation.heads = " << heads << "\n";
  o << "manipulation.enabled = " << (manipulation_enabled ? "true" : "false") << "\n";
  o << "manipulation.surrogate_arch = " << surrogate_arch << "\n";
  o << "manipulation.alpha = " << format_double(alpha) << "\n";
  o << "manipulation.beta = " << format_double(beta) << "\n";
  o << "manipulation.lambda = " << format_double(lambda) << "\n";
  o << "manipulation.epsilon = " << format_double(epsilon) << "\n";
  o << "manipulation.eta = " << format_double(eta) << "\n";
  o << "manipulation.steps = " << steps << "\n";
  o << "manipulation.negative_ratio = " << format_double(manip_negative_ratio) << "\n";
  o << "manipulation.smoothing = " << smoothing << "\n";
  o << "manipulation.round = " << manipulate_round << "\n";
  o << "manipulation.refresh_every = " << refresh_every << "\n";
  o << "manipulation.mode = " << manipulation_mode << "\n";
  o << "manipulation.surrogate_epochs = " << surrogate_epochs << "\n";
  o << "manipulation.full_local_labels = " << (full_local_labels ? "true" : "false") << "\n";
  o << "attack.variant = " << attack_variant << "\n";
  o << "attack.epochs = " << attack_epochs << "\n";
  o << "attack.negative_ratio = " << format_double(attack_negative_ratio) << "\n";
  o << "attack.lr = " << format_double(attack_lr) << "\n";
  o << "attack.query_budget = " << query_budget << "\n";
  o << "attack.entropy_summary = " << (entropy_summary ? "true" : "false") << "\n";
  o << "attack.full_matrix = " << (full_matrix ? "true" : "false") << "\n";
  o << "defense.kind = " << defense_kind << "\n";
  o << "defense.strength = " << format_double(defense_strength) << "\n";
  o << "defense.renormalize = " << (defense_renormalize ? "true" : "false") << "\n";
  o << "evaluation.target = " << eval_target << "\n";
  o << "evaluation.seeds = ";
  for (size_t i = 0; i < seeds.size(); ++i) o << (i ? "," : "") << seeds[i];
  o << "\n";
  o << "auc_cus.similarity = " << cus_similarity << "\n";
  for (const auto& [key, vals] : sweep_grid) {
    o << "sweep." << key << " = ";
    for (size_t i = 0; i < vals.size(); ++i) o << (i ? "," : "") << vals[i];
    o << "\n";
  }
  return o.str();
}

}  // namespace gfl
