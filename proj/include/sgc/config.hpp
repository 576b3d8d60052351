#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgc/gmm.hpp"
#include "sgc/graph.hpp"

namespace sgc {

// One experiment per file. Key-value text format, '#' comments, matrices with
// ';'-separated rows, per-component blocks with '|'. CLI flags override file
// values through apply_override.
struct ExperimentConfig {
  enum class Model { kSbm, kEdgeList, kGmm };

  Model model = Model::kSbm;
  SbmParams sbm;                        // model = sbm
  std::string edge_list_path;           // model = edgelist
  std::string labels_path;              // optional truth labels for edgelist
  bool largest_cc = false;              // extract largest connected component
  ConstrainedGmmParams gmm;             // model = gmm (rows sampled i.i.d.)

  std::vector<int> n_values;            // one or more graph orders
  int big_d = 0;                        // extended embedding dimension D
  int k_max = 0;
  std::vector<std::string> methods;     // sms | sms-reduced | two-step | bic-zg-<l>
  int replicates = 1;
  std::uint64_t seed = 1;
  EmOptions em;
  int threads = 1;
  int d0 = 0;                           // true dimension; 0 = rank of B
  std::string out_dir;                  // default: $SGC_OUT_DIR or "."

  int true_d() const;
  int true_k() const;
  // Throws ParamError on an invalid combination. needs_embedding adds the
  // D/K_max/method checks used by pipeline-style runs.
  void validate(bool needs_embedding) const;
};

ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

}  // namespace sgc
