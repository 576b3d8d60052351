#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgc/config.hpp"
#include "sgc/graph.hpp"
#include "sgc/selection.hpp"

namespace sgc {

// One row per (n, replicate, method). Runtime lives in timings.log only, so
// every CSV byte is a pure function of (config, seed).
struct RunRecord {
  int n = 0;
  int replicate = 0;
  std::string method;
  std::string status = "ok";  // "ok" or "error"
  std::string detail;         // error text when status != ok
  int d_hat = 0;
  int k_hat = 0;
  std::vector<double> aris;   // one per truth labeling
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
};

struct PipelineResult {
  std::vector<std::string> truth_names;
  std::vector<RunRecord> records;  // ordered by (n, replicate, method)
  int failures = 0;
};

// Full Monte Carlo run: samples (or loads) the graph per replicate, runs every
// requested method, scores ARI against each truth, and writes records.csv,
// summary.csv, selection_table.csv, paired_diffs.csv, summary.json and
// timings.log into cfg.out_dir.
PipelineResult run_pipeline(const ExperimentConfig& cfg);

// Writes graph_n<k>_r<###>.edges plus truth_n<k>_r<###>.csv per replicate,
// using the same seed derivation as run_pipeline.
std::vector<std::string> run_generate(const ExperimentConfig& cfg);

// Within-block statistics of the redundant embedding part under the true
// memberships, for reproducing the observation figures.
struct ObsStatsSummary {
  int d0 = 0;
  int big_d = 0;
  struct PerN {
    int n = 0;
    // pooled |within-block mean| over (replicate, block, redundant dim)
    std::vector<double> abs_means;
    std::vector<double> rep_median_abs_mean;   // per replicate
    std::vector<double> rep_mean_abs_offdiag;  // per replicate, redundant block
    // [block][dim]: median across replicates of the per-dimension variance
    std::vector<std::vector<double>> var_dim_median_by_block;
  };
  std::vector<PerN> per_n;
};
ObsStatsSummary run_obsstats(const ExperimentConfig& cfg);

// Edge-list ingestion with validation, optional largest-connected-component
// extraction, and a vertex remapping table.
struct IngestResult {
  AdjacencyMatrix graph;
  std::vector<std::string> truth_names;
  std::vector<Labels> truths;
  std::vector<int> old_ids;  // new index -> original vertex id
  int num_components = 1;
  bool extracted_cc = false;
  EdgeListReport edge_report;
  std::vector<std::string> warnings;
};
IngestResult ingest_graph(const std::string& edges_path, const std::string& labels_path,
                          bool largest_cc);
void write_ingest_outputs(const IngestResult& r, const std::string& out_dir);

// Multi-column truth CSV: header "vertex,<name>,<name>,...".
void read_truth_csv(const std::string& path, std::vector<std::string>* names,
                    std::vector<Labels>* truths);

}  // namespace sgc
