#include "sgc/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "sgc/baselines.hpp"
#include "sgc/errors.hpp"
#include "sgc/metrics.hpp"
#include "sgc/rng.hpp"
#include "sgc/spectral.hpp"
#include "sgc/util.hpp"

namespace sgc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t graph_seed(const ExperimentConfig& cfg, int n, int rep) {
  return derive_seed(cfg.seed, {seed_tag("graph"), static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(rep)});
}

std::uint64_t rep_seed(const ExperimentConfig& cfg, int n, int rep) {
  return derive_seed(cfg.seed, {seed_tag("rep"), static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(rep)});
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// Per-replicate evaluation context. The embedding and the constrained grid
// are computed at most once and shared by every method that needs them.
struct ReplicateContext {
  const ExperimentConfig* cfg = nullptr;
  Eigen::MatrixXd z;
  std::optional<SpectralDecomposition> eig;  // present when a graph backs z
  std::optional<BicGrid> grid;
  std::uint64_t seed = 0;

  const BicGrid& constrained_grid() {
    if (!grid) {
      SelectOptions opts;
      opts.em = cfg->em;
      grid = fit_constrained_grid(z, cfg->k_max, opts, seed);
    }
    return *grid;
  }
};

SelectionResult run_method(ReplicateContext& ctx, const std::string& method) {
  const ExperimentConfig& cfg = *ctx.cfg;
  if (method == "sms") return sms_from_grid(ctx.z, ctx.constrained_grid());
  if (method == "sms-reduced")
    return sms_reduced_from_grid(ctx.z, ctx.constrained_grid(), cfg.em, ctx.seed);
  if (method == "two-step")
    return sms_two_step_from_embedding(ctx.z, cfg.k_max, cfg.em, ctx.seed);
  if (method.rfind("bic-zg-", 0) == 0) {
    if (!ctx.eig) throw ParamError("bic-zg needs a graph spectrum");
    const int ell = std::stoi(method.substr(7));
    const ElbowResult elbow = zg_elbow(ctx.eig->eigenvalues, ell);
    const int d_hat = elbow.elbows[ell - 1];
    const ExtendedEmbedding emb = embedding_from_eig(*ctx.eig, d_hat);
    SelectionResult r;
    r.method = method;
    r.d_hat = d_hat;
    GmmBicSweep sweep = gmm_bic_sweep(emb.z, d_hat, cfg.k_max, false, cfg.em, ctx.seed);
    r.k_hat = sweep.k_hat;
    r.labels = map_labels(emb.z, sweep.best.params);
    r.cells = sweep.cells;
    return r;
  }
  throw ParamError("unknown method: " + method);
}

struct ReplicateOutput {
  std::vector<RunRecord> records;  // one per method, in config order
};

ReplicateOutput run_replicate(const ExperimentConfig& cfg, int n, int rep,
                              const AdjacencyMatrix* fixed_graph,
                              const std::vector<Labels>* fixed_truths) {
  ReplicateOutput out;
  ReplicateContext ctx;
  ctx.cfg = &cfg;
  ctx.seed = rep_seed(cfg, n, rep);

  std::vector<Labels> truths;
  std::string setup_error;
  try {
    if (cfg.model == ExperimentConfig::Model::kGmm) {
      auto [labels, z] = sample_model(cfg.gmm, n, graph_seed(cfg, n, rep));
      truths.push_back(std::move(labels));
      ctx.z = std::move(z);
    } else {
      const AdjacencyMatrix* graph = fixed_graph;
      AdjacencyMatrix sampled;
      if (graph == nullptr) {
        auto [tau, a] = sample_sbm(n, cfg.sbm, graph_seed(cfg, n, rep));
        truths.push_back(std::move(tau));
        sampled = std::move(a);
        graph = &sampled;
      } else if (fixed_truths != nullptr) {
        truths = *fixed_truths;
      }
      ctx.eig = eig_sym(graph->dense(), cfg.big_d);
      const ExtendedEmbedding emb = embedding_from_eig(*ctx.eig, cfg.big_d);
      ctx.z = emb.z;
    }
  } catch (const std::exception& e) {
    setup_error = e.what();
  }

  for (const auto& method : cfg.methods) {
    RunRecord rec;
    rec.n = n;
    rec.replicate = rep;
    rec.method = method;
    rec.seed = ctx.seed;
    rec.aris.assign(truths.size(), std::nan(""));
    if (!setup_error.empty()) {
      rec.status = "error";
      rec.detail = sanitize(setup_error);
      out.records.push_back(std::move(rec));
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const SelectionResult r = run_method(ctx, method);
      rec.d_hat = r.d_hat;
      rec.k_hat = r.k_hat;
      for (std::size_t t = 0; t < truths.size(); ++t)
        rec.aris[t] = ari(r.labels, truths[t]);
    } catch (const std::exception& e) {
      rec.status = "error";
      rec.detail = sanitize(e.what());
    }
    rec.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    out.records.push_back(std::move(rec));
  }
  return out;
}

void write_records_csv(const PipelineResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "n,replicate,method,status,d_hat,K_hat,seed";
  for (const auto& name : res.truth_names) out << ",ari_" << name;
  out << ",detail\n";
  for (const auto& r : res.records) {
    out << r.n << "," << r.replicate << "," << r.method << "," << r.status << ","
        << r.d_hat << "," << r.k_hat << "," << r.seed;
    for (double a : r.aris) out << "," << format_g17(a);
    out << "," << r.detail << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_timings_log(const PipelineResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "n,replicate,method,runtime_ms\n";
  for (const auto& r : res.records)
    out << r.n << "," << r.replicate << "," << r.method << ","
        << format_g17(r.runtime_ms) << "\n";
}

}  // namespace

void read_truth_csv(const std::string& path, std::vector<std::string>* names,
                    std::vector<Labels>* truths) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "vertex")
    throw IoError(path + ": expected header \"vertex,<name>,...\"");
  names->clear();
  for (std::size_t c = 1; c < header.size(); ++c) names->push_back(trim(header[c]));

  std::vector<std::vector<int>> rows;
  std::vector<long> ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split(t, ',');
    if (fields.size() != header.size())
      throw IoError(path + ":" + std::to_string(line_no) + ": wrong field count");
    try {
      ids.push_back(std::stol(trim(fields[0])));
      std::vector<int> labs;
      for (std::size_t c = 1; c < fields.size(); ++c)
        labs.push_back(std::stoi(trim(fields[c])));
      rows.push_back(std::move(labs));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(line_no) + ": bad integer field");
    }
  }
  const long n = static_cast<long>(rows.size());
  truths->assign(names->size(), Labels(n, 0));
  for (long r = 0; r < n; ++r) {
    if (ids[r] < 0 || ids[r] >= n)
      throw IoError(path + ": vertex id " + std::to_string(ids[r]) +
                    " outside 0.." + std::to_string(n - 1));
    for (std::size_t c = 0; c < names->size(); ++c)
      (*truths)[c][ids[r]] = rows[r][c];
  }
}

IngestResult ingest_graph(const std::string& edges_path, const std::string& labels_path,
                          bool largest_cc) {
  IngestResult res;
  res.graph = read_edge_list(edges_path, &res.edge_report);
  if (res.edge_report.duplicate_edges > 0)
    res.warnings.push_back("deduplicated " +
                           std::to_string(res.edge_report.duplicate_edges) +
                           " duplicate edge(s)");
  const int n = res.graph.n();

  if (!labels_path.empty()) {
    read_truth_csv(labels_path, &res.truth_names, &res.truths);
    for (const auto& t : res.truths)
      if (static_cast<int>(t.size()) != n)
        throw IoError(labels_path + ": label rows do not match vertex count " +
                      std::to_string(n));
  }

  // Connected components by breadth-first traversal.
  std::vector<int> comp(n, -1);
  int num_comp = 0;
  std::vector<int> queue;
  std::vector<int> comp_size;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const int c = num_comp++;
    comp_size.push_back(0);
    queue.assign(1, s);
    comp[s] = c;
    while (!queue.empty()) {
      const int u = queue.back();
      queue.pop_back();
      ++comp_size[c];
      for (int v = 0; v < n; ++v)
        if (res.graph.a(u, v) && comp[v] < 0) {
          comp[v] = c;
          queue.push_back(v);
        }
    }
  }
  res.num_components = num_comp;

  if (num_comp > 1 && largest_cc) {
    int keep = 0;
    for (int c = 1; c < num_comp; ++c)
      if (comp_size[c] > comp_size[keep]) keep = c;
    res.old_ids.clear();
    for (int v = 0; v < n; ++v)
      if (comp[v] == keep) res.old_ids.push_back(v);
    const int m = static_cast<int>(res.old_ids.size());
    AdjacencyMatrix sub;
    sub.a.setZero(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub.a(i, j) = res.graph.a(res.old_ids[i], res.old_ids[j]);
    res.graph = std::move(sub);
    for (auto& t : res.truths) {
      Labels remapped(m);
      for (int i = 0; i < m; ++i) remapped[i] = t[res.old_ids[i]];
      t = std::move(remapped);
    }
    res.extracted_cc = true;
    res.warnings.push_back("kept largest connected component: " + std::to_string(m) +
                           " of " + std::to_string(n) + " vertices");
  } else {
    res.old_ids.resize(n);
    for (int v = 0; v < n; ++v) res.old_ids[v] = v;
    if (num_comp > 1)
      res.warnings.push_back("graph has " + std::to_string(num_comp) +
                             " connected components; pass --largest-cc to extract one");
  }
  return res;
}

void write_ingest_outputs(const IngestResult& r, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_edge_list(r.graph, out_dir + "/graph.edges");
  {
    std::ofstream out(out_dir + "/remap.csv");
    if (!out) throw IoError("cannot open for writing: " + out_dir + "/remap.csv");
    out << "old,new\n";
    for (std::size_t i = 0; i < r.old_ids.size(); ++i)
      out << r.old_ids[i] << "," << i << "\n";
  }
  if (!r.truths.empty()) {
    std::ofstream out(out_dir + "/labels.csv");
    if (!out) throw IoError("cannot open for writing: " + out_dir + "/labels.csv");
    out << "vertex";
    for (const auto& name : r.truth_names) out << "," << name;
    out << "\n";
    for (int v = 0; v < r.graph.n(); ++v) {
      out << v;
      for (const auto& t : r.truths) out << "," << t[v];
      out << "\n";
    }
  }
}

std::vector<std::string> run_generate(const ExperimentConfig& cfg) {
  if (cfg.model != ExperimentConfig::Model::kSbm)
    throw ParamError("generate needs model = sbm");
  cfg.validate(false);
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> files;
  char buf[64];
  for (int n : cfg.n_values)
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      auto [tau, a] = sample_sbm(n, cfg.sbm, graph_seed(cfg, n, rep));
      std::snprintf(buf, sizeof(buf), "graph_n%d_r%03d.edges", n, rep);
      const std::string graph_path = cfg.out_dir + "/" + buf;
      write_edge_list(a, graph_path);
      std::snprintf(buf, sizeof(buf), "truth_n%d_r%03d.csv", n, rep);
      const std::string truth_path = cfg.out_dir + "/" + buf;
      write_labels_csv(tau, truth_path);
      files.push_back(graph_path);
      files.push_back(truth_path);
    }
  return files;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate(true);
  if (cfg.model == ExperimentConfig::Model::kGmm && cfg.gmm.D != cfg.big_d)
    throw ParamError("gmm_D must equal D for pipeline runs");
  fs::create_directories(cfg.out_dir);

  PipelineResult res;

  // Edge-list runs load the graph once; replicates vary only the fit seeds.
  std::optional<IngestResult> loaded;
  std::vector<int> n_values = cfg.n_values;
  if (cfg.model == ExperimentConfig::Model::kEdgeList) {
    loaded = ingest_graph(cfg.edge_list_path, cfg.labels_path, cfg.largest_cc);
    if (cfg.big_d > loaded->graph.n())
      throw ParamError("D exceeds the vertex count of the loaded graph");
    n_values.assign(1, loaded->graph.n());
    res.truth_names = loaded->truth_names;
  } else {
    res.truth_names.assign(1, "tau");
  }

  struct Task {
    int n, rep;
  };
  std::vector<Task> tasks;
  for (int n : n_values)
    for (int rep = 0; rep < cfg.replicates; ++rep) tasks.push_back({n, rep});

  std::vector<ReplicateOutput> outputs(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), cfg.threads, [&](int idx) {
    const auto [n, rep] = tasks[idx];
    outputs[idx] = run_replicate(cfg, n, rep,
                                 loaded ? &loaded->graph : nullptr,
                                 loaded ? &loaded->truths : nullptr);
  });

  for (auto& out : outputs)
    for (auto& rec : out.records) {
      if (rec.status != "ok") ++res.failures;
      res.records.push_back(std::move(rec));
    }

  write_records_csv(res, cfg.out_dir + "/records.csv");
  write_timings_log(res, cfg.out_dir + "/timings.log");

  // Per-(n, method) summaries, selection tables and paired differences.
  std::ofstream summary(cfg.out_dir + "/summary.csv");
  summary << "n,method,truth,ok_count,mean_ari,median_ari\n";
  std::ofstream table(cfg.out_dir + "/selection_table.csv");
  table << "n,method,d_hat,K_hat,count\n";
  std::ofstream paired(cfg.out_dir + "/paired_diffs.csv");
  paired << "n,truth,method_a,method_b,replicate,ari_a,ari_b,diff\n";

  json js;
  js["truths"] = res.truth_names;
  js["methods"] = cfg.methods;
  js["failures"] = res.failures;
  js["summaries"] = json::array();
  js["sign_tests"] = json::array();

  auto record_of = [&](int n, int rep, const std::string& method) -> const RunRecord* {
    for (const auto& r : res.records)
      if (r.n == n && r.replicate == rep && r.method == method) return &r;
    return nullptr;
  };

  for (int n : n_values) {
    for (const auto& method : cfg.methods) {
      std::vector<std::pair<int, int>> dk;
      for (const auto& r : res.records)
        if (r.n == n && r.method == method && r.status == "ok")
          dk.emplace_back(r.d_hat, r.k_hat);
      if (!dk.empty()) {
        const SelectionTable st = selection_table(dk);
        for (const auto& [cell, count] : st.counts)
          table << n << "," << method << "," << cell.first << "," << cell.second
                << "," << count << "\n";
      }
      for (std::size_t t = 0; t < res.truth_names.size(); ++t) {
        std::vector<double> values;
        for (const auto& r : res.records)
          if (r.n == n && r.method == method && r.status == "ok")
            values.push_back(r.aris[t]);
        const double mean =
            values.empty()
                ? std::nan("")
                : std::accumulate(values.begin(), values.end(), 0.0) / values.size();
        const double med = values.empty() ? std::nan("") : median(values);
        summary << n << "," << method << "," << res.truth_names[t] << ","
                << values.size() << "," << format_g17(mean) << "," << format_g17(med)
                << "\n";
        js["summaries"].push_back({{"n", n},
                                   {"method", method},
                                   {"truth", res.truth_names[t]},
                                   {"ok_count", values.size()},
                                   {"mean_ari", mean},
                                   {"median_ari", med}});
      }
    }
    // Paired records for sign tests, over every ordered method pair.
    for (std::size_t t = 0; t < res.truth_names.size(); ++t)
      for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.methods.size(); ++j) {
          int wins = 0, losses = 0, ties = 0;
          for (int rep = 0; rep < cfg.replicates; ++rep) {
            const RunRecord* a = record_of(n, rep, cfg.methods[i]);
            const RunRecord* b = record_of(n, rep, cfg.methods[j]);
            if (a == nullptr || b == nullptr || a->status != "ok" || b->status != "ok")
              continue;
            const double da = a->aris[t], db = b->aris[t];
            paired << n << "," << res.truth_names[t] << "," << cfg.methods[i] << ","
                   << cfg.methods[j] << "," << rep << "," << format_g17(da) << ","
                   << format_g17(db) << "," << format_g17(da - db) << "\n";
            if (da > db) ++wins;
            else if (da < db) ++losses;
            else ++ties;
          }
          js["sign_tests"].push_back(
              {{"n", n},
               {"truth", res.truth_names[t]},
               {"method_a", cfg.methods[i]},
               {"method_b", cfg.methods[j]},
               {"wins_a", wins},
               {"wins_b", losses},
               {"ties", ties},
               {"p_a_beats_b", sign_test_p_greater(wins, losses)}});
        }
  }
  std::ofstream(cfg.out_dir + "/summary.json") << js.dump(2) << "\n";
  return res;
}

ObsStatsSummary run_obsstats(const ExperimentConfig& cfg) {
  if (cfg.model != ExperimentConfig::Model::kSbm)
    throw ParamError("obsstats needs model = sbm (known memberships)");
  cfg.validate(false);
  if (cfg.big_d < 1) throw ParamError("config needs D >= 1");
  for (int n : cfg.n_values)
    if (cfg.big_d > n) throw ParamError("D must not exceed n");
  fs::create_directories(cfg.out_dir);

  ObsStatsSummary sum;
  sum.d0 = cfg.true_d();
  sum.big_d = cfg.big_d;
  const int d0 = sum.d0;
  const int red = cfg.big_d - d0;

  std::ofstream means_csv(cfg.out_dir + "/block_means.csv");
  means_csv << "n,replicate,block,dim,mean\n";
  std::ofstream vars_csv(cfg.out_dir + "/block_variances.csv");
  vars_csv << "n,replicate,block,dim,variance,variance_times_n\n";
  std::ofstream cov_csv(cfg.out_dir + "/block_covariances.csv");
  cov_csv << "n,replicate,block,mean_abs_offdiag,max_abs_offdiag,mean_abs_cross\n";

  if (red == 0) {
    // d == D: no redundant block at all; leave an explicit marker.
    std::ofstream(cfg.out_dir + "/NO_REDUNDANT_DIMS") << "redundant dimensions: 0\n";
    json js;
    js["redundant_dims"] = 0;
    std::ofstream(cfg.out_dir + "/summary.json") << js.dump(2) << "\n";
    return sum;
  }

  struct RepStats {
    // [block]: mean vector, variance vector, redundant offdiag summary, cross
    std::vector<Eigen::VectorXd> mean, var;
    std::vector<double> mean_abs_offdiag, max_abs_offdiag, mean_abs_cross;
  };

  for (int n : cfg.n_values) {
    std::vector<RepStats> reps(cfg.replicates);
    parallel_for(cfg.replicates, cfg.threads, [&](int rep) {
      auto [tau, a] = sample_sbm(n, cfg.sbm, graph_seed(cfg, n, rep));
      const ExtendedEmbedding emb = extended_ase(a, cfg.big_d);
      const BlockStats stats = block_stats(emb.z, tau);
      RepStats rs;
      for (const auto& blk : stats.blocks) {
        rs.mean.push_back(blk.mean.tail(red));
        rs.var.push_back(blk.var.tail(red));
        const auto rr = blk.cov.bottomRightCorner(red, red);
        double acc = 0.0, mx = 0.0;
        for (int i = 0; i < red; ++i)
          for (int j = 0; j < red; ++j)
            if (i != j) {
              acc += std::abs(rr(i, j));
              mx = std::max(mx, std::abs(rr(i, j)));
            }
        rs.mean_abs_offdiag.push_back(acc / (static_cast<double>(red) * (red - 1)));
        rs.max_abs_offdiag.push_back(mx);
        const auto cross = blk.cov.topRightCorner(d0, red);
        rs.mean_abs_cross.push_back(cross.cwiseAbs().mean());
      }
      reps[rep] = std::move(rs);
    });

    ObsStatsSummary::PerN per;
    per.n = n;
    const int num_blocks = static_cast<int>(reps[0].mean.size());
    per.var_dim_median_by_block.assign(num_blocks, std::vector<double>(red, 0.0));
    std::vector<std::vector<std::vector<double>>> var_samples(
        num_blocks, std::vector<std::vector<double>>(red));

    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const RepStats& rs = reps[rep];
      std::vector<double> rep_abs_means;
      double offdiag_acc = 0.0;
      for (int k = 0; k < num_blocks; ++k) {
        for (int s = 0; s < red; ++s) {
          means_csv << n << "," << rep << "," << (k + 1) << "," << (s + 1) << ","
                    << format_g17(rs.mean[k][s]) << "\n";
          vars_csv << n << "," << rep << "," << (k + 1) << "," << (s + 1) << ","
                   << format_g17(rs.var[k][s]) << "," << format_g17(rs.var[k][s] * n)
                   << "\n";
          per.abs_means.push_back(std::abs(rs.mean[k][s]));
          rep_abs_means.push_back(std::abs(rs.mean[k][s]));
          var_samples[k][s].push_back(rs.var[k][s]);
        }
        cov_csv << n << "," << rep << "," << (k + 1) << ","
                << format_g17(rs.mean_abs_offdiag[k]) << ","
                << format_g17(rs.max_abs_offdiag[k]) << ","
                << format_g17(rs.mean_abs_cross[k]) << "\n";
        offdiag_acc += rs.mean_abs_offdiag[k];
      }
      per.rep_median_abs_mean.push_back(median(rep_abs_means));
      per.rep_mean_abs_offdiag.push_back(offdiag_acc / num_blocks);
    }
    for (int k = 0; k < num_blocks; ++k)
      for (int s = 0; s < red; ++s)
        per.var_dim_median_by_block[k][s] = median(var_samples[k][s]);
    sum.per_n.push_back(std::move(per));
  }

  json js;
  js["redundant_dims"] = red;
  js["d0"] = d0;
  js["per_n"] = json::array();
  for (const auto& per : sum.per_n) {
    json entry;
    entry["n"] = per.n;
    entry["median_abs_mean"] = median(per.abs_means);
    entry["median_rep_mean_abs_offdiag"] = median(per.rep_mean_abs_offdiag);
    js["per_n"].push_back(entry);
  }
  std::ofstream(cfg.out_dir + "/summary.json") << js.dump(2) << "\n";
  return sum;
}

}  // namespace sgc
