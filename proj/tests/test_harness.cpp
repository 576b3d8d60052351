#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgc/config.hpp"
#include "sgc/errors.hpp"
#include "sgc/harness.hpp"
#include "sgc/metrics.hpp"
#include "sgc/util.hpp"

using namespace sgc;
namespace fs = std::filesystem;

namespace {

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string base_config(const std::string& out_dir) {
  return "# two-block test model\n"
         "model = sbm\n"
         "B = 0.5 0.05 ; 0.05 0.4\n"
         "pi = 0.5 0.5\n"
         "n = 80\n"
         "D = 4\n"
         "K_max = 3\n"
         "methods = sms, sms-reduced\n"
         "replicates = 3\n"
         "seed = 321\n"
         "em_restarts = 2\n"
         "out_dir = " + out_dir + "\n";
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("SGC_CLI_PATH");
  REQUIRE(cli != nullptr);
  const int status = std::system((std::string(cli) + " " + args).c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parsing, overrides and validation") {
  const std::string dir = scratch_dir("sgc_cfg");
  const std::string path = dir + "/exp.cfg";
  write_file(path, base_config(dir));
  ExperimentConfig cfg = load_config(path);
  CHECK(cfg.sbm.b(0, 0) == 0.5);
  CHECK(cfg.sbm.pi.size() == 2);
  CHECK(cfg.n_values == std::vector<int>{80});
  CHECK(cfg.methods == std::vector<std::string>{"sms", "sms-reduced"});
  CHECK(cfg.seed == 321);
  CHECK(cfg.true_d() == 2);
  cfg.validate(true);

  apply_override(cfg, "n", "40,80");
  CHECK(cfg.n_values == std::vector<int>{40, 80});
  apply_override(cfg, "em_tol", "1e-6");
  CHECK(cfg.em.tol == 1e-6);
  CHECK_THROWS_AS(apply_override(cfg, "bogus_key", "1"), ParamError);
  CHECK_THROWS_AS(apply_override(cfg, "n", "zero"), ParamError);

  apply_override(cfg, "D", "100");
  CHECK_THROWS_AS(cfg.validate(true), ParamError);  // D > n
  apply_override(cfg, "D", "4");
  apply_override(cfg, "methods", "warp-drive");
  CHECK_THROWS_AS(cfg.validate(true), ParamError);
  apply_override(cfg, "methods", "sms");
  apply_override(cfg, "replicates", "0");
  CHECK_THROWS_AS(cfg.validate(true), ParamError);

  write_file(path, "model = edgelist\nedge_list = /nonexistent/x.edges\n");
  CHECK_THROWS_AS(load_config(path).validate(false), ParamError);
}

TEST_CASE("generate writes edge lists and truth files deterministically") {
  const std::string dir = scratch_dir("sgc_gen");
  ExperimentConfig cfg;
  cfg.sbm.b.resize(2, 2);
  cfg.sbm.b << 0.4, 0.1, 0.1, 0.3;
  cfg.sbm.pi.resize(2);
  cfg.sbm.pi << 0.5, 0.5;
  cfg.n_values = {30};
  cfg.replicates = 2;
  cfg.seed = 5;
  cfg.out_dir = dir;
  const auto files = run_generate(cfg);
  REQUIRE(files.size() == 4);
  const std::string first = read_file(files[0]);
  CHECK(first.rfind("n 30\n", 0) == 0);

  // n=1: header plus zero edges
  ExperimentConfig tiny = cfg;
  tiny.n_values = {1};
  tiny.replicates = 1;
  tiny.out_dir = scratch_dir("sgc_gen1");
  const auto tiny_files = run_generate(tiny);
  CHECK(read_file(tiny_files[0]) == "n 1\n");

  // same seed, byte-identical rerun
  const std::string dir2 = scratch_dir("sgc_gen2");
  ExperimentConfig again = cfg;
  again.out_dir = dir2;
  const auto files2 = run_generate(again);
  CHECK(read_file(files[0]) == read_file(files2[0]));
  CHECK(read_file(files[1]) == read_file(files2[1]));
}

TEST_CASE("pipeline: records, summaries, totality and determinism across threads") {
  const std::string dir1 = scratch_dir("sgc_pipe1");
  ExperimentConfig cfg = load_config([&] {
    const std::string path = dir1 + "/exp.cfg";
    write_file(path, base_config(dir1));
    return path;
  }());
  cfg.threads = 1;
  const PipelineResult r1 = run_pipeline(cfg);
  CHECK(r1.records.size() == 6);  // one per (replicate, method)
  CHECK(r1.failures == 0);
  for (const auto& rec : r1.records) {
    CHECK(rec.status == "ok");
    CHECK(rec.aris.size() == 1);
    CHECK(rec.aris[0] >= 0.9);  // strongly separated blocks
  }

  const std::string dir2 = scratch_dir("sgc_pipe2");
  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = dir2;
  cfg2.threads = 3;
  run_pipeline(cfg2);
  for (const char* f :
       {"records.csv", "summary.csv", "selection_table.csv", "paired_diffs.csv",
        "summary.json"})
    CHECK(read_file(dir1 + "/" + f) == read_file(dir2 + "/" + f));

  const std::string records = read_file(dir1 + "/records.csv");
  CHECK(records.find("n,replicate,method,status,d_hat,K_hat,seed,ari_tau,detail") == 0);

  // summary mean equals the mean of the records (consistency)
  double sum = 0.0;
  for (const auto& rec : r1.records)
    if (rec.method == "sms") sum += rec.aris[0];
  const std::string summary = read_file(dir1 + "/summary.csv");
  std::istringstream ss(summary);
  std::string line;
  std::getline(ss, line);  // header
  bool found = false;
  while (std::getline(ss, line)) {
    if (line.find(",sms,") == std::string::npos) continue;
    const auto fields = split(line, ',');
    CHECK(std::abs(std::stod(fields[4]) - sum / 3.0) <= 1e-12);
    found = true;
  }
  CHECK(found);
}

TEST_CASE("pipeline on model-sampled rows (gmm) works without a graph") {
  const std::string dir = scratch_dir("sgc_pipe_gmm");
  const std::string path = dir + "/exp.cfg";
  write_file(path,
             "model = gmm\n"
             "gmm_d = 1\ngmm_D = 3\n"
             "gmm_means = 3 ; -3\n"
             "gmm_sigma2 = 1 1\n"
             "n = 120\nD = 3\nK_max = 3\n"
             "methods = sms, two-step\nreplicates = 2\nseed = 9\n"
             "em_restarts = 2\n"
             "out_dir = " + dir + "\n");
  const ExperimentConfig cfg = load_config(path);
  const PipelineResult r = run_pipeline(cfg);
  CHECK(r.failures == 0);
  for (const auto& rec : r.records) CHECK(rec.aris[0] > 0.9);

  // bic-zg needs a spectrum; the config layer rejects it for gmm data
  ExperimentConfig bad = cfg;
  bad.methods = {"bic-zg-1"};
  CHECK_THROWS_AS(bad.validate(true), ParamError);
}

TEST_CASE("ingest: validation, dedup warning, largest component, remap") {
  const std::string dir = scratch_dir("sgc_ingest");
  const std::string edges = dir + "/g.edges";
  write_file(edges, "n 7\n0 1\n1 2\n0 2\n1 0\n3 4\n4 5\n5 3\n3 5\n");
  // vertex 6 is isolated; {0,1,2} and {3,4,5} are triangles; "1 0" and "3 5"
  // duplicate earlier lines

  const IngestResult plain = ingest_graph(edges, "", false);
  CHECK(plain.graph.n() == 7);
  CHECK(plain.num_components == 3);
  CHECK(plain.edge_report.duplicate_edges == 2);
  REQUIRE(!plain.warnings.empty());

  const std::string labels = dir + "/labels.csv";
  write_file(labels,
             "vertex,side,parity\n0,1,1\n1,1,2\n2,1,1\n3,2,2\n4,2,1\n5,2,2\n6,1,1\n");
  const IngestResult cc = ingest_graph(edges, labels, true);
  CHECK(cc.extracted_cc);
  CHECK(cc.graph.n() == 3);
  CHECK(cc.old_ids == std::vector<int>{0, 1, 2});
  CHECK(cc.truth_names == std::vector<std::string>{"side", "parity"});
  CHECK(cc.truths[0] == Labels{1, 1, 1});
  CHECK(cc.truths[1] == Labels{1, 2, 1});

  write_ingest_outputs(cc, dir + "/out");
  CHECK(read_file(dir + "/out/remap.csv").find("old,new\n0,0\n1,1\n2,2\n") == 0);
  CHECK(fs::exists(dir + "/out/graph.edges"));
  CHECK(fs::exists(dir + "/out/labels.csv"));

  const std::string bad = dir + "/bad.edges";
  write_file(bad, "n 3\n0 0\n");
  CHECK_THROWS_AS(ingest_graph(bad, "", false), IoError);
}

TEST_CASE("obsstats: redundant statistics files plus d == D marker") {
  const std::string dir = scratch_dir("sgc_obs");
  ExperimentConfig cfg;
  cfg.sbm.b.resize(2, 2);
  cfg.sbm.b << 0.5, 0.05, 0.05, 0.4;
  cfg.sbm.pi.resize(2);
  cfg.sbm.pi << 0.5, 0.5;
  cfg.n_values = {120};
  cfg.big_d = 8;
  cfg.replicates = 3;
  cfg.seed = 12;
  cfg.out_dir = dir;
  const ObsStatsSummary sum = run_obsstats(cfg);
  CHECK(sum.d0 == 2);
  REQUIRE(sum.per_n.size() == 1);
  CHECK(sum.per_n[0].abs_means.size() == 3u * 2u * 6u);
  CHECK(fs::exists(dir + "/block_means.csv"));
  CHECK(fs::exists(dir + "/block_variances.csv"));
  CHECK(fs::exists(dir + "/block_covariances.csv"));
  CHECK(!fs::exists(dir + "/NO_REDUNDANT_DIMS"));

  // the variance file carries both raw and n-scaled values
  std::istringstream vars(read_file(dir + "/block_variances.csv"));
  std::string header, row;
  std::getline(vars, header);
  CHECK(header == "n,replicate,block,dim,variance,variance_times_n");
  std::getline(vars, row);
  const auto fields = split(row, ',');
  CHECK(std::stod(fields[5]) ==
        doctest::Approx(120.0 * std::stod(fields[4])).epsilon(1e-12));

  ExperimentConfig flat = cfg;
  flat.big_d = 2;  // d == D: no redundant block
  flat.out_dir = scratch_dir("sgc_obs_flat");
  run_obsstats(flat);
  CHECK(fs::exists(flat.out_dir + "/NO_REDUNDANT_DIMS"));
}

TEST_CASE("CLI subcommands cover the external interfaces") {
  const std::string dir = scratch_dir("sgc_cli");
  const std::string cfg_path = dir + "/exp.cfg";
  write_file(cfg_path, base_config(dir + "/run"));

  CHECK(run_cli("generate --config " + cfg_path + " --set replicates=1 --out " +
                dir + "/gen") == 0);
  const std::string graph = dir + "/gen/graph_n80_r000.edges";
  const std::string truth = dir + "/gen/truth_n80_r000.csv";
  REQUIRE(fs::exists(graph));
  REQUIRE(fs::exists(truth));

  CHECK(run_cli("embed --graph " + graph + " --D 4 --out " + dir + "/z.csv") == 0);
  CHECK(fs::exists(dir + "/z.csv"));

  CHECK(run_cli("fit --embedding " + dir + "/z.csv --d 2 --K 2 --params-out " +
                dir + "/params.txt > " + dir + "/fit.out") == 0);
  CHECK(read_file(dir + "/fit.out").find("d,K,loglik,bic,converged") == 0);
  CHECK(fs::exists(dir + "/params.txt"));

  CHECK(run_cli("select --graph " + graph + " --method sms --D 4 --K-max 3 --out " +
                dir + "/sel > " + dir + "/sel.out") == 0);
  CHECK(fs::exists(dir + "/sel/labels.csv"));
  CHECK(fs::exists(dir + "/sel/grid.csv"));
  CHECK(read_file(dir + "/sel.out").find("method,d_hat,K_hat,runtime_ms") == 0);

  CHECK(run_cli("ari --a " + truth + " --b " + truth + " > " + dir + "/ari.out") == 0);
  CHECK(read_file(dir + "/ari.out") == "1\n");

  CHECK(run_cli("pipeline --config " + cfg_path + " --set replicates=1") == 0);
  CHECK(fs::exists(dir + "/run/records.csv"));

  CHECK(run_cli("obsstats --config " + cfg_path + " --set replicates=1 --out " +
                dir + "/obs") == 0);
  CHECK(fs::exists(dir + "/obs/block_means.csv"));

  CHECK(run_cli("ingest --edges " + graph + " --out " + dir + "/ing") == 0);
  CHECK(fs::exists(dir + "/ing/graph.edges"));

  // exit code 1 on configuration errors
  CHECK(run_cli("pipeline --config " + dir + "/missing.cfg 2>/dev/null") == 1);
  CHECK(run_cli("select --graph " + graph +
                " --method warp --D 4 --K-max 3 2>/dev/null") == 1);
}

TEST_CASE("env var provides the default output directory") {
  const std::string dir = scratch_dir("sgc_env");
  const std::string cfg_path = dir + "/exp.cfg";
  // config without out_dir: falls back to $SGC_OUT_DIR
  std::string cfg_text = base_config("UNUSED");
  cfg_text.erase(cfg_text.find("out_dir ="));
  write_file(cfg_path, cfg_text);
  setenv("SGC_OUT_DIR", (dir + "/from_env").c_str(), 1);
  const ExperimentConfig cfg = load_config(cfg_path);
  CHECK(cfg.out_dir == dir + "/from_env");
  unsetenv("SGC_OUT_DIR");
}
