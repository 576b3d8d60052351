#include "sgc/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgc/errors.hpp"
#include "sgc/util.hpp"

namespace sgc {

namespace {

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParamError("config key '" + key + "': bad number \"" + s + "\"");
  }
}

long parse_long(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParamError("config key '" + key + "': bad integer \"" + s + "\"");
  }
}

std::vector<double> parse_numbers(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(tok, key));
  if (out.empty()) throw ParamError("config key '" + key + "': empty value");
  return out;
}

Eigen::MatrixXd parse_matrix(const std::string& s, const std::string& key) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(s, ';')) {
    const std::string t = trim(row);
    if (t.empty()) continue;
    rows.push_back(parse_numbers(t, key));
    if (rows.back().size() != rows.front().size())
      throw ParamError("config key '" + key + "': ragged matrix");
  }
  if (rows.empty()) throw ParamError("config key '" + key + "': empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ParamError("config key '" + key + "': bad boolean \"" + s + "\"");
}

}  // namespace

int ExperimentConfig::true_d() const {
  if (d0 > 0) return d0;
  if (model == Model::kSbm) return sbm.rank();
  if (model == Model::kGmm) return gmm.d;
  return 0;
}

int ExperimentConfig::true_k() const {
  if (model == Model::kSbm) return sbm.num_blocks();
  if (model == Model::kGmm) return gmm.K;
  return 0;
}

void ExperimentConfig::validate(bool needs_embedding) const {
  if (replicates < 1) throw ParamError("replicates must be >= 1");
  switch (model) {
    case Model::kSbm:
      sbm.validate();
      if (n_values.empty()) throw ParamError("config needs n");
      break;
    case Model::kGmm:
      gmm.validate();
      if (n_values.empty()) throw ParamError("config needs n");
      break;
    case Model::kEdgeList:
      if (edge_list_path.empty()) throw ParamError("config needs edge_list");
      if (!std::filesystem::exists(edge_list_path))
        throw ParamError("edge_list file does not exist: " + edge_list_path);
      if (!labels_path.empty() && !std::filesystem::exists(labels_path))
        throw ParamError("labels file does not exist: " + labels_path);
      break;
  }
  for (int n : n_values)
    if (n < 1) throw ParamError("n must be >= 1");
  if (needs_embedding) {
    if (big_d < 1) throw ParamError("config needs D >= 1");
    for (int n : n_values)
      if (big_d > n) throw ParamError("D must not exceed n");
    if (k_max < 1) throw ParamError("config needs K_max >= 1");
    if (methods.empty()) throw ParamError("config needs at least one method");
    for (const auto& m : methods) {
      const bool known = m == "sms" || m == "sms-reduced" || m == "two-step" ||
                         m.rfind("bic-zg-", 0) == 0;
      if (!known) throw ParamError("unknown method: " + m);
      if (model == Model::kGmm && m.rfind("bic-zg-", 0) == 0)
        throw ParamError("bic-zg methods need a graph, not gmm-sampled rows");
    }
  }
  if (em.tol <= 0 || em.max_iter < 1 || em.restarts < 1)
    throw ParamError("bad EM options");
  if (threads < 1) throw ParamError("threads must be >= 1");
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "model") {
    if (value == "sbm") cfg.model = ExperimentConfig::Model::kSbm;
    else if (value == "edgelist") cfg.model = ExperimentConfig::Model::kEdgeList;
    else if (value == "gmm") cfg.model = ExperimentConfig::Model::kGmm;
    else throw ParamError("config key 'model': expected sbm|edgelist|gmm");
  } else if (key == "B") {
    cfg.sbm.b = parse_matrix(value, key);
  } else if (key == "pi") {
    cfg.sbm.pi = to_vector(parse_numbers(value, key));
  } else if (key == "edge_list") {
    cfg.edge_list_path = value;
  } else if (key == "labels") {
    cfg.labels_path = value;
  } else if (key == "largest_cc") {
    cfg.largest_cc = parse_bool(value, key);
  } else if (key == "n") {
    cfg.n_values.clear();
    for (const auto& tok : split(value, ','))
      cfg.n_values.push_back(static_cast<int>(parse_long(trim(tok), key)));
  } else if (key == "D") {
    cfg.big_d = static_cast<int>(parse_long(value, key));
  } else if (key == "K_max") {
    cfg.k_max = static_cast<int>(parse_long(value, key));
  } else if (key == "methods") {
    cfg.methods.clear();
    for (const auto& tok : split(value, ',')) {
      const std::string m = trim(tok);
      if (!m.empty()) cfg.methods.push_back(m);
    }
  } else if (key == "replicates") {
    cfg.replicates = static_cast<int>(parse_long(value, key));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_long(value, key));
  } else if (key == "d0") {
    cfg.d0 = static_cast<int>(parse_long(value, key));
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "em_tol") {
    cfg.em.tol = parse_double(value, key);
  } else if (key == "em_max_iter") {
    cfg.em.max_iter = static_cast<int>(parse_long(value, key));
  } else if (key == "em_restarts") {
    cfg.em.restarts = static_cast<int>(parse_long(value, key));
  } else if (key == "em_sigma2_floor") {
    cfg.em.sigma2_floor = parse_double(value, key);
  } else if (key == "em_ridge") {
    cfg.em.ridge = parse_double(value, key);
  } else if (key == "gmm_d") {
    cfg.gmm.d = static_cast<int>(parse_long(value, key));
  } else if (key == "gmm_D") {
    cfg.gmm.D = static_cast<int>(parse_long(value, key));
  } else if (key == "gmm_weights") {
    cfg.gmm.weights = to_vector(parse_numbers(value, key));
    cfg.gmm.K = static_cast<int>(cfg.gmm.weights.size());
  } else if (key == "gmm_means") {
    cfg.gmm.means = parse_matrix(value, key);
  } else if (key == "gmm_cov") {
    cfg.gmm.info_cov.clear();
    for (const auto& block : split(value, '|'))
      cfg.gmm.info_cov.push_back(parse_matrix(trim(block), key));
  } else if (key == "gmm_sigma2") {
    cfg.gmm.red_var = to_vector(parse_numbers(value, key));
  } else {
    throw ParamError("unknown config key: " + key);
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  ExperimentConfig cfg;
  if (const char* env = std::getenv("SGC_OUT_DIR")) cfg.out_dir = env;
  if (cfg.out_dir.empty()) cfg.out_dir = ".";

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw IoError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    try {
      apply_override(cfg, key, value);
    } catch (const ParamError& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  // Fill derived GMM defaults: identity informative covariances and the means
  // matrix fix K when they were not given explicitly.
  if (cfg.model == ExperimentConfig::Model::kGmm) {
    if (cfg.gmm.K == 0 && cfg.gmm.means.rows() > 0)
      cfg.gmm.K = static_cast<int>(cfg.gmm.means.rows());
    if (cfg.gmm.d == 0 && cfg.gmm.means.cols() > 0)
      cfg.gmm.d = static_cast<int>(cfg.gmm.means.cols());
    if (cfg.gmm.info_cov.empty() && cfg.gmm.K > 0)
      cfg.gmm.info_cov.assign(cfg.gmm.K,
                              Eigen::MatrixXd::Identity(cfg.gmm.d, cfg.gmm.d));
    if (cfg.gmm.weights.size() == 0 && cfg.gmm.K > 0)
      cfg.gmm.weights = Eigen::VectorXd::Constant(cfg.gmm.K, 1.0 / cfg.gmm.K);
  }
  return cfg;
}

}  // namespace sgc
