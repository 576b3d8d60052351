#include "sgc/graph.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sgc/errors.hpp"
#include "sgc/kernels.hpp"
#include "sgc/rng.hpp"
#include "sgc/util.hpp"

namespace sgc {

namespace {

void validate_pi(const Eigen::VectorXd& pi) {
  if (pi.size() < 1) throw ParamError("pi must have at least one entry");
  for (int k = 0; k < pi.size(); ++k)
    if (!(pi[k] > 0.0))
      throw ParamError("pi entries must be strictly positive (entry " +
                       std::to_string(k + 1) + " is " + format_g17(pi[k]) + ")");
  if (std::abs(pi.sum() - 1.0) > 1e-12)
    throw ParamError("pi must sum to 1 within 1e-12 (sum is " + format_g17(pi.sum()) + ")");
}

void check_labels(const Labels& tau, int num_blocks) {
  if (tau.empty()) throw ParamError("membership vector must be non-empty");
  for (std::size_t i = 0; i < tau.size(); ++i)
    if (tau[i] < 1 || tau[i] > num_blocks)
      throw ParamError("block label out of range at vertex " + std::to_string(i) +
                       ": " + std::to_string(tau[i]));
}

}  // namespace

int SbmParams::rank() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  return static_cast<int>((es.eigenvalues().cwiseAbs().array() > 1e-12 * scale).count());
}

void SbmParams::validate() const {
  if (b.rows() != b.cols() || b.rows() < 1)
    throw ParamError("B must be a square non-empty matrix");
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ParamError("B must be symmetric");
  if (b.minCoeff() < 0.0 || b.maxCoeff() > 1.0)
    throw ParamError("B entries must lie in [0,1]");
  if (pi.size() != b.rows())
    throw ParamError("pi length must match the block count of B");
  validate_pi(pi);
}

long AdjacencyMatrix::num_edges() const {
  long m = 0;
  for (int j = 0; j < a.cols(); ++j)
    for (int i = 0; i < j; ++i) m += a(i, j);
  return m;
}

void AdjacencyMatrix::validate() const {
  if (a.rows() != a.cols()) throw ParamError("adjacency matrix must be square");
  for (int j = 0; j < a.cols(); ++j) {
    if (a(j, j) != 0) throw ParamError("adjacency matrix must have a zero diagonal");
    for (int i = 0; i < j; ++i) {
      if (a(i, j) > 1) throw ParamError("adjacency entries must be 0 or 1");
      if (a(i, j) != a(j, i)) throw ParamError("adjacency matrix must be symmetric");
    }
  }
}

void LatentPositions::validate() const {
  const int n = static_cast<int>(x.rows());
  if (n < 1) throw ParamError("latent position matrix must be non-empty");
  const int d = static_cast<int>(x.cols());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xr = x;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double p = kernels::dot(xr.row(i).data(), xr.row(j).data(), d);
      if (p < -1e-9 || p > 1.0 + 1e-9)
        throw ParamError("latent positions give inner product outside [0,1]: rows " +
                         std::to_string(i) + "," + std::to_string(j) + " -> " +
                         format_g17(p));
    }
}

Labels sample_memberships(const Eigen::VectorXd& pi, int n, std::uint64_t seed) {
  validate_pi(pi);
  if (n < 1) throw ParamError("n must be >= 1");
  Rng rng(seed);
  Labels tau(n);
  for (int i = 0; i < n; ++i) tau[i] = rng.categorical(pi) + 1;
  return tau;
}

Eigen::MatrixXd edge_probability_matrix(const SbmParams& params, const Labels& tau) {
  params.validate();
  check_labels(tau, params.num_blocks());
  const int n = static_cast<int>(tau.size());
  Eigen::MatrixXd p(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) p(i, j) = params.b(tau[i] - 1, tau[j] - 1);
  return p;
}

AdjacencyMatrix sample_sbm_conditional(const SbmParams& params, const Labels& tau,
                                       std::uint64_t seed) {
  params.validate();
  check_labels(tau, params.num_blocks());
  const int n = static_cast<int>(tau.size());
  Rng rng(seed);
  AdjacencyMatrix g;
  g.a.setZero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const std::uint8_t e = rng.uniform() < params.b(tau[i] - 1, tau[j] - 1) ? 1 : 0;
      g.a(i, j) = e;
      g.a(j, i) = e;
    }
  return g;
}

std::pair<Labels, AdjacencyMatrix> sample_sbm(int n, const SbmParams& params,
                                              std::uint64_t seed) {
  params.validate();
  Labels tau = sample_memberships(params.pi, n, derive_seed(seed, {seed_tag("tau")}));
  AdjacencyMatrix a =
      sample_sbm_conditional(params, tau, derive_seed(seed, {seed_tag("edges")}));
  return {std::move(tau), std::move(a)};
}

AdjacencyMatrix sample_rdpg(const LatentPositions& latent, std::uint64_t seed) {
  const int n = static_cast<int>(latent.x.rows());
  if (n < 1) throw ParamError("latent position matrix must be non-empty");
  const int d = static_cast<int>(latent.x.cols());
  // Row-major copy so each latent vector is contiguous for the dot kernel.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xr = latent.x;
  Rng rng(seed);
  AdjacencyMatrix g;
  g.a.setZero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double p = kernels::dot(xr.row(i).data(), xr.row(j).data(), d);
      if (p < -1e-9 || p > 1.0 + 1e-9)
        throw ParamError("latent positions give edge probability outside [0,1]: rows " +
                         std::to_string(i) + "," + std::to_string(j) + " -> " +
                         format_g17(p));
      p = std::min(1.0, std::max(0.0, p));
      const std::uint8_t e = rng.uniform() < p ? 1 : 0;
      g.a(i, j) = e;
      g.a(j, i) = e;
    }
  return g;
}

void write_edge_list(const AdjacencyMatrix& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "n " << g.n() << "\n";
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j)
      if (g.a(i, j)) out << i << " " << j << "\n";
  if (!out) throw IoError("write failed: " + path);
}

AdjacencyMatrix read_edge_list(const std::string& path, EdgeListReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw IoError(path + ":" + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  line_no = 1;
  std::istringstream header(line);
  std::string tag;
  long n = -1;
  if (!(header >> tag >> n) || tag != "n" || n < 1)
    fail("expected header line \"n <count>\"");

  AdjacencyMatrix g;
  g.a.setZero(n, n);
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ss(t);
    long u = -1, v = -1;
    std::string extra;
    if (!(ss >> u >> v) || (ss >> extra))
      fail("expected \"u v\"");
    if (u < 0 || v < 0 || u >= n || v >= n)
      fail("vertex id out of range [0," + std::to_string(n - 1) + "]");
    if (u == v) fail("self-loop not allowed");
    if (g.a(u, v)) {
      if (report != nullptr) {
        ++report->duplicate_edges;
        report->duplicate_lines.push_back(line_no);
      }
      continue;
    }
    g.a(u, v) = 1;
    g.a(v, u) = 1;
  }
  return g;
}

void write_labels_csv(const Labels& tau, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "vertex,label\n";
  for (std::size_t i = 0; i < tau.size(); ++i) out << i << "," << tau[i] << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Labels read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  std::vector<std::pair<long, int>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split(t, ',');
    if (fields.size() < 2)
      throw IoError(path + ":" + std::to_string(line_no) + ": expected \"vertex,label\"");
    rows.emplace_back(std::stol(trim(fields[0])), std::stoi(trim(fields[1])));
  }
  Labels tau(rows.size(), 0);
  for (const auto& [v, lab] : rows) {
    if (v < 0 || v >= static_cast<long>(tau.size()))
      throw IoError(path + ": vertex id " + std::to_string(v) +
                    " outside 0.." + std::to_string(tau.size() - 1));
    tau[v] = lab;
  }
  return tau;
}

}  // namespace sgc
