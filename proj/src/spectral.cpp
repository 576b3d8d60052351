#include "sgc/spectral.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include <Eigen/Eigenvalues>

#ifdef SGC_HAVE_LAPACKE
#include <lapacke.h>
#endif

#include "sgc/errors.hpp"
#include "sgc/kernels.hpp"
#include "sgc/util.hpp"

namespace sgc {

namespace {

void check_symmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw ParamError("matrix must be square and non-empty");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ParamError("matrix must be symmetric within 1e-12");
}

void fix_signs(Eigen::MatrixXd& vecs) {
  const std::size_t n = static_cast<std::size_t>(vecs.rows());
  for (int j = 0; j < vecs.cols(); ++j) {
    double* col = vecs.col(j).data();
    if (col[kernels::max_abs_index(col, n)] < 0.0) vecs.col(j) = -vecs.col(j);
  }
}

#ifdef SGC_HAVE_LAPACKE
// BLAS threading is pinned so eigensolver output never depends on how many
// threads the surrounding harness happens to run.
void pin_blas_threads() {
  static std::once_flag once;
  std::call_once(once, [] {
    setenv("OPENBLAS_NUM_THREADS", "1", 1);
    setenv("OMP_NUM_THREADS", "1", 0);
  });
}
#endif

}  // namespace

SpectralDecomposition eig_sym(const Eigen::MatrixXd& a, int top) {
  check_symmetric(a);
  const int n = static_cast<int>(a.rows());
  if (top < 1 || top > n)
    throw ParamError("requested eigenpair count must lie in [1, n]");

  SpectralDecomposition out;
#ifdef SGC_HAVE_LAPACKE
  pin_blas_threads();
  Eigen::MatrixXd work = a;  // dsyevr clobbers its input
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, top);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(top));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0,
      /*il=*/n - top + 1, /*iu=*/n, /*abstol=*/0.0, &found, w.data(), z.data(), n,
      isuppz.data());
  if (info != 0 || found != top)
    throw NumericError("symmetric eigensolver failed (dsyevr info=" +
                       std::to_string(info) + ")");
  // LAPACK returns ascending order.
  out.eigenvalues.resize(top);
  out.eigenvectors.resize(n, top);
  for (int j = 0; j < top; ++j) {
    out.eigenvalues[j] = w[top - 1 - j];
    out.eigenvectors.col(j) = z.col(top - 1 - j);
  }
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw NumericError("symmetric eigensolver failed to converge");
  out.eigenvalues.resize(top);
  out.eigenvectors.resize(n, top);
  for (int j = 0; j < top; ++j) {
    out.eigenvalues[j] = es.eigenvalues()[n - 1 - j];
    out.eigenvectors.col(j) = es.eigenvectors().col(n - 1 - j);
  }
#endif
  fix_signs(out.eigenvectors);
  return out;
}

ExtendedEmbedding embedding_from_eig(const SpectralDecomposition& eig, int big_d) {
  const int m = static_cast<int>(eig.eigenvalues.size());
  if (big_d < 1 || big_d > m)
    throw ParamError("embedding dimension out of range of the decomposition");
  if (!(eig.eigenvalues[big_d - 1] > 0.0)) {
    int admissible = 0;
    while (admissible < m && eig.eigenvalues[admissible] > 0.0) ++admissible;
    throw EmbeddingDimError(
        "embedding dimension exceeds positive spectrum: eigenvalue " +
            std::to_string(big_d) + " is " + format_g17(eig.eigenvalues[big_d - 1]) +
            "; largest admissible D is " + std::to_string(admissible),
        admissible);
  }
  ExtendedEmbedding emb;
  emb.eigenvalues = eig.eigenvalues.head(big_d);
  emb.z = eig.eigenvectors.leftCols(big_d) *
          emb.eigenvalues.cwiseSqrt().asDiagonal();
  return emb;
}

ExtendedEmbedding extended_ase(const Eigen::MatrixXd& a, int big_d) {
  if (a.rows() < 1) throw ParamError("graph must be non-empty");
  if (big_d < 1 || big_d > a.rows())
    throw ParamError("embedding dimension must lie in [1, n]");
  return embedding_from_eig(eig_sym(a, big_d), big_d);
}

Eigen::Ref<const Eigen::MatrixXd> informative_part(const Eigen::MatrixXd& z, int d) {
  if (d < 0 || d > z.cols()) throw ParamError("split dimension out of range");
  return z.leftCols(d);
}

Eigen::Ref<const Eigen::MatrixXd> redundant_part(const Eigen::MatrixXd& z, int d) {
  if (d < 0 || d > z.cols()) throw ParamError("split dimension out of range");
  return z.rightCols(z.cols() - d);
}

BlockStats block_stats(const Eigen::Ref<const Eigen::MatrixXd>& y, const Labels& tau) {
  const int n = static_cast<int>(y.rows());
  if (n != static_cast<int>(tau.size()))
    throw ParamError("row count does not match the membership vector");
  int num_blocks = 0;
  for (int lab : tau) {
    if (lab < 1) throw ParamError("block labels must be >= 1");
    num_blocks = std::max(num_blocks, lab);
  }

  const int dim = static_cast<int>(y.cols());
  std::vector<std::vector<int>> members(num_blocks);
  for (int i = 0; i < n; ++i) members[tau[i] - 1].push_back(i);

  BlockStats stats;
  stats.blocks.resize(num_blocks);
  for (int k = 0; k < num_blocks; ++k) {
    const auto& rows = members[k];
    const int nk = static_cast<int>(rows.size());
    if (nk < 2)
      throw DegenerateBlockError("block " + std::to_string(k + 1) + " has " +
                                 std::to_string(nk) + " members; need at least 2");
    Eigen::MatrixXd packed(nk, dim);
    for (int r = 0; r < nk; ++r) packed.row(r) = y.row(rows[r]);

    auto& blk = stats.blocks[k];
    blk.count = nk;
    blk.mean = packed.colwise().mean();
    packed.rowwise() -= blk.mean.transpose();
    blk.var.resize(dim);
    for (int s = 0; s < dim; ++s)
      blk.var[s] = kernels::sum_sq(packed.col(s).data(), nk) / (nk - 1);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(dim, dim);
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(packed.transpose(),
                                                       1.0 / (nk - 1));
    blk.cov = scatter.selfadjointView<Eigen::Lower>();
    blk.cov.diagonal() = blk.var;  // keep the two routes bit-identical
  }
  return stats;
}

void write_embedding_csv(const Eigen::MatrixXd& z, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (int i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < z.cols(); ++j) {
      if (j) out << ",";
      out << format_g17(z(i, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXd read_embedding_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<double> row;
    for (const auto& f : split(t, ',')) {
      try {
        row.push_back(std::stod(trim(f)));
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": bad number \"" + f + "\"");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": empty file");
  Eigen::MatrixXd z(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) z(i, j) = rows[i][j];
  return z;
}

}  // namespace sgc
