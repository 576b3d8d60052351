#include "sgc/baselines.hpp"

#include <cmath>
#include <limits>

#include "sgc/errors.hpp"

namespace sgc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Profile log-likelihood of splitting v into v[0..q) and v[q..m) with
// separate means and the pooled maximum-likelihood variance. A zero pooled
// variance (both groups constant) gives +inf, the strongest possible elbow.
double split_loglik(const Eigen::VectorXd& v, int q) {
  const int m = static_cast<int>(v.size());
  const double m1 = v.head(q).mean();
  const double m2 = v.tail(m - q).mean();
  double ss = 0.0;
  for (int i = 0; i < q; ++i) ss += (v[i] - m1) * (v[i] - m1);
  for (int i = q; i < m; ++i) ss += (v[i] - m2) * (v[i] - m2);
  const double var = ss / m;
  if (var <= 0.0) return std::numeric_limits<double>::infinity();
  return -0.5 * m * (kLog2Pi + std::log(var)) - 0.5 * m;
}

}  // namespace

ElbowResult zg_elbow(const Eigen::VectorXd& values, int ell) {
  const int m = static_cast<int>(values.size());
  if (m < 2) throw ParamError("need at least two values");
  if (ell < 1) throw ParamError("elbow count must be >= 1");
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (int i = 0; i + 1 < m; ++i)
    if (values[i] + 1e-12 * scale < values[i + 1])
      throw ParamError("values must be non-increasing");

  ElbowResult out;
  int offset = 0;  // elbows scan the tail after the previous elbow
  for (int r = 0; r < ell; ++r) {
    const int len = m - offset;
    if (len < 2)
      throw ParamError("not enough values for elbow " + std::to_string(r + 1) +
                       " of " + std::to_string(ell));
    const Eigen::VectorXd seg = values.segment(offset, len);
    Eigen::VectorXd profile(len - 1);
    int best_q = 1;
    for (int q = 1; q < len; ++q) {
      profile[q - 1] = split_loglik(seg, q);
      if (profile[q - 1] > profile[best_q - 1]) best_q = q;
    }
    out.profiles.push_back(std::move(profile));
    offset += best_q;
    out.elbows.push_back(offset);
  }
  return out;
}

SelectionResult seq_bic_zg(const AdjacencyMatrix& a, int big_d, int ell, int k_max,
                           const SelectOptions& opts, std::uint64_t seed) {
  const SpectralDecomposition eig = eig_sym(a.dense(), big_d);
  const ElbowResult elbow = zg_elbow(eig.eigenvalues, ell);
  const int d_hat = elbow.elbows[ell - 1];
  const ExtendedEmbedding emb = embedding_from_eig(eig, d_hat);

  SelectionResult r;
  r.method = "bic-zg-" + std::to_string(ell);
  r.d_hat = d_hat;
  GmmBicSweep sweep = gmm_bic_sweep(emb.z, d_hat, k_max, false, opts.em, seed);
  r.k_hat = sweep.k_hat;
  r.labels = map_labels(emb.z, sweep.best.params);
  r.cells = sweep.cells;
  return r;
}

}  // namespace sgc
