#include "sgc/selection.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <limits>

#include "sgc/errors.hpp"
#include "sgc/kernels.hpp"
#include "sgc/rng.hpp"
#include "sgc/util.hpp"

namespace sgc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

GridCellRecord cell_record(int d, int K, const FitResult& fit) {
  return {d, K, fit.bic, fit.loglik, fit.converged};
}

std::vector<GridCellRecord> grid_records(const BicGrid& grid) {
  std::vector<GridCellRecord> cells;
  cells.reserve(static_cast<std::size_t>(grid.D) * grid.k_max);
  for (int d = 1; d <= grid.D; ++d)
    for (int K = 1; K <= grid.k_max; ++K)
      cells.push_back(cell_record(d, K, grid.at(d, K)));
  return cells;
}

}  // namespace

std::pair<int, int> BicGrid::argmax() const {
  int best_d = 0, best_k = 0;
  double best = kNegInf;
  for (int d = 1; d <= D; ++d)
    for (int K = 1; K <= k_max; ++K)
      if (bic(d - 1, K - 1) > best) {
        best = bic(d - 1, K - 1);
        best_d = d;
        best_k = K;
      }
  if (best_d == 0)
    throw NumericError("model selection failed: every grid cell is degenerate");
  return {best_d, best_k};
}

BicGrid fit_constrained_grid(const Eigen::MatrixXd& z, int k_max,
                             const SelectOptions& opts, std::uint64_t seed) {
  const int big_d = static_cast<int>(z.cols());
  if (k_max < 1) throw ParamError("K_max must be >= 1");

  BicGrid grid;
  grid.D = big_d;
  grid.k_max = k_max;
  grid.bic.setConstant(big_d, k_max, kNegInf);
  grid.fits.resize(static_cast<std::size_t>(big_d) * k_max);

  std::vector<std::exception_ptr> errors(grid.fits.size());
  parallel_for(static_cast<int>(grid.fits.size()), opts.threads, [&](int idx) {
    const int d = idx / k_max + 1;
    const int K = idx % k_max + 1;
    try {
      grid.fits[idx] = em_fit(z, d, K, opts.em,
                              derive_seed(seed, {seed_tag("m1grid"),
                                                 static_cast<std::uint64_t>(d),
                                                 static_cast<std::uint64_t>(K)}));
      grid.bic(d - 1, K - 1) = grid.fits[idx].bic;
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return grid;
}

GmmBicSweep gmm_bic_sweep(const Eigen::MatrixXd& x, int d_tag, int k_max,
                          bool halt_on_decrease, const EmOptions& em,
                          std::uint64_t seed) {
  if (k_max < 1) throw ParamError("K_max must be >= 1");
  GmmBicSweep sweep;
  double best = kNegInf;
  double prev = kNegInf;
  for (int K = 1; K <= k_max; ++K) {
    FitResult fit = em_fit(x, static_cast<int>(x.cols()), K, em,
                           derive_seed(seed, {seed_tag("gmmbic"),
                                              static_cast<std::uint64_t>(d_tag),
                                              static_cast<std::uint64_t>(K)}));
    sweep.cells.push_back(cell_record(d_tag, K, fit));
    const double b = fit.bic;
    if (fit.ok() && b > best) {
      best = b;
      sweep.k_hat = K;
      sweep.best = std::move(fit);
    }
    if (halt_on_decrease && K > 1 && b < prev) break;
    prev = b;
  }
  if (sweep.k_hat == 0)
    throw NumericError("GMM+BIC sweep failed: every K is degenerate");
  return sweep;
}

SelectionResult sms_from_grid(const Eigen::MatrixXd& z, const BicGrid& grid) {
  SelectionResult r;
  r.method = "sms";
  std::tie(r.d_hat, r.k_hat) = grid.argmax();
  r.labels = map_labels(z, grid.at(r.d_hat, r.k_hat).params);
  r.cells = grid_records(grid);
  return r;
}

SelectionResult sms_reduced_from_grid(const Eigen::MatrixXd& z, const BicGrid& grid,
                                      const EmOptions& em, std::uint64_t seed) {
  SelectionResult r;
  r.method = "sms-reduced";
  const auto [d_hat, k_grid] = grid.argmax();
  (void)k_grid;
  r.d_hat = d_hat;
  const Eigen::MatrixXd trunc = z.leftCols(d_hat);
  GmmBicSweep sweep = gmm_bic_sweep(trunc, d_hat, grid.k_max, false, em, seed);
  r.k_hat = sweep.k_hat;
  r.labels = map_labels(trunc, sweep.best.params);
  r.cells = grid_records(grid);
  r.cells.insert(r.cells.end(), sweep.cells.begin(), sweep.cells.end());
  return r;
}

SelectionResult sms_two_step_from_embedding(const Eigen::MatrixXd& z, int k_max,
                                            const EmOptions& em, std::uint64_t seed) {
  const int big_d = static_cast<int>(z.cols());
  const int n = static_cast<int>(z.rows());

  SelectionResult r;
  r.method = "two-step";
  double best = kNegInf;
  GmmBicSweep best_sweep;
  for (int d = 1; d <= big_d; ++d) {
    GmmBicSweep sweep;
    try {
      sweep = gmm_bic_sweep(z.leftCols(d), d, k_max, true, em, seed);
    } catch (const NumericError&) {
      r.cells.push_back({d, 0, kNegInf, kNegInf, false});
      continue;
    }
    double full_bic;
    double full_ll;
    if (d == big_d) {
      // no redundant block: step 2 adds nothing
      full_bic = sweep.best.bic;
      full_ll = sweep.best.loglik;
    } else {
      const Eigen::MatrixXd resp = responsibilities(z.leftCols(d), sweep.best.params);
      const Eigen::VectorXd nk = resp.colwise().sum();
      const Eigen::VectorXd rsq = z.rightCols(big_d - d).rowwise().squaredNorm();
      ConstrainedGmmParams full = sweep.best.params;
      full.D = big_d;
      full.red_var.resize(full.K);
      const std::size_t nn = static_cast<std::size_t>(n);
      for (int k = 0; k < full.K; ++k)
        full.red_var[k] = std::max(em.sigma2_floor,
                                   kernels::dot(resp.col(k).data(), rsq.data(), nn) /
                                       ((big_d - d) * nk[k]));
      full_ll = mixture_loglik(z, full);
      full_bic = 2.0 * full_ll - param_count(d, full.K, big_d) * std::log(n);
    }
    r.cells.push_back({d, sweep.k_hat, full_bic, full_ll, sweep.best.converged});
    if (full_bic > best) {
      best = full_bic;
      r.d_hat = d;
      r.k_hat = sweep.k_hat;
      best_sweep = std::move(sweep);
    }
  }
  if (r.d_hat == 0)
    throw NumericError("two-step selection failed: every dimension is degenerate");
  r.labels = map_labels(z.leftCols(r.d_hat), best_sweep.best.params);
  return r;
}

SelectionResult sms(const AdjacencyMatrix& a, int big_d, int k_max,
                    const SelectOptions& opts, std::uint64_t seed) {
  const ExtendedEmbedding emb = extended_ase(a, big_d);
  return sms_from_grid(emb.z, fit_constrained_grid(emb.z, k_max, opts, seed));
}

SelectionResult sms_reduced(const AdjacencyMatrix& a, int big_d, int k_max,
                            const SelectOptions& opts, std::uint64_t seed) {
  const ExtendedEmbedding emb = extended_ase(a, big_d);
  return sms_reduced_from_grid(emb.z, fit_constrained_grid(emb.z, k_max, opts, seed),
                               opts.em, seed);
}

SelectionResult sms_two_step(const AdjacencyMatrix& a, int big_d, int k_max,
                             const SelectOptions& opts, std::uint64_t seed) {
  const ExtendedEmbedding emb = extended_ase(a, big_d);
  return sms_two_step_from_embedding(emb.z, k_max, opts.em, seed);
}

void write_grid_csv(const std::vector<GridCellRecord>& cells, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "d,K,bic,loglik,converged\n";
  for (const auto& c : cells)
    out << c.d << "," << c.K << "," << format_g17(c.bic) << ","
        << format_g17(c.loglik) << "," << (c.converged ? 1 : 0) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::string summary_line(const SelectionResult& r, double runtime_ms) {
  return r.method + "," + std::to_string(r.d_hat) + "," + std::to_string(r.k_hat) +
         "," + format_g17(runtime_ms);
}

}  // namespace sgc
