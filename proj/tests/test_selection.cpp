#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "sgc/baselines.hpp"
#include "sgc/errors.hpp"
#include "sgc/metrics.hpp"
#include "sgc/rng.hpp"
#include "sgc/selection.hpp"

#include "oracles.hpp"

using namespace sgc;

namespace {

AdjacencyMatrix two_cliques(int size) {
  AdjacencyMatrix g;
  g.a.setZero(2 * size, 2 * size);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j)
      if (i != j) {
        g.a(i, j) = 1;
        g.a(size + i, size + j) = 1;
      }
  return g;
}

ConstrainedGmmParams separated_truth(int d0, int big_d, int num_k) {
  ConstrainedGmmParams p;
  p.d = d0;
  p.D = big_d;
  p.K = num_k;
  p.weights = Eigen::VectorXd::Constant(num_k, 1.0 / num_k);
  p.means = Eigen::MatrixXd::Zero(num_k, d0);
  for (int k = 0; k < num_k; ++k) {
    p.means(k, 0) = 4.0 * std::cos(2.0 * M_PI * k / num_k);
    if (d0 > 1) p.means(k, 1) = 4.0 * std::sin(2.0 * M_PI * k / num_k);
  }
  p.info_cov.assign(num_k, Eigen::MatrixXd::Identity(d0, d0));
  if (d0 < big_d) p.red_var = Eigen::VectorXd::Constant(num_k, 1.0);
  return p;
}

}  // namespace

TEST_CASE("grid evaluates every cell and parallel equals sequential") {
  auto [labels, z] = sample_model(separated_truth(2, 4, 2), 300, 5);
  (void)labels;
  SelectOptions seq;
  seq.em.restarts = 2;
  const BicGrid g1 = fit_constrained_grid(z, 3, seq, 11);
  CHECK(g1.fits.size() == 12);  // exactly D * K_max cells

  SelectOptions par = seq;
  par.threads = 4;
  const BicGrid g2 = fit_constrained_grid(z, 3, par, 11);
  CHECK(g1.bic == g2.bic);
  for (std::size_t i = 0; i < g1.fits.size(); ++i)
    CHECK(g1.fits[i].loglik == g2.fits[i].loglik);
}

TEST_CASE("argmax ties prefer smaller d then smaller K") {
  BicGrid grid;
  grid.D = 3;
  grid.k_max = 3;
  grid.bic.setConstant(3, 3, 1.0);
  grid.fits.resize(9);
  CHECK(grid.argmax() == std::pair<int, int>{1, 1});
  grid.bic(1, 0) = 2.0;
  grid.bic(1, 2) = 2.0;
  grid.bic(2, 1) = 2.0;
  CHECK(grid.argmax() == std::pair<int, int>{2, 1});

  BicGrid empty;
  empty.D = 1;
  empty.k_max = 1;
  empty.bic.setConstant(1, 1, -std::numeric_limits<double>::infinity());
  empty.fits.resize(1);
  CHECK_THROWS_AS(empty.argmax(), NumericError);
}

TEST_CASE("sms separates two cliques at an admissible D") {
  const AdjacencyMatrix g = two_cliques(30);
  Labels truth(60);
  for (int i = 0; i < 60; ++i) truth[i] = i < 30 ? 1 : 2;

  // D=4 exceeds the positive spectrum (eigenvalues 29, 29, -1, ...); the
  // error names the largest admissible dimension, which then succeeds.
  int admissible = 0;
  try {
    sms(g, 4, 4, SelectOptions{}, 3);
    FAIL("expected EmbeddingDimError");
  } catch (const EmbeddingDimError& e) {
    admissible = e.largest_admissible;
  }
  REQUIRE(admissible == 2);
  const SelectionResult r = sms(g, admissible, 4, SelectOptions{}, 3);
  CHECK(r.k_hat == 2);
  CHECK(ari(r.labels, truth) == 1.0);

  const SelectionResult rr = sms_reduced(g, admissible, 4, SelectOptions{}, 3);
  CHECK(ari(rr.labels, truth) == 1.0);
  const SelectionResult rt = sms_two_step(g, admissible, 4, SelectOptions{}, 3);
  CHECK(ari(rt.labels, truth) == 1.0);
}

TEST_CASE("sms on model-sampled rows recovers (d0, K0) and beats smaller models") {
  const ConstrainedGmmParams truth = separated_truth(2, 6, 2);
  auto [labels, z] = sample_model(truth, 5000, 17);
  (void)labels;
  SelectOptions opts;
  opts.threads = 2;
  const BicGrid grid = fit_constrained_grid(z, 2, opts, 23);
  CHECK(grid.bic(1, 1) > grid.bic(0, 0));  // (2,2) beats (1,1)
  CHECK(grid.bic(1, 1) > grid.bic(1, 0));  // (2,2) beats (2,1)
}

TEST_CASE("tie determinism: same seed gives identical results") {
  auto [tau, g] = [&] {
    SbmParams p;
    p.b.resize(2, 2);
    p.b << 0.2, 0.1, 0.1, 0.25;
    p.pi.resize(2);
    p.pi << 0.5, 0.5;
    return sample_sbm(300, p, 91);
  }();
  (void)tau;
  SelectOptions opts;
  opts.em.restarts = 2;
  const SelectionResult a = sms(g, 4, 3, opts, 5);
  const SelectionResult b = sms(g, 4, 3, opts, 5);
  CHECK(a.d_hat == b.d_hat);
  CHECK(a.k_hat == b.k_hat);
  CHECK(a.labels == b.labels);
}

TEST_CASE("two-step and reduced agree whenever (d_hat, K_hat) coincide") {
  Rng seed_gen(71);
  SbmParams p;
  p.b.resize(2, 2);
  p.b << 0.25, 0.05, 0.05, 0.2;
  p.pi.resize(2);
  p.pi << 0.5, 0.5;
  int coincided = 0;
  for (int rep = 0; rep < 5; ++rep) {
    auto [tau, g] = sample_sbm(260, p, derive_seed(100, {(std::uint64_t)rep}));
    (void)tau;
    const std::uint64_t run_seed = derive_seed(200, {(std::uint64_t)rep});
    SelectOptions opts;
    opts.em.restarts = 3;
    const SelectionResult red = sms_reduced(g, 4, 4, opts, run_seed);
    const SelectionResult two = sms_two_step(g, 4, 4, opts, run_seed);
    if (red.d_hat == two.d_hat && red.k_hat == two.k_hat) {
      ++coincided;
      CHECK(red.labels == two.labels);
    }
  }
  CHECK(coincided >= 1);  // at this separation they nearly always coincide
}

TEST_CASE("seq_bic_zg with the same d_hat reproduces the reduced clustering") {
  SbmParams p;
  p.b.resize(2, 2);
  p.b << 0.3, 0.05, 0.05, 0.25;
  p.pi.resize(2);
  p.pi << 0.5, 0.5;
  auto [tau, g] = sample_sbm(300, p, 41);
  (void)tau;
  const std::uint64_t run_seed = 99;
  SelectOptions opts;
  opts.em.restarts = 3;
  const SelectionResult red = sms_reduced(g, 5, 4, opts, run_seed);
  for (int ell = 1; ell <= 3; ++ell) {
    SelectionResult zg;
    try {
      zg = seq_bic_zg(g, 5, ell, 4, opts, run_seed);
    } catch (const ParamError&) {
      continue;
    }
    if (zg.d_hat == red.d_hat) {
      CHECK(zg.k_hat == red.k_hat);
      CHECK(zg.labels == red.labels);
    }
  }
}

TEST_CASE("two-step at d == D equals the unconstrained sweep BIC") {
  auto [labels, z] = sample_model(separated_truth(2, 3, 2), 400, 33);
  (void)labels;
  EmOptions em;
  em.restarts = 2;
  const SelectionResult two = sms_two_step_from_embedding(z, 3, em, 777);
  const GmmBicSweep sweep = gmm_bic_sweep(z, 3, 3, true, em, 777);
  for (const auto& cell : two.cells)
    if (cell.d == 3) {
      CHECK(cell.K == sweep.k_hat);
      CHECK(cell.bic == sweep.best.bic);
    }
}

TEST_CASE("gmm_bic_sweep halting keeps the best K before the first decrease") {
  auto [labels, z] = sample_model(separated_truth(2, 2, 2), 800, 81);
  (void)labels;
  EmOptions em;
  em.restarts = 2;
  const GmmBicSweep all = gmm_bic_sweep(z, 2, 6, false, em, 3);
  const GmmBicSweep halted = gmm_bic_sweep(z, 2, 6, true, em, 3);
  CHECK(all.cells.size() == 6);
  CHECK(halted.cells.size() <= all.cells.size());
  CHECK(halted.k_hat == 2);  // separated two-component data
  if (halted.cells.size() < 6) {
    const auto& last = halted.cells.back();
    CHECK(last.bic < halted.best.bic);  // stopped on a strict decrease
  }
  // K_max=1 boundary: a single cluster, labels all 1
  const GmmBicSweep k1 = gmm_bic_sweep(z, 2, 1, false, em, 3);
  CHECK(k1.k_hat == 1);
  for (int lab : map_labels(z, k1.best.params)) CHECK(lab == 1);
}

TEST_CASE("grid and summary exports") {
  auto [labels, z] = sample_model(separated_truth(1, 2, 2), 120, 9);
  (void)labels;
  SelectOptions opts;
  opts.em.restarts = 1;
  const BicGrid grid = fit_constrained_grid(z, 2, opts, 1);
  const SelectionResult r = sms_from_grid(z, grid);
  CHECK(r.cells.size() == 4);
  const std::string path =
      (std::filesystem::temp_directory_path() / "sgc_grid.csv").string();
  write_grid_csv(r.cells, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "d,K,bic,loglik,converged");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(path);

  const std::string s = summary_line(r, 12.5);
  CHECK(s.rfind("sms,", 0) == 0);
}
