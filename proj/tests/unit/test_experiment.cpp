#include <doctest.h>

#include <cmath>
#include <memory>

#include "graphkern/experiment.hpp"
#include "../oracles.hpp"
#include "helpers.hpp"

using namespace graphkern;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SyntheticScenario small_scenario() {
  SyntheticScenario sc;
  sc.num_nodes = 8;
  sc.num_samples = 24;
  return sc;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_train = 8;
  cfg.n_test = 8;
  cfg.n_realizations = 4;
  cfg.grid.count = 10;
  cfg.single_grid = {{0.1, 1.0}, {0.0, 1.5}};
  cfg.linear_grid = {{1.0, 4.3}, {0.0}};
  return cfg;
}

}  // namespace

TEST_CASE("noise level follows the requested SNR") {
  const MatrixXd clean = MatrixXd::Random(10, 5).array() + 2.0;
  const double p_signal = clean.squaredNorm() / clean.size();
  double noise_energy = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    noise_energy += (add_noise_snr(clean, 0.0, seed) - clean).squaredNorm();
  const double p_noise = noise_energy / (1000.0 * clean.size());
  CHECK(std::abs(10.0 * std::log10(p_signal / p_noise)) < 0.5);

  double noise10 = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    noise10 += (add_noise_snr(clean, 10.0, seed) - clean).squaredNorm();
  CHECK(std::abs(10.0 * std::log10(p_signal / (noise10 / (1000.0 * clean.size()))) - 10.0) < 0.5);

  CHECK((add_noise_snr(clean, 300.0, 4) - clean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(add_noise_snr(clean, 0.0, 77) == add_noise_snr(clean, 0.0, 77));
  CHECK(add_noise_snr(clean, 0.0, 77) != add_noise_snr(clean, 0.0, 78));
  CHECK(code_of([] { add_noise_snr(MatrixXd::Zero(2, 2), 0.0, 1); }) == ErrorCode::ZeroSignal);
}

TEST_CASE("nmse") {
  const MatrixXd t = MatrixXd::Random(4, 3);
  CHECK(nmse(t, t) == 0.0);
  CHECK(nmse(MatrixXd::Zero(4, 3), t) == doctest::Approx(1.0));
  CHECK(nmse(2 * t, t) == doctest::Approx(1.0));
  CHECK(code_of([&] { nmse(t, MatrixXd::Zero(4, 3)); }) == ErrorCode::ZeroTruth);
  CHECK(code_of([&] { nmse(t, MatrixXd::Zero(3, 3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("seeds") {
  CHECK(realization_seed(1, 0) != realization_seed(1, 1));
  CHECK(realization_seed(1, 5) == realization_seed(1, 5));
  CHECK(realization_seed(1, 5) != realization_seed(2, 5));
}

TEST_CASE("series pairing") {
  auto graph = std::make_shared<Graph>(Graph::edgeless(45));
  MatrixXd series = MatrixXd::Random(61, 45);
  const Dataset d = dataset_from_series(series, graph);
  CHECK(d.num_samples() == 60);
  CHECK(d.inputs.row(7) == series.row(7));
  CHECK(d.targets.row(7) == series.row(8));
  CHECK(dataset_from_series(series.topRows(2), graph).num_samples() == 1);
}

TEST_CASE("synthetic scenario") {
  const auto data = generate_synthetic(SyntheticScenario{});
  CHECK(data.dataset.num_samples() == 60);
  CHECK(data.dataset.inputs.cols() == 45);
  CHECK(data.dataset.targets.cols() == 45);
  CHECK(data.dataset.graph->num_nodes() == 45);
  CHECK(data.dataset.targets.allFinite());
  const auto again = generate_synthetic(SyntheticScenario{});
  CHECK(again.dataset.targets == data.dataset.targets);
}

TEST_CASE("grid search rules") {
  const auto data = generate_synthetic(small_scenario());
  TrainingBlock block{data.dataset.inputs.topRows(10), add_noise_snr(data.dataset.targets.topRows(10), 0.0, 3),
                      data.dataset.targets.topRows(10), data.dataset.graph};

  const auto one = grid_search_hyperparams(block, Method::SingleKernel, {{0.7}, {2.0}});
  CHECK(one.alpha == 0.7);
  CHECK(one.beta == 2.0);

  const auto lin = grid_search_hyperparams(block, Method::Linear, {{3.0, 1.0, 2.0}, {4.0, 0.5}});
  CHECK((lin.alpha == 1.0 || lin.alpha == 2.0 || lin.alpha == 3.0));
  CHECK(lin.beta == 0.0);

  // Without edges beta has no effect, so every beta ties and the smallest wins.
  TrainingBlock flat = block;
  flat.graph = std::make_shared<Graph>(Graph::edgeless(8));
  CHECK(grid_search_hyperparams(flat, Method::SingleKernel, {{0.5}, {3.0, 0.2, 1.0}}).beta == 0.2);

  const auto res = grid_search_hyperparams(block, Method::SingleKernel, {{0.1, 1.0}, {0.0, 5.5}});
  CHECK(std::isfinite(res.nmse));
  CHECK(res.alpha > 0.0);

  CHECK(code_of([&] { grid_search_hyperparams(block, Method::MultiKernel, {{1.0}, {0.0}}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("smoothness prior is selected for very smooth targets") {
  auto sc = small_scenario();
  sc.num_nodes = 20;
  sc.graph_smoothing = 10.0;
  const auto data = generate_synthetic(sc);
  const MatrixXd clean = data.dataset.targets.topRows(16);
  TrainingBlock block{data.dataset.inputs.topRows(16), add_noise_snr(clean, 0.0, 12), clean,
                      data.dataset.graph};
  const auto res = grid_search_hyperparams(block, Method::SingleKernel, {{0.1}, {0.0, 5.5}});
  CHECK(res.beta == 5.5);
}

TEST_CASE("fixed unit weight matches the single kernel baseline") {
  const auto data = generate_synthetic(small_scenario());
  const MatrixXd x = data.dataset.inputs.topRows(10), t = data.dataset.targets.topRows(10);
  const Regularization reg{0.2, 1.5};
  const auto single = fit_single_kernel(x, t, data.dataset.graph, 1.0, reg);
  auto dict = std::make_shared<KernelDictionary>(
      KernelDictionary::build(x, {KernelSpec{KernelFamily::Gaussian, 1.0}}));
  const auto multi = fit(dict, VectorXd::Ones(1), data.dataset.graph, t, reg);
  const MatrixXd q = data.dataset.inputs.bottomRows(5);
  CHECK((single.predict_rows(q) - multi.predict_rows(q)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("interpolation limit") {
  const auto data = generate_synthetic(small_scenario());
  const MatrixXd x = data.dataset.inputs.topRows(10), t = data.dataset.targets.topRows(10);
  const auto model = fit_single_kernel(x, t, data.dataset.graph, 1.0, {1e-9, 0.0});
  CHECK(nmse(model.predict_rows(x), t) < 1e-6);
}

TEST_CASE("noise-free multi-kernel fit is accurate") {
  const auto data = generate_synthetic(SyntheticScenario{});
  ExperimentConfig cfg;
  cfg.snr_db = 300.0;
  cfg.n_train = 50;
  cfg.n_test = 10;
  const auto trial = run_trial(data.dataset, cfg, 5);
  REQUIRE(trial.ok());
  CHECK(trial.outcome(Method::MultiKernel).nmse < 0.1);
}

TEST_CASE("fixed hyperparameter trial ends on the boundary") {
  const auto data = generate_synthetic(SyntheticScenario{});
  ExperimentConfig cfg;
  cfg.grid_search = false;
  cfg.single = {0.1, 5.5};
  const auto trial = run_trial(data.dataset, cfg, 9);
  REQUIRE(trial.ok());
  CHECK(trial.single.alpha == 0.1);
  CHECK(trial.single.beta == 5.5);
  CHECK(std::abs(trial.rho.sum() - 5.0) < 1e-3);
  CHECK(trial.rho.minCoeff() >= 0.0);
  for (auto m : kMethods) CHECK(trial.outcome(m).nmse >= 0.0);
}

TEST_CASE("monte carlo aggregation") {
  const auto data = generate_synthetic(small_scenario());
  auto cfg = small_config();

  cfg.n_realizations = 1;
  const auto single = monte_carlo(data.dataset, cfg);
  REQUIRE(single.trials.size() == 1);
  for (auto m : kMethods) {
    CHECK(single.summary(m).mean == single.trials[0].outcome(m).nmse);
    CHECK(single.summary(m).stddev == 0.0);
  }
  CHECK(single.representative_rho.size() == 10);
  CHECK(single.kernel_parameters.size() == 10);

  cfg.n_realizations = 4;
  const auto a = monte_carlo(data.dataset, cfg);
  const auto b = monte_carlo(data.dataset, cfg);
  cfg.threads = 3;
  const auto c = monte_carlo(data.dataset, cfg);
  for (auto m : kMethods) {
    CHECK(a.summary(m).mean == b.summary(m).mean);
    CHECK(a.summary(m).mean == c.summary(m).mean);
    CHECK(a.summary(m).stddev == c.summary(m).stddev);
  }
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].seed == realization_seed(cfg.master_seed, i));
    CHECK(a.trials[i].rho == c.trials[i].rho);
  }
  cfg.master_seed = 2;
  CHECK(monte_carlo(data.dataset, cfg).summary(Method::SingleKernel).mean != a.summary(Method::SingleKernel).mean);
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate(60));
  cfg.n_train = 60;
  CHECK(code_of([&] { cfg.validate(60); }) == ErrorCode::ConfigError);
  cfg = {};
  cfg.n_realizations = 0;
  CHECK(code_of([&] { cfg.validate(60); }) == ErrorCode::ConfigError);
}
