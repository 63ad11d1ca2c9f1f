// Acceptance suite: one PASS/FAIL line per criterion. Optimizer-dependent criteria run under
// both momentum rules. Exit status is nonzero if any line fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "graphkern/experiment.hpp"
#include "graphkern/krg.hpp"
#include "graphkern/mkl.hpp"
#include "../oracles.hpp"

using namespace graphkern;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int failures = 0;

struct Outcome {
  bool pass;
  std::string detail;
};

void report(const std::string& id, const std::string& name, double limit_s,
            const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += "; over time budget of " + std::to_string(static_cast<int>(limit_s)) + " s";
  }
  failures += !o.pass;
  std::printf("[%s] %-3s %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id.c_str(), name.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const char* rule_name(MomentumRule r) { return r == MomentumRule::Convex ? "convex" : "extrapolate"; }

struct Setup {
  KernelDictionary dict;
  Graph graph;
  MatrixXd targets;
};

Setup random_setup(std::mt19937_64& rng, int m, int n, int s) {
  auto inst = oracle::random_instance(rng, m, n, s);
  return {KernelDictionary::build(inst.inputs, inst.specs), Graph::from_adjacency(inst.adjacency), inst.targets};
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    auto su = random_setup(rng, uniform_int(rng, 1, 8), uniform_int(rng, 1, 8), uniform_int(rng, 1, 5));
    const Regularization reg{uniform(rng, 0.05, 2.0), rep % 4 == 0 ? 0.0 : uniform(rng, 0.0, 5.0)};
    const ReducedObjective obj(su.dict, su.graph, su.targets, reg);
    const VectorXd rho = oracle::random_nonneg(rng, su.dict.size(), 2.0).array() + 0.05;
    const VectorXd g = obj.gradient(rho);
    for (Eigen::Index s = 0; s < g.size(); ++s) {
      const double fd = oracle::central_diff([&](const VectorXd& r) { return obj.gamma(r); }, rho, s, 1e-5);
      worst = std::max(worst, std::abs(g(s) - fd) / std::max(std::abs(fd), 1e-300));
    }
  }
  return {worst < 1e-5, fmt("max relative error %.2e over 20 instances", worst)};
}

Outcome solver_equivalence() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  int edge_cases = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int m = uniform_int(rng, 1, 10), n = uniform_int(rng, 1, 10), s = uniform_int(rng, 1, 5);
    auto inst = oracle::random_instance(rng, m, n, s);
    auto dict = std::make_shared<KernelDictionary>(KernelDictionary::build(inst.inputs, inst.specs));
    const bool edgeless = rep % 5 == 0;
    const bool no_beta = rep % 5 == 1;
    edge_cases += edgeless || no_beta;
    auto graph = std::make_shared<Graph>(edgeless ? Graph::edgeless(m) : Graph::from_adjacency(inst.adjacency));
    const Regularization reg{rep % 2 ? 0.01 : 1.0, no_beta ? 0.0 : uniform(rng, 0.1, 5.0)};
    const VectorXd rho = oracle::random_nonneg(rng, s, 1.0);
    const MatrixXd d = solve_dense(dict, rho, graph, inst.targets, reg).psi();
    const MatrixXd st = solve_structured(dict, rho, graph, inst.targets, reg).psi();
    worst = std::max(worst, (d - st).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-8, fmt("max |dense - structured| %.2e over 50 instances", worst) + " (" +
                            std::to_string(edge_cases) + " with beta=0 or L=0)"};
}

Outcome propositions(MomentumRule rule) {
  std::mt19937_64 rng(103);
  double gamma0 = 0.0, max_grad = -INFINITY, worst_boundary = 0.0;
  int monotone_bad = 0, convex_bad = 0, runs = 0;
  for (int inst = 0; inst < 10; ++inst) {
    auto su = random_setup(rng, uniform_int(rng, 2, 6), uniform_int(rng, 3, 8), uniform_int(rng, 2, 5));
    const Regularization reg{uniform(rng, 0.2, 1.0), uniform(rng, 0.0, 3.0)};
    const ReducedObjective obj(su.dict, su.graph, su.targets, reg);
    const Eigen::Index s = su.dict.size();
    gamma0 = std::max(gamma0, std::abs(obj.gamma(VectorXd::Zero(s))));
    for (int k = 0; k < 10; ++k) {
      const VectorXd lo = oracle::random_nonneg(rng, s, 2.0);
      const VectorXd hi = lo + oracle::random_nonneg(rng, s, 2.0);
      const auto elo = obj.evaluate(lo), ehi = obj.evaluate(hi);
      monotone_bad += !(ehi.gamma <= elo.gamma + 1e-9);
      max_grad = std::max({max_grad, elo.gradient.maxCoeff(), ehi.gradient.maxCoeff()});
    }
    for (int k = 0; k < 20; ++k) {
      const VectorXd a = oracle::random_nonneg(rng, s, 3.0), b = oracle::random_nonneg(rng, s, 3.0);
      const double mid = obj.gamma(0.5 * (a + b));
      convex_bad += !(mid <= 0.5 * (obj.gamma(a) + obj.gamma(b)) + 1e-9 * std::abs(mid));
    }
    for (NormType q : {NormType::L1, NormType::L2}) {
      SolverConfig cfg;
      cfg.mu0 = 1.0;
      cfg.q = q;
      cfg.momentum = rule;
      const auto res = optimize(obj, cfg);
      worst_boundary = std::max(worst_boundary, std::abs(weight_norm(res.weights.rho, q) - cfg.radius));
      ++runs;
    }
  }
  const bool pass = gamma0 < 1e-10 && monotone_bad == 0 && convex_bad == 0 && max_grad <= 1e-12 &&
                    worst_boundary < 1e-3;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "|gamma(0)| %.1e; monotone violations %d/100; convexity violations %d/200; max grad %.2e; "
                "boundary gap %.1e over %d runs (mu0=1, R=5)",
                gamma0, monotone_bad, convex_bad, max_grad, worst_boundary, runs);
  return {pass, buf};
}

Outcome projection_oracle() {
  std::mt19937_64 rng(104);
  std::normal_distribution<double> g(0.3, 1.5);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const VectorXd s = Eigen::Vector3d(g(rng), g(rng), g(rng));
    const double r = uniform(rng, 0.2, 3.0);
    worst = std::max(worst, (project(s, r, NormType::L1) - oracle::brute_project3(s, r)).cwiseAbs().maxCoeff());
  }
  double kkt = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd s(100);
    for (auto& v : s) v = g(rng);
    const double r = uniform(rng, 0.5, 20.0);
    const VectorXd z = project(s, r, NormType::L1);
    kkt = std::max({kkt, -z.minCoeff(), z.sum() - r});
    double tau = 0.0;
    for (Eigen::Index i = 0; i < 100; ++i)
      if (z(i) > 0) tau = s(i) - z(i);
    kkt = std::max(kkt, -tau);
    for (Eigen::Index i = 0; i < 100; ++i)
      kkt = std::max(kkt, z(i) > 0 ? std::abs(s(i) - z(i) - tau) : s(i) - tau);
    kkt = std::max(kkt, std::abs(tau * (r - z.sum())));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "S=3 max deviation from brute force %.1e; S=100 KKT residual %.1e", worst, kkt);
  return {worst < 1e-4 && kkt < 1e-9, buf};
}

Outcome reduction_check() {
  std::mt19937_64 rng(105);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int m = uniform_int(rng, 1, 8), n = uniform_int(rng, 1, 10), s = uniform_int(rng, 1, 5);
    auto inst = oracle::random_instance(rng, m, n, s);
    auto dict = std::make_shared<KernelDictionary>(KernelDictionary::build(inst.inputs, inst.specs));
    auto graph = std::make_shared<Graph>(Graph::from_adjacency(inst.adjacency));
    const VectorXd rho = oracle::random_nonneg(rng, s, 1.0);
    const double alpha = uniform(rng, 0.05, 2.0);
    MatrixXd k = MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int j = 0; j < s; ++j)
          k(a, b) += rho(j) * oracle::gaussian(inst.inputs.row(a).transpose(), inst.inputs.row(b).transpose(),
                                               inst.specs[j].parameter);
    const MatrixXd ridge = (k + alpha * MatrixXd::Identity(n, n)).ldlt().solve(inst.targets);
    for (const auto& model : {solve_dense(dict, rho, graph, inst.targets, {alpha, 0.0}),
                              solve_structured(dict, rho, graph, inst.targets, {alpha, 0.0})})
      worst = std::max(worst, (model.psi() - ridge).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-10, fmt("max |Psi - (K + alpha I)^-1 T| %.2e over 20 instances", worst)};
}

Outcome grammian_psd() {
  std::mt19937_64 rng(109);
  double worst = INFINITY;
  for (int rep = 0; rep < 20; ++rep) {
    auto su = random_setup(rng, uniform_int(rng, 1, 8), uniform_int(rng, 1, 8), uniform_int(rng, 1, 6));
    const double beta = uniform(rng, 0.0, 5.0);
    const ReducedObjective obj(su.dict, su.graph, su.targets, {uniform(rng, 0.05, 2.0), beta});
    const MatrixXd psi = obj.evaluate(oracle::random_nonneg(rng, su.dict.size(), 2.0)).psi;
    worst = std::min(worst, oracle::min_eig(grammian_matrix(su.dict, su.graph, psi, beta)));
  }
  return {worst >= -1e-8, fmt("min eigenvalue %.2e over 20 instances", worst)};
}

// Monte-Carlo sweep on the default synthetic scenario, shared by criteria 6-8.
struct Sweep {
  std::vector<int> sizes{4, 8, 16, 30};
  std::vector<AggregateReport> reports;
  double seconds = 0.0;
};

Sweep run_sweep(const Dataset& data, MomentumRule rule) {
  Sweep sw;
  const auto start = std::chrono::steady_clock::now();
  for (int n : sw.sizes) {
    ExperimentConfig cfg;
    cfg.n_train = n;
    cfg.solver.momentum = rule;
    sw.reports.push_back(monte_carlo(data, cfg));
  }
  sw.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sw;
}

double mass_outside_top(const VectorXd& rho, int top) {
  std::vector<double> v(rho.data(), rho.data() + rho.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  double total = 0, head = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += v[i];
    if (i < static_cast<std::size_t>(top)) head += v[i];
  }
  return total > 0 ? (total - head) / total : 0.0;
}

Outcome convergence(const Dataset& data, const Sweep& sw, MomentumRule rule) {
  // A full-data fit at the table values, then every trial of the sweep.
  SolverConfig solver;
  solver.momentum = rule;
  const MatrixXd noisy = add_noise_snr(data.targets, 0.0, 2015);
  const auto fit = fit_multi_kernel(data.inputs, noisy, data.graph, KernelGrid{}, {0.1, 5.5}, solver);
  const auto& tr = fit.optimization.trace;
  bool pass = tr.status == TraceStatus::Converged && tr.iterations() <= 200;
  int worst = 0, unconverged = 0;
  double sum = 0;
  int count = 0;
  double boundary = std::abs(fit.model.rho().sum() - 5.0);
  for (const auto& rep : sw.reports)
    for (const auto& t : rep.trials) {
      if (!t.outcome(Method::MultiKernel).ok) continue;
      worst = std::max(worst, t.iterations);
      unconverged += !t.converged;
      sum += t.iterations;
      ++count;
      boundary = std::max(boundary, std::abs(t.rho.sum() - 5.0));
    }
  pass = pass && worst <= 200 && unconverged == 0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s: full-data fit converged in %d iterations; sweep trials mean %.1f, max %d, "
                "unconverged %d/%d; max boundary gap %.1e",
                rule_name(rule), tr.iterations(), count ? sum / count : 0.0, worst, unconverged, count, boundary);
  return {pass, buf};
}

Outcome ordering(const Sweep& sw, MomentumRule rule) {
  bool pass = true;
  std::string detail = std::string(rule_name(rule)) + ":";
  for (std::size_t i = 0; i < sw.sizes.size(); ++i) {
    const auto& r = sw.reports[i];
    const double lin = r.summary(Method::Linear).mean, single = r.summary(Method::SingleKernel).mean,
                 multi = r.summary(Method::MultiKernel).mean;
    pass = pass && multi <= single;
    if (sw.sizes[i] == 4) pass = pass && multi < lin && single < lin;
    char buf[128];
    std::snprintf(buf, sizeof buf, " N=%d lin %.3f single %.3f multi %.3f;", sw.sizes[i], lin, single, multi);
    detail += buf;
  }
  detail += fmt(" sweep %.0f s", sw.seconds);
  if (sw.seconds > 600) {
    pass = false;
    detail += " (over 10 min)";
  }
  return {pass, detail};
}

Outcome sparsity(const Sweep& sw, MomentumRule rule) {
  const auto& r = sw.reports.back();  // n_train = 30
  const double rep = mass_outside_top(r.representative_rho, 10);
  double mean = 0;
  int count = 0;
  for (const auto& t : r.trials)
    if (t.outcome(Method::MultiKernel).ok) mean += mass_outside_top(t.rho, 10), ++count;
  mean /= std::max(count, 1);
  int nonzero = 0;
  for (double v : r.representative_rho) nonzero += v > 1e-12;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%s: representative rho has %.3f of its mass outside the top 10 (%d of %d nonzero); "
                "mean over trials %.3f; threshold 0.20",
                rule_name(rule), rep, nonzero, static_cast<int>(r.representative_rho.size()), mean);
  return {rep <= 0.2, buf};
}

}  // namespace

int main() {
  std::printf("graphkern acceptance suite\n");
  report("1", "gradient correctness", 30, gradient_correctness);
  report("2", "solver equivalence", 30, solver_equivalence);
  for (auto rule : {MomentumRule::Convex, MomentumRule::Extrapolate})
    report(std::string("3") + (rule == MomentumRule::Convex ? "a" : "b"), "objective properties", 120,
           [rule] { return propositions(rule); });
  report("4", "projection oracle", 60, projection_oracle);
  report("5", "reduction to kernel ridge", 0, reduction_check);

  const Dataset data = generate_synthetic(SyntheticScenario{}).dataset;
  for (auto rule : {MomentumRule::Convex, MomentumRule::Extrapolate}) {
    const std::string suffix = rule == MomentumRule::Convex ? "a" : "b";
    const Sweep sw = run_sweep(data, rule);
    report("6" + suffix, "convergence behavior", 0, [&] { return convergence(data, sw, rule); });
    report("7" + suffix, "end-to-end ordering", 0, [&] { return ordering(sw, rule); });
    report("8" + suffix, "sparsity", 0, [&] { return sparsity(sw, rule); });
  }

  report("9", "grammian PSD", 0, grammian_psd);
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
