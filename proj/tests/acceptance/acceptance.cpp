// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
// Digit runs go through the umc tool and are cached under the working
// directory (acceptance_runs/); a cached run is reused only when it finished
// and its config hash matches the current build's config.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "json.hpp"
#include "umc/cli/cli.hpp"
#include "umc/clusterkit/clusterkit.hpp"
#include "umc/evalkit/evalkit.hpp"
#include "umc/losses/losses.hpp"
#include "umc/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace umc;
using diffnet::Index;
using diffnet::Matrix;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// ---------------------------------------------------------------- 1
void hungarian() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0, 1);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index k = 2 + trial % 6;
    Matrix w(k, k);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
    const auto m = clusterkit::hungarian_max(w);
    double got = 0.0;
    for (Index i = 0; i < k; ++i) got += w(i, m.row_to_col[static_cast<std::size_t>(i)]);
    mismatches += got != oracle::best_permutation(w);
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  verdict(1, mismatches == 0 && s < 10, "hungarian vs exhaustive",
          std::to_string(mismatches) + " mismatches in 1000, " + fmt(s, 3) + " s");
}

// ---------------------------------------------------------------- 2
void metric_oracles() {
  std::mt19937_64 rng(202);
  double worst_sil = 0, worst_nmi = 0, worst_acc = 0, worst_f1 = 0, worst_kl = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + rng() % 198;
    const int k = 2 + static_cast<int>(rng() % std::min<std::size_t>(5, n - 1));
    const Matrix z = testing::random_matrix(rng, static_cast<Index>(n), 1 + static_cast<Index>(rng() % 4));
    auto labels = testing::random_labels(rng, n, k);
    labels[0] = 0;
    labels[1] = 1;
    const double got = clusterkit::silhouette_view(z, clusterkit::Assignment{labels, k, 0.0});
    worst_sil = std::max(worst_sil, rel_err(got, oracle::silhouette(z, labels)));
  }
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    const auto a = testing::random_labels(rng, n, 1 + static_cast<int>(rng() % 5));
    const auto b = testing::random_labels(rng, n, 1 + static_cast<int>(rng() % 5));
    worst_nmi = std::max(worst_nmi, rel_err(evalkit::nmi(a, b), oracle::nmi(a, b)));
    worst_acc = std::max(worst_acc, rel_err(evalkit::acc(a, b), oracle::acc(a, b)));
    worst_f1 = std::max(worst_f1, rel_err(evalkit::pairwise_f1(a, b), oracle::pairwise_f1(a, b)));
  }
  for (int trial = 0; trial < 500; ++trial) {
    const Index k = 2 + static_cast<Index>(rng() % 8);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<double> p(static_cast<std::size_t>(k)), q(p.size());
    for (auto& x : p) x = u(rng);
    for (auto& x : q) x = u(rng);
    const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    diffnet::Graph g;
    const Matrix pm = Eigen::Map<const Matrix>(p.data(), 1, k);
    const Matrix qm = Eigen::Map<const Matrix>(q.data(), 1, k);
    worst_kl = std::max(worst_kl, rel_err(diffnet::kl_to_constant(g.constant(pm), qm).scalar(), oracle::kl(p, q)));
  }
  const double worst = std::max({worst_sil, worst_nmi, worst_acc, worst_f1, worst_kl});
  verdict(2, worst <= 1e-10, "metric oracles",
          "max rel err silhouette " + fmt(worst_sil) + ", nmi " + fmt(worst_nmi) + ", acc " + fmt(worst_acc) +
              ", f1 " + fmt(worst_f1) + ", kl " + fmt(worst_kl));
}

// ---------------------------------------------------------------- 3
void pair_sets() {
  std::mt19937_64 rng(303);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 63;
    const int L = 1 + static_cast<int>(rng() % 3);
    std::vector<std::vector<int>> labels;
    for (int l = 0; l < L; ++l) labels.push_back(testing::random_labels(rng, n + 5, 2 + 2 * l));
    // A random batch of distinct rows.
    std::vector<std::size_t> rows(n + 5);
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(n);
    const auto got = losses::build_inner_pairs(labels, rows);
    for (std::size_t i = 0; i < n; ++i) {
      // Intersection over levels of the same-cluster (resp. different-cluster) sets.
      std::vector<std::size_t> pos, neg;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        bool in_pos = true, in_neg = true;
        for (const auto& lv : labels) {
          in_pos = in_pos && lv[rows[i]] == lv[rows[j]];
          in_neg = in_neg && lv[rows[i]] != lv[rows[j]];
        }
        if (in_pos) pos.push_back(j);
        if (in_neg) neg.push_back(j);
      }
      auto gp = got[i].positives, gn = got[i].negatives;
      std::sort(gp.begin(), gp.end());
      std::sort(gn.begin(), gn.end());
      mismatches += gp != pos || gn != neg;
    }
  }
  verdict(3, mismatches == 0, "inner pair sets vs oracle", std::to_string(mismatches) + " anchors differ");
}

// ---------------------------------------------------------------- 4
void gradients() {
  double worst = 0.0;
  std::size_t max_params = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    fixtures::LossCase c(1000 + seed);
    max_params = std::max(max_params, c.parameters);
    worst = std::max(worst, c.max_fd_error());
  }
  verdict(4, worst <= 1e-4 && max_params <= 500, "gradient fidelity",
          "max rel err " + fmt(worst) + " over 20 configs, <= " + std::to_string(max_params) + " parameters");
}

// ---------------------------------------------------------------- digit runs

struct DigitRun {
  bool ok = false;
  double nmi = 0, acc = 0, f1 = 0, seconds = 0;
  std::vector<double> totals;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

DigitRun digit_run(const std::string& config, std::uint64_t seed) {
  const fs::path cfg = fs::path(UMC_SOURCE_DIR) / "configs" / config;
  cli::Config c = cli::load_config(cfg);
  c.set_seed(seed);
  const std::string hash = trainer::hash_hex(trainer::config_hash(c.train, cli::load_data(c)));
  const fs::path dir = fs::path("acceptance_runs") / (fs::path(config).stem().string() + "_seed" + std::to_string(seed));
  auto cached = [&] {
    if (!fs::exists(dir / "run.json") || !fs::exists(dir / "metrics.json")) return false;
    const auto run = nlohmann::json::parse(slurp(dir / "run.json"));
    return run.value("completed", false) && run.value("config_hash", "") == hash;
  };
  if (!cached()) {
    std::cout << "  training " << dir.string() << " ..." << std::endl;
    const std::string cmd = std::string("'") + UMC_TOOL + "' train --quiet --force --config '" + cfg.string() +
                            "' --seed " + std::to_string(seed) + " --out '" + dir.string() + "'";
    const int ws = std::system(cmd.c_str());
    if (!WIFEXITED(ws) || WEXITSTATUS(ws) != 0 || !cached()) return {};
  }
  DigitRun r;
  r.ok = true;
  const auto all = evalkit::MetricsReport::from_json(slurp(dir / "metrics.json")).scope("all");
  r.nmi = all.nmi;
  r.acc = all.acc;
  r.f1 = all.f1;
  r.seconds = nlohmann::json::parse(slurp(dir / "run.json")).value("runtime_seconds", 0.0);
  std::istringstream curve(slurp(dir / "loss_curve.csv"));
  std::string line;
  std::getline(curve, line);
  while (std::getline(curve, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    r.totals.push_back(std::stod(cells.at(5)));
  }
  std::cout << "  " << dir.string() << ": NMI " << r.nmi << " ACC " << r.acc << " F1 " << r.f1 << ", "
            << fmt(r.seconds / 60, 3) << " min" << std::endl;
  return r;
}

void digit() {
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<DigitRun> full, ablated;
  for (auto s : seeds) full.push_back(digit_run("digit.json", s));
  for (auto s : seeds) ablated.push_back(digit_run("digit_ablation.json", s));

  // 5: loss curve shape of the default run.
  {
    const DigitRun& r = full[0];
    bool ok = r.ok && r.totals.size() == 200;
    std::string detail = "run failed";
    if (ok) {
      const auto best = std::min_element(r.totals.begin(), r.totals.end()) - r.totals.begin() + 1;
      const bool below = r.totals.back() < r.totals.front();
      const bool late = best > 150;
      ok = below && late && r.seconds <= 30 * 60;
      detail = "epoch1 " + fmt(r.totals.front(), 6) + ", epoch200 " + fmt(r.totals.back(), 6) + ", best at epoch " +
               std::to_string(best) + ", runtime " + fmt(r.seconds / 60, 3) + " min (1 core)";
    }
    verdict(5, ok, "digit convergence shape", detail);
  }
  // 6: best of three seeds.
  {
    double nmi = 0, acc = 0, f1 = 0;
    bool ran = true;
    for (const auto& r : full) {
      ran = ran && r.ok;
      nmi = std::max(nmi, r.nmi);
      acc = std::max(acc, r.acc);
      f1 = std::max(f1, r.f1);
    }
    verdict(6, ran && nmi >= 70 && acc >= 75 && f1 >= 75, "digit reproduction",
            "best of 3 seeds NMI " + fmt(nmi) + " ACC " + fmt(acc) + " F1 " + fmt(f1) + " (need 70/75/75)");
  }
  // 7: ablation. Both conditions are checked per seed.
  {
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      ok = ok && full[i].ok && ablated[i].ok && ablated[i].nmi <= 35 && full[i].nmi - ablated[i].nmi >= 30;
      detail += (i ? "; " : "") + std::string("seed ") + std::to_string(seeds[i]) + " ablated " +
                fmt(ablated[i].nmi) + " vs full " + fmt(full[i].nmi);
    }
    verdict(7, ok, "digit ablation direction", detail + " (need ablated <= 35, gap >= 30)");
  }
}

// ---------------------------------------------------------------- 8
void synthetic() {
  const fs::path cfg = fs::path(UMC_SOURCE_DIR) / "configs" / "synthetic.json";
  const cli::Config c = cli::load_config(cfg);
  const auto data = cli::load_data(c);
  const auto& sp = c.synthetic->spec;
  const bool spec_ok = sp.num_views == 3 && sp.num_clusters == 5 && sp.samples_per_cluster == 200 &&
                       sp.separation == 8 * sp.noise_std && c.train.epochs <= 100;
  const auto a = trainer::train(c.train, data);
  const auto b = trainer::train(c.train, data);
  const double nmi = a.metrics.scope("all").nmi;
  const bool same = a.metrics.to_json() == b.metrics.to_json();
  verdict(8, spec_ok && nmi >= 90 && same, "synthetic sanity",
          "all-view NMI " + fmt(nmi) + " (need 90), per-view NMI " + fmt(a.metrics.scopes[1].nmi) + "/" +
              fmt(a.metrics.scopes[2].nmi) + "/" + fmt(a.metrics.scopes[3].nmi) + ", reports identical: " +
              (same ? "yes" : "no"));
}

// ---------------------------------------------------------------- 9
void schedule() {
  dataio::SyntheticSpec spec;
  spec.num_clusters = 5;
  spec.num_views = 2;
  spec.dims = {6, 7};
  spec.samples_per_cluster = 6;
  const auto data = dataio::synthesize(spec, 9);
  bool ok = true;
  std::string detail;
  for (int epochs : {4, 8, 200}) {
    trainer::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 16;
    c.hidden_dims = {8};
    c.latent_dim = 4;
    c.final_restarts = 1;
    const auto art = trainer::train(c, data);
    int prefix_bad = 0, coeff_bad = 0;
    for (const auto& r : art.curve) {
      const int t = r.epoch;
      const int want = 4 * t <= epochs ? 1 : (2 * t <= epochs ? 2 : 3);
      prefix_bad += r.active_levels != want;
      coeff_bad += r.reliability_coeff != std::max(1.0, 1.5 * std::pow(0.99, t));
    }
    ok = ok && prefix_bad == 0 && coeff_bad == 0 && static_cast<int>(art.curve.size()) == epochs;
    detail += (detail.empty() ? "" : "; ") + std::string("E=") + std::to_string(epochs) + ": " +
              std::to_string(prefix_bad) + " prefix, " + std::to_string(coeff_bad) + " coeff mismatches";
  }
  verdict(9, ok, "schedule and reliability traces", detail);
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  hungarian();
  metric_oracles();
  pair_sets();
  gradients();
  schedule();
  synthetic();
  digit();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
