// Acceptance suite: every criterion prints one PASS/FAIL line with the
// measured quantities, and the doctest assertions gate ctest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "depmax/data.hpp"
#include "depmax/drn.hpp"
#include "depmax/gradcheck.hpp"
#include "depmax/lsmi.hpp"
#include "depmax/oracles.hpp"
#include "oracle_helpers.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace depmax;

namespace {

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("[%s] %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

lsmi::Config cv_config() {
  lsmi::Config cfg;
  cfg.sigma_s = lsmi::BandwidthRule::median_grid({0.25, 0.5, 1.0, 2.0});
  cfg.sigma_t = lsmi::BandwidthRule::median_grid({0.25, 0.5, 1.0, 2.0});
  cfg.delta_grid = {1e-4, 1e-3, 1e-2, 1e-1};
  cfg.cv_max_n = 1000;
  return cfg;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Shared desk-scale training config; the variants differ only in the
// dependence term (and in lambda/beta being zero for the plain baseline).
drn::TrainConfig desk_train_config(drn::DepMeasure dep, std::uint64_t seed) {
  drn::TrainConfig cfg;
  cfg.net_cfg.input_dim = 2;
  cfg.net_cfg.trunk_widths = {32, 32};
  cfg.net_cfg.n_classes = 2;
  cfg.net_cfg.proj_hidden = 32;
  cfg.net_cfg.proj_dim = 16;
  cfg.epochs = 300;
  cfg.warmup_epochs = 10;
  cfg.ramp_epochs = 30;
  cfg.early_stop_patience = 100;
  cfg.lr_peak = 1e-2;
  cfg.wd_start = 1e-5;
  cfg.wd_end = 1e-3;
  cfg.label_eps = 0.1;
  cfg.eta = 0.99;
  cfg.batch_size = 16;
  cfg.seed = seed;
  cfg.dep_measure = dep;
  cfg.lambda_max = dep == drn::DepMeasure::none ? 0.0 : 0.5;
  cfg.beta_max = dep == drn::DepMeasure::none ? 0.0 : 0.1;
  cfg.aug.noise_std = 0.1;
  cfg.lsmi_cfg.sigma_s = lsmi::BandwidthRule::median();
  cfg.lsmi_cfg.sigma_t = lsmi::BandwidthRule::median();
  cfg.lsmi_cfg.delta_grid = {1e-2};
  return cfg;
}

}  // namespace

TEST_CASE("A1 gaussian SMI recovery with cross-validated hyperparameters") {
  const auto t0 = std::chrono::steady_clock::now();
  const lsmi::Config cfg = cv_config();
  struct Band {
    double rho, lo, hi;
  };
  const Band bands[] = {{0.0, 0.0, 0.05}, {0.5, 0.10, 0.24}, {0.8, 0.62, 1.15}};
  std::string detail;
  bool ok = true;
  for (const Band& b : bands) {
    std::vector<double> ests;
    for (int s = 0; s < 10; ++s) {
      const data::Paired p = data::gen_gaussian_pair(2000, b.rho, 1000 + s);
      ests.push_back(lsmi::estimate(p.s, p.t, cfg).value);
    }
    const double m = mean(ests);
    const bool in_band = b.rho == 0.0 ? std::abs(m) <= b.hi
                                      : (m >= b.lo && m <= b.hi);
    ok = ok && in_band;
    detail += "rho=" + fmt17(b.rho).substr(0, 3) + " mean=" + fmt17(m).substr(0, 7) +
              (in_band ? " in " : " OUT OF ") + "[" + fmt17(b.lo).substr(0, 5) +
              "," + fmt17(b.hi).substr(0, 5) + "]; ";
    CHECK(in_band);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= 120.0;
  ok = ok && in_time;
  CHECK(in_time);
  report("A1", ok, detail + "runtime " + fmt17(secs).substr(0, 5) + "s (<=120s)");
}

TEST_CASE("A2 discrete oracle equivalence on one-hot embeddings") {
  CounterRng pmf_rng(77);
  lsmi::Config cfg;
  cfg.sigma_s = lsmi::BandwidthRule::median();
  cfg.sigma_t = lsmi::BandwidthRule::median();
  cfg.delta_grid = {1e-4, 1e-3, 1e-2, 1e-1};
  cfg.cv_max_n = 1000;

  std::vector<double> rels;
  for (int s = 0; s < 10; ++s) {
    Matrix pmf(3, 3);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) pmf(i, j) = 0.05 + pmf_rng.uniform();
    pmf /= pmf.sum();
    const oracles::DiscreteJoint joint(pmf);
    const double truth = oracles::discrete_smi(joint);
    const data::Paired p = data::gen_discrete_joint(joint, 3000, 2000 + s);
    const double est = lsmi::estimate(p.s, p.t, cfg).value;
    rels.push_back(std::abs(est - truth) / truth);
  }
  const double m = mean(rels);
  const bool ok = m <= 0.25;
  CHECK(ok);
  report("A2", ok, "mean relative error vs discrete SMI = " +
                       fmt17(m).substr(0, 6) + " (<=0.25)");
}

TEST_CASE("A3 KSG sanity at rho = 0.8") {
  const double truth = oracles::gaussian_mi(0.8);
  std::vector<double> ests;
  for (int s = 0; s < 10; ++s) {
    const data::Paired p = data::gen_gaussian_pair(2000, 0.8, 3000 + s);
    ests.push_back(oracles::ksg_mi(p.s, p.t, 5).value);
  }
  const double m = mean(ests);
  const bool ok = std::abs(m - truth) <= 0.05;
  CHECK(ok);
  report("A3", ok, "mean = " + fmt17(m).substr(0, 7) + " vs 0.51083 (+-0.05)");
}

TEST_CASE("A4 LSMI full-mode gradient vs finite differences") {
  const gradcheck::Report rep = gradcheck::check_lsmi(16, 3, 42);
  double fd_err = 0.0, col_sums = 0.0;
  for (const auto& b : rep.blocks) {
    if (b.name == "d_ps") fd_err = b.max_rel_err;
    if (b.name == "translation_col_sums") col_sums = b.max_rel_err;
  }
  const bool ok = fd_err <= 1e-4 && col_sums <= 1e-10;
  CHECK(fd_err <= 1e-4);
  CHECK(col_sums <= 1e-10);
  report("A4", ok, "max rel err = " + fmt17(fd_err) +
                       ", translation col sums = " + fmt17(col_sums));
}

TEST_CASE("A5 network and composite-loss gradient checks") {
  const gradcheck::Report net_rep = gradcheck::check_net(42);
  const gradcheck::Report total_rep = gradcheck::check_total(42);
  const bool ok = net_rep.pass(1e-4) && total_rep.pass(1e-4);
  CHECK(net_rep.max_rel_err <= 1e-4);
  CHECK(total_rep.max_rel_err <= 1e-4);
  report("A5", ok, "net max rel err = " + fmt17(net_rep.max_rel_err) +
                       ", composite = " + fmt17(total_rep.max_rel_err));
}

TEST_CASE("A6 EMA closed form theta_t(tau) = c (1 - eta^tau)") {
  net::Config ncfg;
  ncfg.input_dim = 2;
  ncfg.trunk_widths = {4};
  ncfg.proj_hidden = 4;
  ncfg.proj_dim = 2;
  const double c = 0.37;
  net::Params student = net::Params::zeros(ncfg);
  for (auto& t : student.tensors())
    for (Index i = 0; i < t.size; ++i) t.data[i] = c;

  double worst = 0.0;
  for (double eta : {0.0, 0.5, 0.99, 1.0}) {
    net::Params teacher = net::Params::zeros(ncfg);
    for (int tau = 1; tau <= 100; ++tau) {
      drn::ema_update(teacher, student, eta);
      const double expect = c * (1.0 - std::pow(eta, tau));
      for (const auto& t : teacher.tensors())
        for (Index i = 0; i < t.size; ++i)
          worst = std::max(worst, std::abs(t.data[i] - expect));
    }
  }
  const bool ok = worst <= 1e-12;
  CHECK(ok);
  report("A6", ok, "max deviation = " + fmt17(worst) + " (<=1e-12)");
}

TEST_CASE("A7 schedule endpoints are exact") {
  const drn::TrainConfig cfg;  // paper defaults
  const double lr_end = drn::lr_schedule(cfg.warmup_epochs - 1, cfg);
  const double wd0 = drn::wd_schedule(0, cfg);
  const double wd_last = drn::wd_schedule(cfg.epochs - 1, cfg);
  const double ramp_end = drn::ramp(cfg.ramp_epochs, cfg.ramp_epochs, cfg.lambda_max);
  const double ramp_end_b = drn::ramp(cfg.ramp_epochs, cfg.ramp_epochs, cfg.beta_max);
  const bool ok = lr_end == 4e-5 && wd0 == 2e-5 && wd_last == 2e-2 &&
                  ramp_end == cfg.lambda_max && ramp_end_b == cfg.beta_max;
  CHECK(lr_end == 4e-5);
  CHECK(wd0 == 2e-5);
  CHECK(wd_last == 2e-2);
  CHECK(ramp_end == cfg.lambda_max);
  CHECK(ramp_end_b == cfg.beta_max);
  report("A7", ok, "lr(warmup end) = " + fmt17(lr_end) + ", wd = [" + fmt17(wd0) +
                       ", " + fmt17(wd_last) + "], ramp reaches max exactly");
}

TEST_CASE("A8 DRN benefit over the supervised baseline on two moons") {
  const data::Labeled train_set = data::gen_two_moons(400, 0.3, 7);
  const data::Labeled val_set = data::gen_two_moons(400, 0.3, 8);

  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  struct VariantResult {
    const char* name;
    drn::DepMeasure dep;
    std::vector<double> f1;
  };
  VariantResult variants[] = {{"CE-only", drn::DepMeasure::none, {}},
                              {"DRN-MSE-LSMI", drn::DepMeasure::lsmi, {}},
                              {"DRN-MSE-KL", drn::DepMeasure::kl, {}},
                              {"DRN-MSE-JSD", drn::DepMeasure::jsd, {}}};
  double max_run_secs = 0.0;
  for (auto& v : variants) {
    for (std::uint64_t s : seeds) {
      const auto t0 = std::chrono::steady_clock::now();
      const drn::TrainResult res =
          drn::train(desk_train_config(v.dep, s), train_set, val_set);
      max_run_secs = std::max(
          max_run_secs,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count());
      v.f1.push_back(res.best_val_macro_f1);
    }
  }
  const double ce_mean = mean(variants[0].f1);
  const double lsmi_mean = mean(variants[1].f1);
  const bool gate = lsmi_mean >= ce_mean;
  const bool in_time = max_run_secs <= 60.0;
  CHECK(gate);
  CHECK(in_time);
  std::string detail = "mean best-val macro F1: ";
  for (const auto& v : variants)
    detail += std::string(v.name) + "=" + fmt17(mean(v.f1)).substr(0, 6) + " ";
  detail += "(LSMI >= CE-only gated; variant ordering reported only); max run " +
            fmt17(max_run_secs).substr(0, 5) + "s (<=60s)";
  report("A8", gate && in_time, detail);
}

TEST_CASE("A9 determinism: identical seed and config reproduce metrics byte-identically") {
  const data::Labeled train_set = data::gen_two_moons(64, 0.3, 7);
  const data::Labeled val_set = data::gen_two_moons(64, 0.3, 8);
  drn::TrainConfig cfg = desk_train_config(drn::DepMeasure::lsmi, 11);
  cfg.epochs = 8;
  cfg.warmup_epochs = 2;
  cfg.batch_size = 32;

  namespace fs = std::filesystem;
  const std::string p1 = (fs::temp_directory_path() / "depmax_a9_run1.csv").string();
  const std::string p2 = (fs::temp_directory_path() / "depmax_a9_run2.csv").string();
  drn::write_metrics_csv(p1, drn::train(cfg, train_set, val_set).history);
  drn::write_metrics_csv(p2, drn::train(cfg, train_set, val_set).history);

  std::ifstream f1(p1), f2(p2);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  const bool ok = !s1.empty() && s1 == s2;
  CHECK(ok);
  fs::remove(p1);
  fs::remove(p2);
  report("A9", ok, "two runs, " + std::to_string(s1.size()) + " bytes each, identical");
}

TEST_CASE("A10 estimator symmetry and joint-permutation invariance") {
  CounterRng rng(90);
  double worst_sym = 0.0, worst_perm = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 20;
    const Matrix ps = testutil::random_matrix(n, 2, rng);
    const Matrix pt = 0.5 * ps + 0.5 * testutil::random_matrix(n, 2, rng);

    lsmi::Config fwd;
    fwd.sigma_s = lsmi::BandwidthRule::fixed(0.9);
    fwd.sigma_t = lsmi::BandwidthRule::fixed(1.2);
    fwd.delta_grid = {1e-2};
    lsmi::Config swapped;
    swapped.sigma_s = lsmi::BandwidthRule::fixed(1.2);
    swapped.sigma_t = lsmi::BandwidthRule::fixed(0.9);
    swapped.delta_grid = {1e-2};

    const double a = lsmi::estimate(ps, pt, fwd).value;
    const double b = lsmi::estimate(pt, ps, swapped).value;
    worst_sym = std::max(worst_sym, std::abs(a - b));

    std::vector<Index> perm(n);
    for (Index i = 0; i < n; ++i) perm[i] = i;
    for (Index i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    Matrix ps_p(n, 2), pt_p(n, 2);
    for (Index i = 0; i < n; ++i) {
      ps_p.row(i) = ps.row(perm[i]);
      pt_p.row(i) = pt.row(perm[i]);
    }
    const double c = lsmi::estimate(ps_p, pt_p, fwd).value;
    worst_perm = std::max(worst_perm, std::abs(a - c));
  }
  const bool ok = worst_sym <= 1e-12 && worst_perm <= 1e-12;
  CHECK(worst_sym <= 1e-12);
  CHECK(worst_perm <= 1e-12);
  report("A10", ok, "max symmetry gap = " + fmt17(worst_sym) +
                        ", max permutation gap = " + fmt17(worst_perm));
}
