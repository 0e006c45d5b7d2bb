// depmax command line: dependence estimation, estimator benchmarks,
// dual-role-network training and gradient checking as reproducible batch
// runs. Exit codes: 0 success, 2 usage/config, 3 input data, 4 numeric
// failure in training, 5 gradcheck failure.

#include "depmax/data.hpp"
#include "depmax/drn.hpp"
#include "depmax/gradcheck.hpp"
#include "depmax/lsmi.hpp"
#include "depmax/oracles.hpp"
#include "depmax/run_config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace depmax;

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitGradcheck = 5;

cli::RunConfig load_config(const std::string& path) {
  if (path.empty()) return cli::RunConfig::from_string("");
  return cli::RunConfig::from_file(path);
}

int cmd_estimate(const std::string& input, const std::string& method,
                 const std::string& config_path) {
  const cli::RunConfig rc = load_config(config_path);
  const data::Paired pair = data::load_paired_csv(input);
  const Index n = pair.s.rows();
  const Index d = pair.s.cols();

  double value = 0.0;
  std::string sigma_s, sigma_t, delta;
  if (method == "lsmi") {
    const lsmi::Estimate est =
        lsmi::estimate(pair.s, pair.t, cli::build_lsmi_config(rc));
    value = est.value;
    sigma_s = fmt17(est.sigma_s);
    sigma_t = fmt17(est.sigma_t);
    delta = fmt17(est.delta);
  } else if (method == "ksg") {
    value = oracles::ksg_mi(pair.s, pair.t, rc.get_int("ksg.k")).value;
  } else if (method == "kde") {
    value = oracles::kde_mi(pair.s, pair.t,
                            oracles::silverman_bandwidth(pair.s.col(0)),
                            oracles::silverman_bandwidth(pair.t.col(0)))
                .value;
  } else {
    std::cerr << "unknown method: " << method << '\n';
    return kExitUsage;
  }
  std::cout << method << ',' << fmt17(value) << ',' << n << ',' << d << ','
            << sigma_s << ',' << sigma_t << ',' << delta << '\n';
  return 0;
}

int cmd_benchmark(const std::vector<double>& rhos, const std::vector<int>& ns,
                  int seeds, const std::string& out_path,
                  const std::string& config_path) {
  if (rhos.empty() || ns.empty() || seeds < 1) {
    std::cerr << "benchmark: need non-empty --rhos/--ns and --seeds >= 1\n";
    return kExitUsage;
  }
  for (double rho : rhos)
    if (!(std::abs(rho) < 1.0)) {
      std::cerr << "benchmark: |rho| must be < 1, got " << rho << '\n';
      return kExitUsage;
    }
  for (int n : ns)
    if (n < 8) {
      std::cerr << "benchmark: n must be >= 8, got " << n << '\n';
      return kExitUsage;
    }
  const cli::RunConfig rc = load_config(config_path);
  const lsmi::Config lsmi_cfg = cli::build_lsmi_config(rc);
  const int k = rc.get_int("ksg.k");

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot open for write: " << out_path << '\n';
    return kExitInput;
  }
  out << "row,method,rho,n,seed,estimate,truth,error,est_mean,est_std,abs_err_mean\n";

  const char* methods[] = {"lsmi", "ksg", "kde"};
  for (const char* method : methods) {
    const auto t0 = std::chrono::steady_clock::now();
    for (double rho : rhos) {
      for (int n : ns) {
        std::vector<double> ests;
        const double truth = std::string(method) == "lsmi"
                                 ? oracles::gaussian_smi(rho)
                                 : oracles::gaussian_mi(rho);
        for (int s = 0; s < seeds; ++s) {
          const data::Paired pair = data::gen_gaussian_pair(n, rho, s);
          double est = 0.0;
          if (std::string(method) == "lsmi")
            est = lsmi::estimate(pair.s, pair.t, lsmi_cfg).value;
          else if (std::string(method) == "ksg")
            est = oracles::ksg_mi(pair.s, pair.t, k).value;
          else
            est = oracles::kde_mi(pair.s, pair.t,
                                  oracles::silverman_bandwidth(pair.s.col(0)),
                                  oracles::silverman_bandwidth(pair.t.col(0)))
                      .value;
          ests.push_back(est);
          out << "run," << method << ',' << fmt17(rho) << ',' << n << ',' << s
              << ',' << fmt17(est) << ',' << fmt17(truth) << ','
              << fmt17(est - truth) << ",,,\n";
        }
        double mean = 0.0, abs_err = 0.0;
        for (double e : ests) {
          mean += e;
          abs_err += std::abs(e - truth);
        }
        mean /= ests.size();
        abs_err /= ests.size();
        double var = 0.0;
        for (double e : ests) var += (e - mean) * (e - mean);
        const double sd = ests.size() > 1 ? std::sqrt(var / (ests.size() - 1)) : 0.0;
        out << "summary," << method << ',' << fmt17(rho) << ',' << n
            << ",,,,," << fmt17(mean) << ',' << fmt17(sd) << ','
            << fmt17(abs_err) << '\n';
      }
    }
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - t0;
    // timing goes to the diagnostic stream; the CSV stays byte-reproducible
    std::cerr << method << ": " << dt.count() << " s\n";
  }
  if (!out) {
    std::cerr << "write failed: " << out_path << '\n';
    return kExitInput;
  }
  return 0;
}

int cmd_train(const std::string& dataset, const std::string& config_path,
              const std::string& out_dir) {
  const cli::RunConfig rc = load_config(config_path);

  data::DatasetSpec train_spec, val_spec;
  if (dataset == "two_moons") {
    train_spec.kind = val_spec.kind = data::DatasetKind::two_moons;
    train_spec.noise = val_spec.noise = rc.get_double("data.noise");
    train_spec.n = rc.get_int("data.n_train");
    val_spec.n = rc.get_int("data.n_val");
    train_spec.seed = rc.get_u64("data.seed");
    val_spec.seed = train_spec.seed + 1;
  } else if (dataset == "csv") {
    train_spec.kind = val_spec.kind = data::DatasetKind::csv;
    train_spec.path = rc.get_string("data.train_path");
    val_spec.path = rc.get_string("data.val_path");
  } else {
    std::cerr << "unknown dataset: " << dataset << '\n';
    return kExitUsage;
  }
  data::Labeled train_set = data::make_labeled(train_spec);
  data::Labeled val_set = data::make_labeled(val_spec);
  const int c = std::max(train_set.n_classes, val_set.n_classes);
  train_set.n_classes = val_set.n_classes = c;

  const drn::TrainConfig cfg = cli::build_train_config(
      rc, static_cast<int>(train_set.x.cols()), train_set.n_classes);

  std::filesystem::create_directories(out_dir);
  const drn::TrainResult result = drn::train(cfg, train_set, val_set);
  drn::write_metrics_csv(out_dir + "/metrics.csv", result.history);
  net::save_checkpoint(out_dir + "/best.ckpt", result.best_state.theta_s);

  const std::string summary = std::string(drn::variant_name(cfg)) + ',' +
                              std::to_string(cfg.seed) + ',' +
                              fmt17(result.best_val_macro_f1);
  std::ofstream sum(out_dir + "/summary.csv");
  sum << "variant,seed,best_val_macro_f1\n" << summary << '\n';
  std::cout << summary << '\n';
  return 0;
}

int cmd_gradcheck(const std::string& target) {
  gradcheck::Report rep;
  if (target == "lsmi") rep = gradcheck::check_lsmi();
  else if (target == "net") rep = gradcheck::check_net();
  else if (target == "total") rep = gradcheck::check_total();
  else {
    std::cerr << "unknown target: " << target << '\n';
    return kExitUsage;
  }
  for (const auto& b : rep.blocks)
    std::cout << target << '.' << b.name << ',' << fmt17(b.max_rel_err) << '\n';
  std::cout << target << ".max," << fmt17(rep.max_rel_err) << ','
            << (rep.pass() ? "pass" : "fail") << '\n';
  return rep.pass() ? 0 : kExitGradcheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSMI dependence estimation and dual-role-network training"};
  app.require_subcommand(1);

  auto* est = app.add_subcommand("estimate", "dependence estimate from a paired csv");
  std::string est_input, est_method = "lsmi", est_config;
  est->add_option("--input", est_input, "paired csv file")->required();
  est->add_option("--method", est_method, "lsmi|ksg|kde");
  est->add_option("--config", est_config, "config file");

  auto* bench = app.add_subcommand("benchmark", "estimator sweep over rho/n/seeds");
  std::vector<double> rhos;
  std::vector<int> ns;
  int seeds = 10;
  std::string bench_out, bench_config;
  bench->add_option("--rhos", rhos, "correlation grid")->required()->delimiter(',');
  bench->add_option("--ns", ns, "sample size grid")->required()->delimiter(',');
  bench->add_option("--seeds", seeds, "seeds per cell");
  bench->add_option("--out", bench_out, "output csv")->required();
  bench->add_option("--config", bench_config, "config file");

  auto* tr = app.add_subcommand("train", "train the dual role network");
  std::string tr_dataset = "two_moons", tr_config, tr_out = "run";
  tr->add_option("--dataset", tr_dataset, "two_moons|csv");
  tr->add_option("--config", tr_config, "config file");
  tr->add_option("--out-dir", tr_out, "output directory");

  auto* gc = app.add_subcommand("gradcheck", "analytic gradients vs finite differences");
  std::string gc_target = "lsmi";
  gc->add_option("--target", gc_target, "lsmi|net|total");

  auto* schema = app.add_subcommand("config-schema", "print all config keys and defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return kExitUsage;
  }

  try {
    if (est->parsed()) return cmd_estimate(est_input, est_method, est_config);
    if (bench->parsed())
      return cmd_benchmark(rhos, ns, seeds, bench_out, bench_config);
    if (tr->parsed()) return cmd_train(tr_dataset, tr_config, tr_out);
    if (gc->parsed()) return cmd_gradcheck(gc_target);
    if (schema->parsed()) {
      std::cout << cli::RunConfig::schema_doc();
      return 0;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const data::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
