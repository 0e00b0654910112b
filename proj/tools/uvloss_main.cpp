#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uvloss/cli.hpp"

namespace {

using namespace uvloss;

LossKind make_kind(const std::string& kind, double omega) {
  return cli::detail::loss_kind_from_strings(kind, omega, "--kind");
}

int run(int argc, char** argv) {
  CLI::App app{"dense-point robust loss, balanced loss weighting, GPS metrics and a desk-scale "
               "training-stability simulator"};
  app.require_subcommand(1);

  // losscurve
  auto* losscurve = app.add_subcommand("losscurve", "tabulate loss and gradients over a range");
  std::string lc_kind = "dense_point";
  double lc_omega = 0.5;
  cli::LosscurveOptions lc;
  losscurve->add_option("--kind", lc_kind, "dense_point|smooth_l1")->capture_default_str();
  losscurve->add_option("--omega", lc_omega, "dense-point scale in (0, 0.5]")
      ->capture_default_str();
  losscurve->add_option("--x-min", lc.x_min, "range start")->capture_default_str();
  losscurve->add_option("--x-max", lc.x_max, "range end")->capture_default_str();
  losscurve->add_option("--step", lc.step, "sample spacing")->capture_default_str();
  losscurve->add_option("--out", lc.out_path, "output CSV path")->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients against finite "
                                                    "differences");
  std::string gc_kind = "dense_point";
  double gc_omega = 0.25;
  cli::GradcheckOptions gc;
  gradcheck->add_option("--kind", gc_kind, "dense_point|smooth_l1")->capture_default_str();
  gradcheck->add_option("--omega", gc_omega, "dense-point scale in (0, 0.5]")
      ->capture_default_str();
  gradcheck->add_option("--samples", gc.n_samples, "number of sample points")
      ->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "sampling seed")->capture_default_str();
  gradcheck->add_option("--tol", gc.tolerance, "relative-error tolerance")->capture_default_str();
  gradcheck->add_flag("--magnitude-form", gc.magnitude_form,
                      "check the comparison-only magnitude-form evaluator (expected to fail)");

  // train
  auto* train = app.add_subcommand("train", "run one training configuration");
  std::string train_config;
  std::string train_out;
  train->add_option("--config", train_config, "config file (defaults used when omitted)");
  train->add_option("--out-dir", train_out, "output directory")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run the learning-rate stability sweep");
  std::string sweep_config;
  std::string sweep_out;
  sweep->add_option("--config", sweep_config, "config file (defaults used when omitted)");
  sweep->add_option("--out-dir", sweep_out, "output directory")->required();

  // eval-gps
  auto* eval = app.add_subcommand("eval-gps", "evaluate predictions with AP over GPS thresholds");
  cli::EvalGpsOptions eg;
  std::string eg_similarity = "gps";
  std::string eg_thresholds;
  eval->add_option("--gt", eg.gt_path, "ground-truth JSON-lines file")->required();
  eval->add_option("--pred", eg.pred_path, "prediction JSON-lines file")->required();
  eval->add_option("--kappa", eg.kappa, "similarity normalization constant")
      ->capture_default_str();
  eval->add_option("--thresholds", eg_thresholds,
                   "comma-separated similarity thresholds (default 0.5..0.95 step 0.05)");
  eval->add_option("--similarity", eg_similarity, "gps|gpsm")->capture_default_str();
  eval->add_option("--out", eg.out_path, "output report JSON path")->required();
  eval->add_option("--per-instance", eg.per_instance_csv, "optional per-instance CSV path");

  // print-config
  auto* print_config = app.add_subcommand("print-config", "print a fully resolved config");
  std::string pc_kind = "train";
  std::string pc_config;
  print_config->add_option("--kind", pc_kind, "train|sweep|crash-smoothl1")
      ->capture_default_str();
  print_config->add_option("--config", pc_config, "resolve this file instead of the defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitValidation;
  }

  try {
    if (losscurve->parsed()) {
      lc.kind = make_kind(lc_kind, lc_omega);
      cli::cmd_losscurve(lc);
      std::printf("wrote %s\n", lc.out_path.c_str());
      return cli::kExitOk;
    }
    if (gradcheck->parsed()) {
      gc.kind = make_kind(gc_kind, gc_omega);
      const auto report = cli::run_gradcheck(gc);
      std::printf("gradcheck %s: kind=%s samples=%d worst_rel_err=%.3e at x=%.9g (tol %.1e)\n",
                  report.passed ? "PASS" : "FAIL", gc.kind.name().c_str(), report.n_checked,
                  report.worst_rel_err, report.worst_x, gc.tolerance);
      return report.passed ? cli::kExitOk : cli::kExitCheckFailed;
    }
    if (train->parsed()) {
      const cli::TrainRunSpec spec =
          train_config.empty()
              ? cli::default_train_spec()
              : cli::train_spec_from_config(KeyValueConfig::parse_file(train_config));
      const auto result = cli::cmd_train(spec, train_out);
      std::printf("train %s: %zu iterations, final total %.6g (artifacts in %s)\n",
                  sim::to_string(result.outcome), result.records.size(), result.final_total,
                  train_out.c_str());
      return cli::kExitOk;
    }
    if (sweep->parsed()) {
      const cli::SweepRunSpec spec =
          sweep_config.empty()
              ? cli::default_sweep_spec()
              : cli::sweep_spec_from_config(KeyValueConfig::parse_file(sweep_config));
      const auto table = cli::cmd_sweep(spec, sweep_out);
      for (const auto& [name, lr] : table.lr_max) {
        if (lr.has_value()) {
          std::printf("lr_max %-16s = %g\n", name.c_str(), *lr);
        } else {
          std::printf("lr_max %-16s = none\n", name.c_str());
        }
      }
      std::printf("wrote sweep artifacts to %s\n", sweep_out.c_str());
      return cli::kExitOk;
    }
    if (eval->parsed()) {
      eg.similarity = similarity_kind_from_string(eg_similarity);
      if (!eg_thresholds.empty()) {
        eg.thresholds.clear();
        for (const std::string& t : KeyValueConfig::split_list(eg_thresholds)) {
          eg.thresholds.push_back(parse_double(t, "--thresholds"));
        }
      }
      const auto report = cli::cmd_eval_gps(eg);
      std::printf("AP(%s) = %.6f over %zu thresholds, %d images, %d instances\n",
                  eg_similarity.c_str(), report.ap, report.per_threshold.size(), report.n_images,
                  report.n_instances);
      return cli::kExitOk;
    }
    if (print_config->parsed()) {
      if (pc_kind == "train" || pc_kind == "crash-smoothl1") {
        cli::TrainRunSpec spec = pc_kind == "train" ? cli::default_train_spec()
                                                    : cli::crash_smoothl1_train_spec();
        if (!pc_config.empty()) {
          spec = cli::train_spec_from_config(KeyValueConfig::parse_file(pc_config));
        }
        std::fputs(cli::train_spec_to_ini(spec).c_str(), stdout);
      } else if (pc_kind == "sweep") {
        cli::SweepRunSpec spec = cli::default_sweep_spec();
        if (!pc_config.empty()) {
          spec = cli::sweep_spec_from_config(KeyValueConfig::parse_file(pc_config));
        }
        std::fputs(cli::sweep_spec_to_ini(spec).c_str(), stdout);
      } else {
        throw std::invalid_argument("print-config --kind: expected train|sweep|crash-smoothl1");
      }
      return cli::kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitValidation;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitValidation;
  } catch (const JsonlError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitRuntime;
  }
  return cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
