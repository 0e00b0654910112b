#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvloss/ap_eval.hpp"
#include "uvloss/config.hpp"
#include "uvloss/gps.hpp"
#include "uvloss/jsonl_io.hpp"
#include "uvloss/numfmt.hpp"
#include "uvloss/robust_loss.hpp"
#include "uvloss/sim/sweep.hpp"
#include "uvloss/sim/trainer.hpp"
#include "uvloss/version.hpp"

namespace uvloss::cli {

// Exit codes shared by the command-line tool and the acceptance harness.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitCheckFailed = 3;

// ---------------------------------------------------------------------------
// Resolved run specifications (all defaults materialized).
// ---------------------------------------------------------------------------

struct TrainRunSpec {
  sim::TaskParams task;
  sim::TrainConfig train;
};

struct SweepRunSpec {
  sim::TaskParams task;
  sim::TrainConfig base;
  std::vector<double> lr_grid;
  std::vector<sim::SweepVariant> variants;
};

/// Bundled training run: the dense-point loss on the canonical seed-42 task.
inline TrainRunSpec default_train_spec() {
  TrainRunSpec spec;
  spec.train.base_lr = 8.0;
  spec.train.loss_kind = LossKind::dense_point(0.25);
  return spec;
}

/// Bundled run that reproduces a crash: the quadratic/linear loss at a
/// learning rate the dense-point variants survive.
inline TrainRunSpec crash_smoothl1_train_spec() {
  TrainRunSpec spec;
  spec.train.base_lr = 1024.0;
  spec.train.loss_kind = LossKind::smooth_l1();
  spec.train.divergence_threshold = 35.0;
  return spec;
}

/// Bundled stability sweep on the seed-42 task. The grid brackets each
/// variant's largest stable learning rate; the desk-scale crash criterion is
/// a total exceeding 35x its initial value.
inline SweepRunSpec default_sweep_spec() {
  SweepRunSpec spec;
  spec.base.divergence_threshold = 35.0;
  spec.lr_grid = {16, 32, 64, 128, 256, 512, 1024, 2048};
  spec.variants = {
      {"smooth_l1", LossKind::smooth_l1(), sim::StaticWeighting{}},
      {"dp_w050", LossKind::dense_point(0.5), sim::StaticWeighting{}},
      {"dp_w025", LossKind::dense_point(0.25), sim::StaticWeighting{}},
      {"dp_w025_bws", LossKind::dense_point(0.25), sim::BwsWeighting{}},
  };
  return spec;
}

// ---------------------------------------------------------------------------
// Config file <-> run specification.
// ---------------------------------------------------------------------------

namespace detail {

inline sim::TaskParams task_from_config(const KeyValueConfig& cfg) {
  sim::TaskParams d;
  sim::TaskParams t;
  t.seed = static_cast<uint64_t>(cfg.get_int("task", "seed", static_cast<int64_t>(d.seed)));
  t.n_samples = static_cast<int>(cfg.get_int("task", "n_samples", d.n_samples));
  t.n_points = static_cast<int>(cfg.get_int("task", "n_points", d.n_points));
  t.feature_dim = static_cast<int>(cfg.get_int("task", "feature_dim", d.feature_dim));
  t.outlier_frac = cfg.get_double("task", "outlier_frac", d.outlier_frac);
  t.outlier_scale = cfg.get_double("task", "outlier_scale", d.outlier_scale);
  return t;
}

inline LossKind loss_kind_from_strings(const std::string& kind, double omega,
                                       const std::string& field) {
  if (kind == "dense_point") return LossKind::dense_point(omega);
  if (kind == "smooth_l1") return LossKind::smooth_l1();
  throw std::invalid_argument(field + ": unknown loss kind '" + kind +
                              "' (expected dense_point|smooth_l1)");
}

inline std::vector<TermSpec> weights_from_config(const KeyValueConfig& cfg,
                                                 const std::vector<TermSpec>& fallback) {
  if (!cfg.has_section("weights")) return fallback;
  std::vector<TermSpec> table;
  for (const auto& [name, value] : cfg.section_items("weights")) {
    const auto parts = KeyValueConfig::split_list(value);
    if (parts.size() != 2) {
      throw std::invalid_argument("[weights] " + name + ": expected 'group, weight', got '" +
                                  value + "'");
    }
    TermSpec spec;
    spec.name = name;
    spec.group = loss_group_from_string(parts[0]);
    spec.weight = parse_double(parts[1], "[weights] " + name);
    if (!(spec.weight >= 0.0)) {
      throw std::invalid_argument("[weights] " + name + ": weight must be >= 0");
    }
    table.push_back(std::move(spec));
  }
  return table;
}

inline sim::WeightingMode weighting_from_config(const KeyValueConfig& cfg) {
  const std::string mode = cfg.get_string("weighting", "mode", "static");
  const double k = cfg.get_double("weighting", "k", 1.0);
  if (mode == "static") {
    if (cfg.has("weighting", "detach_weights") || cfg.has("weighting", "apply_static_first")) {
      throw std::invalid_argument(
          "[weighting] detach_weights/apply_static_first only apply to mode = bws");
    }
    return sim::StaticWeighting{k};
  }
  if (mode == "bws") {
    BwsConfig bws;
    bws.k = k;
    bws.detach_weights = cfg.get_bool("weighting", "detach_weights", true);
    bws.apply_static_first = cfg.get_bool("weighting", "apply_static_first", true);
    return sim::BwsWeighting{bws};
  }
  throw std::invalid_argument("[weighting] mode: expected static|bws, got '" + mode + "'");
}

inline sim::TrainConfig train_config_from_config(const KeyValueConfig& cfg) {
  sim::TrainConfig d;
  sim::TrainConfig t;
  t.base_lr = cfg.get_double("schedule", "base_lr", d.base_lr);
  t.warmup_iters = static_cast<int>(cfg.get_int("schedule", "warmup_iters", d.warmup_iters));
  t.warmup_factor = cfg.get_double("schedule", "warmup_factor", d.warmup_factor);
  t.total_iters = static_cast<int>(cfg.get_int("schedule", "total_iters", d.total_iters));
  t.decay_fracs = cfg.get_double_list("schedule", "decay_fracs", d.decay_fracs);
  t.decay_factor = cfg.get_double("schedule", "decay_factor", d.decay_factor);
  const std::string kind = cfg.get_string("loss", "kind", "dense_point");
  const double omega = cfg.get_double("loss", "omega", 0.25);
  t.loss_kind = loss_kind_from_strings(kind, omega, "[loss] kind");
  t.weighting = weighting_from_config(cfg);
  t.term_table = weights_from_config(cfg, sim::sim_term_specs());
  t.seed = static_cast<uint64_t>(cfg.get_int("run", "seed", static_cast<int64_t>(d.seed)));
  t.divergence_threshold =
      cfg.get_double("run", "divergence_threshold", d.divergence_threshold);
  return t;
}

inline sim::SweepVariant variant_from_config(const KeyValueConfig& cfg, const std::string& name) {
  const std::string section = "variant." + name;
  if (!cfg.has_section(section)) {
    throw std::invalid_argument("missing section [" + section + "] for sweep variant '" + name +
                                "'");
  }
  sim::SweepVariant v;
  v.name = name;
  const std::string kind = cfg.get_string(section, "loss", "dense_point");
  const double omega = cfg.get_double(section, "omega", 0.25);
  v.loss_kind = loss_kind_from_strings(kind, omega, "[" + section + "] loss");
  const std::string mode = cfg.get_string(section, "weighting", "static");
  const double k = cfg.get_double(section, "k", 1.0);
  if (mode == "static") {
    if (cfg.has(section, "detach_weights") || cfg.has(section, "apply_static_first")) {
      throw std::invalid_argument("[" + section +
                                  "] detach_weights/apply_static_first only apply to bws");
    }
    v.weighting = sim::StaticWeighting{k};
  } else if (mode == "bws") {
    BwsConfig bws;
    bws.k = k;
    bws.detach_weights = cfg.get_bool(section, "detach_weights", true);
    bws.apply_static_first = cfg.get_bool(section, "apply_static_first", true);
    v.weighting = sim::BwsWeighting{bws};
  } else {
    throw std::invalid_argument("[" + section + "] weighting: expected static|bws");
  }
  return v;
}

}  // namespace detail

inline TrainRunSpec train_spec_from_config(const KeyValueConfig& cfg) {
  TrainRunSpec spec;
  spec.task = detail::task_from_config(cfg);
  spec.train = detail::train_config_from_config(cfg);
  cfg.reject_unconsumed();
  spec.task.validate();
  spec.train.validate();
  return spec;
}

inline SweepRunSpec sweep_spec_from_config(const KeyValueConfig& cfg) {
  SweepRunSpec spec;
  spec.task = detail::task_from_config(cfg);
  spec.base = detail::train_config_from_config(cfg);
  const SweepRunSpec d = default_sweep_spec();
  spec.lr_grid = cfg.get_double_list("sweep", "lr_grid", d.lr_grid);
  const bool explicit_variants = cfg.has("sweep", "variants");
  const auto names = cfg.get_string_list("sweep", "variants", {});
  if (explicit_variants) {
    for (const std::string& name : names) {
      spec.variants.push_back(detail::variant_from_config(cfg, name));
    }
    if (spec.variants.empty()) {
      throw std::invalid_argument("[sweep] variants: list must be non-empty");
    }
  } else {
    spec.variants = d.variants;
  }
  cfg.reject_unconsumed();
  spec.task.validate();
  spec.base.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Run specification -> config text / manifest JSON.
// ---------------------------------------------------------------------------

namespace detail {

inline void append_task_ini(std::ostringstream& out, const sim::TaskParams& t) {
  out << "[task]\n";
  out << "seed = " << t.seed << "\n";
  out << "n_samples = " << t.n_samples << "\n";
  out << "n_points = " << t.n_points << "\n";
  out << "feature_dim = " << t.feature_dim << "\n";
  out << "outlier_frac = " << format_double(t.outlier_frac) << "\n";
  out << "outlier_scale = " << format_double(t.outlier_scale) << "\n";
}

inline void append_weighting_ini(std::ostringstream& out, const std::string& section,
                                 const sim::WeightingMode& mode, bool with_header) {
  if (with_header) out << "[" << section << "]\n";
  if (std::holds_alternative<sim::StaticWeighting>(mode)) {
    out << (with_header ? "mode" : "weighting") << " = static\n";
    out << "k = " << format_double(std::get<sim::StaticWeighting>(mode).k) << "\n";
  } else {
    const BwsConfig& bws = std::get<sim::BwsWeighting>(mode).cfg;
    out << (with_header ? "mode" : "weighting") << " = bws\n";
    out << "k = " << format_double(bws.k) << "\n";
    out << "detach_weights = " << (bws.detach_weights ? "true" : "false") << "\n";
    out << "apply_static_first = " << (bws.apply_static_first ? "true" : "false") << "\n";
  }
}

inline void append_train_ini(std::ostringstream& out, const sim::TrainConfig& t) {
  out << "[schedule]\n";
  out << "base_lr = " << format_double(t.base_lr) << "\n";
  out << "warmup_iters = " << t.warmup_iters << "\n";
  out << "warmup_factor = " << format_double(t.warmup_factor) << "\n";
  out << "total_iters = " << t.total_iters << "\n";
  out << "decay_fracs = ";
  for (size_t i = 0; i < t.decay_fracs.size(); ++i) {
    if (i > 0) out << ", ";
    out << format_double(t.decay_fracs[i]);
  }
  out << "\n";
  out << "decay_factor = " << format_double(t.decay_factor) << "\n\n";
  out << "[loss]\n";
  out << "kind = " << t.loss_kind.name() << "\n";
  if (t.loss_kind.is_dense_point()) out << "omega = " << format_double(t.loss_kind.omega()) << "\n";
  out << "\n";
  append_weighting_ini(out, "weighting", t.weighting, /*with_header=*/true);
  out << "\n[weights]\n";
  for (const TermSpec& s : t.term_table) {
    out << s.name << " = " << to_string(s.group) << ", " << format_double(s.weight) << "\n";
  }
  out << "\n[run]\n";
  out << "seed = " << t.seed << "\n";
  out << "divergence_threshold = " << format_double(t.divergence_threshold) << "\n";
}

}  // namespace detail

inline std::string train_spec_to_ini(const TrainRunSpec& spec) {
  std::ostringstream out;
  detail::append_task_ini(out, spec.task);
  out << "\n";
  detail::append_train_ini(out, spec.train);
  return out.str();
}

inline std::string sweep_spec_to_ini(const SweepRunSpec& spec) {
  std::ostringstream out;
  detail::append_task_ini(out, spec.task);
  out << "\n";
  detail::append_train_ini(out, spec.base);
  out << "\n[sweep]\n";
  out << "lr_grid = ";
  for (size_t i = 0; i < spec.lr_grid.size(); ++i) {
    if (i > 0) out << ", ";
    out << format_double(spec.lr_grid[i]);
  }
  out << "\nvariants = ";
  for (size_t i = 0; i < spec.variants.size(); ++i) {
    if (i > 0) out << ", ";
    out << spec.variants[i].name;
  }
  out << "\n";
  for (const sim::SweepVariant& v : spec.variants) {
    out << "\n[variant." << v.name << "]\n";
    out << "loss = " << v.loss_kind.name() << "\n";
    if (v.loss_kind.is_dense_point()) {
      out << "omega = " << format_double(v.loss_kind.omega()) << "\n";
    }
    std::ostringstream w;
    detail::append_weighting_ini(w, "", v.weighting, /*with_header=*/false);
    out << w.str();
  }
  return out.str();
}

namespace detail {

inline nlohmann::json weighting_to_json(const sim::WeightingMode& mode) {
  nlohmann::json j;
  if (std::holds_alternative<sim::StaticWeighting>(mode)) {
    j["mode"] = "static";
    j["k"] = std::get<sim::StaticWeighting>(mode).k;
  } else {
    const BwsConfig& bws = std::get<sim::BwsWeighting>(mode).cfg;
    j["mode"] = "bws";
    j["k"] = bws.k;
    j["detach_weights"] = bws.detach_weights;
    j["apply_static_first"] = bws.apply_static_first;
  }
  return j;
}

inline nlohmann::json task_to_json(const sim::TaskParams& t) {
  return {{"seed", t.seed},
          {"n_samples", t.n_samples},
          {"n_points", t.n_points},
          {"feature_dim", t.feature_dim},
          {"outlier_frac", t.outlier_frac},
          {"outlier_scale", t.outlier_scale}};
}

inline nlohmann::json train_to_json(const sim::TrainConfig& t) {
  nlohmann::json weights = nlohmann::json::array();
  for (const TermSpec& s : t.term_table) {
    weights.push_back({{"name", s.name}, {"group", to_string(s.group)}, {"weight", s.weight}});
  }
  nlohmann::json loss = {{"kind", t.loss_kind.name()}};
  if (t.loss_kind.is_dense_point()) loss["omega"] = t.loss_kind.omega();
  return {{"schedule",
           {{"base_lr", t.base_lr},
            {"warmup_iters", t.warmup_iters},
            {"warmup_factor", t.warmup_factor},
            {"total_iters", t.total_iters},
            {"decay_fracs", t.decay_fracs},
            {"decay_factor", t.decay_factor}}},
          {"loss", loss},
          {"weighting", weighting_to_json(t.weighting)},
          {"weights", weights},
          {"run", {{"seed", t.seed}, {"divergence_threshold", t.divergence_threshold}}}};
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  out << text;
  if (!out) throw std::runtime_error("failed while writing output file: " + path);
}

// Output entries are file names relative to the manifest's directory, so a
// re-run into any directory produces byte-identical manifests.
inline void write_manifest(const std::string& path, const std::string& subcommand,
                           nlohmann::json config, nlohmann::json inputs,
                           std::vector<std::string> outputs, uint64_t seed) {
  nlohmann::json j;
  j["tool"] = "uvloss";
  j["version"] = kVersion;
  j["subcommand"] = subcommand;
  j["config"] = std::move(config);
  j["inputs"] = std::move(inputs);
  nlohmann::json names = nlohmann::json::array();
  for (const std::string& out : outputs) {
    names.push_back(std::filesystem::path(out).filename().string());
  }
  j["outputs"] = names;
  j["seed"] = seed;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// losscurve
// ---------------------------------------------------------------------------

struct LosscurveOptions {
  LossKind kind = LossKind::dense_point(0.5);
  double x_min = -3.0;
  double x_max = 3.0;
  double step = 0.01;
  std::string out_path;
};

/// Tabulates loss, exact gradient and the magnitude-form gradient over a
/// residual range, one CSV row per sample point.
inline void cmd_losscurve(const LosscurveOptions& opt) {
  if (!(opt.step > 0.0)) throw std::invalid_argument("losscurve: step must be > 0");
  if (!(opt.x_max >= opt.x_min)) throw std::invalid_argument("losscurve: x_max must be >= x_min");
  std::ostringstream csv;
  csv << "x,loss,grad,grad_magnitude_form\n";
  const int n_rows = static_cast<int>(std::floor((opt.x_max - opt.x_min) / opt.step + 1e-9)) + 1;
  for (int i = 0; i < n_rows; ++i) {
    const double x = opt.x_min + i * opt.step;
    csv << format_double(x) << "," << format_double(opt.kind.loss(x)) << ","
        << format_double(opt.kind.grad(x)) << "," << format_double(opt.kind.grad_magnitude_form(x))
        << "\n";
  }
  detail::write_text_file(opt.out_path, csv.str());
  nlohmann::json config = {{"kind", opt.kind.name()},
                           {"x_min", opt.x_min},
                           {"x_max", opt.x_max},
                           {"step", opt.step}};
  if (opt.kind.is_dense_point()) config["omega"] = opt.kind.omega();
  detail::write_manifest(opt.out_path + ".manifest.json", "losscurve", config,
                         nlohmann::json::object(), {opt.out_path}, 0);
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckOptions {
  LossKind kind = LossKind::dense_point(0.25);
  int n_samples = 10000;
  uint64_t seed = 20240;
  double tolerance = 1e-6;
  double x_lo = -10.0;
  double x_hi = 10.0;
  double kink_exclusion = 1e-4;  // skip a band around |x| = 1
  double fd_step = 1e-6;
  bool magnitude_form = false;  // check the comparison-only evaluator instead
};

struct GradcheckReport {
  bool passed = false;
  double worst_rel_err = 0.0;
  double worst_x = 0.0;
  int n_checked = 0;
};

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

/// Compares the analytic gradient against central finite differences of the
/// loss at uniformly sampled residuals.
inline GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  if (opt.n_samples <= 0) throw std::invalid_argument("gradcheck: n_samples must be > 0");
  if (!(opt.tolerance > 0.0)) throw std::invalid_argument("gradcheck: tolerance must be > 0");
  if (!(opt.fd_step > 0.0)) throw std::invalid_argument("gradcheck: fd step must be > 0");
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> sample(opt.x_lo, opt.x_hi);
  GradcheckReport report;
  while (report.n_checked < opt.n_samples) {
    const double x = sample(rng);
    if (std::abs(std::abs(x) - 1.0) < opt.kink_exclusion) continue;
    ++report.n_checked;
    const double fd = (opt.kind.loss(x + opt.fd_step) - opt.kind.loss(x - opt.fd_step)) /
                      (2.0 * opt.fd_step);
    const double analytic = opt.magnitude_form ? opt.kind.grad_magnitude_form(x)
                                               : opt.kind.grad(x);
    const double err = relative_error(analytic, fd);
    if (err > report.worst_rel_err) {
      report.worst_rel_err = err;
      report.worst_x = x;
    }
  }
  report.passed = report.worst_rel_err < opt.tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace detail {

inline std::string curve_csv(const sim::TrainResult& result) {
  std::ostringstream csv;
  csv << "iter,lr";
  for (const std::string& name : result.term_names) csv << ",loss_" << name;
  for (const std::string& name : result.term_names) csv << ",w_" << name;
  csv << ",total\n";
  for (const sim::IterationRecord& rec : result.records) {
    csv << rec.iter << "," << format_double(rec.lr);
    for (double v : rec.term_losses) csv << "," << format_double(v);
    for (double w : rec.term_weights) csv << "," << format_double(w);
    csv << "," << format_double(rec.total) << "\n";
  }
  return csv.str();
}

inline nlohmann::json train_summary_json(const sim::TrainResult& result) {
  nlohmann::json final_losses;
  for (size_t i = 0; i < result.term_names.size(); ++i) {
    final_losses[result.term_names[i]] = result.final_losses[i];
  }
  return {{"outcome", sim::to_string(result.outcome)},
          {"diverged_iter", result.diverged_iter},
          {"iters_run", result.records.size()},
          {"initial_total", result.initial_total},
          {"final_total", result.final_total},
          {"final_losses", final_losses}};
}

}  // namespace detail

/// Runs one training configuration and writes curve.csv, summary.json and
/// manifest.json into the output directory.
inline sim::TrainResult cmd_train(const TrainRunSpec& spec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const sim::SyntheticTask task = sim::gen_task(spec.task);
  const sim::TrainResult result = sim::train(task, spec.train);
  const std::string curve_path = out_dir + "/curve.csv";
  const std::string summary_path = out_dir + "/summary.json";
  detail::write_text_file(curve_path, detail::curve_csv(result));
  detail::write_text_file(summary_path, detail::train_summary_json(result).dump(2) + "\n");
  detail::write_manifest(out_dir + "/manifest.json", "train",
                         {{"task", detail::task_to_json(spec.task)},
                          {"train", detail::train_to_json(spec.train)}},
                         nlohmann::json::object(), {curve_path, summary_path}, spec.task.seed);
  return result;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

namespace detail {

inline std::string sweep_csv(const sim::SweepTable& table) {
  std::ostringstream csv;
  csv << "variant,lr,outcome,diverged_iter,final_total\n";
  for (const sim::SweepCell& cell : table.cells) {
    csv << cell.variant << "," << format_double(cell.lr) << "," << sim::to_string(cell.outcome)
        << "," << cell.diverged_iter << "," << format_double(cell.final_total) << "\n";
  }
  return csv.str();
}

inline nlohmann::json sweep_summary_json(const sim::SweepTable& table) {
  nlohmann::json lr_max = nlohmann::json::object();
  for (const auto& [name, lr] : table.lr_max) {
    if (lr.has_value()) {
      lr_max[name] = *lr;
    } else {
      lr_max[name] = nullptr;
    }
  }
  return {{"lr_max", lr_max}, {"n_cells", table.cells.size()}};
}

}  // namespace detail

/// Runs the stability sweep and writes sweep.csv, summary.json and
/// manifest.json into the output directory.
inline sim::SweepTable cmd_sweep(const SweepRunSpec& spec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const sim::SyntheticTask task = sim::gen_task(spec.task);
  const sim::SweepTable table = sim::divergence_sweep(task, spec.base, spec.lr_grid, spec.variants);
  const std::string csv_path = out_dir + "/sweep.csv";
  const std::string summary_path = out_dir + "/summary.json";
  detail::write_text_file(csv_path, detail::sweep_csv(table));
  detail::write_text_file(summary_path, detail::sweep_summary_json(table).dump(2) + "\n");
  nlohmann::json variants = nlohmann::json::array();
  for (const sim::SweepVariant& v : spec.variants) {
    nlohmann::json jv = {{"name", v.name}, {"loss", v.loss_kind.name()}};
    if (v.loss_kind.is_dense_point()) jv["omega"] = v.loss_kind.omega();
    jv["weighting"] = detail::weighting_to_json(v.weighting);
    variants.push_back(jv);
  }
  detail::write_manifest(out_dir + "/manifest.json", "sweep",
                         {{"task", detail::task_to_json(spec.task)},
                          {"train", detail::train_to_json(spec.base)},
                          {"lr_grid", spec.lr_grid},
                          {"variants", variants}},
                         nlohmann::json::object(), {csv_path, summary_path}, spec.task.seed);
  return table;
}

// ---------------------------------------------------------------------------
// eval-gps
// ---------------------------------------------------------------------------

struct EvalGpsOptions {
  std::string gt_path;
  std::string pred_path;
  double kappa = 0.255;
  std::vector<double> thresholds = default_gps_thresholds();
  SimilarityKind similarity = SimilarityKind::kGps;
  std::string out_path;
  std::string per_instance_csv;  // optional
};

/// Evaluates predictions against ground truth and writes the AP report.
inline ApReport cmd_eval_gps(const EvalGpsOptions& opt) {
  GpsConfig cfg;
  cfg.kappa = opt.kappa;
  cfg.thresholds = opt.thresholds;
  cfg.validate();
  const auto gts = load_instances_jsonl(opt.gt_path, /*expect_score=*/false);
  const auto preds = load_instances_jsonl(opt.pred_path, /*expect_score=*/true);
  const ApReport report = ap_over_thresholds(gts, preds, cfg, opt.similarity);
  detail::write_text_file(opt.out_path, ap_report_to_json(report).dump(2) + "\n");
  std::vector<std::string> outputs = {opt.out_path};
  if (!opt.per_instance_csv.empty()) {
    const auto rows = per_instance_metrics(gts, preds, cfg);
    write_instance_metrics_csv(opt.per_instance_csv, rows);
    outputs.push_back(opt.per_instance_csv);
  }
  detail::write_manifest(opt.out_path + ".manifest.json", "eval-gps",
                         {{"kappa", opt.kappa},
                          {"thresholds", opt.thresholds},
                          {"similarity", to_string(opt.similarity)}},
                         {{"gt", opt.gt_path}, {"pred", opt.pred_path}}, outputs, 0);
  return report;
}

}  // namespace uvloss::cli
