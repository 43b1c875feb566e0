#include "fwssr/commands.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fwssr/io.hpp"
#include "fwssr/log.hpp"
#include "fwssr/stats.hpp"

namespace fwssr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

TaskSet make_tasks(const ExperimentConfig& cfg) {
  return gen_task_set(cfg.data, cfg.n_tasks, cfg.overlap);
}

ExperimentBundle bundle_from_anchor(const ExperimentConfig& cfg,
                                    ModelSnapshot anchor) {
  ExperimentBundle bundle;
  bundle.probes = gen_probe_set(cfg.data);
  bundle.tasks = make_tasks(cfg);
  bundle.anchors =
      prepare_anchors(anchor, bundle.probes, cfg.train.k, cfg.train.gamma,
                      cfg.train.n_a);
  return bundle;
}

struct SweepRow {
  std::string knob;
  double value = 0.0;
  std::uint64_t seed = 0;
  ConditionResult result;
};

void write_sweep_detail(const std::string& path,
                        const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "knob,value,seed,condition,refusal,compliance,ambiguous,"
         "benign_false_refusal,safety_drift,drift_ratio,cosine_sim,"
         "fisher_score,interclass_dist,cka\n";
  for (const auto& row : rows) {
    const GeometryReport& g = row.result.geometry.back();
    out << row.knob << ',' << format_double(row.value) << ',' << row.seed
        << ',' << row.result.condition << ','
        << format_double(row.result.behavior.refusal_rate) << ','
        << format_double(row.result.behavior.compliance_rate) << ','
        << format_double(row.result.behavior.ambiguous_rate) << ','
        << format_double(row.result.benign_false_refusal) << ','
        << format_double(g.safety_drift) << ',' << format_double(g.drift_ratio)
        << ',' << format_double(g.cosine_sim) << ','
        << format_double(g.fisher_score) << ','
        << format_double(g.interclass_dist) << ',' << format_double(g.cka)
        << '\n';
  }
}

}  // namespace

std::string anchor_checkpoint_path(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/anchor/checkpoint.bin";
}

ExperimentBundle prepare_experiment(const ExperimentConfig& raw) {
  const ExperimentConfig cfg = resolved(raw);
  ExperimentBundle bundle;
  bundle.probes = gen_probe_set(cfg.data);
  bundle.tasks = make_tasks(cfg);
  const ModelSnapshot anchor =
      pretrain_anchor(cfg.data, cfg.pretrain, cfg.layer_widths,
                      cfg.probe_layers, bundle.probes, cfg.seed);
  bundle.anchors = prepare_anchors(anchor, bundle.probes, cfg.train.k,
                                   cfg.train.gamma, cfg.train.n_a);
  return bundle;
}

ExperimentBundle prepare_experiment_from_anchor(
    const ExperimentConfig& raw, const std::string& anchor_checkpoint) {
  const ExperimentConfig cfg = resolved(raw);
  if (!fs::exists(anchor_checkpoint))
    throw std::runtime_error("missing anchor checkpoint: " + anchor_checkpoint +
                             " (run the pretrain command first)");
  ToyGuardModel model = load_checkpoint(anchor_checkpoint, cfg.probe_layers);
  return bundle_from_anchor(
      cfg, snapshot(model, "anchor-seed-" + std::to_string(cfg.seed)));
}

RunResult execute_condition(const ExperimentConfig& raw,
                            const ExperimentBundle& bundle, RunMode mode) {
  ExperimentConfig cfg = resolved(raw);
  cfg.train.mode = mode;
  Trainer trainer(cfg.train, bundle.anchors, bundle.probes);
  return trainer.run(bundle.tasks);
}

ConditionResult to_condition_result(const RunResult& run) {
  ConditionResult res;
  res.condition = run.condition;
  res.geometry = run.geometry;
  res.behavior = run.behavior;
  res.benign_false_refusal = run.benign_false_refusal;
  return res;
}

void write_run_dir(const std::string& dir, const ExperimentConfig& raw,
                   const ExperimentBundle& bundle, const RunResult& run) {
  ExperimentConfig cfg = resolved(raw);
  cfg.train.mode = mode_from_name(run.condition);
  ensure_dir(dir);
  ensure_dir(dir + "/checkpoints");
  save_config(dir + "/config.json", cfg);
  write_trace_jsonl(dir + "/trace.jsonl", run.trace);
  const std::vector<ConditionResult> self = {to_condition_result(run)};
  write_geometry_csv(dir + "/geometry.csv", self);
  write_geometry_json(dir + "/geometry.json", self);
  write_behavior_csv(dir + "/behavior.csv", self);
  write_run_summary(dir + "/summary.json", self.front());
  save_checkpoint(dir + "/checkpoints/anchor.bin",
                  bundle.anchors.snapshot.params);
  save_checkpoint(dir + "/checkpoints/final.bin", run.final_model);
  for (const SafetySubspace& sub : bundle.anchors.subspaces)
    save_subspace(dir + "/checkpoints/subspace_layer_" +
                      std::to_string(sub.layer_index) + ".bin",
                  sub);
}

int cmd_gen_data(const ExperimentConfig& raw) {
  const ExperimentConfig cfg = resolved(raw);
  const std::string dir = cfg.out_dir + "/data";
  ensure_dir(dir);
  const ProbeSet probes = gen_probe_set(cfg.data);
  const TaskSet tasks = make_tasks(cfg);
  write_dataset_csv(dir + "/probe.csv", probes.inputs, probes.labels);
  write_dataset_csv(dir + "/task.csv", tasks.inputs, tasks.labels);
  save_config(dir + "/config.json", cfg);
  FWSSR_LOG_INFO("wrote %s/probe.csv (%d rows) and %s/task.csv (%d rows)",
                 dir.c_str(), probes.size(), dir.c_str(),
                 static_cast<int>(tasks.inputs.rows()));
  return 0;
}

int cmd_pretrain(const ExperimentConfig& raw) {
  const ExperimentConfig cfg = resolved(raw);
  const std::string dir = cfg.out_dir + "/anchor";
  ensure_dir(dir);
  const ProbeSet probes = gen_probe_set(cfg.data);
  const ModelSnapshot anchor =
      pretrain_anchor(cfg.data, cfg.pretrain, cfg.layer_widths,
                      cfg.probe_layers, probes, cfg.seed);
  save_checkpoint(dir + "/checkpoint.bin", anchor.params);
  save_config(dir + "/config.json", cfg);

  ordered_json report;
  report["snapshot_id"] = anchor.snapshot_id;
  report["probe_accuracy"] = accuracy(anchor.params, probes.inputs, probes.labels);
  std::ofstream out(dir + "/report.json");
  out << report.dump(2) << '\n';
  FWSSR_LOG_INFO("anchor checkpoint at %s/checkpoint.bin", dir.c_str());
  return 0;
}

int cmd_run(const ExperimentConfig& raw, RunMode mode) {
  const ExperimentConfig cfg = resolved(raw);
  const ExperimentBundle bundle =
      prepare_experiment_from_anchor(cfg, anchor_checkpoint_path(cfg));
  const RunResult run = execute_condition(cfg, bundle, mode);
  const std::string dir = cfg.out_dir + "/" + run.condition;
  write_run_dir(dir, cfg, bundle, run);
  FWSSR_LOG_INFO("run complete: %s (refusal %.2f, final-layer cka %.3f)",
                 dir.c_str(), run.behavior.refusal_rate,
                 run.geometry.back().cka);
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir) {
  if (run_dirs.size() < 2)
    throw std::invalid_argument("report needs at least two run directories");
  std::vector<ConditionResult> results;
  results.reserve(run_dirs.size());
  for (const auto& dir : run_dirs)
    results.push_back(load_run_summary(dir + "/summary.json"));
  const ComparisonTable table = compare_conditions(results);
  ensure_dir(out_dir);
  write_comparison_csv(out_dir + "/comparison.csv", table);
  write_heatmap_csv(out_dir + "/heatmap.csv", table);
  FWSSR_LOG_INFO("wrote %s/comparison.csv and %s/heatmap.csv", out_dir.c_str(),
                 out_dir.c_str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& raw, const std::string& knob,
              const std::vector<double>& values) {
  const ExperimentConfig base = resolved(raw);
  if (values.empty()) throw std::invalid_argument("sweep needs values");
  if (knob != "concentration" && knob != "overlap" && knob != "lambda0")
    throw std::invalid_argument(
        "unknown sweep knob (expected concentration, overlap or lambda0): " +
        knob);

  const std::string sweep_dir = base.out_dir + "/sweep_" + knob;
  ensure_dir(sweep_dir);

  std::vector<SweepRow> detail;
  std::ofstream summary(sweep_dir + "/sweep_summary.csv");
  if (!summary)
    throw std::runtime_error("cannot write " + sweep_dir + "/sweep_summary.csv");
  summary << "knob,value,n_seeds,refusal_orig_mean,refusal_ft_mean,"
             "refusal_fwssr_mean,fisher_retention_ft_mean,"
             "fisher_retention_fwssr_mean,cka_ft_mean,cka_fwssr_mean\n";

  for (double value : values) {
    double sum_orig_ref = 0, sum_ft_ref = 0, sum_fw_ref = 0;
    double sum_ft_ret = 0, sum_fw_ret = 0, sum_ft_cka = 0, sum_fw_cka = 0;
    for (std::uint64_t seed : base.sweep_seeds) {
      ExperimentConfig cfg = base;
      cfg.seed = seed;
      if (knob == "concentration")
        cfg.data.concentration = static_cast<int>(value);
      else if (knob == "overlap")
        cfg.overlap = value;
      else
        cfg.train.lambda0 = value;
      cfg = resolved(cfg);

      const ExperimentBundle bundle = prepare_experiment(cfg);
      std::vector<ConditionResult> results;
      for (RunMode mode :
           {RunMode::original, RunMode::baseline_ft, RunMode::fwssr}) {
        const RunResult run = execute_condition(cfg, bundle, mode);
        const std::string run_dir = sweep_dir + "/value_" +
                                    format_double(value) + "/seed_" +
                                    std::to_string(seed) + "/" + run.condition;
        ensure_dir(run_dir);
        write_run_summary(run_dir + "/summary.json", to_condition_result(run));
        results.push_back(to_condition_result(run));
        detail.push_back(SweepRow{knob, value, seed, results.back()});
      }
      const double fisher_orig = results[0].geometry.back().fisher_score;
      const double denom = fisher_orig > 0.0 ? fisher_orig : 1.0;
      sum_orig_ref += results[0].behavior.refusal_rate;
      sum_ft_ref += results[1].behavior.refusal_rate;
      sum_fw_ref += results[2].behavior.refusal_rate;
      sum_ft_ret += results[1].geometry.back().fisher_score / denom;
      sum_fw_ret += results[2].geometry.back().fisher_score / denom;
      sum_ft_cka += results[1].geometry.back().cka;
      sum_fw_cka += results[2].geometry.back().cka;
    }
    const double n = static_cast<double>(base.sweep_seeds.size());
    summary << knob << ',' << format_double(value) << ','
            << base.sweep_seeds.size() << ','
            << format_double(sum_orig_ref / n) << ','
            << format_double(sum_ft_ref / n) << ','
            << format_double(sum_fw_ref / n) << ','
            << format_double(sum_ft_ret / n) << ','
            << format_double(sum_fw_ret / n) << ','
            << format_double(sum_ft_cka / n) << ','
            << format_double(sum_fw_cka / n) << '\n';
    FWSSR_LOG_INFO("sweep %s=%g done", knob.c_str(), value);
  }
  write_sweep_detail(sweep_dir + "/sweep_detail.csv", detail);
  return 0;
}

}  // namespace fwssr
