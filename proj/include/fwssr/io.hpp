// io.hpp — file formats: subspace/checkpoint binaries, CSV and JSONL
// report writers.
//
// Binary layouts (little-endian):
//   subspace  "FWSS" | u32 version | u32 layer | u32 k | u32 d
//             | k*d float64, row-major
//   checkpoint "FWTM" | u32 version | u32 n_widths | u32 widths[n_widths]
//             | per weight layer: W row-major float64, then bias float64
// Both round-trip bit-exactly.
//
// All CSV numbers are printed with %.17g so repeated runs are
// byte-identical and values survive a parse round-trip.

#ifndef FWSSR_IO_HPP
#define FWSSR_IO_HPP

#include <string>
#include <vector>

#include "fwssr/eval.hpp"
#include "fwssr/geometry.hpp"
#include "fwssr/synthdata.hpp"
#include "fwssr/toymodel.hpp"
#include "fwssr/trainer.hpp"

namespace fwssr {

void save_subspace(const std::string& path, const SafetySubspace& sub);
SafetySubspace load_subspace(const std::string& path);

void save_checkpoint(const std::string& path, const ToyGuardModel& model);
ToyGuardModel load_checkpoint(const std::string& path,
                              const std::vector<int>& probe_layers = {});

// geometry.csv: condition,layer,safety_drift,drift_ratio,cosine_sim,
// fisher_score,interclass_dist,cka — one row per (condition, layer).
void write_geometry_csv(const std::string& path,
                        const std::vector<ConditionResult>& results);
// JSON mirror of the same rows.
void write_geometry_json(const std::string& path,
                         const std::vector<ConditionResult>& results);

// behavior.csv: condition,refusal,compliance,ambiguous,threshold
void write_behavior_csv(const std::string& path,
                        const std::vector<ConditionResult>& results);

// heatmap.csv: layer,condition,safety_drift
void write_heatmap_csv(const std::string& path, const ComparisonTable& table);

// comparison.csv: metric,direction,<condition columns...>,winner
void write_comparison_csv(const std::string& path,
                          const ComparisonTable& table);

// trace.jsonl: one object per step; s_t present only on measurement steps,
// penalty fields only on regularized steps.
void write_trace_jsonl(const std::string& path,
                       const std::vector<StepTrace>& trace);

// Dataset CSVs: x0..x{d-1},label
void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& inputs,
                       const std::vector<int>& labels);

// summary.json for one run directory (consumed by the report command).
void write_run_summary(const std::string& path, const ConditionResult& result);
ConditionResult load_run_summary(const std::string& path);

// %.17g formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace fwssr

#endif  // FWSSR_IO_HPP
