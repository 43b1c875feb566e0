// eval.hpp — behavioral-rate analogs and cross-condition comparison.
//
// Behavior on harmful inputs is scored with a symmetric confidence band:
// refusal when the harmful-class probability clears the threshold,
// compliance when the benign-class probability does, ambiguous otherwise.
// A collapsed model that can no longer separate the classes lands almost
// entirely in the ambiguous band.

#ifndef FWSSR_EVAL_HPP
#define FWSSR_EVAL_HPP

#include <string>
#include <vector>

#include "fwssr/geometry.hpp"
#include "fwssr/toymodel.hpp"

namespace fwssr {

struct BehaviorReport {
  double refusal_rate = 0.0;
  double compliance_rate = 0.0;
  double ambiguous_rate = 0.0;
  double confidence_threshold = 0.0;
};

// Rates over inputs that are all labeled harmful. threshold must lie in
// (0.5, 1) so the three bands partition the probability simplex.
BehaviorReport behavior_rates(const ToyGuardModel& model,
                              const Eigen::MatrixXd& harmful_inputs,
                              double threshold);

// Everything needed to compare one condition against the others.
struct ConditionResult {
  std::string condition;
  std::vector<GeometryReport> geometry;  // per probed layer
  BehaviorReport behavior;               // on harmful probe rows
  double benign_false_refusal = 0.0;     // refusal rate on benign rows
};

struct MetricRow {
  std::string name;
  bool higher_is_better = true;
  std::vector<double> values;  // one per condition
  int winner = -1;  // best among non-original conditions; -1 if none
};

struct ComparisonTable {
  std::vector<std::string> conditions;
  std::vector<MetricRow> rows;  // behavior rates + final-layer geometry
  std::vector<int> layers;
  // drift[i][j] = safety drift at layers[i] under conditions[j]
  std::vector<std::vector<double>> drift;
};

// Builds the metric table and the layers x conditions drift matrix.
// Throws if conditions disagree on their probed layer sets.
ComparisonTable compare_conditions(const std::vector<ConditionResult>& results);

}  // namespace fwssr

#endif  // FWSSR_EVAL_HPP
