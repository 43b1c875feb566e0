// synthdata.hpp — seeded generators for safety probes and benign task data.
//
// The probe generator places the harmful/benign class separation on a
// controllable number of input coordinates (the concentration knob), which
// is the experimental lever for how brittle the learned safety geometry is.
// The task generator labels points by a direction whose overlap with the
// safety coordinates controls task/safety gradient conflict.

#ifndef FWSSR_SYNTHDATA_HPP
#define FWSSR_SYNTHDATA_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace fwssr {

struct SynthSpec {
  int d_in = 64;
  int n_per_class = 40;
  int concentration = 2;    // c: input directions carrying class separation
  double separation = 6.0;  // s: total inter-class mean distance
  double noise_sigma = 1.0;
  std::uint64_t seed = 17;
};

// Throws std::invalid_argument on an invalid spec.
void validate(const SynthSpec& spec);

// Balanced labeled inputs; labels[i] == 1 marks harmful rows.
struct ProbeSet {
  Eigen::MatrixXd inputs;  // N x d_in
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  Eigen::MatrixXd rows_with_label(int label) const;
};

// Class means differ by s/sqrt(c) along each of the first c coordinates
// (total distance s), equal elsewhere; isotropic Gaussian noise sigma;
// rows shuffled by seed. Bit-identical for identical specs.
ProbeSet gen_probe_set(const SynthSpec& spec);

// Benign fine-tuning set: standard-normal inputs labeled by the sign of a
// unit direction that puts `overlap` squared mass in the safety coordinates
// and the rest in the complement.
struct TaskSet {
  Eigen::MatrixXd inputs;  // n_tasks x d_in
  std::vector<int> labels;
  Eigen::VectorXd direction;  // the labeling direction w
  double overlap = 0.0;
};

TaskSet gen_task_set(const SynthSpec& spec, int n_tasks, double overlap);

}  // namespace fwssr

#endif  // FWSSR_SYNTHDATA_HPP
