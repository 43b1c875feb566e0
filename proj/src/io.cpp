#include "fwssr/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fwssr {

namespace {

using ordered_json = nlohmann::ordered_json;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_doubles(std::ofstream& out, const double* data, size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* data, size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

void expect_magic(std::ifstream& in, const char* magic,
                  const std::string& path) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::string(buf, 4) != magic)
    throw std::runtime_error("bad magic in " + path);
}

ordered_json geometry_to_json(const std::string& condition,
                              const GeometryReport& g) {
  return ordered_json{{"condition", condition},
                      {"layer", g.layer_index},
                      {"safety_drift", g.safety_drift},
                      {"drift_ratio", g.drift_ratio},
                      {"cosine_sim", g.cosine_sim},
                      {"fisher_score", g.fisher_score},
                      {"interclass_dist", g.interclass_dist},
                      {"cka", g.cka}};
}

}  // namespace

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_subspace(const std::string& path, const SafetySubspace& sub) {
  std::ofstream out = open_out(path, true);
  out.write("FWSS", 4);
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(sub.layer_index));
  write_u32(out, static_cast<std::uint32_t>(sub.k));
  write_u32(out, static_cast<std::uint32_t>(sub.basis.cols()));
  for (Eigen::Index r = 0; r < sub.basis.rows(); ++r)
    for (Eigen::Index c = 0; c < sub.basis.cols(); ++c) {
      const double v = sub.basis(r, c);
      write_doubles(out, &v, 1);
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SafetySubspace load_subspace(const std::string& path) {
  std::ifstream in = open_in(path, true);
  expect_magic(in, "FWSS", path);
  const std::uint32_t version = read_u32(in);
  if (version != 1) throw std::runtime_error("unsupported subspace version");
  SafetySubspace sub;
  sub.layer_index = static_cast<int>(read_u32(in));
  sub.k = static_cast<int>(read_u32(in));
  const int d = static_cast<int>(read_u32(in));
  sub.basis.resize(sub.k, d);
  for (Eigen::Index r = 0; r < sub.basis.rows(); ++r)
    for (Eigen::Index c = 0; c < sub.basis.cols(); ++c)
      read_doubles(in, &sub.basis(r, c), 1);
  if (!in) throw std::runtime_error("truncated subspace file: " + path);
  return sub;
}

void save_checkpoint(const std::string& path, const ToyGuardModel& model) {
  std::ofstream out = open_out(path, true);
  out.write("FWTM", 4);
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(model.layer_widths.size()));
  for (int w : model.layer_widths) write_u32(out, static_cast<std::uint32_t>(w));
  for (size_t i = 0; i < model.weights.size(); ++i) {
    const auto& w = model.weights[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double v = w(r, c);
        write_doubles(out, &v, 1);
      }
    write_doubles(out, model.biases[i].data(),
                  static_cast<size_t>(model.biases[i].size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ToyGuardModel load_checkpoint(const std::string& path,
                              const std::vector<int>& probe_layers) {
  std::ifstream in = open_in(path, true);
  expect_magic(in, "FWTM", path);
  const std::uint32_t version = read_u32(in);
  if (version != 1) throw std::runtime_error("unsupported checkpoint version");
  const std::uint32_t n_widths = read_u32(in);
  if (n_widths < 2) throw std::runtime_error("corrupt checkpoint: " + path);

  ToyGuardModel model;
  model.layer_widths.resize(n_widths);
  for (auto& w : model.layer_widths) w = static_cast<int>(read_u32(in));
  model.probe_layers = probe_layers;
  for (size_t i = 0; i + 1 < n_widths; ++i) {
    Eigen::MatrixXd w(model.layer_widths[i + 1], model.layer_widths[i]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) read_doubles(in, &w(r, c), 1);
    Eigen::VectorXd b(model.layer_widths[i + 1]);
    read_doubles(in, b.data(), static_cast<size_t>(b.size()));
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  if (!in) throw std::runtime_error("truncated checkpoint file: " + path);
  return model;
}

void write_geometry_csv(const std::string& path,
                        const std::vector<ConditionResult>& results) {
  std::ofstream out = open_out(path, false);
  out << "condition,layer,safety_drift,drift_ratio,cosine_sim,fisher_score,"
         "interclass_dist,cka\n";
  for (const auto& r : results)
    for (const auto& g : r.geometry)
      out << r.condition << ',' << g.layer_index << ','
          << format_double(g.safety_drift) << ','
          << format_double(g.drift_ratio) << ','
          << format_double(g.cosine_sim) << ','
          << format_double(g.fisher_score) << ','
          << format_double(g.interclass_dist) << ',' << format_double(g.cka)
          << '\n';
}

void write_geometry_json(const std::string& path,
                         const std::vector<ConditionResult>& results) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : results)
    for (const auto& g : r.geometry) rows.push_back(geometry_to_json(r.condition, g));
  std::ofstream out = open_out(path, false);
  out << rows.dump(2) << '\n';
}

void write_behavior_csv(const std::string& path,
                        const std::vector<ConditionResult>& results) {
  std::ofstream out = open_out(path, false);
  out << "condition,refusal,compliance,ambiguous,threshold\n";
  for (const auto& r : results)
    out << r.condition << ',' << format_double(r.behavior.refusal_rate) << ','
        << format_double(r.behavior.compliance_rate) << ','
        << format_double(r.behavior.ambiguous_rate) << ','
        << format_double(r.behavior.confidence_threshold) << '\n';
}

void write_heatmap_csv(const std::string& path, const ComparisonTable& table) {
  std::ofstream out = open_out(path, false);
  out << "layer,condition,safety_drift\n";
  for (size_t l = 0; l < table.layers.size(); ++l)
    for (size_t j = 0; j < table.conditions.size(); ++j)
      out << table.layers[l] << ',' << table.conditions[j] << ','
          << format_double(table.drift[l][j]) << '\n';
}

void write_comparison_csv(const std::string& path,
                          const ComparisonTable& table) {
  std::ofstream out = open_out(path, false);
  out << "metric,direction";
  for (const auto& c : table.conditions) out << ',' << c;
  out << ",winner\n";
  for (const auto& row : table.rows) {
    out << row.name << ',' << (row.higher_is_better ? "higher" : "lower");
    for (double v : row.values) out << ',' << format_double(v);
    out << ','
        << (row.winner >= 0 ? table.conditions[static_cast<size_t>(row.winner)]
                            : "")
        << '\n';
  }
}

void write_trace_jsonl(const std::string& path,
                       const std::vector<StepTrace>& trace) {
  std::ofstream out = open_out(path, false);
  for (const StepTrace& tr : trace) {
    ordered_json row;
    row["step"] = tr.step;
    if (tr.has_penalty) {
      row["lambda"] = tr.lambda;
      if (tr.has_conflict) row["s_t"] = tr.s_t;
    }
    row["task_loss"] = tr.task_loss;
    if (tr.has_penalty) {
      row["fwssr_loss"] = tr.fwssr_loss;
      row["per_layer_penalty"] = tr.per_layer_penalty;
    }
    out << row.dump() << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& inputs,
                       const std::vector<int>& labels) {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("dataset rows disagree with labels");
  std::ofstream out = open_out(path, false);
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) out << 'x' << j << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < inputs.cols(); ++j)
      out << format_double(inputs(i, j)) << ',';
    out << labels[static_cast<size_t>(i)] << '\n';
  }
}

void write_run_summary(const std::string& path, const ConditionResult& result) {
  ordered_json doc;
  doc["condition"] = result.condition;
  doc["geometry"] = ordered_json::array();
  for (const auto& g : result.geometry)
    doc["geometry"].push_back(geometry_to_json(result.condition, g));
  doc["behavior"] = ordered_json{
      {"refusal", result.behavior.refusal_rate},
      {"compliance", result.behavior.compliance_rate},
      {"ambiguous", result.behavior.ambiguous_rate},
      {"threshold", result.behavior.confidence_threshold}};
  doc["benign_false_refusal"] = result.benign_false_refusal;
  std::ofstream out = open_out(path, false);
  out << doc.dump(2) << '\n';
}

ConditionResult load_run_summary(const std::string& path) {
  std::ifstream in = open_in(path, false);
  ordered_json doc = ordered_json::parse(in);
  ConditionResult result;
  result.condition = doc.at("condition").get<std::string>();
  for (const auto& row : doc.at("geometry")) {
    GeometryReport g;
    g.layer_index = row.at("layer").get<int>();
    g.safety_drift = row.at("safety_drift").get<double>();
    g.drift_ratio = row.at("drift_ratio").get<double>();
    g.cosine_sim = row.at("cosine_sim").get<double>();
    g.fisher_score = row.at("fisher_score").get<double>();
    g.interclass_dist = row.at("interclass_dist").get<double>();
    g.cka = row.at("cka").get<double>();
    result.geometry.push_back(g);
  }
  const auto& b = doc.at("behavior");
  result.behavior.refusal_rate = b.at("refusal").get<double>();
  result.behavior.compliance_rate = b.at("compliance").get<double>();
  result.behavior.ambiguous_rate = b.at("ambiguous").get<double>();
  result.behavior.confidence_threshold = b.at("threshold").get<double>();
  result.benign_false_refusal = doc.at("benign_false_refusal").get<double>();
  return result;
}

}  // namespace fwssr
