// End-to-end run: synthesize shapes, voxelize, build fields, optionally train,
// extract skeletons, skin, and score against the annotations.
#pragma once

#include "skelfield/app/config.hpp"
#include "skelfield/app/synth.hpp"
#include "skelfield/neural/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace skf {

/// Runs `fn`, prefixing any error message with the stage name.
template <class F>
auto run_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError("stage '" + stage + "': " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("stage '" + stage + "': " + e.what());
  }
}

/// Interior sample used for extraction, seeded per shape.
inline std::vector<Vec3> extraction_sample(const Mesh& mesh, std::size_t count,
                                           std::uint64_t seed) {
  const InsideTester tester(mesh);
  Rng rng(seed);
  return sample_interior(tester, count, rng);
}

struct ShapeReport {
  std::string name;
  std::size_t joints = 0;
  std::size_t truth_joints = 0;
  bool isomorphic = false;
  bool watertight_warning = false;
  std::optional<char> symmetry_axis;
  SkeletonMetrics metrics;
};

struct PipelineReport {
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<ShapeReport> shapes;
  SkeletonMetrics mean;
  std::optional<double> final_loss;
};

inline SkeletonMetrics mean_metrics(const std::vector<SkeletonMetrics>& all) {
  SkeletonMetrics m;
  if (all.empty()) return m;
  for (const auto& x : all) {
    m.cd_j2j += x.cd_j2j;
    m.cd_j2b += x.cd_j2b;
    m.cd_b2b += x.cd_b2b;
  }
  const double n = static_cast<double>(all.size());
  m.cd_j2j /= n;
  m.cd_j2b /= n;
  m.cd_b2b /= n;
  return m;
}

inline nlohmann::json report_to_json(const PipelineReport& r) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& s : r.shapes) {
    nlohmann::json j = metrics_to_json(s.metrics);
    j["name"] = s.name;
    j["joints"] = s.joints;
    j["truth_joints"] = s.truth_joints;
    j["isomorphic"] = s.isomorphic;
    j["watertight_warning"] = s.watertight_warning;
    j["symmetry"] = s.symmetry_axis ? nlohmann::json(std::string(1, *s.symmetry_axis)) : nlohmann::json();
    shapes.push_back(std::move(j));
  }
  nlohmann::json out = {{"mode", r.mode}, {"seed", r.seed}, {"shapes", shapes},
                        {"mean", metrics_to_json(r.mean)}};
  if (r.final_loss) out["final_loss"] = *r.final_loss;
  return out;
}

/// Writes into `cfg.out`:
///   shapes/<name>.obj, truth/<name>.json      synthesized inputs
///   rigs/<name>.rig.json                      predicted skeleton + weights
///   checkpoint.skfw, trace.csv                trained mode only
///   report.json
inline PipelineReport run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path out(cfg.out);
  for (const char* sub : {"shapes", "truth", "rigs"}) fs::create_directories(out / sub);

  struct Item {
    std::string name;
    SynthShape shape;
    nn::TrainingShape data;
  };
  std::vector<Item> items;
  run_stage("synth", [&] {
    for (const auto& fam : cfg.families) {
      const Family f = parse_family(fam);
      Item it;
      it.name = family_name(f);
      it.shape = synth({f, cfg.jitter}, cfg.seed);
      write_obj((out / "shapes" / (it.name + ".obj")).string(), it.shape.mesh);
      write_json((out / "truth" / (it.name + ".json")).string(), skeleton_to_json(it.shape.skeleton));
      items.push_back(std::move(it));
    }
  });
  run_stage("fields", [&] {
    for (std::size_t i = 0; i < items.size(); ++i)
      items[i].data = nn::prepare_shape(items[i].name, items[i].shape.mesh, items[i].shape.skeleton,
                                        cfg.model.grid_resolution, cfg.data, cfg.seed * 1000 + i);
  });

  PipelineReport report;
  report.mode = cfg.oracle ? "oracle" : "trained";
  report.seed = cfg.seed;
  nn::Model<float> model(cfg.model);
  if (!cfg.oracle) {
    run_stage("train", [&] {
      std::vector<nn::TrainingShape> shapes;
      for (const auto& it : items) shapes.push_back(it.data);
      model.initialize(cfg.train.seed);
      const auto result = nn::train<float>(model, shapes, cfg.train);
      nn::write_checkpoint((out / "checkpoint.skfw").string(), model.params());
      nn::write_trace_csv((out / "trace.csv").string(), result.trace);
      if (!result.trace.empty()) report.final_loss = result.trace.back().loss.total;
    });
  }

  std::vector<SkeletonMetrics> all;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    std::unique_ptr<FieldSource> source;
    if (cfg.oracle)
      source = std::make_unique<OracleFields>(it.shape.skeleton, cfg.widths());
    else
      source = std::make_unique<nn::ModelFields<float>>(model, it.data.occupancy);
    const auto extracted = run_stage("extract", [&] {
      const auto pts = extraction_sample(it.shape.mesh, cfg.extraction.mean_shift.sample_count,
                                         cfg.seed * 7919 + i);
      return extract_skeleton(pts, *source, cfg.extraction);
    });
    run_stage("rig", [&] {
      const auto rig = compute_skinning(it.shape.mesh, extracted.skeleton, cfg.skinning);
      write_json((out / "rigs" / (it.name + ".rig.json")).string(),
                 rig_to_json(rig, "../shapes/" + it.name + ".obj"));
    });
    ShapeReport sr;
    sr.name = it.name;
    sr.joints = extracted.skeleton.size();
    sr.truth_joints = it.shape.skeleton.size();
    sr.isomorphic = rooted_isomorphic(extracted.skeleton, it.shape.skeleton);
    sr.watertight_warning = it.data.occupancy.watertight_warning;
    if (it.data.symmetry) sr.symmetry_axis = axis_name(it.data.symmetry->axis);
    sr.metrics = run_stage("metrics", [&] {
      return skeleton_metrics(extracted.skeleton, it.shape.skeleton, cfg.bone_samples);
    });
    all.push_back(sr.metrics);
    report.shapes.push_back(std::move(sr));
  }
  report.mean = mean_metrics(all);
  write_json((out / "report.json").string(), report_to_json(report));
  return report;
}

// ------------------------------------------------------------ evaluation

struct EvalReport {
  std::vector<std::pair<std::string, SkeletonMetrics>> shapes;  // sorted by name
  SkeletonMetrics mean;
};

/// Skeleton JSON files of a directory keyed by name: "<name>.rig.json" files
/// contribute their "skeleton" member, other "<name>.json" files are read as
/// skeletons.
inline std::map<std::string, Skeleton> load_skeleton_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dir), "not a directory: " + dir);
  std::map<std::string, Skeleton> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string file = entry.path().filename().string();
    auto ends_with = [&](const std::string& suf) {
      return file.size() > suf.size() && file.compare(file.size() - suf.size(), suf.size(), suf) == 0;
    };
    std::string name;
    if (ends_with(".rig.json")) name = file.substr(0, file.size() - 9);
    else if (ends_with(".json")) name = file.substr(0, file.size() - 5);
    else continue;
    const auto j = read_json(entry.path().string());
    try {
      out[name] = skeleton_from_json(j.contains("skeleton") ? j.at("skeleton") : j);
    } catch (const ValidationError& e) {
      throw ValidationError(entry.path().string() + ": " + e.what());
    }
  }
  return out;
}

inline EvalReport evaluate(const std::string& pred_dir, const std::string& truth_dir,
                           int bone_samples = 32) {
  const auto pred = load_skeleton_dir(pred_dir);
  const auto truth = load_skeleton_dir(truth_dir);
  std::string missing;
  for (const auto& [name, s] : pred)
    if (!truth.count(name)) missing += " " + name + " (no truth)";
  for (const auto& [name, s] : truth)
    if (!pred.count(name)) missing += " " + name + " (no prediction)";
  if (!missing.empty()) throw ValidationError("unmatched shapes:" + missing);
  require(!pred.empty(), "no skeletons found in " + pred_dir);
  EvalReport r;
  std::vector<SkeletonMetrics> all;
  for (const auto& [name, p] : pred) {
    r.shapes.emplace_back(name, skeleton_metrics(p, truth.at(name), bone_samples));
    all.push_back(r.shapes.back().second);
  }
  r.mean = mean_metrics(all);
  return r;
}

inline nlohmann::json eval_to_json(const EvalReport& r) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& [name, m] : r.shapes) {
    auto j = metrics_to_json(m);
    j["name"] = name;
    shapes.push_back(std::move(j));
  }
  return {{"shapes", shapes}, {"mean", metrics_to_json(r.mean)}};
}

inline void print_eval_table(std::ostream& os, const EvalReport& r) {
  os << std::left << std::setw(16) << "shape" << std::right << std::setw(12) << "CD-J2J"
     << std::setw(12) << "CD-J2B" << std::setw(12) << "CD-B2B" << '\n';
  auto row = [&](const std::string& name, const SkeletonMetrics& m) {
    os << std::left << std::setw(16) << name << std::right << std::fixed << std::setprecision(6)
       << std::setw(12) << m.cd_j2j << std::setw(12) << m.cd_j2b << std::setw(12) << m.cd_b2b
       << '\n';
  };
  for (const auto& [name, m] : r.shapes) row(name, m);
  row("mean", r.mean);
  os.unsetf(std::ios::floatfield);
}

}  // namespace skf
