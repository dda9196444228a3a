// Skeleton extraction from field sources: joints, root, kinematic tree.
#pragma once

#include "skelfield/skeleton/meanshift.hpp"
#include "skelfield/skeleton/metrics.hpp"
#include "skelfield/skeleton/tree.hpp"

namespace skf {

struct ExtractionConfig {
  MeanShiftConfig mean_shift;
  EdgeWeightConfig edges;

  void validate() const {
    mean_shift.validate();
    edges.validate();
  }
};

struct ExtractionResult {
  Skeleton skeleton;
  JointExtraction joints;
  WeightedGraph graph;
};

/// Evaluates `fields` on the interior sample, extracts joints, picks the root
/// and connects the joints with a spanning tree.
inline ExtractionResult extract_skeleton(std::span<const Vec3> samples, const FieldSource& fields,
                                         const ExtractionConfig& cfg = {}) {
  cfg.validate();
  ExtractionResult out;
  out.joints = extract_joints(samples, fields.evaluate(samples), cfg.mean_shift);
  const int root = select_root(out.joints.joints, fields);
  out.graph = build_graph(out.joints.joints, fields, cfg.edges);
  out.skeleton = kinematic_tree(out.graph, root);
  return out;
}

}  // namespace skf
