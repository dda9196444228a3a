// Extracts a skeleton from the ground-truth fields of a synthetic shape and
// prints the joints next to the annotation.
//
//   oracle_extract [family] [seed]

#include <skelfield/skelfield.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
  using namespace skf;
  const Family family = parse_family(argc > 1 ? argv[1] : "table");
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 1;

  const auto shape = synth({family, 0.05}, seed);
  const OracleFields oracle(shape.skeleton);
  const ExtractionConfig cfg;
  const auto pts = extraction_sample(shape.mesh, cfg.mean_shift.sample_count, seed);
  const auto res = extract_skeleton(pts, oracle, cfg);

  std::printf("%s: %zu seeds -> %zu joints (annotated %zu)\n", family_name(family),
              res.joints.seeds.size(), res.skeleton.size(), shape.skeleton.size());
  for (std::size_t j = 0; j < res.skeleton.size(); ++j) {
    const auto& jt = res.skeleton.joints[j];
    std::printf("  %zu  (% .4f, % .4f, % .4f)  parent %s\n", j, jt.pos.x(), jt.pos.y(), jt.pos.z(),
                jt.parent ? std::to_string(*jt.parent).c_str() : "-");
  }
  const auto m = skeleton_metrics(res.skeleton, shape.skeleton);
  std::printf("CD-J2J %.5f  CD-J2B %.5f  CD-B2B %.5f  isomorphic %s\n", m.cd_j2j, m.cd_j2b,
              m.cd_b2b, rooted_isomorphic(res.skeleton, shape.skeleton) ? "yes" : "no");
}
