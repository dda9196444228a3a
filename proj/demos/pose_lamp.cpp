// Rigs a synthetic lamp on its annotated skeleton, bends the arm and writes
// rest and posed meshes as OBJ.
//
//   pose_lamp [out_dir]

#include <skelfield/skelfield.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

int main(int argc, char** argv) {
  using namespace skf;
  const std::filesystem::path out = argc > 1 ? argv[1] : "pose_lamp";
  std::filesystem::create_directories(out);

  const auto shape = synth({Family::kLamp, 0.05}, 1);
  const auto rig = compute_skinning(shape.mesh, shape.skeleton);
  rig.validate();

  Pose pose = Pose::identity(rig.skeleton.size());
  // Joint 1 is the hinge at the top of the pole.
  pose.rotations[1] = Quat(Eigen::AngleAxisd(-0.6, Vec3::UnitZ()));
  pose.rotations[0] = Quat(Eigen::AngleAxisd(0.4, Vec3::UnitY()));

  write_obj((out / "rest.obj").string(), rig.mesh);
  write_obj((out / "posed.obj").string(), apply_pose(rig, pose));
  write_json((out / "lamp.rig.json").string(), rig_to_json(rig, "rest.obj"));
  std::printf("wrote %s/{rest,posed}.obj and lamp.rig.json (%zu vertices, %zu joints)\n",
              out.string().c_str(), rig.mesh.vertices.size(), rig.skeleton.size());
}
