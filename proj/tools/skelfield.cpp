// skelfield command-line interface. Exit codes: 0 ok, 2 invalid input,
// 3 numerical failure.
#include "skelfield/skelfield.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using namespace skf;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool dump_defaults = false;
};

PipelineConfig load(const Globals& g) {
  PipelineConfig cfg = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

void require_normalized(const Mesh& mesh, const std::string& path) {
  const auto [lo, hi] = mesh.bounds();
  require(lo.minCoeff() >= -0.5 - 1e-6 && hi.maxCoeff() <= 0.5 + 1e-6,
          path + ": mesh is not normalized to the unit cube (use 'voxelize --normalize' or 'synth')");
}

fs::path ensure_dir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

/// Creates the parent directory of an output file.
const std::string& out_file(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  return path;
}

/// <name>.obj + <name>.json pairs of a directory, sorted by name.
std::vector<std::pair<std::string, SynthShape>> load_dataset(const std::string& dir) {
  require(fs::is_directory(dir), "not a directory: " + dir);
  std::vector<fs::path> objs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".obj") objs.push_back(e.path());
  std::sort(objs.begin(), objs.end());
  std::vector<std::pair<std::string, SynthShape>> out;
  for (const auto& obj : objs) {
    auto json = obj;
    json.replace_extension(".json");
    require(fs::exists(json), "missing skeleton " + json.string());
    SynthShape s{read_obj(obj.string()), read_skeleton(json.string())};
    require_normalized(s.mesh, obj.string());
    out.emplace_back(obj.stem().string(), std::move(s));
  }
  require(!out.empty(), "no .obj files in " + dir);
  return out;
}

std::vector<std::pair<std::string, SynthShape>> config_dataset(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, SynthShape>> out;
  for (const auto& fam : cfg.families) {
    const Family f = parse_family(fam);
    out.emplace_back(family_name(f), synth({f, cfg.jitter}, cfg.seed));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeletal probability fields: rig 3D shapes from implicit joint and bone fields"};
  app.require_subcommand(0, 1);
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline configuration file (key = value sections)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the pipeline seed");
  app.add_flag("--dump-defaults", g.dump_defaults, "Print the default configuration and exit");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a procedural rigged shape");
  std::string family = "table";
  std::string synth_out = ".";
  synth_cmd->add_option("--family", family, "table | chair | lamp | cross");
  synth_cmd->add_option("--out", synth_out, "Output directory");

  // voxelize
  auto* vox_cmd = app.add_subcommand("voxelize", "Voxelize a watertight mesh");
  std::string vox_mesh, vox_out;
  int vox_res = 32;
  bool vox_normalize = false;
  vox_cmd->add_option("--mesh", vox_mesh, "Input OBJ")->required()->check(CLI::ExistingFile);
  vox_cmd->add_option("--resolution", vox_res, "Cells per axis");
  vox_cmd->add_flag("--normalize", vox_normalize, "Normalize the mesh to the unit cube first");
  vox_cmd->add_option("--out", vox_out, "Output occupancy grid")->required();

  // fields
  auto* fields_cmd = app.add_subcommand("fields", "Sample points and ground-truth field targets");
  std::string f_mesh, f_skel, f_out;
  std::size_t f_count = 4096;
  fields_cmd->add_option("--mesh", f_mesh)->required()->check(CLI::ExistingFile);
  fields_cmd->add_option("--skeleton", f_skel)->required()->check(CLI::ExistingFile);
  fields_cmd->add_option("--count", f_count, "Number of sample points");
  fields_cmd->add_option("--out", f_out, "Output JSON")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the multi-head field decoder");
  std::string t_data, t_out = "train_out";
  train_cmd->add_option("--data", t_data, "Directory of <name>.obj + <name>.json (default: synth families)");
  train_cmd->add_option("--out", t_out, "Output directory");

  // extract
  auto* ex_cmd = app.add_subcommand("extract", "Extract a skeleton from fields");
  std::string e_mesh, e_ckpt, e_truth, e_out;
  bool e_oracle = false;
  ex_cmd->add_option("--mesh", e_mesh)->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--checkpoint", e_ckpt, "Trained parameters")->check(CLI::ExistingFile);
  ex_cmd->add_flag("--oracle", e_oracle, "Use ground-truth fields of --truth");
  ex_cmd->add_option("--truth", e_truth, "Annotated skeleton (oracle fields, metrics)")
      ->check(CLI::ExistingFile);
  ex_cmd->add_option("--out", e_out, "Output skeleton JSON")->required();

  // rig
  auto* rig_cmd = app.add_subcommand("rig", "Compute skinning weights");
  std::string r_mesh, r_skel, r_out;
  rig_cmd->add_option("--mesh", r_mesh)->required()->check(CLI::ExistingFile);
  rig_cmd->add_option("--skeleton", r_skel)->required()->check(CLI::ExistingFile);
  rig_cmd->add_option("--out", r_out, "Output rig JSON")->required();

  // pose
  auto* pose_cmd = app.add_subcommand("pose", "Apply a pose clip to a rig");
  std::string p_rig, p_clip, p_out = "posed";
  pose_cmd->add_option("--rig", p_rig)->required()->check(CLI::ExistingFile);
  pose_cmd->add_option("--clip", p_clip)->required()->check(CLI::ExistingFile);
  pose_cmd->add_option("--out", p_out, "Output directory for frame_<n>.obj");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted skeletons against annotations");
  std::string v_pred, v_truth, v_out;
  eval_cmd->add_option("--pred", v_pred, "Directory of predicted rigs or skeletons")->required();
  eval_cmd->add_option("--truth", v_truth, "Directory of annotated skeletons")->required();
  eval_cmd->add_option("--out", v_out, "Write the JSON report here");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run the end-to-end pipeline");
  bool pl_oracle = false;
  std::string pl_out;
  pipe_cmd->add_flag("--oracle", pl_oracle, "Skip training and use ground-truth fields");
  pipe_cmd->add_option("--out", pl_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (g.dump_defaults) {
      std::cout << dump_config(PipelineConfig{});
      return 0;
    }
    const PipelineConfig cfg = load(g);

    if (*synth_cmd) {
      const Family f = parse_family(family);
      const auto s = synth({f, cfg.jitter}, cfg.seed);
      const auto dir = ensure_dir(synth_out);
      write_obj((dir / (std::string(family_name(f)) + ".obj")).string(), s.mesh);
      write_json((dir / (std::string(family_name(f)) + ".json")).string(), skeleton_to_json(s.skeleton));
    } else if (*vox_cmd) {
      Mesh mesh = read_obj(vox_mesh);
      if (vox_normalize) mesh = normalize_mesh(mesh).first;
      require_normalized(mesh, vox_mesh);
      const auto grid = voxelize(mesh, vox_res);
      write_occgrid(out_file(vox_out), grid);
      std::cout << "occupied " << grid.occupied() << " of " << grid.values.size() << " cells\n";
      if (grid.watertight_warning) std::cerr << "warning: mesh may not be watertight\n";
    } else if (*fields_cmd) {
      const Mesh mesh = read_obj(f_mesh);
      require_normalized(mesh, f_mesh);
      const Skeleton skel = read_skeleton(f_skel);
      const auto batch = sample_points(mesh, f_count, cfg.data.band, cfg.seed);
      const auto targets = build_targets(skel, batch.points, cfg.widths());
      write_json(out_file(f_out), targets_to_json(batch, targets));
    } else if (*train_cmd) {
      const auto data = t_data.empty() ? config_dataset(cfg) : load_dataset(t_data);
      std::vector<nn::TrainingShape> shapes;
      for (std::size_t i = 0; i < data.size(); ++i)
        shapes.push_back(nn::prepare_shape(data[i].first, data[i].second.mesh, data[i].second.skeleton,
                                           cfg.model.grid_resolution, cfg.data, cfg.seed * 1000 + i));
      nn::Model<float> model(cfg.model);
      model.initialize(cfg.train.seed);
      const auto result = nn::train<float>(model, shapes, cfg.train, [&](const nn::TraceRow& r) {
        if (r.step % 100 == 0 || r.step + 1 == cfg.train.steps)
          std::cout << "step " << r.step << " loss " << r.loss.total << std::endl;
      });
      const auto dir = ensure_dir(t_out);
      nn::write_checkpoint((dir / "checkpoint.skfw").string(), model.params());
      nn::write_trace_csv((dir / "trace.csv").string(), result.trace);
    } else if (*ex_cmd) {
      const Mesh mesh = read_obj(e_mesh);
      require_normalized(mesh, e_mesh);
      require(e_oracle != !e_ckpt.empty(), "extract: give exactly one of --oracle or --checkpoint");
      std::unique_ptr<FieldSource> source;
      nn::Model<float> model(cfg.model);
      if (e_oracle) {
        require(!e_truth.empty(), "extract: --oracle needs --truth");
        source = std::make_unique<OracleFields>(read_skeleton(e_truth), cfg.widths());
      } else {
        nn::read_checkpoint(e_ckpt, model.params());
        source = std::make_unique<nn::ModelFields<float>>(model, voxelize(mesh, cfg.model.grid_resolution));
      }
      const auto pts = extraction_sample(mesh, cfg.extraction.mean_shift.sample_count, cfg.seed);
      const auto res = extract_skeleton(pts, *source, cfg.extraction);
      write_json(out_file(e_out), skeleton_to_json(res.skeleton));
      std::cout << "joints " << res.skeleton.size() << '\n';
      if (!e_truth.empty())
        std::cout << metrics_to_json(skeleton_metrics(res.skeleton, read_skeleton(e_truth), cfg.bone_samples)).dump(2)
                  << '\n';
    } else if (*rig_cmd) {
      const Mesh mesh = read_obj(r_mesh);
      const auto rig = compute_skinning(mesh, read_skeleton(r_skel), cfg.skinning);
      const auto rel = fs::relative(fs::absolute(r_mesh), fs::absolute(r_out).parent_path());
      write_json(out_file(r_out), rig_to_json(rig, rel.generic_string()));
    } else if (*pose_cmd) {
      const auto rig = read_rig(p_rig);
      const auto clip = clip_from_json(read_json(p_clip));
      const auto dir = ensure_dir(p_out);
      for (const auto& f : clip)
        write_obj((dir / ("frame_" + std::to_string(f.frame) + ".obj")).string(), apply_pose(rig, f.pose));
      std::cout << "wrote " << clip.size() << " frames\n";
    } else if (*eval_cmd) {
      const auto report = evaluate(v_pred, v_truth, cfg.bone_samples);
      print_eval_table(std::cout, report);
      if (!v_out.empty()) write_json(out_file(v_out), eval_to_json(report));
    } else if (*pipe_cmd) {
      PipelineConfig run = cfg;
      if (pl_oracle) run.oracle = true;
      if (!pl_out.empty()) run.out = pl_out;
      const auto report = run_pipeline(run);
      std::cout << report_to_json(report).dump(2) << '\n';
    } else {
      std::cout << app.help();
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
