// Pipeline configuration: every tunable of the end-to-end run, read from and
// written to a sectioned key = value text file.
#pragma once

#include "skelfield/neural/train.hpp"
#include "skelfield/rig.hpp"
#include "skelfield/skeleton.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace skf {

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::vector<std::string> families = {"table", "chair", "lamp"};
  double jitter = 0.05;
  bool oracle = false;
  std::string out = "out";
  double bone_sigma = 0.04;
  int bone_samples = 32;
  nn::DataConfig data;
  nn::ModelConfig model;
  nn::TrainConfig train;
  ExtractionConfig extraction;
  SkinningConfig skinning;

  FieldWidths widths() const { return {data.sigma, bone_sigma}; }

  void validate() const {
    require(!families.empty(), "config: no shape families");
    require(jitter >= 0.0 && jitter < 0.5, "config: jitter must be in [0, 0.5)");
    require(data.sigma > 0.0 && bone_sigma > 0.0, "config: sigma must be positive");
    require(data.band > 0.0, "config: band must be positive");
    require(data.pool_size >= 2, "config: pool size must be >= 2");
    require(bone_samples >= 2, "config: bone_samples must be >= 2");
    model.validate();
    train.validate();
    extraction.validate();
    skinning.validate();
  }
};

namespace detail {

/// Binds every config key to a string getter and setter.
class ConfigSchema {
 public:
  explicit ConfigSchema(PipelineConfig& c) {
    add("pipeline", "seed", c.seed);
    add("pipeline", "families", c.families);
    add("pipeline", "jitter", c.jitter);
    add("pipeline", "oracle", c.oracle);
    add("pipeline", "out", c.out);

    add("fields", "sigma", c.data.sigma);
    add("fields", "bone_sigma", c.bone_sigma);
    add("fields", "band", c.data.band);
    add("fields", "pool_size", c.data.pool_size);
    add("fields", "symmetry_threshold", c.data.symmetry_threshold);
    add("fields", "focus_level", c.data.focus_level);

    add("model", "grid_resolution", c.model.grid_resolution);
    add("model", "channels", c.model.channels);
    add("model", "reduction", c.model.reduction);
    add("model", "hidden", c.model.hidden);
    add("model", "blocks", c.model.blocks);
    add("model", "embed_dim", c.model.embed_dim);
    add("model", "coord_scale", c.model.coord_scale);

    add("train", "steps", c.train.steps);
    add("train", "batch", c.train.batch);
    add("train", "learning_rate", c.train.learning_rate);
    add("train", "final_lr_fraction", c.train.final_lr_fraction);
    add("train", "focus_fraction", c.train.focus_fraction);
    add("train", "optimizer", c.train.optimizer);
    add("train", "beta1", c.train.beta1);
    add("train", "beta2", c.train.beta2);
    add("train", "epsilon", c.train.epsilon);
    add("train", "seed", c.train.seed);
    add("train", "w_joint", c.train.weights.joint);
    add("train", "w_root", c.train.weights.root);
    add("train", "w_bone", c.train.weights.bone);
    add("train", "w_sym", c.train.weights.sym);
    add("train", "w_inst", c.train.weights.inst);

    add("discriminative", "delta_var", c.train.disc.delta_var);
    add("discriminative", "delta_dist", c.train.disc.delta_dist);
    add("discriminative", "w_var", c.train.disc.w_var);
    add("discriminative", "w_dist", c.train.disc.w_dist);
    add("discriminative", "w_reg", c.train.disc.w_reg);

    auto& ms = c.extraction.mean_shift;
    add("mean_shift", "bandwidth", ms.bandwidth);
    add("mean_shift", "max_iters", ms.max_iters);
    add("mean_shift", "tolerance", ms.tolerance);
    add("mean_shift", "merge_radius", ms.merge_radius);
    add("mean_shift", "neighbor_radius", ms.neighbor_radius);
    add("mean_shift", "seed_threshold", ms.seed_threshold);
    add("mean_shift", "sample_count", ms.sample_count);

    add("edges", "samples", c.extraction.edges.samples);
    add("edges", "epsilon", c.extraction.edges.epsilon);
    add("metrics", "bone_samples", c.bone_samples);

    add("skinning", "sigma", c.skinning.sigma);
    add("skinning", "smoothing_rounds", c.skinning.smoothing_rounds);
    add("skinning", "band", c.skinning.band);
    add("skinning", "tie_tolerance", c.skinning.tie_tolerance);
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    auto it = setters_.find({section, key});
    if (it == setters_.end())
      throw ValidationError("config: unknown key '" + key + "' in section [" + section + "]");
    try {
      it->second(value);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError("config: bad value '" + value + "' for " + section + "." + key);
    }
  }

  std::string dump() const {
    std::ostringstream out;
    std::string section;
    for (const auto& [sec, key, get] : order_) {
      if (sec != section) {
        out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
        section = sec;
      }
      out << key << " = " << get() << '\n';
    }
    return out.str();
  }

 private:
  using Key = std::pair<std::string, std::string>;

  static std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  }

  template <class T>
  void add(const std::string& sec, const std::string& key, T& ref) {
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
    if constexpr (std::is_same_v<T, bool>) {
      get = [&ref] { return std::string(ref ? "true" : "false"); };
      set = [&ref](const std::string& v) {
        if (v == "true" || v == "1") ref = true;
        else if (v == "false" || v == "0") ref = false;
        else throw std::invalid_argument(v);
      };
    } else if constexpr (std::is_same_v<T, std::string>) {
      get = [&ref] { return ref; };
      set = [&ref](const std::string& v) { ref = v; };
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      get = [&ref] {
        std::string s;
        for (const auto& f : ref) s += (s.empty() ? "" : ",") + f;
        return s;
      };
      set = [&ref](const std::string& v) {
        ref.clear();
        std::stringstream ss(v);
        for (std::string item; std::getline(ss, item, ',');) {
          item = CLI::detail::trim_copy(item);
          if (!item.empty()) ref.push_back(item);
        }
      };
    } else if constexpr (std::is_same_v<T, nn::Optimizer>) {
      get = [&ref] { return std::string(ref == nn::Optimizer::kAdam ? "adam" : "sgd"); };
      set = [&ref](const std::string& v) {
        if (v == "adam") ref = nn::Optimizer::kAdam;
        else if (v == "sgd") ref = nn::Optimizer::kSgd;
        else throw ValidationError("config: optimizer must be 'adam' or 'sgd'");
      };
    } else if constexpr (std::is_floating_point_v<T>) {
      get = [&ref] { return fmt(ref); };
      set = [&ref](const std::string& v) { ref = parse_number<double>(v); };
    } else {
      get = [&ref] { return std::to_string(ref); };
      set = [&ref](const std::string& v) { ref = parse_number<T>(v); };
    }
    setters_[{sec, key}] = set;
    order_.push_back({sec, key, get});
  }

  template <class T>
  static T parse_number(const std::string& v) {
    T out{};
    if (!CLI::detail::lexical_cast(v, out)) throw std::invalid_argument(v);
    return out;
  }

  struct Entry {
    std::string section, key;
    std::function<std::string()> get;
  };
  std::map<Key, std::function<void(const std::string&)>> setters_;
  std::vector<Entry> order_;
};

}  // namespace detail

/// Applies `[section]` / `key = value` lines on top of the defaults.
inline PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  detail::ConfigSchema schema(cfg);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    require(item.parents.size() == 1,
            "config: key '" + item.name + "' must sit inside exactly one [section]");
    std::string value;
    for (const auto& part : item.inputs) value += (value.empty() ? "" : ",") + part;
    schema.set(item.parents[0], item.name, value);
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config " + path);
  return parse_config(in);
}

inline std::string dump_config(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  return detail::ConfigSchema(copy).dump();
}

}  // namespace skf
