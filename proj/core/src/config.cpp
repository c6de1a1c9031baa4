#include "dga/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dga {

using nlohmann::json;

cost::LevelSpec ExperimentConfig::soi_spec() {
  cost::LevelSpec spec;
  spec.min_level = min_level;
  for (size_t l = 0; l + 1 < soi_edges.size(); ++l) {
    spec.soi.emplace_back(soi_edges[l], soi_edges[l + 1]);
  }
  return spec;
}

void ExperimentConfig::validate() const {
  auto one_of = [](const std::string& v, std::initializer_list<const char*> allowed,
                   const char* field) {
    for (const char* a : allowed) {
      if (v == a) return;
    }
    throw std::invalid_argument(std::string("config: bad value for ") + field + ": " + v);
  };
  one_of(overlap, {"sparse", "moderate", "crowded"}, "overlap");
  one_of(prior_mode, {"center_prior", "iou_threshold"}, "prior_mode");
  one_of(strategy, {"dyn_k_star", "dyn_k", "fix_k"}, "strategy");
  one_of(nms_mode, {"dg", "vanilla"}, "nms_mode");
  one_of(nms_variant, {"square", "linear", "sqrt"}, "nms_variant");
  if (!(th_pos > 0.0 && th_pos <= th_neg && th_neg <= 1.0)) {
    throw std::invalid_argument("config: need 0 < th_pos <= th_neg <= 1");
  }
  if (epsilon <= 0.0 || rho <= 0.0 || sigma <= 0.0 || gamma < 0.0) {
    throw std::invalid_argument("config: epsilon, rho, sigma must be > 0 and gamma >= 0");
  }
  if (gt_count < 1 || scene_count < 1 || center_prior_r < 1) {
    throw std::invalid_argument("config: counts must be >= 1");
  }
  if (soi_edges.size() != strides.size() + 1) {
    throw std::invalid_argument("config: soi_edges must have strides.size() + 1 entries");
  }
}

namespace {

json to_json_obj(const ExperimentConfig& c) {
  // Explicit ordered_json keeps snapshots byte-stable across runs.
  nlohmann::ordered_json j;
  j["schema_version"] = c.schema_version;
  j["image_width"] = c.image_width;
  j["image_height"] = c.image_height;
  j["gt_count"] = c.gt_count;
  j["min_size"] = c.min_size;
  j["max_size"] = c.max_size;
  j["overlap"] = c.overlap;
  j["scene_count"] = c.scene_count;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  j["min_level"] = c.min_level;
  j["strides"] = c.strides;
  j["soi_edges"] = c.soi_edges;
  j["prior_mode"] = c.prior_mode;
  j["center_prior_r"] = c.center_prior_r;
  j["candidate_iou_threshold"] = c.candidate_iou_threshold;
  j["gamma"] = c.gamma;
  j["use_level_cost"] = c.use_level_cost;
  j["score_cost"] = c.score_cost;
  j["epsilon"] = c.epsilon;
  j["rho"] = c.rho;
  j["max_iterations"] = c.max_iterations;
  j["tolerance"] = c.tolerance;
  j["th_pos"] = c.th_pos;
  j["th_neg"] = c.th_neg;
  j["strategy"] = c.strategy;
  j["fix_k"] = c.fix_k;
  j["d1_on"] = c.d1_on;
  j["d2_on"] = c.d2_on;
  j["plain_transport"] = c.plain_transport;
  j["gamma1"] = c.gamma1;
  j["gamma2"] = c.gamma2;
  j["nms_mode"] = c.nms_mode;
  j["nms_variant"] = c.nms_variant;
  j["sigma"] = c.sigma;
  j["vanilla_threshold"] = c.vanilla_threshold;
  j["det_score_threshold"] = c.det_score_threshold;
  j["bilinear_density"] = c.bilinear_density;
  j["output_dir"] = c.output_dir;
  return j;
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  return to_json_obj(*this).dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  get_if_present(j, "schema_version", c.schema_version);
  if (c.schema_version != 1) {
    throw std::invalid_argument("config: unsupported schema_version");
  }
  get_if_present(j, "image_width", c.image_width);
  get_if_present(j, "image_height", c.image_height);
  get_if_present(j, "gt_count", c.gt_count);
  get_if_present(j, "min_size", c.min_size);
  get_if_present(j, "max_size", c.max_size);
  get_if_present(j, "overlap", c.overlap);
  get_if_present(j, "scene_count", c.scene_count);
  get_if_present(j, "noise", c.noise);
  get_if_present(j, "seed", c.seed);
  get_if_present(j, "min_level", c.min_level);
  get_if_present(j, "strides", c.strides);
  get_if_present(j, "soi_edges", c.soi_edges);
  get_if_present(j, "prior_mode", c.prior_mode);
  get_if_present(j, "center_prior_r", c.center_prior_r);
  get_if_present(j, "candidate_iou_threshold", c.candidate_iou_threshold);
  get_if_present(j, "gamma", c.gamma);
  get_if_present(j, "use_level_cost", c.use_level_cost);
  get_if_present(j, "score_cost", c.score_cost);
  get_if_present(j, "epsilon", c.epsilon);
  get_if_present(j, "rho", c.rho);
  get_if_present(j, "max_iterations", c.max_iterations);
  get_if_present(j, "tolerance", c.tolerance);
  get_if_present(j, "th_pos", c.th_pos);
  get_if_present(j, "th_neg", c.th_neg);
  get_if_present(j, "strategy", c.strategy);
  get_if_present(j, "fix_k", c.fix_k);
  get_if_present(j, "d1_on", c.d1_on);
  get_if_present(j, "d2_on", c.d2_on);
  get_if_present(j, "plain_transport", c.plain_transport);
  get_if_present(j, "gamma1", c.gamma1);
  get_if_present(j, "gamma2", c.gamma2);
  get_if_present(j, "nms_mode", c.nms_mode);
  get_if_present(j, "nms_variant", c.nms_variant);
  get_if_present(j, "sigma", c.sigma);
  get_if_present(j, "vanilla_threshold", c.vanilla_threshold);
  get_if_present(j, "det_score_threshold", c.det_score_threshold);
  get_if_present(j, "bilinear_density", c.bilinear_density);
  get_if_present(j, "output_dir", c.output_dir);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void apply_override(ExperimentConfig& config, const std::string& axis,
                    const std::string& value) {
  if (axis == "th") {
    const auto slash = value.find('/');
    if (slash == std::string::npos) {
      throw std::invalid_argument("config: th axis expects th_pos/th_neg");
    }
    config.th_pos = std::stod(value.substr(0, slash));
    config.th_neg = std::stod(value.substr(slash + 1));
  } else if (axis == "th_pos") {
    config.th_pos = std::stod(value);
  } else if (axis == "th_neg") {
    config.th_neg = std::stod(value);
  } else if (axis == "epsilon") {
    config.epsilon = std::stod(value);
  } else if (axis == "rho") {
    config.rho = std::stod(value);
  } else if (axis == "gamma") {
    config.gamma = std::stod(value);
  } else if (axis == "gamma1") {
    config.gamma1 = std::stod(value);
  } else if (axis == "gamma2") {
    config.gamma2 = std::stod(value);
  } else if (axis == "sigma") {
    config.sigma = std::stod(value);
  } else if (axis == "r") {
    config.center_prior_r = std::stoi(value);
  } else if (axis == "fix_k") {
    config.fix_k = std::stoi(value);
  } else if (axis == "strategy") {
    config.strategy = value;
  } else if (axis == "nms_mode") {
    config.nms_mode = value;
  } else if (axis == "nms_variant") {
    config.nms_variant = value;
  } else if (axis == "vanilla_threshold") {
    config.vanilla_threshold = std::stod(value);
  } else if (axis == "overlap") {
    config.overlap = value;
  } else if (axis == "noise") {
    config.noise = std::stod(value);
  } else if (axis == "seed") {
    config.seed = std::stoull(value);
  } else if (axis == "gt_count") {
    config.gt_count = std::stoi(value);
  } else if (axis == "scene_count") {
    config.scene_count = std::stoi(value);
  } else if (axis == "prior_mode") {
    config.prior_mode = value;
  } else if (axis == "candidate_iou_threshold") {
    config.candidate_iou_threshold = std::stod(value);
  } else if (axis == "det_score_threshold") {
    config.det_score_threshold = std::stod(value);
  } else if (axis == "use_level_cost") {
    config.use_level_cost = value == "true" || value == "1";
  } else if (axis == "d1_on") {
    config.d1_on = value == "true" || value == "1";
  } else if (axis == "d2_on") {
    config.d2_on = value == "true" || value == "1";
  } else if (axis == "plain_transport") {
    config.plain_transport = value == "true" || value == "1";
  } else if (axis == "score_cost") {
    config.score_cost = value == "true" || value == "1";
  } else {
    throw std::invalid_argument("config: unknown axis '" + axis + "'");
  }
  config.validate();
}

}  // namespace dga
