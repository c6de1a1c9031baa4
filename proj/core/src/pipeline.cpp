#include "dga/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dga/transport_cost.hpp"
#include "dga/uot.hpp"

namespace dga::pipeline {

using nlohmann::json;

namespace {

sim::OverlapLevel overlap_level(const std::string& name) {
  if (name == "sparse") return sim::OverlapLevel::kSparse;
  if (name == "moderate") return sim::OverlapLevel::kModerate;
  return sim::OverlapLevel::kCrowded;
}

nms::ScaleVariant scale_variant(const std::string& name) {
  if (name == "square") return nms::ScaleVariant::kSquare;
  if (name == "sqrt") return nms::ScaleVariant::kSqrt;
  return nms::ScaleVariant::kLinear;
}

assign::Strategy strategy(const std::string& name) {
  if (name == "fix_k") return assign::Strategy::kFixK;
  if (name == "dyn_k") return assign::Strategy::kDynK;
  return assign::Strategy::kDynKStar;
}

// Bilinear sample of a single level's density grid at an image point.
double sample_level_density(const Eigen::VectorXd& density,
                            const sim::AnchorGrid& grid, int level, double x,
                            double y) {
  const int stride = grid.strides[static_cast<size_t>(level - grid.min_level)];
  // Locate the level's slab in the flattened anchor array.
  size_t offset = 0;
  for (int l = grid.min_level; l < level; ++l) {
    const double s = grid.strides[static_cast<size_t>(l - grid.min_level)];
    // Grid extent is recoverable from the anchors themselves, but the
    // anchors are laid out level-major so counting is enough.
    (void)s;
    while (offset < grid.anchors.size() && grid.anchors[offset].level == l) ++offset;
  }
  size_t end = offset;
  while (end < grid.anchors.size() && grid.anchors[end].level == level) ++end;
  if (end == offset) return 0.0;
  // Recover nx from the row pattern: anchors are x-major.
  size_t nx = 1;
  while (offset + nx < end && grid.anchors[offset + nx].cy == grid.anchors[offset].cy) ++nx;
  const size_t ny = (end - offset) / nx;

  const double gx = x / stride - 0.5;
  const double gy = y / stride - 0.5;
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const double fx = gx - x0;
  const double fy = gy - y0;
  auto at = [&](int ix, int iy) {
    ix = std::clamp(ix, 0, static_cast<int>(nx) - 1);
    iy = std::clamp(iy, 0, static_cast<int>(ny) - 1);
    return density[static_cast<Eigen::Index>(offset + static_cast<size_t>(iy) * nx +
                                             static_cast<size_t>(ix))];
  };
  return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
         (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
}

}  // namespace

SceneArtifacts run_scene(const ExperimentConfig& config, int scene_index) {
  config.validate();
  ExperimentConfig cfg = config;

  sim::SceneConfig scfg;
  scfg.image_width = cfg.image_width;
  scfg.image_height = cfg.image_height;
  scfg.gt_count = cfg.gt_count;
  scfg.min_size = cfg.min_size;
  scfg.max_size = cfg.max_size;
  scfg.overlap = overlap_level(cfg.overlap);
  scfg.seed = cfg.seed + 7919ULL * static_cast<uint64_t>(scene_index);

  SceneArtifacts art;
  art.scene = sim::generate_scene(scfg);

  const sim::AnchorGrid grid =
      sim::build_anchor_grid(cfg.image_width, cfg.image_height, cfg.min_level, cfg.strides);
  art.anchor_levels = grid.levels();

  const std::vector<sim::Prediction> preds =
      sim::simulate_predictions(art.scene, grid, cfg.noise, scfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<BBox> pred_boxes;
  std::vector<double> scores;
  pred_boxes.reserve(preds.size());
  for (const sim::Prediction& p : preds) {
    pred_boxes.push_back(p.box);
    scores.push_back(p.score);
  }

  // Transport cost: gamma * overlap-aware + level cost, candidate-masked.
  const Eigen::MatrixXd phi = pairwise_iou(art.scene.gts, pred_boxes);
  const Eigen::MatrixXd psi = pairwise_iou(art.scene.gts, art.scene.gts);
  Eigen::MatrixXd c = cost::overlap_aware_cost(phi, psi) * cfg.gamma;
  if (cfg.use_level_cost) {
    cost::LevelSpec spec = cfg.soi_spec();
    std::vector<std::vector<int>> gt_levels;
    gt_levels.reserve(art.scene.gts.size());
    for (const BBox& gt : art.scene.gts) {
      gt_levels.push_back(cost::preferred_levels(gt, spec));
    }
    c += cost::level_cost(gt_levels, art.anchor_levels);
  }
  if (cfg.score_cost) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      c.col(j).array() += -std::log(std::max(scores[static_cast<size_t>(j)], 1e-7));
    }
  }

  const cost::CandidateMask candidates =
      cfg.prior_mode == "center_prior"
          ? cost::center_prior_candidates(art.scene.gts, grid.centers(),
                                          art.anchor_levels, cfg.center_prior_r)
          : cost::iou_threshold_candidates(art.scene.gts, grid.boxes(),
                                           cfg.candidate_iou_threshold);
  art.degenerate = candidates.degenerate();

  // Anchor mass: simulated prediction confidence on candidate anchors,
  // scaled so the total mass matches the object count (the trained network
  // would predict this density map directly).
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index m = static_cast<Eigen::Index>(art.scene.gts.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (candidates.mask.col(j).any()) b[j] = scores[static_cast<size_t>(j)];
  }
  const double b_sum = b.sum();
  if (b_sum > 0.0) b *= static_cast<double>(m) / b_sum;

  uot::TransportProblem problem;
  problem.cost = cost::apply_mask(c, candidates);
  problem.a = Eigen::VectorXd::Ones(m);
  problem.b = b;
  problem.epsilon = cfg.epsilon;
  problem.rho = cfg.rho;

  uot::SolveOptions sopts;
  sopts.max_iterations = cfg.max_iterations;
  sopts.tolerance = cfg.tolerance;
  const uot::TransportPlan plan = uot::solve(problem, sopts);
  art.solver_converged = plan.converged;

  assign::DecodeOptions dopts;
  dopts.strategy = strategy(cfg.strategy);
  dopts.th_pos = cfg.th_pos;
  dopts.th_neg = cfg.th_neg;
  dopts.fix_k = cfg.fix_k;
  if (dopts.strategy == assign::Strategy::kDynK) dopts.dyn_k_iou = phi;
  art.assignment = assign::compute_weights(plan, assign::decode_assignment(plan, dopts));

  art.uot = assign::uot_loss(plan, problem, {}, cfg.plain_transport);
  if (!cfg.d1_on) {
    art.uot.total -= art.uot.d1_focal;
    art.uot.d1_focal = 0.0;
  }
  if (!cfg.d2_on) {
    art.uot.total -= art.uot.d2_l2;
    art.uot.d2_l2 = 0.0;
  }

  assign::DetectionLossOptions lopts;
  lopts.gamma1 = cfg.gamma1;
  lopts.gamma2 = cfg.gamma2;
  art.loss = assign::detection_loss(art.assignment, scores, pred_boxes,
                                    art.scene.gts, art.uot.total, lopts);

  art.density = sim::density_from_plan(plan);

  // Proposals entering NMS: every anchor above the score floor, carrying the
  // density value at its own location (or bilinearly sampled at the box center).
  std::vector<nms::Detection> proposals;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (scores[static_cast<size_t>(j)] < cfg.det_score_threshold) continue;
    double d = art.density[j];
    if (cfg.bilinear_density) {
      d = sample_level_density(art.density, grid, grid.anchors[static_cast<size_t>(j)].level,
                               pred_boxes[static_cast<size_t>(j)].cx(),
                               pred_boxes[static_cast<size_t>(j)].cy());
    }
    proposals.push_back(nms::Detection{pred_boxes[static_cast<size_t>(j)],
                                       scores[static_cast<size_t>(j)], d});
  }
  art.kept = cfg.nms_mode == "dg"
                 ? nms::dg_nms(proposals, cfg.sigma, scale_variant(cfg.nms_variant))
                 : nms::vanilla_nms(proposals, cfg.vanilla_threshold);
  return art;
}

PipelineResult run_pipeline(const ExperimentConfig& config) {
  config.validate();
  PipelineResult result;
  result.scene_count = config.scene_count;

  std::vector<metrics::ImageEval> images;
  std::string assignment_dump, detections_dump, density_dump;
  double kept_sum = 0.0, uot_sum = 0.0, loss_sum = 0.0;

  for (int s = 0; s < config.scene_count; ++s) {
    SceneArtifacts art;
    try {
      art = run_scene(config, s);
    } catch (const std::exception& e) {
      throw std::runtime_error("pipeline stage failed at scene " + std::to_string(s) +
                               ": " + e.what());
    }
    metrics::ImageEval img;
    for (const nms::Detection& d : art.kept) {
      img.detections.push_back(metrics::ScoredBox{d.box, d.score});
    }
    img.gts = art.scene.gts;
    img.gt_crowd = art.scene.crowd_flags();
    images.push_back(std::move(img));

    kept_sum += static_cast<double>(art.kept.size());
    uot_sum += art.uot.total;
    loss_sum += art.loss.total;
    if (art.degenerate) ++result.degenerate_scenes;

    if (!config.output_dir.empty()) {
      assignment_dump += assignment_to_jsonl(art.assignment, art.anchor_levels);
      detections_dump += detections_to_jsonl(art.kept);
      json dens = json::array();
      for (Eigen::Index j = 0; j < art.density.size(); ++j) dens.push_back(art.density[j]);
      density_dump += json{{"scene", s}, {"density", dens}}.dump() + "\n";
    }
  }

  result.report = metrics::evaluate(images);
  result.mean_kept = kept_sum / config.scene_count;
  result.mean_uot_loss = uot_sum / config.scene_count;
  result.mean_detection_loss = loss_sum / config.scene_count;

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path dir(config.output_dir);
    write_text(config.to_json(), (dir / "config.json").string());
    write_text(assignment_dump, (dir / "assignments.jsonl").string());
    write_text(detections_dump, (dir / "detections.jsonl").string());
    write_text(density_dump, (dir / "densities.jsonl").string());
    write_text(report_to_json(result.report), (dir / "report.json").string());
    write_text(report_csv_header() + report_csv_row(result.report),
               (dir / "metrics.csv").string());
  }
  return result;
}

std::string run_sweep(const ExperimentConfig& config, const std::string& axis,
                      const std::vector<std::string>& values) {
  // Validate every override up front so a bad value fails before any work.
  for (const std::string& v : values) {
    ExperimentConfig probe = config;
    probe.output_dir.clear();
    apply_override(probe, axis, v);
  }

  std::vector<std::future<PipelineResult>> futures;
  futures.reserve(values.size());
  for (const std::string& v : values) {
    ExperimentConfig run = config;
    run.output_dir.clear();  // sweep rows aggregate in memory only
    apply_override(run, axis, v);
    futures.push_back(std::async(std::launch::async, run_pipeline, run));
  }

  std::ostringstream csv;
  csv << "axis,value," << report_csv_header_fields() << ",mean_kept\n";
  for (size_t i = 0; i < values.size(); ++i) {
    const PipelineResult r = futures[i].get();
    csv << axis << ',' << values[i] << ',' << report_csv_fields(r.report) << ','
        << r.mean_kept << '\n';
  }
  return csv.str();
}

// ---- serialization ----

std::string scene_to_json(const sim::Scene& scene) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["image_width"] = scene.image_width;
  j["image_height"] = scene.image_height;
  j["seed"] = scene.seed;
  j["crowd_pairs"] = scene.crowd_pairs;
  json gts = json::array();
  for (const BBox& b : scene.gts) gts.push_back({b.x1, b.y1, b.x2, b.y2});
  j["gts"] = gts;
  return j.dump(2) + "\n";
}

sim::Scene scene_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema_version").get<int>() != 1) {
    throw std::invalid_argument("scene: unsupported schema_version");
  }
  sim::Scene scene;
  scene.image_width = j.at("image_width").get<double>();
  scene.image_height = j.at("image_height").get<double>();
  scene.seed = j.at("seed").get<uint64_t>();
  scene.crowd_pairs = j.at("crowd_pairs").get<int>();
  for (const auto& g : j.at("gts")) {
    scene.gts.emplace_back(g[0].get<double>(), g[1].get<double>(),
                           g[2].get<double>(), g[3].get<double>());
  }
  return scene;
}

void write_scene(const sim::Scene& scene, const std::string& path) {
  write_text(scene_to_json(scene), path);
}

sim::Scene read_scene(const std::string& path) { return scene_from_json(read_text(path)); }

std::string detections_to_jsonl(const std::vector<nms::Detection>& dets) {
  std::string out;
  for (const nms::Detection& d : dets) {
    nlohmann::ordered_json j;
    j["box"] = {d.box.x1, d.box.y1, d.box.x2, d.box.y2};
    j["score"] = d.score;
    j["density"] = d.density;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<nms::Detection> detections_from_jsonl(const std::string& text) {
  std::vector<nms::Detection> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const auto& b = j.at("box");
    out.push_back(nms::Detection{BBox(b[0].get<double>(), b[1].get<double>(),
                                      b[2].get<double>(), b[3].get<double>()),
                                 j.at("score").get<double>(),
                                 j.at("density").get<double>()});
  }
  return out;
}

void write_detections(const std::vector<nms::Detection>& dets, const std::string& path) {
  write_text(detections_to_jsonl(dets), path);
}

std::vector<nms::Detection> read_detections(const std::string& path) {
  return detections_from_jsonl(read_text(path));
}

std::string assignment_to_jsonl(const assign::AssignmentResult& assignment,
                                const std::vector<int>& anchor_levels) {
  // Negatives dominate the anchor set; only positives and ignores are dumped.
  std::string out;
  for (size_t j = 0; j < assignment.labels.size(); ++j) {
    if (assignment.labels[j] == assign::Label::kNegative) continue;
    nlohmann::ordered_json rec;
    rec["anchor"] = j;
    rec["level"] = j < anchor_levels.size() ? anchor_levels[j] : -1;
    rec["label"] = assignment.labels[j] == assign::Label::kPositive ? "positive" : "ignore";
    rec["matched_gt"] = assignment.matched_gt[j];
    rec["weight"] = assignment.weights[j];
    out += rec.dump() + "\n";
  }
  return out;
}

std::string report_to_json(const metrics::EvalReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["ap50"] = r.ap50;
  j["mr"] = r.mr;
  j["ji"] = r.ji;
  j["recall_sparse"] = r.recall_sparse;
  j["recall_crowd"] = r.recall_crowd;
  j["true_positives"] = r.true_positives;
  j["false_positives"] = r.false_positives;
  j["gt_count"] = r.gt_count;
  return j.dump(2) + "\n";
}

std::string report_csv_header_fields() {
  return "ap50,mr,ji,recall_sparse,recall_crowd,tp,fp,gt_count";
}

std::string report_csv_fields(const metrics::EvalReport& r) {
  std::ostringstream ss;
  ss << r.ap50 << ',' << r.mr << ',' << r.ji << ',' << r.recall_sparse << ','
     << r.recall_crowd << ',' << r.true_positives << ',' << r.false_positives << ','
     << r.gt_count;
  return ss.str();
}

std::string report_csv_header() { return report_csv_header_fields() + "\n"; }

std::string report_csv_row(const metrics::EvalReport& r) {
  return report_csv_fields(r) + "\n";
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dga::pipeline
