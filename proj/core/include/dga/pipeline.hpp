#pragma once

#include <string>
#include <vector>

#include "dga/assignment.hpp"
#include "dga/config.hpp"
#include "dga/dg_nms.hpp"
#include "dga/metrics.hpp"
#include "dga/scene_sim.hpp"

namespace dga::pipeline {

/// Everything produced for one scene: simulate -> cost -> UOT -> assign ->
/// NMS, kept around for dumps and diagnostics.
struct SceneArtifacts {
  sim::Scene scene;
  std::vector<int> anchor_levels;
  assign::AssignmentResult assignment;
  Eigen::VectorXd density;  // reconstructed per-anchor density (plan column sums)
  std::vector<nms::Detection> kept;
  assign::UotLossBreakdown uot;
  assign::DetectionLoss loss;
  bool solver_converged = false;
  bool degenerate = false;  // some GT had no candidate anchors
};

struct PipelineResult {
  metrics::EvalReport report;
  double mean_kept = 0.0;
  double mean_uot_loss = 0.0;
  double mean_detection_loss = 0.0;
  int scene_count = 0;
  int degenerate_scenes = 0;
};

/// Run one scene end-to-end with the scene/prediction seeds derived from
/// (config.seed, scene_index).
SceneArtifacts run_scene(const ExperimentConfig& config, int scene_index);

/// Deterministic end-to-end run over config.scene_count scenes. When
/// config.output_dir is set, writes the config snapshot, assignment dump,
/// density map, kept detections, and the evaluation report there.
PipelineResult run_pipeline(const ExperimentConfig& config);

/// One pipeline run per value along a named config axis; returns a CSV table
/// with one aggregated row per value. Values run on worker threads.
std::string run_sweep(const ExperimentConfig& config, const std::string& axis,
                      const std::vector<std::string>& values);

// File schemas (all versioned JSON / JSON-lines / CSV).
std::string scene_to_json(const sim::Scene& scene);
sim::Scene scene_from_json(const std::string& text);
void write_scene(const sim::Scene& scene, const std::string& path);
sim::Scene read_scene(const std::string& path);

std::string detections_to_jsonl(const std::vector<nms::Detection>& dets);
std::vector<nms::Detection> detections_from_jsonl(const std::string& text);
void write_detections(const std::vector<nms::Detection>& dets, const std::string& path);
std::vector<nms::Detection> read_detections(const std::string& path);

std::string assignment_to_jsonl(const assign::AssignmentResult& assignment,
                                const std::vector<int>& anchor_levels);

std::string report_to_json(const metrics::EvalReport& report);
std::string report_csv_header();
std::string report_csv_header_fields();
std::string report_csv_row(const metrics::EvalReport& report);
std::string report_csv_fields(const metrics::EvalReport& report);

void write_text(const std::string& text, const std::string& path);
std::string read_text(const std::string& path);

}  // namespace dga::pipeline
