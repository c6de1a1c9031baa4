// Experiment driver: simulate | assign | nms | evaluate | pipeline | sweep.
// Exits 0 on success, nonzero with a stage-tagged message otherwise.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dga/config.hpp"
#include "dga/pipeline.hpp"
#include "dga/transport_cost.hpp"
#include "dga/uot.hpp"

namespace {

using dga::ExperimentConfig;
namespace pl = dga::pipeline;

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs, applied after the file

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{}
                                               : ExperimentConfig::load(config_path);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("override must be key=value: " + kv);
      }
      dga::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON config file");
  cmd->add_option("-s,--set", args.overrides,
                  "config override key=value (repeatable, wins over the file)");
}

int cmd_simulate(const ConfigArgs& args, const std::string& out_path) {
  const ExperimentConfig cfg = args.resolve();
  const pl::SceneArtifacts art = pl::run_scene(cfg, 0);
  pl::write_scene(art.scene, out_path);
  std::cout << "wrote " << out_path << " (" << art.scene.gts.size() << " GTs, "
            << art.scene.crowd_pairs << " crowd pairs)\n";
  return 0;
}

int cmd_assign(const ConfigArgs& args, const std::string& out_path) {
  const ExperimentConfig cfg = args.resolve();
  const pl::SceneArtifacts art = pl::run_scene(cfg, 0);
  pl::write_text(pl::assignment_to_jsonl(art.assignment, art.anchor_levels), out_path);
  std::cout << "wrote " << out_path << " (" << art.assignment.count(dga::assign::Label::kPositive)
            << " positives, " << art.assignment.count(dga::assign::Label::kIgnore)
            << " ignores";
  if (!art.assignment.unassigned_gts.empty()) {
    std::cout << ", " << art.assignment.unassigned_gts.size() << " unassigned GTs";
  }
  std::cout << ")\n";
  return 0;
}

int cmd_nms(const ConfigArgs& args, const std::string& in_path,
            const std::string& out_path) {
  const ExperimentConfig cfg = args.resolve();
  const std::vector<dga::nms::Detection> dets = pl::read_detections(in_path);
  std::vector<dga::nms::Detection> kept;
  if (cfg.nms_mode == "dg") {
    dga::nms::ScaleVariant v = dga::nms::ScaleVariant::kLinear;
    if (cfg.nms_variant == "square") v = dga::nms::ScaleVariant::kSquare;
    if (cfg.nms_variant == "sqrt") v = dga::nms::ScaleVariant::kSqrt;
    kept = dga::nms::dg_nms(dets, cfg.sigma, v);
  } else {
    kept = dga::nms::vanilla_nms(dets, cfg.vanilla_threshold);
  }
  pl::write_detections(kept, out_path);
  std::cout << "kept " << kept.size() << " of " << dets.size() << " detections\n";
  return 0;
}

int cmd_evaluate(const std::string& dets_path, const std::string& scene_path,
                 const std::string& out_path) {
  const dga::sim::Scene scene = pl::read_scene(scene_path);
  const std::vector<dga::nms::Detection> dets = pl::read_detections(dets_path);
  dga::metrics::ImageEval img;
  for (const auto& d : dets) img.detections.push_back({d.box, d.score});
  img.gts = scene.gts;
  img.gt_crowd = scene.crowd_flags();
  const dga::metrics::EvalReport report = dga::metrics::evaluate({img});
  const std::string text = pl::report_to_json(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    pl::write_text(text, out_path);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_pipeline(const ConfigArgs& args) {
  const ExperimentConfig cfg = args.resolve();
  const pl::PipelineResult result = pl::run_pipeline(cfg);
  std::cout << pl::report_to_json(result.report);
  if (!cfg.output_dir.empty()) std::cout << "artifacts in " << cfg.output_dir << "\n";
  return 0;
}

int cmd_sweep(const ConfigArgs& args, const std::string& axis,
              const std::vector<std::string>& values, const std::string& out_path) {
  const ExperimentConfig cfg = args.resolve();
  const std::string csv = pl::run_sweep(cfg, axis, values);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    pl::write_text(csv, out_path);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-guided anchor assignment and NMS experiment driver"};
  app.require_subcommand(1);

  ConfigArgs sim_args, assign_args, nms_args, pipe_args, sweep_args;
  std::string sim_out = "scene.json";
  std::string assign_out = "assignments.jsonl";
  std::string nms_in, nms_out = "kept.jsonl";
  std::string eval_dets, eval_scene, eval_out;
  std::string sweep_axis, sweep_out;
  std::vector<std::string> sweep_values;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scene file");
  add_config_options(sim, sim_args);
  sim->add_option("-o,--out", sim_out, "output scene JSON");

  auto* asg = app.add_subcommand("assign", "Run assignment on a generated scene");
  add_config_options(asg, assign_args);
  asg->add_option("-o,--out", assign_out, "output assignment JSON-lines");

  auto* nms = app.add_subcommand("nms", "Suppress a detection file");
  add_config_options(nms, nms_args);
  nms->add_option("-i,--in", nms_in, "input detections JSON-lines")->required();
  nms->add_option("-o,--out", nms_out, "output detections JSON-lines");

  auto* eval = app.add_subcommand("evaluate", "Score detections against a scene");
  eval->add_option("-d,--detections", eval_dets, "detections JSON-lines")->required();
  eval->add_option("-g,--scene", eval_scene, "scene JSON")->required();
  eval->add_option("-o,--out", eval_out, "report JSON (stdout when omitted)");

  auto* pipe = app.add_subcommand("pipeline", "Full simulate->assign->NMS->evaluate run");
  add_config_options(pipe, pipe_args);

  auto* sweep = app.add_subcommand("sweep", "Run the pipeline along one config axis");
  add_config_options(sweep, sweep_args);
  sweep->add_option("-a,--axis", sweep_axis, "config field to sweep")->required();
  sweep->add_option("-v,--values", sweep_values, "values for the axis")->required();
  sweep->add_option("-o,--out", sweep_out, "CSV output (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (sim->parsed()) return cmd_simulate(sim_args, sim_out);
    if (asg->parsed()) return cmd_assign(assign_args, assign_out);
    if (nms->parsed()) return cmd_nms(nms_args, nms_in, nms_out);
    if (eval->parsed()) return cmd_evaluate(eval_dets, eval_scene, eval_out);
    if (pipe->parsed()) return cmd_pipeline(pipe_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_axis, sweep_values, sweep_out);
  } catch (const std::exception& e) {
    std::cerr << "[" << stage << "] error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
