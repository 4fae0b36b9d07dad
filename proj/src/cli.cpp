#include "courtfusion/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "courtfusion/errors.hpp"
#include "courtfusion/io.hpp"
#include "courtfusion/report.hpp"
#include "courtfusion/sim.hpp"

namespace courtfusion::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kConfigEnv = "COURTFUSION_CONFIG";

struct TunableFlags {
  std::optional<double> gate_radius;
  std::optional<double> match_threshold;
  std::optional<double> noise_sigma;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "RNG seed (overrides the scenario)");
    cmd->add_option("--gate-radius", gate_radius, "association gate in meters")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--match-threshold", match_threshold, "ReID cosine threshold in (-1, 1)")
        ->check(CLI::Range(-0.999999, 0.999999));
    cmd->add_option("--noise-sigma", noise_sigma, "detection noise in meters")
        ->check(CLI::NonNegativeNumber);
  }

  sim::Overrides to_overrides() const {
    sim::Overrides o;
    o.gate_radius = gate_radius;
    o.match_threshold = match_threshold;
    o.noise_sigma = noise_sigma;
    o.seed = seed;
    return o;
  }
};

// Scenario file < COURTFUSION_CONFIG < command line.
sim::ScenarioSpec load_scenario(const std::string& path, const TunableFlags& flags) {
  sim::ScenarioSpec spec = io::scenario_from_json(io::read_json(path));
  sim::Overrides o;
  if (const char* cfg = std::getenv(kConfigEnv); cfg != nullptr && *cfg != '\0')
    o = io::overrides_from_json(io::read_json(cfg));
  o.merge(flags.to_overrides());
  sim::apply_overrides(spec, o);
  spec.validate();
  if (!(spec.tracker.gate_radius > 0.0)) throw InputError("gate_radius must be positive");
  if (!(spec.registry.match_threshold > -1.0 && spec.registry.match_threshold < 1.0))
    throw InputError("match_threshold must lie in (-1, 1)");
  return spec;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    io::write_text(path, text);
}

json evaluation_json(const sim::ScenarioSpec& spec, sim::PipelineMode mode, const sim::EvalReport& r) {
  json j = report::eval_report_to_json(r);
  j["scenario"] = spec.name;
  j["mode"] = mode == sim::PipelineMode::fused ? "fused" : "rear_only";
  j["seed"] = spec.seed;
  j["rng"] = sim::Rng::kAlgorithm;
  return j;
}

int cmd_calibrate(const std::string& corners, const std::string& out_path, std::ostream& out,
                  std::ostream& err) {
  const auto pair = io::corners_from_json(io::read_json(corners));
  const auto cal = geometry::calibrate(pair.image_corners, pair.world_corners);
  emit(out_path, io::calibration_to_json(cal).dump(2) + "\n", out);
  std::ostringstream msg;
  msg << "max corner reprojection error: " << cal.max_reprojection_error() << " m\n";
  (out_path.empty() || out_path == "-" ? err : out) << msg.str();
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"courtfusion: two-camera court player tracking and re-identification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // calibrate
  std::string corners_path, out_path;
  auto* calibrate = app.add_subcommand("calibrate", "compute homographies from four corner pairs");
  calibrate->add_option("--corners", corners_path, "corner JSON")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", out_path, "calibration JSON (default stdout)");

  // simulate
  std::string scenario_path;
  TunableFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "render synthetic two-view frames");
  simulate->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_path, "frames file, one JSON object per line (default stdout)");
  sim_flags.attach(simulate);

  // track
  TunableFlags track_flags;
  std::string frames_path;
  bool with_features = false;
  bool rear_only = false;
  auto* track = app.add_subcommand("track", "run tracking and ReID, write trajectories and bindings");
  track->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  track->add_option("--frames", frames_path, "pre-rendered frames file from `simulate`")
      ->check(CLI::ExistingFile);
  track->add_option("--out", out_path, "output directory")->required();
  track->add_flag("--with-features", with_features, "include feature vectors in registry.json");
  track->add_flag("--rear-only", rear_only, "ablation: rear camera only");
  track_flags.attach(track);

  // evaluate
  TunableFlags eval_flags;
  int seeds = 1;
  bool strict = false;
  auto* evaluate = app.add_subcommand("evaluate", "score the pipeline against ground truth");
  evaluate->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--seeds", seeds, "number of consecutive seeds to run")->check(CLI::Range(1, 100000));
  evaluate->add_option("--out", out_path, "report JSON (default stdout)");
  evaluate->add_flag("--strict", strict, "exit 1 unless every run has zero id switches");
  evaluate->add_flag("--rear-only", rear_only, "ablation: rear camera only");
  eval_flags.attach(evaluate);

  // plot
  std::string trajectories_path, bindings_path;
  std::optional<std::string> plot_scenario;
  auto* plot = app.add_subcommand("plot", "draw trajectories on the court diagram (SVG)");
  plot->add_option("--trajectories", trajectories_path, "trajectory CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--bindings", bindings_path, "binding CSV; colors by player id")->check(CLI::ExistingFile);
  plot->add_option("--scenario", plot_scenario, "scenario JSON supplying court dimensions")
      ->check(CLI::ExistingFile);
  plot->add_option("--out", out_path, "SVG file (default stdout)");

  // detect
  std::string image_path, model_path;
  int stride = 8;
  double nms_iou = 0.5;
  auto* detect = app.add_subcommand("detect", "HOG + linear SVM sliding-window detection on a PGM");
  detect->add_option("--image", image_path, "binary PGM image")->required()->check(CLI::ExistingFile);
  detect->add_option("--model", model_path, "SVM model JSON")->required()->check(CLI::ExistingFile);
  detect->add_option("--stride", stride, "window stride in pixels")->check(CLI::PositiveNumber);
  detect->add_option("--nms-iou", nms_iou, "NMS IoU threshold")->check(CLI::Range(0.0, 0.999999));
  detect->add_option("--out", out_path, "detections JSON (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*calibrate) return cmd_calibrate(corners_path, out_path, out, err);

    if (*simulate) {
      const auto spec = load_scenario(scenario_path, sim_flags);
      std::ostringstream os;
      io::write_frames(os, sim::render_all(spec));
      emit(out_path, os.str(), out);
      return kSuccess;
    }

    if (*track) {
      const auto spec = load_scenario(scenario_path, track_flags);
      const auto mode = rear_only ? sim::PipelineMode::rear_only : sim::PipelineMode::fused;
      sim::PipelineResult result;
      if (!frames_path.empty()) {
        std::ifstream in(frames_path, std::ios::binary);
        result = sim::run_pipeline(spec, io::read_frames(in), mode);
      } else {
        result = sim::run_pipeline(spec, mode);
      }
      fs::create_directories(out_path);
      std::ostringstream traj, bind;
      report::write_trajectories_csv(traj, result.trajectories);
      report::write_bindings_csv(bind, result.bindings);
      io::write_text(fs::path(out_path) / "trajectories.csv", traj.str());
      io::write_text(fs::path(out_path) / "bindings.csv", bind.str());
      io::write_text(fs::path(out_path) / "registry.json",
                     report::registry_to_json(result.registry, with_features).dump(2) + "\n");
      return kSuccess;
    }

    if (*evaluate) {
      const auto base = load_scenario(scenario_path, eval_flags);
      const auto mode = rear_only ? sim::PipelineMode::rear_only : sim::PipelineMode::fused;
      std::vector<std::future<std::pair<sim::ScenarioSpec, sim::EvalReport>>> runs;
      for (int i = 0; i < seeds; ++i) {
        sim::ScenarioSpec spec = base;
        spec.seed = base.seed + static_cast<std::uint64_t>(i);
        runs.push_back(std::async(std::launch::async, [spec, mode]() {
          return std::make_pair(spec, sim::run_pipeline(spec, mode).report);
        }));
      }
      bool all_clean = true;
      json doc;
      if (seeds == 1) {
        const auto [spec, r] = runs.front().get();
        all_clean = r.id_switches == 0;
        doc = evaluation_json(spec, mode, r);
      } else {
        json arr = json::array();
        std::int64_t switches = 0, failures = 0;
        double rmse = 0.0, correct = 0.0;
        for (auto& f : runs) {  // seed order
          const auto [spec, r] = f.get();
          all_clean = all_clean && r.id_switches == 0;
          switches += r.id_switches;
          failures += r.reid_failures;
          rmse += r.trajectory_rmse;
          correct += r.frames_fully_correct;
          arr.push_back(evaluation_json(spec, mode, r));
        }
        doc = {{"scenario", base.name},
               {"mode", mode == sim::PipelineMode::fused ? "fused" : "rear_only"},
               {"rng", sim::Rng::kAlgorithm},
               {"runs", arr},
               {"aggregate",
                {{"seeds", seeds},
                 {"id_switches", switches},
                 {"reid_failures", failures},
                 {"mean_trajectory_rmse", rmse / seeds},
                 {"mean_frames_fully_correct", correct / seeds}}}};
      }
      emit(out_path, doc.dump(2) + "\n", out);
      return strict && !all_clean ? kStrictFailure : kSuccess;
    }

    if (*plot) {
      std::ifstream tin(trajectories_path, std::ios::binary);
      const auto rows = report::read_trajectories_csv(tin);
      std::optional<std::vector<sim::BindingRow>> bindings;
      if (!bindings_path.empty()) {
        std::ifstream bin(bindings_path, std::ios::binary);
        bindings = report::read_bindings_csv(bin);
      }
      geometry::CourtModel court;
      if (plot_scenario) court = io::scenario_from_json(io::read_json(*plot_scenario)).court;
      emit(out_path, report::render_court_svg(rows, court, bindings), out);
      return kSuccess;
    }

    if (*detect) {
      const auto img = io::read_pgm(image_path);
      const auto model = io::svm_model_from_json(io::read_json(model_path));
      json arr = json::array();
      for (const auto& d : features::detect(img, model, stride, nms_iou))
        arr.push_back({{"box", {d.box.x, d.box.y, d.box.w, d.box.h}},
                       {"score", d.score},
                       {"foot_point", {d.foot_point.x, d.foot_point.y}}});
      emit(out_path, arr.dump(2) + "\n", out);
      return kSuccess;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_input_error() ? kInputError : kPipelineError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kPipelineError;
  }
  return kInputError;
}

}  // namespace courtfusion::cli
