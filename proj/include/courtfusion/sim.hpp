#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "courtfusion/features.hpp"
#include "courtfusion/geometry.hpp"
#include "courtfusion/reid.hpp"
#include "courtfusion/tracker.hpp"

namespace courtfusion::sim {

using geometry::Point2;

/// Portable random stream: std::mt19937_64 (bit-exact by the standard) with
/// uniform and Box-Muller normal transforms written out here, since the
/// standard distributions are implementation-defined.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64+box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0,1) with 53 random bits.
  double uniform();
  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Independent substream for (seed, frame, player label).
std::uint64_t derive_seed(std::uint64_t seed, std::int64_t frame, const std::string& label);

/// Striped jersey pattern used to give each simulated player a HOG signature.
struct Appearance {
  double stripe_angle_deg = 0.0;
  double stripe_period_px = 8.0;
  double contrast = 0.8;
};

features::GrayImage render_appearance(const Appearance& a, int width, int height);

struct Waypoint {
  double t;
  Point2 p;
};

struct MotionScript {
  std::string player_name;
  std::vector<Waypoint> waypoints;
  std::vector<double> feature_basis;
};

struct ExitEvent {
  std::string player;
  double t_exit;
  double t_return;
};

struct ScenarioSpec {
  std::string name;
  geometry::CourtModel court;
  geometry::CameraCalibration top_cal;
  geometry::CameraCalibration rear_cal;
  std::vector<MotionScript> players;
  double fps = 30.0;
  double duration = 1.0;
  double noise_sigma = 0.05;
  double merge_distance = 0.0;  // rear-view pixels
  double feature_noise = 0.2;   // perturbation norm relative to the basis norm
  std::vector<ExitEvent> exit_events;
  std::uint64_t seed = 0;
  tracker::TrackerConfig tracker;
  reid::RegistryConfig registry;

  std::int64_t frame_count() const;
  bool visible(const std::string& player, double t) const;
  /// Throws InputError on any violated scenario invariant.
  void validate() const;
};

/// Relative feature noise above which the expected self-similarity drops
/// below 0.95.
constexpr double kMaxFeatureNoise = 0.3286;

Point2 interpolate(const MotionScript& script, double t);

struct TruthEntry {
  std::string player_name;
  Point2 world;
  bool visible = true;
};

struct SimFrame {
  std::int64_t frame_index = 0;
  std::vector<features::Detection> top_detections;
  std::vector<reid::RearViewObservation> rear_observations;
  std::vector<TruthEntry> truth;
};

/// Renders one frame; noise streams are derived from spec.seed, the frame
/// index and the player name, so frames are independent of each other and of
/// player order.
SimFrame render_frame(const ScenarioSpec& spec, std::int64_t frame_index);

std::vector<SimFrame> render_all(const ScenarioSpec& spec);

/// Rear observations closer than merge_distance pixels collapse into one at
/// their midpoint carrying the feature of the player nearer the camera
/// (larger image y).
std::vector<reid::RearViewObservation> merge_occlusions(
    std::vector<reid::RearViewObservation> obs, const geometry::CameraCalibration& rear_cal,
    double merge_distance);

enum class PipelineMode {
  fused,     // top view tracks positions, rear view identifies on entry
  rear_only  // ablation: the rear view alone supplies positions and identities
};

struct EvalReport {
  std::int64_t id_switches = 0;
  std::int64_t reid_failures = 0;
  double trajectory_rmse = 0.0;
  double frames_fully_correct = 0.0;
  std::int64_t frames = 0;
  std::int64_t players = 0;
  std::int64_t max_registry_size = 0;
};

struct TrajectoryRow {
  std::int64_t frame;
  tracker::TrackId track_id;
  Point2 world;
  tracker::TrackStatus state;
};

struct BindingRow {
  std::int64_t frame;
  tracker::TrackId track_id;
  reid::PlayerId player_id;
};

struct PipelineResult {
  std::vector<TrajectoryRow> trajectories;
  std::vector<BindingRow> bindings;
  EvalReport report;
  reid::PlayerRegistry registry;
  /// Per truth player, the player id it was bound to in each frame.
  std::map<std::string, std::vector<std::optional<reid::PlayerId>>> truth_bindings;
};

PipelineResult run_pipeline(const ScenarioSpec& spec, PipelineMode mode = PipelineMode::fused);
PipelineResult run_pipeline(const ScenarioSpec& spec, const std::vector<SimFrame>& frames,
                            PipelineMode mode = PipelineMode::fused);

/// Scores identified positions against ground truth frame by frame.
class Evaluator {
 public:
  struct Identified {
    Point2 world;
    std::optional<reid::PlayerId> player_id;
  };

  explicit Evaluator(double match_gate) : gate_(match_gate) {}

  void observe(const std::vector<TruthEntry>& truth, const std::vector<Identified>& identified,
               std::int64_t registry_size);

  EvalReport report() const;
  const std::map<std::string, std::vector<std::optional<reid::PlayerId>>>& history() const {
    return history_;
  }

 private:
  struct PlayerState {
    std::optional<reid::PlayerId> canonical;
    std::optional<reid::PlayerId> last;
    bool gap = false;
  };

  double gate_;
  std::map<std::string, PlayerState> players_;
  std::map<std::string, std::vector<std::optional<reid::PlayerId>>> history_;
  std::int64_t frames_ = 0;
  std::int64_t correct_frames_ = 0;
  std::int64_t switches_ = 0;
  std::int64_t reid_failures_ = 0;
  std::int64_t max_registry_ = 0;
  double sq_error_ = 0.0;
  std::int64_t samples_ = 0;
};

/// Tunables that may be overridden from a config file or the command line.
struct Overrides {
  std::optional<double> gate_radius;
  std::optional<int> max_missed;
  std::optional<double> match_threshold;
  std::optional<double> pairing_gate;
  std::optional<double> noise_sigma;
  std::optional<double> feature_noise;
  std::optional<double> merge_distance;
  std::optional<std::uint64_t> seed;

  /// Values set in `other` win.
  void merge(const Overrides& other);
};

void apply_overrides(ScenarioSpec& spec, const Overrides& o);

}  // namespace courtfusion::sim
