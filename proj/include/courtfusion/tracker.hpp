#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "courtfusion/features.hpp"
#include "courtfusion/geometry.hpp"

namespace courtfusion::tracker {

using geometry::Point2;

using FrameIndex = std::int64_t;
using TrackId = std::int64_t;

enum class TrackStatus { active, exited };

const char* to_string(TrackStatus s);

struct TrackPoint {
  FrameIndex frame = 0;
  Point2 image;  // top-view pixels
  Point2 world;  // meters
  std::optional<double> correlation;  // NCC against the previous template
};

struct Track {
  TrackId id = 0;
  std::vector<TrackPoint> points;
  FrameIndex last_seen = 0;
  TrackStatus status = TrackStatus::active;
  std::vector<double> template_vector;
  int missed = 0;   // consecutive frames without a matched detection
  int outside = 0;  // consecutive frames with the last position outside court + margin

  Point2 last_world() const { return points.back().world; }
};

struct Assignment {
  struct Pair {
    TrackId track_id;
    std::size_t det_index;
    double distance;
  };
  std::vector<Pair> matches;
  std::vector<std::size_t> unmatched_dets;
  std::vector<TrackId> unmatched_tracks;
};

/// Greedy global nearest-pair association: pairs are taken in ascending
/// distance, never above gate_radius, each track and detection used once.
/// Equal distances break by (track id, detection x, detection y).
Assignment associate(std::span<const Track* const> tracks, std::span<const Point2> dets,
                     double gate_radius);

using Associator = std::function<Assignment(std::span<const Track* const>,
                                            std::span<const Point2>, double)>;

/// Zero-mean normalized cross-correlation of two equally shaped patches.
double ncc_score(std::span<const double> templ, std::span<const double> candidate);

enum class EventKind { entered, exited };

const char* to_string(EventKind k);

struct TrackEvent {
  EventKind kind;
  TrackId track_id;
  FrameIndex frame;
  Point2 position;  // world
};

struct TrackerConfig {
  double gate_radius = 1.5;
  int max_missed = 5;
  // Matches whose appearance NCC falls below this are rejected; only applies
  // when both track and detection carry appearance vectors.
  std::optional<double> min_correlation;
  Associator associator;  // empty: greedy associate()
};

class TrackerState {
 public:
  TrackerState(geometry::CameraCalibration calibration, geometry::CourtModel court,
               TrackerConfig config = {});

  /// Advances one frame. Throws NonMonotonicFrame unless frame_index exceeds
  /// every frame seen so far; the state is unchanged on error.
  std::vector<TrackEvent> step(FrameIndex frame_index,
                               std::span<const features::Detection> dets_topview);

  const std::vector<Track>& tracks() const { return tracks_; }
  const Track* find(TrackId id) const;
  std::vector<const Track*> active_tracks() const;
  TrackId next_track_id() const { return next_id_; }
  std::optional<FrameIndex> last_frame() const { return last_frame_; }
  const TrackerConfig& config() const { return config_; }
  const geometry::CourtModel& court() const { return court_; }
  const geometry::CameraCalibration& calibration() const { return calibration_; }

 private:
  geometry::CameraCalibration calibration_;
  geometry::CourtModel court_;
  TrackerConfig config_;
  std::vector<Track> tracks_;
  TrackId next_id_ = 0;
  std::optional<FrameIndex> last_frame_;
};

struct WorldSample {
  FrameIndex frame;
  Point2 world;
};

std::vector<WorldSample> trajectory_world(const Track& track);

}  // namespace courtfusion::tracker
