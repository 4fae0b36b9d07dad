#include "courtfusion/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "courtfusion/errors.hpp"

namespace courtfusion::tracker {

const char* to_string(TrackStatus s) { return s == TrackStatus::active ? "active" : "exited"; }

const char* to_string(EventKind k) { return k == EventKind::entered ? "entered" : "exited"; }

Assignment associate(std::span<const Track* const> tracks, std::span<const Point2> dets,
                     double gate_radius) {
  if (!(gate_radius > 0.0)) throw InputError("gate radius must be positive");

  struct Candidate {
    double distance;
    TrackId track_id;
    Point2 det;
    std::size_t track_index;
    std::size_t det_index;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const Point2 last = tracks[t]->last_world();
    for (std::size_t d = 0; d < dets.size(); ++d) {
      const double dist = geometry::distance(last, dets[d]);
      if (dist <= gate_radius) candidates.push_back({dist, tracks[t]->id, dets[d], t, d});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.track_id, a.det.x, a.det.y) <
           std::tie(b.distance, b.track_id, b.det.x, b.det.y);
  });

  std::vector<bool> track_used(tracks.size(), false);
  std::vector<bool> det_used(dets.size(), false);
  Assignment out;
  for (const auto& c : candidates) {
    if (track_used[c.track_index] || det_used[c.det_index]) continue;
    track_used[c.track_index] = true;
    det_used[c.det_index] = true;
    out.matches.push_back({c.track_id, c.det_index, c.distance});
  }
  for (std::size_t d = 0; d < dets.size(); ++d)
    if (!det_used[d]) out.unmatched_dets.push_back(d);
  for (std::size_t t = 0; t < tracks.size(); ++t)
    if (!track_used[t]) out.unmatched_tracks.push_back(tracks[t]->id);
  return out;
}

double ncc_score(std::span<const double> templ, std::span<const double> candidate) {
  if (templ.size() != candidate.size()) throw LengthMismatch("NCC operands differ in shape");
  if (templ.empty()) throw ZeroVariance("NCC of empty patches");
  const double n = static_cast<double>(templ.size());
  const double mt = std::accumulate(templ.begin(), templ.end(), 0.0) / n;
  const double mc = std::accumulate(candidate.begin(), candidate.end(), 0.0) / n;
  double cross = 0.0, vt = 0.0, vc = 0.0;
  for (std::size_t i = 0; i < templ.size(); ++i) {
    const double a = templ[i] - mt;
    const double b = candidate[i] - mc;
    cross += a * b;
    vt += a * a;
    vc += b * b;
  }
  if (vt == 0.0 || vc == 0.0) throw ZeroVariance("NCC operand has zero variance");
  return std::clamp(cross / std::sqrt(vt * vc), -1.0, 1.0);
}

TrackerState::TrackerState(geometry::CameraCalibration calibration, geometry::CourtModel court,
                           TrackerConfig config)
    : calibration_(std::move(calibration)), court_(court), config_(std::move(config)) {
  if (!(config_.gate_radius > 0.0)) throw InputError("gate radius must be positive");
  if (config_.max_missed < 0) throw InputError("max_missed must be >= 0");
}

const Track* TrackerState::find(TrackId id) const {
  for (const auto& t : tracks_)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<const Track*> TrackerState::active_tracks() const {
  std::vector<const Track*> out;
  for (const auto& t : tracks_)
    if (t.status == TrackStatus::active) out.push_back(&t);
  return out;
}

std::vector<TrackEvent> TrackerState::step(FrameIndex frame_index,
                                           std::span<const features::Detection> dets_topview) {
  if (last_frame_ && frame_index <= *last_frame_) {
    std::ostringstream os;
    os << "frame " << frame_index << " does not follow frame " << *last_frame_;
    throw NonMonotonicFrame(os.str());
  }

  std::vector<Point2> world;
  world.reserve(dets_topview.size());
  for (const auto& d : dets_topview) world.push_back(calibration_.image_to_world(d.foot_point));

  const std::vector<const Track*> active = active_tracks();
  Assignment assignment = config_.associator
                              ? config_.associator(active, world, config_.gate_radius)
                              : associate(active, world, config_.gate_radius);

  std::vector<bool> det_seen(dets_topview.size(), false);
  std::vector<TrackId> seen_ids;
  for (const auto& m : assignment.matches) {
    const Track* t = find(m.track_id);
    if (t == nullptr || t->status != TrackStatus::active || m.det_index >= world.size() ||
        det_seen[m.det_index] ||
        std::find(seen_ids.begin(), seen_ids.end(), m.track_id) != seen_ids.end())
      throw Error("associator returned an invalid match");
    det_seen[m.det_index] = true;
    seen_ids.push_back(m.track_id);
  }

  std::vector<bool> det_matched(dets_topview.size(), false);
  std::vector<TrackId> matched_ids;
  for (const auto& m : assignment.matches) {
    auto it = std::find_if(tracks_.begin(), tracks_.end(),
                           [&](const Track& t) { return t.id == m.track_id; });
    const auto& det = dets_topview[m.det_index];

    std::optional<double> corr;
    if (!it->template_vector.empty() && !det.appearance.empty()) {
      try {
        corr = ncc_score(it->template_vector, det.appearance);
      } catch (const ZeroVariance&) {
      } catch (const LengthMismatch&) {
      }
      if (config_.min_correlation && corr && *corr < *config_.min_correlation) continue;
    }

    it->points.push_back({frame_index, det.foot_point, world[m.det_index], corr});
    it->last_seen = frame_index;
    it->missed = 0;
    if (!det.appearance.empty()) it->template_vector = det.appearance;
    det_matched[m.det_index] = true;
    matched_ids.push_back(m.track_id);
  }

  std::vector<TrackEvent> events;
  for (auto& t : tracks_) {
    if (t.status != TrackStatus::active) continue;
    if (std::find(matched_ids.begin(), matched_ids.end(), t.id) == matched_ids.end()) ++t.missed;
    if (court_.contains_with_margin(t.last_world()))
      t.outside = 0;
    else
      ++t.outside;
    if (t.missed > config_.max_missed || t.outside >= std::max(config_.max_missed, 1)) {
      t.status = TrackStatus::exited;
      events.push_back({EventKind::exited, t.id, frame_index, t.last_world()});
    }
  }

  for (std::size_t d = 0; d < dets_topview.size(); ++d) {
    if (det_matched[d] || !court_.contains(world[d])) continue;
    Track t;
    t.id = next_id_++;
    t.points.push_back({frame_index, dets_topview[d].foot_point, world[d], std::nullopt});
    t.last_seen = frame_index;
    t.template_vector = dets_topview[d].appearance;
    events.push_back({EventKind::entered, t.id, frame_index, world[d]});
    tracks_.push_back(std::move(t));
  }

  last_frame_ = frame_index;
  return events;
}

std::vector<WorldSample> trajectory_world(const Track& track) {
  std::vector<WorldSample> out;
  out.reserve(track.points.size());
  for (const auto& p : track.points) out.push_back({p.frame, p.world});
  return out;
}

}  // namespace courtfusion::tracker
