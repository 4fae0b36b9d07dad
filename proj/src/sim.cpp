#include "courtfusion/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "courtfusion/errors.hpp"

namespace courtfusion::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kTopBoxSize = 40.0;
constexpr double kRearBoxW = 40.0;
constexpr double kRearBoxH = 80.0;

bool point_less(Point2 a, Point2 b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); }

}  // namespace

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal(double mean, double stddev) {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return mean + stddev * z;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return mean + stddev * r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t seed, std::int64_t frame, const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(frame) + h));
}

features::GrayImage render_appearance(const Appearance& a, int width, int height) {
  if (!(a.stripe_period_px > 0.0)) throw InputError("stripe period must be positive");
  if (!(a.contrast > 0.0 && a.contrast <= 1.0)) throw InputError("contrast must lie in (0, 1]");
  features::GrayImage img(width, height);
  const double rad = a.stripe_angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      img.at(x, y) =
          0.5 + 0.5 * a.contrast * std::sin(2.0 * std::numbers::pi * (x * c + y * s) / a.stripe_period_px);
  return img;
}

std::int64_t ScenarioSpec::frame_count() const {
  return static_cast<std::int64_t>(std::floor(fps * duration + 1e-9));
}

bool ScenarioSpec::visible(const std::string& player, double t) const {
  for (const auto& e : exit_events)
    if (e.player == player && t >= e.t_exit && t < e.t_return) return false;
  return true;
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& msg) { throw InputError("scenario: " + msg); };
  if (!(fps > 0.0)) fail("fps must be positive");
  if (!(duration > 0.0)) fail("duration must be positive");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!(merge_distance >= 0.0)) fail("merge_distance must be >= 0");
  if (!(feature_noise >= 0.0 && feature_noise <= kMaxFeatureNoise))
    fail("feature_noise must lie in [0, 0.3286] to keep self-similarity >= 0.95");
  if (players.empty()) fail("at least one player is required");

  std::set<std::string> names;
  for (const auto& p : players) {
    if (p.player_name.empty()) fail("player names must be non-empty");
    if (!names.insert(p.player_name).second) fail("duplicate player name " + p.player_name);
    if (p.waypoints.empty()) fail("player " + p.player_name + " has no waypoints");
    for (std::size_t i = 1; i < p.waypoints.size(); ++i)
      if (!(p.waypoints[i].t > p.waypoints[i - 1].t))
        fail("waypoint times of " + p.player_name + " must increase strictly");
    if (p.feature_basis.size() != players.front().feature_basis.size())
      fail("feature bases must share one length");
    if (std::all_of(p.feature_basis.begin(), p.feature_basis.end(), [](double v) { return v == 0.0; }))
      fail("feature basis of " + p.player_name + " is zero");
  }
  std::set<std::string> exiting;
  for (const auto& e : exit_events) {
    if (!names.count(e.player)) fail("exit event references unknown player " + e.player);
    if (!(e.t_exit < e.t_return)) fail("exit event must end after it starts");
    exiting.insert(e.player);
  }
  for (const auto& p : players) {
    if (exiting.count(p.player_name)) continue;
    for (const auto& w : p.waypoints)
      if (!court.contains(w.p))
        fail("waypoint of " + p.player_name + " lies outside the court without an exit event");
  }
}

Point2 interpolate(const MotionScript& script, double t) {
  const auto& w = script.waypoints;
  if (w.empty()) throw InputError("motion script has no waypoints");
  if (t <= w.front().t) return w.front().p;
  if (t >= w.back().t) return w.back().p;
  const auto hi = std::upper_bound(w.begin(), w.end(), t,
                                   [](double v, const Waypoint& wp) { return v < wp.t; });
  const auto lo = hi - 1;
  const double a = (t - lo->t) / (hi->t - lo->t);
  return {lo->p.x + a * (hi->p.x - lo->p.x), lo->p.y + a * (hi->p.y - lo->p.y)};
}

std::vector<reid::RearViewObservation> merge_occlusions(
    std::vector<reid::RearViewObservation> obs, const geometry::CameraCalibration& rear_cal,
    double merge_distance) {
  struct Item {
    reid::RearViewObservation o;
    double depth;  // image y of the player whose feature is carried
  };
  std::vector<Item> items;
  for (auto& o : obs) items.push_back({o, o.image_point.y});

  for (;;) {
    std::optional<std::tuple<double, Point2, Point2, std::size_t, std::size_t>> best;
    for (std::size_t i = 0; i < items.size(); ++i)
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        const double d = geometry::distance(items[i].o.image_point, items[j].o.image_point);
        if (!(d < merge_distance)) continue;
        Point2 a = items[i].o.image_point, b = items[j].o.image_point;
        if (point_less(b, a)) std::swap(a, b);
        auto cand = std::make_tuple(d, a, b, i, j);
        auto key = [](const auto& c) {
          return std::make_tuple(std::get<0>(c), std::get<1>(c).x, std::get<1>(c).y,
                                 std::get<2>(c).x, std::get<2>(c).y);
        };
        if (!best || key(cand) < key(*best)) best = cand;
      }
    if (!best) break;

    const auto [d, pa, pb, i, j] = *best;
    Item& first = items[i];
    Item& second = items[j];
    const bool first_nearer =
        std::tie(first.depth, first.o.image_point.x) > std::tie(second.depth, second.o.image_point.x);
    Item merged = first_nearer ? first : second;
    merged.o.image_point = {(pa.x + pb.x) / 2.0, (pa.y + pb.y) / 2.0};
    merged.o.world_point = rear_cal.image_to_world(merged.o.image_point);
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(j));
    items[i] = std::move(merged);
  }

  std::vector<reid::RearViewObservation> out;
  for (auto& it : items) out.push_back(std::move(it.o));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return point_less(a.image_point, b.image_point);
  });
  return out;
}

SimFrame render_frame(const ScenarioSpec& spec, std::int64_t frame_index) {
  if (frame_index < 0 || frame_index >= spec.frame_count())
    throw InputError("frame index outside the scenario duration");
  const double t = static_cast<double>(frame_index) / spec.fps;

  SimFrame frame;
  frame.frame_index = frame_index;
  std::vector<reid::RearViewObservation> rear;
  for (const auto& p : spec.players) {
    const Point2 truth = interpolate(p, t);
    const bool vis = spec.visible(p.player_name, t);
    frame.truth.push_back({p.player_name, truth, vis});
    if (!vis) continue;

    Rng rng(derive_seed(spec.seed, frame_index, p.player_name));
    const double s = spec.noise_sigma;
    const Point2 top_world{truth.x + s * rng.normal(), truth.y + s * rng.normal()};
    const Point2 rear_world{truth.x + s * rng.normal(), truth.y + s * rng.normal()};

    const Point2 top_px = spec.top_cal.world_to_image(top_world);
    auto det = features::Detection::from_box(
        {top_px.x - kTopBoxSize / 2, top_px.y - kTopBoxSize, kTopBoxSize, kTopBoxSize}, 1.0);
    det.foot_point = top_px;  // exact, free of box round-off
    frame.top_detections.push_back(std::move(det));

    const auto& basis = p.feature_basis;
    const double norm = std::sqrt(std::inner_product(basis.begin(), basis.end(), basis.begin(), 0.0));
    const double fs = spec.feature_noise * norm / std::sqrt(static_cast<double>(basis.size()));
    reid::RearViewObservation o;
    o.feature.resize(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) o.feature[i] = basis[i] + fs * rng.normal();
    o.image_point = spec.rear_cal.world_to_image(rear_world);
    o.world_point = spec.rear_cal.image_to_world(o.image_point);
    rear.push_back(std::move(o));
  }

  std::sort(frame.top_detections.begin(), frame.top_detections.end(),
            [](const auto& a, const auto& b) { return point_less(a.foot_point, b.foot_point); });
  frame.rear_observations = merge_occlusions(std::move(rear), spec.rear_cal, spec.merge_distance);
  return frame;
}

std::vector<SimFrame> render_all(const ScenarioSpec& spec) {
  spec.validate();
  std::vector<SimFrame> frames;
  frames.reserve(static_cast<std::size_t>(spec.frame_count()));
  for (std::int64_t f = 0; f < spec.frame_count(); ++f) frames.push_back(render_frame(spec, f));
  return frames;
}

void Evaluator::observe(const std::vector<TruthEntry>& truth,
                        const std::vector<Identified>& identified, std::int64_t registry_size) {
  ++frames_;
  max_registry_ = std::max(max_registry_, registry_size);

  struct Candidate {
    double d;
    std::size_t t;
    std::size_t i;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!truth[t].visible) continue;
    for (std::size_t i = 0; i < identified.size(); ++i) {
      const double d = geometry::distance(truth[t].world, identified[i].world);
      if (d <= gate_) candidates.push_back({d, t, i});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.d, a.t, a.i) < std::tie(b.d, b.t, b.i);
  });
  std::vector<std::optional<std::size_t>> match(truth.size());
  std::vector<bool> used(identified.size(), false);
  for (const auto& c : candidates) {
    if (match[c.t] || used[c.i]) continue;
    match[c.t] = c.i;
    used[c.i] = true;
    sq_error_ += c.d * c.d;
    ++samples_;
  }

  bool all_correct = true;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    PlayerState& st = players_[truth[t].player_name];
    std::optional<reid::PlayerId> bound;
    if (match[t]) bound = identified[*match[t]].player_id;
    history_[truth[t].player_name].push_back(bound);

    if (!truth[t].visible) {
      st.gap = true;
      continue;
    }
    if (!bound) {
      st.gap = true;
      all_correct = false;
      continue;
    }
    if (!st.canonical) st.canonical = bound;
    if (st.last && *bound != *st.last) ++switches_;
    if (st.gap && st.last && *bound != *st.canonical) ++reid_failures_;
    st.last = bound;
    st.gap = false;
    if (*bound != *st.canonical) all_correct = false;
  }
  if (all_correct) ++correct_frames_;
}

EvalReport Evaluator::report() const {
  EvalReport r;
  r.id_switches = switches_;
  r.reid_failures = reid_failures_;
  r.trajectory_rmse = samples_ > 0 ? std::sqrt(sq_error_ / static_cast<double>(samples_)) : 0.0;
  r.frames_fully_correct =
      frames_ > 0 ? static_cast<double>(correct_frames_) / static_cast<double>(frames_) : 1.0;
  r.frames = frames_;
  r.players = static_cast<std::int64_t>(players_.size());
  r.max_registry_size = max_registry_;
  return r;
}

PipelineResult run_pipeline(const ScenarioSpec& spec, PipelineMode mode) {
  return run_pipeline(spec, render_all(spec), mode);
}

PipelineResult run_pipeline(const ScenarioSpec& spec, const std::vector<SimFrame>& frames,
                            PipelineMode mode) {
  spec.validate();
  const bool fused = mode == PipelineMode::fused;
  tracker::TrackerState trk(fused ? spec.top_cal : spec.rear_cal, spec.court, spec.tracker);
  reid::PlayerRegistry reg(spec.registry);
  Evaluator eval(spec.tracker.gate_radius);
  PipelineResult result{{}, {}, {}, reid::PlayerRegistry(spec.registry), {}};

  std::vector<features::Detection> rear_dets;
  for (const auto& frame : frames) {
    std::span<const features::Detection> dets = frame.top_detections;
    if (!fused) {
      rear_dets.clear();
      for (const auto& o : frame.rear_observations) {
        auto det = features::Detection::from_box(
            {o.image_point.x - kRearBoxW / 2, o.image_point.y - kRearBoxH, kRearBoxW, kRearBoxH},
            1.0);
        det.foot_point = o.image_point;
        rear_dets.push_back(std::move(det));
      }
      dets = rear_dets;
    }

    const auto events = trk.step(frame.frame_index, dets);
    const auto bindings = reg.process_frame(events, frame.rear_observations);

    std::vector<Evaluator::Identified> identified;
    for (const auto& t : trk.tracks()) {
      const bool exited_now = std::any_of(events.begin(), events.end(), [&](const auto& e) {
        return e.kind == tracker::EventKind::exited && e.track_id == t.id;
      });
      if (t.status == tracker::TrackStatus::active || exited_now)
        result.trajectories.push_back({frame.frame_index, t.id, t.last_world(), t.status});
      if (t.status == tracker::TrackStatus::active && t.last_seen == frame.frame_index) {
        reg.update_position(t.id, t.last_world());
        identified.push_back({t.last_world(), reg.player_for_track(t.id)});
      }
    }
    for (const auto& b : bindings) result.bindings.push_back({frame.frame_index, b.track_id, b.player_id});
    eval.observe(frame.truth, identified, static_cast<std::int64_t>(reg.records().size()));
  }

  result.report = eval.report();
  result.truth_bindings = eval.history();
  result.registry = std::move(reg);
  return result;
}

void Overrides::merge(const Overrides& o) {
  if (o.gate_radius) gate_radius = o.gate_radius;
  if (o.max_missed) max_missed = o.max_missed;
  if (o.match_threshold) match_threshold = o.match_threshold;
  if (o.pairing_gate) pairing_gate = o.pairing_gate;
  if (o.noise_sigma) noise_sigma = o.noise_sigma;
  if (o.feature_noise) feature_noise = o.feature_noise;
  if (o.merge_distance) merge_distance = o.merge_distance;
  if (o.seed) seed = o.seed;
}

void apply_overrides(ScenarioSpec& spec, const Overrides& o) {
  if (o.gate_radius) spec.tracker.gate_radius = *o.gate_radius;
  if (o.max_missed) spec.tracker.max_missed = *o.max_missed;
  if (o.match_threshold) spec.registry.match_threshold = *o.match_threshold;
  if (o.pairing_gate) spec.registry.pairing_gate = *o.pairing_gate;
  if (o.noise_sigma) spec.noise_sigma = *o.noise_sigma;
  if (o.feature_noise) spec.feature_noise = *o.feature_noise;
  if (o.merge_distance) spec.merge_distance = *o.merge_distance;
  if (o.seed) spec.seed = *o.seed;
}

}  // namespace courtfusion::sim
