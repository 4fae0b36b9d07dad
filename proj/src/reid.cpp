#include "courtfusion/reid.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "courtfusion/errors.hpp"
#include "courtfusion/features.hpp"

namespace courtfusion::reid {

const char* to_string(IdState s) { return s == IdState::login ? "login" : "logout"; }

PlayerRegistry::PlayerRegistry(RegistryConfig config) : config_(config) {
  if (!(config_.match_threshold > -1.0 && config_.match_threshold < 1.0))
    throw InputError("match threshold must lie in (-1, 1)");
  if (!(config_.pairing_gate > 0.0)) throw InputError("pairing gate must be positive");
  if (!(config_.feature_update >= 0.0 && config_.feature_update <= 1.0))
    throw InputError("feature update weight must lie in [0, 1]");
}

PlayerRecord* PlayerRegistry::bound_record(TrackId track_id) {
  for (auto& r : records_)
    if (r.state == IdState::login && r.track_id == track_id) return &r;
  return nullptr;
}

const PlayerRecord* PlayerRegistry::find(PlayerId id) const {
  for (const auto& r : records_)
    if (r.id == id) return &r;
  return nullptr;
}

void PlayerRegistry::handle_exit(TrackId track_id) {
  PlayerRecord* r = bound_record(track_id);
  if (r == nullptr) {
    std::ostringstream os;
    os << "no logged-in player is bound to track " << track_id;
    throw UnknownTrack(os.str());
  }
  r->state = IdState::logout;
  r->track_id.reset();
}

std::optional<PlayerId> PlayerRegistry::match_feature(std::span<const double> feature) const {
  std::optional<PlayerId> best;
  double best_sim = 0.0;
  for (const auto& r : records_) {
    if (r.state != IdState::logout) continue;
    const double sim = features::cosine_similarity(feature, r.feature);
    if (sim < config_.match_threshold) continue;
    if (!best || sim > best_sim || (sim == best_sim && r.id < *best)) {
      best = r.id;
      best_sim = sim;
    }
  }
  return best;
}

PlayerId PlayerRegistry::handle_enter(TrackId track_id, const RearViewObservation& obs) {
  if (bound_record(track_id) != nullptr) {
    std::ostringstream os;
    os << "track " << track_id << " is already bound to a logged-in player";
    throw TrackAlreadyBound(os.str());
  }
  if (const auto match = match_feature(obs.feature)) {
    auto it = std::find_if(records_.begin(), records_.end(),
                           [&](const PlayerRecord& r) { return r.id == *match; });
    const double w = config_.feature_update;
    for (std::size_t i = 0; i < it->feature.size(); ++i)
      it->feature[i] = (1.0 - w) * it->feature[i] + w * obs.feature[i];
    it->state = IdState::login;
    it->track_id = track_id;
    it->position = obs.world_point;
    return it->id;
  }
  // Validates the feature (nonzero) even when nothing is on record yet.
  features::cosine_similarity(obs.feature, obs.feature);
  PlayerRecord rec;
  rec.id = next_id_++;
  rec.state = IdState::login;
  rec.feature = obs.feature;
  rec.position = obs.world_point;
  rec.track_id = track_id;
  records_.push_back(std::move(rec));
  return records_.back().id;
}

std::vector<std::size_t> pair_entries(std::span<const tracker::TrackEvent> entries,
                                      std::span<const RearViewObservation> rear_obs, double gate) {
  struct Candidate {
    double distance;
    std::size_t entry;
    std::size_t obs;
  };
  std::vector<Candidate> candidates;
  for (std::size_t e = 0; e < entries.size(); ++e)
    for (std::size_t o = 0; o < rear_obs.size(); ++o) {
      const double d = geometry::distance(entries[e].position, rear_obs[o].world_point);
      if (d <= gate) candidates.push_back({d, e, o});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.entry, a.obs) < std::tie(b.distance, b.entry, b.obs);
  });

  constexpr auto kUnpaired = static_cast<std::size_t>(-1);
  std::vector<std::size_t> result(entries.size(), kUnpaired);
  std::vector<bool> obs_used(rear_obs.size(), false);
  for (const auto& c : candidates) {
    if (result[c.entry] != kUnpaired || obs_used[c.obs]) continue;
    result[c.entry] = c.obs;
    obs_used[c.obs] = true;
  }
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (result[e] == kUnpaired) {
      std::ostringstream os;
      os << "no rear-view observation within " << gate << " m of track " << entries[e].track_id
         << " entering at " << geometry::to_string(entries[e].position);
      throw NoObservationForEntry(os.str());
    }
  }
  return result;
}

std::vector<Binding> PlayerRegistry::process_frame(std::span<const tracker::TrackEvent> events,
                                                   std::span<const RearViewObservation> rear_obs) {
  PlayerRegistry next = *this;

  std::vector<tracker::TrackEvent> entries;
  for (const auto& ev : events) {
    if (ev.kind == tracker::EventKind::exited)
      next.handle_exit(ev.track_id);
    else
      entries.push_back(ev);
  }
  if (!entries.empty()) {
    const auto pairing = pair_entries(entries, rear_obs, config_.pairing_gate);
    for (std::size_t i = 0; i < entries.size(); ++i)
      next.handle_enter(entries[i].track_id, rear_obs[pairing[i]]);
  }

  *this = std::move(next);
  return bindings();
}

void PlayerRegistry::update_position(TrackId track_id, Point2 world) {
  if (PlayerRecord* r = bound_record(track_id)) r->position = world;
}

std::vector<Binding> PlayerRegistry::bindings() const {
  std::vector<Binding> out;
  for (const auto& r : records_)
    if (r.state == IdState::login && r.track_id) out.push_back({*r.track_id, r.id});
  std::sort(out.begin(), out.end(),
            [](const Binding& a, const Binding& b) { return a.track_id < b.track_id; });
  return out;
}

std::optional<PlayerId> PlayerRegistry::player_for_track(TrackId track_id) const {
  for (const auto& r : records_)
    if (r.state == IdState::login && r.track_id == track_id) return r.id;
  return std::nullopt;
}

std::vector<PositionEntry> positions_report(const PlayerRegistry& reg) {
  std::vector<PositionEntry> out;
  for (const auto& r : reg.records()) out.push_back({r.id, r.state, r.position});
  std::sort(out.begin(), out.end(),
            [](const PositionEntry& a, const PositionEntry& b) { return a.id < b.id; });
  return out;
}

}  // namespace courtfusion::reid
