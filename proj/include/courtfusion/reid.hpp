#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "courtfusion/geometry.hpp"
#include "courtfusion/tracker.hpp"

namespace courtfusion::reid {

using geometry::Point2;
using tracker::TrackId;

using PlayerId = std::int64_t;

enum class IdState { login, logout };

const char* to_string(IdState s);

struct PlayerRecord {
  PlayerId id = 0;
  IdState state = IdState::logout;
  std::vector<double> feature;
  Point2 position;
  std::optional<TrackId> track_id;
};

struct RearViewObservation {
  std::vector<double> feature;
  Point2 image_point;  // rear-view pixels
  Point2 world_point;  // meters, through the rear-view calibration
};

struct Binding {
  TrackId track_id;
  PlayerId player_id;

  friend bool operator==(const Binding&, const Binding&) = default;
};

struct RegistryConfig {
  double match_threshold = 0.9;
  double pairing_gate = 2.0;      // meters between an entry and its rear observation
  double feature_update = 0.3;    // EMA weight of the new observation on re-login
};

/// The player list: ids, login state, appearance features and last positions.
/// Single writer; positions_report() snapshots are plain values.
class PlayerRegistry {
 public:
  explicit PlayerRegistry(RegistryConfig config = {});

  /// Logs out the player bound to track_id. Throws UnknownTrack.
  void handle_exit(TrackId track_id);

  /// Best logged-out candidate with similarity >= match_threshold; ties go to
  /// the lowest id.
  std::optional<PlayerId> match_feature(std::span<const double> feature) const;

  /// Binds track_id to a returning player or to a newly issued id.
  /// Throws TrackAlreadyBound.
  PlayerId handle_enter(TrackId track_id, const RearViewObservation& obs);

  /// Exits first, then entries, each entry paired with the nearest unused
  /// rear observation. Strong guarantee: unchanged if it throws.
  std::vector<Binding> process_frame(std::span<const tracker::TrackEvent> events,
                                     std::span<const RearViewObservation> rear_obs);

  /// Refreshes the last known position of the player bound to track_id.
  void update_position(TrackId track_id, Point2 world);

  std::vector<Binding> bindings() const;
  std::optional<PlayerId> player_for_track(TrackId track_id) const;

  const std::vector<PlayerRecord>& records() const { return records_; }
  const PlayerRecord* find(PlayerId id) const;
  PlayerId next_id() const { return next_id_; }
  const RegistryConfig& config() const { return config_; }

 private:
  PlayerRecord* bound_record(TrackId track_id);

  RegistryConfig config_;
  std::vector<PlayerRecord> records_;
  PlayerId next_id_ = 0;
};

struct PositionEntry {
  PlayerId id;
  IdState state;
  Point2 position;
};

std::vector<PositionEntry> positions_report(const PlayerRegistry& reg);

/// Pairs entered events with rear observations: ascending world distance,
/// within `gate`, each observation used once. Result[i] indexes rear_obs for
/// entries[i]; throws NoObservationForEntry when an entry stays unpaired.
std::vector<std::size_t> pair_entries(std::span<const tracker::TrackEvent> entries,
                                      std::span<const RearViewObservation> rear_obs, double gate);

}  // namespace courtfusion::reid
