#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "courtfusion/errors.hpp"
#include "courtfusion/tracker.hpp"
#include "oracles.hpp"

using namespace courtfusion;
using namespace courtfusion::tracker;
using geometry::CourtModel;

namespace {

geometry::CameraCalibration identity_cal() {
  const auto c = CourtModel().corners();
  return geometry::calibrate(c, c);
}

features::Detection det_at(Point2 p) {
  auto d = features::Detection::from_box({p.x - 0.2, p.y - 0.5, 0.4, 0.5}, 1.0);
  d.foot_point = p;
  return d;
}

Track track_at(TrackId id, Point2 p) {
  Track t;
  t.id = id;
  t.points.push_back({0, p, p, std::nullopt});
  return t;
}

std::vector<const Track*> ptrs(const std::vector<Track>& ts) {
  std::vector<const Track*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

}  // namespace

TEST(Associate, NoTracksLeavesAllDetectionsUnmatched) {
  const std::vector<Point2> dets{{1, 1}, {2, 2}};
  const Assignment a = associate({}, dets, 1.5);
  EXPECT_TRUE(a.matches.empty());
  EXPECT_EQ(a.unmatched_dets, (std::vector<std::size_t>{0, 1}));
}

TEST(Associate, NaturalPairingAgreesWithExhaustiveSearch) {
  const std::vector<Track> tracks{track_at(0, {1, 1}), track_at(1, {5, 5})};
  const std::vector<Point2> dets{{5.2, 5.1}, {1.1, 1.0}};
  const Assignment a = associate(ptrs(tracks), dets, 1.0);
  ASSERT_EQ(a.matches.size(), 2u);

  std::vector<std::vector<double>> cost(2, std::vector<double>(2));
  for (int t = 0; t < 2; ++t)
    for (int d = 0; d < 2; ++d) cost[t][d] = geometry::distance(tracks[t].last_world(), dets[d]);
  const auto best = oracle::best_assignment(cost, 1.0);

  std::map<TrackId, std::size_t> got;
  for (const auto& m : a.matches) got[m.track_id] = m.det_index;
  EXPECT_EQ(got.at(0), *best[0]);
  EXPECT_EQ(got.at(1), *best[1]);
  for (const auto& m : a.matches) {
    if (m.track_id == 0) EXPECT_NEAR(m.distance, 0.1, 1e-12);
    if (m.track_id == 1) EXPECT_NEAR(m.distance, std::hypot(0.2, 0.1), 1e-12);
  }
}

TEST(Associate, GateExcludesFarDetections) {
  const std::vector<Track> tracks{track_at(0, {1, 1})};
  const std::vector<Point2> dets{{4, 1}};
  const Assignment a = associate(ptrs(tracks), dets, 1.5);
  EXPECT_TRUE(a.matches.empty());
  EXPECT_EQ(a.unmatched_dets.size(), 1u);
  EXPECT_EQ(a.unmatched_tracks, (std::vector<TrackId>{0}));
}

TEST(AssociateProperty, PermutationInvariantAndGated) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> pos(0, 5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Track> tracks;
    for (int i = 0; i < 4; ++i) tracks.push_back(track_at(i * 3 + 1, {pos(gen), pos(gen)}));
    std::vector<Point2> dets;
    for (int i = 0; i < 5; ++i) dets.push_back({pos(gen), pos(gen)});
    // Exact ties between a duplicated detection.
    dets.push_back(dets[0]);

    auto as_set = [](const Assignment& a, const std::vector<Point2>& ds) {
      std::set<std::tuple<TrackId, double, double>> s;
      for (const auto& m : a.matches) s.insert({m.track_id, ds[m.det_index].x, ds[m.det_index].y});
      return s;
    };
    const Assignment a = associate(ptrs(tracks), dets, 1.5);
    for (const auto& m : a.matches) EXPECT_LE(m.distance, 1.5);

    auto shuffled = dets;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    auto tshuffled = tracks;
    std::shuffle(tshuffled.begin(), tshuffled.end(), gen);
    const Assignment b = associate(ptrs(tshuffled), shuffled, 1.5);
    EXPECT_EQ(as_set(a, dets), as_set(b, shuffled));
  }
}

TEST(AssociateProperty, MatchesExhaustiveOptimumForSeparatedPlayers) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Track> tracks;
    std::vector<Point2> dets;
    for (int i = 0; i < 4; ++i) {
      const Point2 p{1.0 + 3.0 * (i % 2), 2.0 + 4.0 * (i / 2)};
      tracks.push_back(track_at(i, p));
      dets.push_back({p.x + jitter(gen), p.y + jitter(gen)});
    }
    std::shuffle(dets.begin(), dets.end(), gen);
    std::vector<std::vector<double>> cost(4, std::vector<double>(4));
    for (int t = 0; t < 4; ++t)
      for (int d = 0; d < 4; ++d) cost[t][d] = geometry::distance(tracks[t].last_world(), dets[d]);
    const auto best = oracle::best_assignment(cost, 1.5);
    const Assignment a = associate(ptrs(tracks), dets, 1.5);
    ASSERT_EQ(a.matches.size(), 4u);
    for (const auto& m : a.matches) EXPECT_EQ(m.det_index, *best[m.track_id]);
  }
}

TEST(Ncc, Examples) {
  const std::vector<double> t{0.1, 0.5, 0.3, 0.9, 0.2};
  EXPECT_NEAR(ncc_score(t, t), 1.0, 1e-15);
  const double mean = (0.1 + 0.5 + 0.3 + 0.9 + 0.2) / 5;
  std::vector<double> neg;
  for (double v : t) neg.push_back(-(v - mean));
  EXPECT_NEAR(ncc_score(t, neg), -1.0, 1e-15);
  EXPECT_THROW(ncc_score(t, std::vector<double>(5, 0.4)), ZeroVariance);
  EXPECT_THROW(ncc_score(t, std::vector<double>(4, 0.4)), LengthMismatch);
}

TEST(Ncc, MatchesDirectFormula) {
  std::mt19937_64 gen(43);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(64), b(64);
    for (auto& e : a) e = u(gen);
    for (auto& e : b) e = u(gen);
    double ma = 0, mb = 0;
    for (int i = 0; i < 64; ++i) {
      ma += a[i] / 64;
      mb += b[i] / 64;
    }
    double num = 0, da = 0, db = 0;
    for (int i = 0; i < 64; ++i) {
      num += (a[i] - ma) * (b[i] - mb);
      da += (a[i] - ma) * (a[i] - ma);
      db += (b[i] - mb) * (b[i] - mb);
    }
    EXPECT_NEAR(ncc_score(a, b), num / std::sqrt(da * db), 1e-12);
  }
}

TEST(Step, FirstDetectionCreatesTrack) {
  TrackerState s(identity_cal(), CourtModel());
  const std::vector<features::Detection> dets{det_at({3, 4})};
  const auto ev = s.step(0, dets);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::entered);
  EXPECT_EQ(ev[0].track_id, 0);
  EXPECT_EQ(ev[0].position, (Point2{3, 4}));
  EXPECT_EQ(s.tracks().size(), 1u);
  EXPECT_EQ(s.next_track_id(), 1);
}

TEST(Step, TimeoutEmitsExit) {
  TrackerConfig cfg;
  cfg.max_missed = 5;
  TrackerState s(identity_cal(), CourtModel(), cfg);
  const std::vector<features::Detection> dets{det_at({0.0, 6.0})};
  s.step(0, dets);
  for (int f = 1; f <= cfg.max_missed; ++f) EXPECT_TRUE(s.step(f, {}).empty()) << f;
  const auto ev = s.step(cfg.max_missed + 1, {});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::exited);
  EXPECT_EQ(ev[0].track_id, 0);
  EXPECT_EQ(s.find(0)->status, TrackStatus::exited);
  EXPECT_LT(s.find(0)->last_seen, cfg.max_missed + 1);
}

TEST(Step, LeavingTheCourtEmitsExitWhileStillDetected) {
  TrackerConfig cfg;
  cfg.max_missed = 3;
  TrackerState s(identity_cal(), CourtModel(), cfg);
  double x = 0.3;
  std::vector<TrackEvent> all;
  for (int f = 0; f < 20; ++f, x -= 0.1) {
    const std::vector<features::Detection> dets{det_at({x, 6.0})};
    for (const auto& e : s.step(f, dets)) all.push_back(e);
  }
  ASSERT_GE(all.size(), 2u);
  EXPECT_EQ(all[0].kind, EventKind::entered);
  EXPECT_EQ(all[1].kind, EventKind::exited);
  EXPECT_LT(all[1].position.x, -CourtModel().boundary_margin());
  // Detections outside the court never start tracks.
  EXPECT_EQ(s.tracks().size(), 1u);
}

TEST(Step, TwoTracksExtendedWithoutEvents) {
  TrackerState s(identity_cal(), CourtModel());
  const std::vector<features::Detection> first{det_at({1, 1}), det_at({5, 5})};
  s.step(0, first);
  const std::vector<Point2> next{{5.2, 5.1}, {1.1, 1.0}};
  const std::vector<features::Detection> second{det_at(next[0]), det_at(next[1])};
  EXPECT_TRUE(s.step(1, second).empty());

  std::vector<std::vector<double>> cost(2, std::vector<double>(2));
  const Point2 starts[2] = {{1, 1}, {5, 5}};
  for (int t = 0; t < 2; ++t)
    for (int d = 0; d < 2; ++d) cost[t][d] = geometry::distance(starts[t], next[d]);
  const auto best = oracle::best_assignment(cost, s.config().gate_radius);
  for (TrackId id : {0, 1}) {
    const Track* t = s.find(id);
    ASSERT_EQ(t->points.size(), 2u);
    EXPECT_EQ(t->last_world(), next[*best[id]]);
  }
}

TEST(Step, NonMonotonicFrameLeavesStateUnchanged) {
  TrackerState s(identity_cal(), CourtModel());
  const std::vector<features::Detection> dets{det_at({3, 4})};
  s.step(5, dets);
  EXPECT_THROW(s.step(5, dets), NonMonotonicFrame);
  EXPECT_THROW(s.step(2, dets), NonMonotonicFrame);
  EXPECT_EQ(s.tracks().size(), 1u);
  EXPECT_EQ(s.tracks()[0].points.size(), 1u);
  EXPECT_EQ(*s.last_frame(), 5);
}

TEST(Step, CorrelationGateRejectsDissimilarAppearance) {
  TrackerConfig cfg;
  cfg.min_correlation = 0.5;
  TrackerState s(identity_cal(), CourtModel(), cfg);
  auto a = det_at({3, 4});
  a.appearance = {0.1, 0.9, 0.2, 0.8};
  s.step(0, std::vector{a});
  auto b = det_at({3.1, 4});
  b.appearance = {0.9, 0.1, 0.8, 0.2};  // anti-correlated
  const auto ev = s.step(1, std::vector{b});
  // Rejected match: the old track misses, the detection starts a new track.
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::entered);
  EXPECT_EQ(s.find(0)->missed, 1);

  auto c = det_at({3.1, 4.05});
  c.appearance = {0.88, 0.12, 0.79, 0.25};
  EXPECT_TRUE(s.step(2, std::vector{c}).empty());
  EXPECT_GT(*s.find(1)->points.back().correlation, 0.9);
}

TEST(Step, CustomAssociatorIsUsed) {
  TrackerConfig cfg;
  int calls = 0;
  cfg.associator = [&](std::span<const Track* const> t, std::span<const Point2> d, double g) {
    ++calls;
    return associate(t, d, g);
  };
  TrackerState s(identity_cal(), CourtModel(), cfg);
  s.step(0, std::vector{det_at({1, 1})});
  s.step(1, std::vector{det_at({1.1, 1})});
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(s.find(0)->points.size(), 2u);
}

TEST(Step, InvalidAssociatorOutputIsRejectedBeforeMutation) {
  TrackerConfig cfg;
  cfg.associator = [](std::span<const Track* const> t, std::span<const Point2>, double) {
    Assignment a;
    if (!t.empty()) {
      a.matches.push_back({t[0]->id, 0, 0.0});
      a.matches.push_back({t[0]->id, 1, 0.0});
    }
    return a;
  };
  TrackerState s(identity_cal(), CourtModel(), cfg);
  s.step(0, std::vector{det_at({1, 1})});
  EXPECT_THROW(s.step(1, std::vector{det_at({1, 1}), det_at({2, 2})}), Error);
  EXPECT_EQ(s.find(0)->points.size(), 1u);
  EXPECT_EQ(*s.last_frame(), 0);
}

TEST(TrajectoryWorld, Examples) {
  EXPECT_TRUE(trajectory_world(Track{}).empty());
  TrackerConfig cfg;
  cfg.gate_radius = 5.0;
  TrackerState s(identity_cal(), CourtModel(), cfg);
  s.step(0, std::vector{det_at({1, 2})});
  ASSERT_EQ(trajectory_world(s.tracks()[0]).size(), 1u);
  s.step(1, std::vector{det_at({3, 4})});
  const auto traj = trajectory_world(s.tracks()[0]);
  ASSERT_EQ(traj.size(), 2u);
  EXPECT_EQ(traj[0].frame, 0);
  EXPECT_EQ(traj[0].world, (Point2{1, 2}));
  EXPECT_EQ(traj[1].frame, 1);
  EXPECT_EQ(traj[1].world, (Point2{3, 4}));
}

TEST(TrackerProperty, NoiseFreePlayersKeepOneTrackEach) {
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> ux(0.5, 5.6), uy(0.5, 12.9), heading(0, 6.283);
  for (int trial = 0; trial < 50; ++trial) {
    // Four players far apart in y, each drifting at 2 m/s for 3 s.
    std::vector<Point2> pos;
    std::vector<Point2> vel;
    for (int i = 0; i < 4; ++i) {
      pos.push_back({ux(gen), 1.0 + 3.3 * i});
      const double h = heading(gen);
      vel.push_back({std::cos(h) * 2.0 / 30, std::sin(h) * 0.3 / 30});
    }
    TrackerState s(identity_cal(), CourtModel());
    std::map<int, std::set<TrackId>> owner;
    for (int f = 0; f < 90; ++f) {
      std::vector<features::Detection> dets;
      for (int i = 0; i < 4; ++i) {
        Point2 p{pos[i].x + vel[i].x * f, pos[i].y + vel[i].y * f};
        p.x = std::clamp(p.x, 0.1, 6.0);
        dets.push_back(det_at(p));
      }
      s.step(f, dets);
      for (const auto& t : s.tracks())
        if (t.last_seen == f)
          for (int i = 0; i < 4; ++i)
            if (t.last_world() == dets[i].foot_point) owner[i].insert(t.id);
    }
    for (int i = 0; i < 4; ++i) EXPECT_EQ(owner[i].size(), 1u);
    EXPECT_EQ(s.tracks().size(), 4u);
  }
}

TEST(TrackerProperty, EventAndTrackInvariantsUnderRandomDetections) {
  std::mt19937_64 gen(45);
  std::uniform_real_distribution<double> ux(-1.0, 7.0), uy(-1.0, 14.5);
  std::uniform_int_distribution<int> count(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    TrackerState s(identity_cal(), CourtModel());
    std::set<TrackId> entered;
    for (int f = 0; f < 40; ++f) {
      std::vector<features::Detection> dets;
      for (int k = count(gen); k > 0; --k) dets.push_back(det_at({ux(gen), uy(gen)}));
      for (const auto& e : s.step(f, dets)) {
        if (e.kind == EventKind::entered) {
          EXPECT_TRUE(entered.insert(e.track_id).second);
        } else {
          EXPECT_TRUE(entered.count(e.track_id)) << "exit before entry";
          EXPECT_LT(s.find(e.track_id)->last_seen, f + 1);
        }
      }
      std::set<TrackId> ids;
      for (const auto& t : s.tracks()) {
        EXPECT_TRUE(ids.insert(t.id).second);
        EXPECT_LT(t.id, s.next_track_id());
        for (std::size_t i = 1; i < t.points.size(); ++i)
          EXPECT_LT(t.points[i - 1].frame, t.points[i].frame);
        for (const auto& p : t.points) {
          const Point2 w = s.calibration().image_to_world(p.image);
          EXPECT_NEAR(w.x, p.world.x, 1e-12);
          EXPECT_NEAR(w.y, p.world.y, 1e-12);
        }
      }
    }
  }
}
