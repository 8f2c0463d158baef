#include "mvtrack/error.hpp"
#include "mvtrack/metrics.hpp"
#include "mvtrack/pipeline.hpp"
#include "mvtrack/random.hpp"
#include "mvtrack/synth.hpp"
#include "mvtrack/tracker.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace mvtrack;
using testing::axis;
using testing::make_detection;

namespace {

Detection det(int frame, double x, int identity) {
  return make_detection(frame, 0, {x, 100, 20, 40}, axis(4, identity), axis(4, identity), identity + 1);
}

// Confirmed, matched tracklets of one step as metric records.
void record(const std::vector<Tracklet>& live, int frame, TrackingResult& out) {
  for (const auto& t : live) {
    if (t.state == TrackState::Confirmed && t.matched_now()) {
      out.records.push_back({frame, t.camera, t.local_id, t.last_box});
    }
  }
}

}  // namespace

TEST_SUITE("tracker") {

TEST_CASE("a single detection starts a tentative tracklet") {
  SingleViewTracker tr(0);
  const Detection d = det(0, 10, 0);
  const auto& live = tr.step(0, std::span<const Detection>(&d, 1));
  REQUIRE(live.size() == 1);
  CHECK(live[0].state == TrackState::Tentative);
  CHECK(live[0].hits == 1);
  CHECK_FALSE(live[0].global_id.has_value());
}

TEST_CASE("three consecutive hits confirm with a stable local id") {
  SingleViewTracker tr(0);
  int id = -1;
  for (int f = 0; f < 10; ++f) {
    const Detection d = det(f, 10 + 2 * f, 0);
    const auto& live = tr.step(f, std::span<const Detection>(&d, 1));
    REQUIRE(live.size() == 1);
    if (f < 2) CHECK(live[0].state == TrackState::Tentative);
    else CHECK(live[0].state == TrackState::Confirmed);
    if (id < 0) id = live[0].local_id;
    CHECK(live[0].local_id == id);
  }
}

TEST_CASE("a tentative tracklet that misses a frame is dropped") {
  SingleViewTracker tr(0);
  const Detection d = det(0, 10, 0);
  tr.step(0, std::span<const Detection>(&d, 1));
  CHECK(tr.step(1, {}).empty());
}

TEST_CASE("crossing objects with separated features keep their ids") {
  SingleViewTracker tr(0);
  TrackingResult gt, pred;
  for (int f = 0; f < 60; ++f) {
    std::vector<Detection> dets{det(f, 3.0 * f, 0), det(f, 180 - 3.0 * f, 1)};
    for (const auto& d : dets) gt.records.push_back({f, 0, d.label, d.box});
    record(tr.step(f, dets), f, pred);
  }
  const MotaResult m = mota(gt, pred);
  CHECK(m.id_switches == 0);
  CHECK(id_scores(gt, pred).idfp == 0);
}

TEST_CASE("deterministic ids, no reuse, deletion after max age") {
  TrackerConfig cfg;
  cfg.max_age = 4;
  auto run = [&](std::vector<std::vector<int>>& history) {
    SingleViewTracker tr(0, cfg);
    Rng rng(401);
    int highest = 0;
    for (int f = 0; f < 120; ++f) {
      std::vector<Detection> dets;
      for (int i = 0; i < 4; ++i) {
        // Objects blink in and out so tracklets are created and deleted.
        if (rng.uniform() < (f / 20 % 2 == 0 ? 0.9 : 0.2)) dets.push_back(det(f, 50.0 * i + 0.5 * f, i));
      }
      std::vector<int> ids;
      for (const auto& t : tr.step(f, dets)) {
        ids.push_back(t.local_id);
        if (t.local_id > highest) {
          CHECK(t.born_at == f);
          highest = t.local_id;
        }
        CHECK(t.age <= cfg.max_age);
        CHECK(t.gallery.size() <= static_cast<std::size_t>(cfg.gallery_size));
      }
      history.push_back(ids);
    }
  };
  std::vector<std::vector<int>> a, b;
  run(a);
  run(b);
  CHECK(a == b);
}

TEST_CASE("confirmed tracklet disappears after max age plus one misses") {
  TrackerConfig cfg;
  cfg.max_age = 3;
  SingleViewTracker tr(0, cfg);
  for (int f = 0; f < 5; ++f) {
    const Detection d = det(f, 10, 0);
    tr.step(f, std::span<const Detection>(&d, 1));
  }
  for (int miss = 1; miss <= cfg.max_age; ++miss) CHECK(tr.step(4 + miss, {}).size() == 1);
  CHECK(tr.step(5 + cfg.max_age, {}).empty());
}

TEST_CASE("gallery is bounded") {
  TrackerConfig cfg;
  cfg.gallery_size = 5;
  SingleViewTracker tr(0, cfg);
  for (int f = 0; f < 20; ++f) {
    const Detection d = det(f, 10, 0);
    const auto& live = tr.step(f, std::span<const Detection>(&d, 1));
    CHECK(live[0].gallery.size() == std::min<std::size_t>(f + 1, 5));
  }
}

TEST_CASE("input validation") {
  SingleViewTracker tr(1);
  const Detection wrong_camera = det(0, 10, 0);
  CHECK_THROWS_AS(tr.step(0, std::span<const Detection>(&wrong_camera, 1)), InvalidArgument);
  Detection wrong_frame = det(3, 10, 0);
  wrong_frame.camera = 1;
  CHECK_THROWS_AS(tr.step(0, std::span<const Detection>(&wrong_frame, 1)), InvalidArgument);
  std::vector<Detection> many;
  for (int i = 0; i < 11; ++i) {
    many.push_back(det(0, 30.0 * i, i));
    many.back().camera = 1;
  }
  CHECK_THROWS_AS(tr.step(0, many), InvalidArgument);
  TrackerConfig bad;
  bad.n_init = 0;
  CHECK_THROWS_AS(SingleViewTracker(0, bad), InvalidArgument);
  bad = {};
  bad.cosine_gate = 1.5;
  CHECK_THROWS_AS(SingleViewTracker(0, bad), InvalidArgument);
}

TEST_CASE("perfect detections with orthogonal features never mix identities") {
  // Identities bounce off the plane border; the velocity flip can fail the
  // motion gate and fragment a local track, but a tracklet never holds two
  // identities, and the global ids re-join the fragments.
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    SynthConfig sc;
    sc.seed = seed;
    sc.miss_rate = 0.0;
    sc.view_noise = 0.0;
    sc.orthogonal_latents = true;
    const Scenario s = generate(sc);
    const PipelineOutput out = run_tracking_detailed(s.scene);
    std::map<std::pair<int, int>, std::set<int>> covers;
    for (const auto& f : s.scene.frames) {
      for (const auto& cam : f.cameras) {
        for (const auto& d : cam) {
          for (const auto& r : out.local.records) {
            if (r.frame == d.frame && r.camera == d.camera && r.box == d.box) covers[{r.camera, r.id}].insert(d.label);
          }
        }
      }
    }
    for (const auto& [key, ids] : covers) CHECK(ids.size() == 1);
    for (int v = 0; v < sc.num_cameras; ++v) {
      CHECK(id_scores(s.truth.only_camera(v), out.global.only_camera(v)).idf1 == 1.0);
    }
  }
}

}  // TEST_SUITE
