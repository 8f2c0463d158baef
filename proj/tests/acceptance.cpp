// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "gradcheck.hpp"
#include "oracles.hpp"

#include "mvtrack/assignment.hpp"
#include "mvtrack/cli.hpp"
#include "mvtrack/error.hpp"
#include "mvtrack/kalman.hpp"
#include "mvtrack/metrics.hpp"
#include "mvtrack/objective.hpp"
#include "mvtrack/pipeline.hpp"
#include "mvtrack/random.hpp"
#include "mvtrack/synth.hpp"
#include "mvtrack/toy_model.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace mvtrack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

Outcome assignment_oracle() {
  Outcome o;
  Rng rng(9001);
  const auto t0 = Clock::now();
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(7));
    const int m = 1 + static_cast<int>(rng.below(7));
    const double infeasible = rng.uniform(0.0, 0.4);
    Eigen::MatrixXd c(n, m);
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      // Integer costs with a few quarter steps: sums are exact in any order.
      c.data()[k] = rng.uniform() < infeasible ? kInfeasible
                                               : static_cast<double>(rng.below(400)) / 4.0 - 50.0;
    }
    const Matching got = solve_assignment(CostMatrix(c));
    const auto want = oracle::brute_assignment(c);
    if (static_cast<int>(got.pairs.size()) != want.cardinality || got.total_cost != want.cost) ++mismatches;
  }
  const double secs = seconds_since(t0);
  o.require(mismatches == 0, std::to_string(mismatches) + " of 1000 matrices differ from brute force");
  o.require(secs < 5.0, "runtime " + fmt(secs) + " s");
  o.note("1000 matrices up to 7x7, " + fmt(secs, 3) + " s");
  return o;
}

BoundingBox cv_box(int t) {
  const double h = 60 + 0.3 * t;
  return {200 + 2.5 * t - 0.2 * h, 120 - 1.1 * t - 0.5 * h, 0.4 * h, h};
}

Outcome kalman_exactness() {
  Outcome o;
  // Noiseless motion: no process noise and a vanishing measurement noise
  // (exactly zero makes the innovation singular after two updates).
  KalmanConfig exact;
  exact.process_noise_scale = 0.0;
  exact.measurement_noise_scale = 1e-12;
  KalmanState s = kf_init(cv_box(0), exact);
  double worst = 0.0;
  for (int t = 1; t <= 100; ++t) {
    s = kf_predict(s, exact);
    if (t > 2) {
      const MeasurementVector z = to_measurement(cv_box(t));
      worst = std::max(worst, (s.mean.head<2>() - z.head<2>()).cwiseAbs().maxCoeff());
    }
    s = kf_update(s, cv_box(t), exact);
  }
  o.require(worst < 1e-9, "position error " + fmt(worst));

  KalmanState g = kf_init({300, 200, 40, 90});
  for (int t = 1; t <= 8; ++t) g = kf_update(kf_predict(g), {300.0 + 2 * t, 200.0 - t, 40, 90});
  g = kf_predict(g);
  const auto [mean, cov] = kf_project(g);
  const MeasurementMatrix l = Eigen::LLT<MeasurementMatrix>(cov).matrixL();
  Rng rng(9002);
  const int n = 100000;
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    MeasurementVector e;
    for (int k = 0; k < 4; ++k) e(k) = rng.normal();
    inside += mahalanobis(g, MeasurementVector(mean + l * e)) <= kGateChi2_4dof;
  }
  const double rate = static_cast<double>(inside) / n;
  o.require(std::abs(rate - 0.95) <= 0.01, "gate acceptance " + fmt(rate));
  o.note("predicted position error " + fmt(worst, 3) + " after 2 updates, gate accepts " + fmt(100 * rate) +
         "% of 100000 samples");
  return o;
}

Outcome loss_kernels() {
  Outcome o;
  auto one = [](double p, double t) {
    Eigen::MatrixXd a(1, 1), b(1, 1);
    a << p;
    b << t;
    return smooth_l1(a, b);
  };
  o.require(one(0.3, 0.3) == 0.0, "smooth_l1(d=0)");
  o.require(one(0.5, 0.0) == 0.125, "smooth_l1(d=0.5)");
  o.require(one(0.0, 2.0) == 1.5, "smooth_l1(d=2)");

  Rng rng(9003);
  const PatchGrid grid = PatchGrid::make(8, 8, 2, 2);
  int leaks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const MaskPlan plan = sample_shared_mask(grid, 0.75, trial, 5);
    PatchTensor orig{grid, 3, Eigen::MatrixXd(grid.patch_count(), 12)};
    for (Eigen::Index k = 0; k < orig.values.size(); ++k) orig.values.data()[k] = rng.uniform();
    PatchTensor recon = orig;
    for (Eigen::Index k = 0; k < recon.values.size(); ++k) recon.values.data()[k] += rng.normal(0, 0.2);
    const double base = masked_mse(recon, orig, plan);
    PatchTensor moved = recon;
    for (int p : plan.visible) {
      for (Eigen::Index c = 0; c < moved.values.cols(); ++c) moved.values(p, c) += rng.normal(0, 5.0);
    }
    leaks += masked_mse(moved, orig, plan) != base;
  }
  o.require(leaks == 0, std::to_string(leaks) + " visible-patch perturbations changed masked_mse");

  std::vector<double> x(1000), y(10000), z(10000);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.uniform();
  for (auto& v : z) v = rng.uniform();
  const double same = nmi_scalar(x, x);
  const double indep = nmi_scalar(y, z);
  const double flat = nmi_scalar(std::vector<double>(1000, 2.0), x);
  o.require(std::abs(same - 1.0) <= 1e-12, "nmi identical " + fmt(same, 17));
  o.require(indep < 0.05, "nmi independent " + fmt(indep));
  o.require(flat == 0.0, "nmi constant " + fmt(flat));
  o.note("smooth_l1 0/0.125/1.5, nmi identical " + fmt(same, 12) + ", independent " + fmt(indep, 3) +
         ", constant " + fmt(flat));
  return o;
}

Outcome shared_masks() {
  Outcome o;
  const PatchGrid grid = PatchGrid::make(224, 224, 16, 16);
  Rng rng(9004);
  int bad = 0;
  std::string sizes;
  for (double rho : {0.5, 0.75, 0.9}) {
    const long want = std::lround(rho * 196);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto frame = static_cast<std::int64_t>(rng.below(100000));
      const std::uint64_t seed = rng.next();
      std::vector<MaskPlan> views;
      for (int v = 0; v < 4; ++v) views.push_back(sample_shared_mask(grid, rho, frame, seed));
      for (const auto& p : views) {
        bad += p.masked != views[0].masked;
        bad += static_cast<long>(p.masked.size()) != want;
        bad += static_cast<int>(p.masked.size() + p.visible.size()) != 196;
      }
    }
    sizes += (sizes.empty() ? "" : "/") + std::to_string(196 - want);
  }
  o.require(bad == 0, std::to_string(bad) + " mask violations");
  o.note("3000 (frame, seed) pairs at V=4, visible counts " + sizes);
  return o;
}

Outcome gradient_check() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  int batches = 0;
  for (double init : {0.01, 0.3}) {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
      for (double rho : {0.5, 0.75}) {
        ToyTrainConfig cfg;
        cfg.seed = seed;
        cfg.encoder_init = init;
        const auto mb = gradcheck::micro_batch(seed, 4, rho);
        const auto errors = gradcheck::check(mb.dets, mb.plan, ToyEncoderParams::init(12, cfg),
                                             teacher_projection(12, cfg.teacher_dim, cfg.teacher_seed), cfg);
        for (const auto& e : errors) {
          if (e.worst > worst) {
            worst = e.worst;
            where = e.name;
          }
        }
        ++batches;
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-4, "worst relative error " + fmt(worst) + " in " + where);
  o.require(secs < 60.0, "runtime " + fmt(secs) + " s");
  o.note(std::to_string(batches) + " micro-batches, worst relative error " + fmt(worst, 3) + " (" + where + "), " +
         fmt(secs, 3) + " s");
  return o;
}

struct Snapshot {
  double probe_a = 0.0, probe_s = 0.0, aidf1 = 0.0;
};

Snapshot measure(const Scenario& base, const ToyEncoderParams& params) {
  Scenario s = base;
  embed_scene(s.scene, params);
  std::vector<std::vector<double>> fa, fs;
  std::vector<int> cams;
  for (const Detection* d : balanced_probe_set(s.scene)) {
    fa.push_back(d->embedding->agnostic);
    fs.push_back(d->embedding->specific);
    cams.push_back(d->camera);
  }
  Snapshot out;
  out.probe_a = camera_probe(fa, cams);
  out.probe_s = camera_probe(fs, cams);
  out.aidf1 = cross_view_scores(s.truth, run_tracking(s.scene), s.scene.num_cameras).aidf1;
  return out;
}

Outcome training_specialization() {
  Outcome o;
  const auto t0 = Clock::now();
  SynthConfig sc;  // 8 identities, 3 cameras, 200 frames, seed 7
  sc.with_crops = true;
  const Scenario s = generate(sc);
  const ToyTrainConfig cfg;  // 50 epochs
  const ToyEncoderParams start = ToyEncoderParams::init(s.scene.frames[0].cameras[0].at(0).crop->patch_dim(), cfg);
  const TrainResult r = train(s.scene, cfg, start);
  const Snapshot before = measure(s, start);
  const Snapshot after = measure(s, r.params);
  const double secs = seconds_since(t0);
  const double chance = 1.0 / sc.num_cameras;
  const double l0 = r.curve.front().total, l1 = r.curve.back().total;
  o.require(l1 < l0, "loss " + fmt(l0) + " -> " + fmt(l1));
  o.require(after.probe_s - after.probe_a >= 0.20,
            "probe gap " + fmt(100 * (after.probe_s - after.probe_a), 3) + " points");
  o.require(std::abs(after.probe_a - chance) <= 0.15, "f_a probe " + fmt(100 * after.probe_a, 3) + "% vs chance");
  o.require(after.aidf1 - before.aidf1 >= 0.10,
            "AIDF1 " + fmt(100 * before.aidf1, 3) + " -> " + fmt(100 * after.aidf1, 3));
  o.require(secs < 300.0, "runtime " + fmt(secs) + " s");
  o.note("loss " + fmt(l0) + " -> " + fmt(l1) + ", probe f_a " + fmt(100 * after.probe_a, 3) + "% f_s " +
         fmt(100 * after.probe_s, 3) + "% (chance " + fmt(100 * chance, 3) + "%), AIDF1 untrained " +
         fmt(100 * before.aidf1, 3) + " trained " + fmt(100 * after.aidf1, 3) + ", " + fmt(secs, 3) + " s");
  return o;
}

Outcome metric_identities() {
  Outcome o;
  // A averages MOTA with MHAA, F averages IDF1 with AIDF1.
  const auto t1 = overall(67.3, 50.4, 95.0, 40.6);
  const auto t2 = overall(57.9, 59.6, 0.0, 0.0);
  const std::string f = format_one_decimal(t1.second), a = format_one_decimal(t1.first);
  const std::string f2 = format_one_decimal(t2.second);
  o.require(f == "58.9", "F renders as " + f);
  o.require(a == "67.8", "A renders as " + a);
  o.require(f2 == "58.8", "second F renders as " + f2);
  o.note("mean(67.3, 50.4) -> " + f + ", mean(95.0, 40.6) -> " + a + ", mean(57.9, 59.6) -> " + f2);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

fs::path workdir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "mvtrack_acceptance" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Outcome perfect_end_to_end() {
  Outcome o;
  const std::string d = workdir("perfect").string();
  o.require(cli({"simulate", "--out", d, "--miss-rate", "0", "--view-noise", "0", "--orthogonal"}) == 0, "simulate");
  o.require(cli({"track", "--detections", d + "/detections.csv", "--embeddings", d + "/embeddings.csv", "--out",
                 d + "/results.csv"}) == 0,
            "track");
  std::string report;
  o.require(cli({"eval", "--gt", d + "/gt.csv", "--results", d + "/results.csv", "--out-json", d + "/report.json"},
                &report) == 0,
            "eval");
  if (!o.pass) return o;
  // Row: scenario,IDP,IDR,IDF1,MOTA,HOTA,AIDP,AIDR,AIDF1,MHAA,A,F
  const std::string row = report.substr(report.find('\n') + 1);
  std::vector<std::string> cells;
  std::stringstream ss(row.substr(0, row.find('\n')));
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  o.require(cells.size() == 12, "report row has " + std::to_string(cells.size()) + " cells");
  if (!o.pass) return o;
  for (int k : {3, 4, 5, 8, 9}) o.require(cells[k] == "100.0", "column " + std::to_string(k) + " = " + cells[k]);
  const std::string json = slurp(d + "/report.json");
  o.require(json.find("\"IDSW\": 0,") != std::string::npos, "IDSW is not 0");
  o.note("IDF1 " + cells[3] + " MOTA " + cells[4] + " HOTA " + cells[5] + " AIDF1 " + cells[8] + " MHAA " +
         cells[9] + ", IDSW 0");
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  Rng rng(9009);
  int idtp_bad = 0, hota_bad = 0;
  const int n = 500;
  for (int trial = 0; trial < n; ++trial) {
    const auto inst = oracle::random_instance(rng, 5, 2, 6);
    idtp_bad += id_scores(inst.gt, inst.pred).idtp != oracle::brute_idtp(inst.gt, inst.pred, 0.5);
    const HotaResult h = hota(inst.gt, inst.pred);
    const auto b = oracle::brute_hota(inst.gt, inst.pred);
    hota_bad += h.hota != b.hota || h.det_a != b.det_a || h.ass_a != b.ass_a;
  }
  o.require(idtp_bad == 0, std::to_string(idtp_bad) + " IDF1 mismatches");
  o.require(hota_bad == 0, std::to_string(hota_bad) + " HOTA mismatches");
  o.note(std::to_string(n) + " random instances (<= 5 ids, <= 2 cameras, <= 6 frames), exact agreement");
  return o;
}

struct Run {
  MetricReport report;
  TrackingResult local;
};

Run track_and_score(const Scenario& s) {
  const PipelineOutput out = run_tracking_detailed(s.scene);
  return {evaluate(s.truth, out.global, s.scene.num_cameras), out.local};
}

double camera_idf1(const Scenario& s, const TrackingResult& local, int camera) {
  return id_scores(s.truth.only_camera(camera), local.only_camera(camera)).idf1;
}

Outcome dynamic_cameras() {
  Outcome o;
  const Scenario base = generate(SynthConfig{});
  const int broken = 2;
  const Scenario down = perturb_malfunction(base, {broken});
  const Scenario cropped = perturb_misalign(base, broken, 0.9, 7);
  const Run b = track_and_score(base), m = track_and_score(down), c = track_and_score(cropped);
  o.require(*m.report.aidf1 < *b.report.aidf1,
            "AIDF1 " + fmt(100 * *b.report.aidf1, 3) + " -> " + fmt(100 * *m.report.aidf1, 3));
  for (int v = 0; v < base.scene.num_cameras; ++v) {
    if (v == broken) continue;
    const double before = camera_idf1(base, b.local, v), after = camera_idf1(down, m.local, v);
    o.require(before == after, "camera " + std::to_string(v) + " IDF1 " + fmt(before) + " -> " + fmt(after));
  }
  const double drop_m = *b.report.overall_f - *m.report.overall_f;
  const double drop_c = *b.report.overall_f - *c.report.overall_f;
  o.require(drop_c < drop_m, "F drop misaligned " + fmt(100 * drop_c, 3) + " vs malfunction " + fmt(100 * drop_m, 3));
  o.note("AIDF1 " + fmt(100 * *b.report.aidf1, 3) + " -> " + fmt(100 * *m.report.aidf1, 3) +
         " with camera 2 down, other cameras' IDF1 unchanged; F " + fmt(100 * *b.report.overall_f, 3) +
         " -> misaligned " + fmt(100 * *c.report.overall_f, 3) + ", malfunction " +
         fmt(100 * *m.report.overall_f, 3));
  return o;
}

Outcome determinism() {
  Outcome o;
  std::vector<std::string> files;
  auto pass = [&](const fs::path& root) {
    const std::string d = root.string();
    bool ok = true;
    ok &= cli({"simulate", "--out", d + "/sim", "--frames", "80"}) == 0;
    ok &= cli({"track", "--detections", d + "/sim/detections.csv", "--embeddings", d + "/sim/embeddings.csv",
               "--out", d + "/track/results.csv", "--local-out", d + "/track/local.csv"}) == 0;
    ok &= cli({"eval", "--gt", d + "/sim/gt.csv", "--results", d + "/track/results.csv", "--out-csv",
               d + "/eval/report.csv", "--out-json", d + "/eval/report.json"}) == 0;
    ok &= cli({"train-toy", "--out", d + "/toy", "--frames", "40", "--epochs", "3"}) == 0;
    ok &= cli({"probe", "--detections", d + "/toy/detections.csv", "--embeddings", d + "/toy/embeddings.csv",
               "--out", d + "/probe/probe.csv"}) == 0;
    ok &= cli({"sweep", "--out", d + "/sweep", "--frames", "30", "--epochs", "2", "--rhos", "0.5", "0.9"}) == 0;
    return ok;
  };
  const fs::path a = workdir("det_a"), b = workdir("det_b");
  o.require(pass(a), "first run failed");
  o.require(pass(b), "second run failed");
  if (!o.pass) return o;
  int compared = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ++compared;
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) {
      ++differ;
      o.require(false, rel.string() + " differs");
    }
  }
  o.require(compared >= 15, "only " + std::to_string(compared) + " files written");
  o.note(std::to_string(compared) + " files from simulate, track, eval, train-toy, probe and sweep, " +
         std::to_string(compared - differ) + " byte-identical");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"assignment oracle", assignment_oracle},
      {"kalman exactness", kalman_exactness},
      {"loss kernels", loss_kernels},
      {"shared-mask invariant", shared_masks},
      {"gradient check", gradient_check},
      {"training descent and specialization", training_specialization},
      {"metric identities", metric_identities},
      {"perfect-input end-to-end", perfect_end_to_end},
      {"IDF1/HOTA oracles", metric_oracles},
      {"dynamic cameras", dynamic_cameras},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (k + 1) << " " << criteria[k].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
