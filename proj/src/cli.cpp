#include "mvtrack/cli.hpp"

#include "mvtrack/error.hpp"
#include "mvtrack/io.hpp"
#include "mvtrack/pipeline.hpp"
#include "mvtrack/synth.hpp"
#include "mvtrack/toy_model.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

namespace mvtrack {

namespace fs = std::filesystem;

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config.empty()) return rest;
  std::ifstream in(config);
  if (!in) throw IoError("cannot open config file " + config);
  auto given = [&](const std::string& key) {
    for (const auto& a : rest) {
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    }
    return false;
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(config, number, 1, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(config, number, 1, "empty key");
    if (given(key)) continue;
    if (value == "true") {
      rest.push_back("--" + key);
    } else if (value != "false") {
      rest.push_back("--" + key);
      rest.push_back(value);
    }
  }
  return rest;
}

namespace {

struct SimOptions {
  std::uint64_t seed = 7;
  int identities = 8;
  int cameras = 3;
  int frames = 200;
  int identity_dim = 8;
  double miss_rate = 0.02;
  double view_noise = 0.05;
  double view_mix = 0.2;
  double view_bias = 0.1;
  bool orthogonal = false;
  std::vector<int> malfunction;
  int misalign = -1;
  double crop_area = 0.9;
};

void add_sim_options(CLI::App* app, SimOptions& o) {
  app->add_option("--seed", o.seed, "Scenario seed");
  app->add_option("--identities", o.identities, "Number of identities")->check(CLI::NonNegativeNumber);
  app->add_option("--cameras", o.cameras, "Number of cameras")->check(CLI::PositiveNumber);
  app->add_option("--frames", o.frames, "Number of frames")->check(CLI::NonNegativeNumber);
  app->add_option("--identity-dim", o.identity_dim, "Latent identity dimension")->check(CLI::PositiveNumber);
  app->add_option("--miss-rate", o.miss_rate, "Probability of a missed detection");
  app->add_option("--view-noise", o.view_noise, "Embedding noise");
  app->add_option("--view-mix", o.view_mix, "Per-camera embedding distortion");
  app->add_option("--view-bias", o.view_bias, "Per-camera embedding offset");
  app->add_flag("--orthogonal", o.orthogonal, "Orthogonal identity latents");
  app->add_option("--malfunction", o.malfunction, "Cameras that deliver no detections");
  app->add_option("--misalign", o.misalign, "Camera whose image is cropped");
  app->add_option("--crop-area", o.crop_area, "Area fraction kept by --misalign");
}

SynthConfig sim_config(const SimOptions& o, bool crops) {
  SynthConfig c;
  c.seed = o.seed;
  c.num_identities = o.identities;
  c.num_cameras = o.cameras;
  c.num_frames = o.frames;
  c.identity_dim = o.identity_dim;
  c.miss_rate = o.miss_rate;
  c.view_noise = o.view_noise;
  c.view_mix = o.view_mix;
  c.view_bias = o.view_bias;
  c.orthogonal_latents = o.orthogonal;
  c.with_crops = crops;
  return c;
}

Scenario simulate_scenario(const SimOptions& o, bool crops) {
  Scenario s = generate(sim_config(o, crops));
  if (o.misalign >= 0) s = perturb_misalign(s, o.misalign, o.crop_area, o.seed);
  if (!o.malfunction.empty()) s = perturb_malfunction(s, std::set<int>(o.malfunction.begin(), o.malfunction.end()));
  return s;
}

struct TrackOptions {
  PipelineConfig pipeline;
};

void add_track_options(CLI::App* app, TrackOptions& o) {
  auto& t = o.pipeline.tracker;
  auto& x = o.pipeline.cross_view;
  app->add_option("--n-init", t.n_init, "Matches needed to confirm a tracklet");
  app->add_option("--max-age", t.max_age, "Missed frames before deletion");
  app->add_option("--gallery-size", t.gallery_size, "Appearance gallery length");
  app->add_option("--cosine-gate", t.cosine_gate, "Minimum appearance cosine");
  app->add_option("--motion-gate", t.motion_gate, "Squared Mahalanobis gate");
  app->add_option("--max-detections", t.max_detections, "Detections allowed per camera and frame");
  app->add_option("--merge-threshold", x.merge_threshold, "Cross-view cosine gate");
  app->add_option("--bank-threshold", x.bank_threshold, "Re-identification cosine gate");
}

struct ToyOptions {
  ToyTrainConfig train;
};

void add_toy_options(CLI::App* app, ToyOptions& o) {
  auto& c = o.train;
  app->add_option("--embed-dim", c.embed_dim, "Encoder width E");
  app->add_option("--distill-dim", c.distill_dim, "Distillation width");
  app->add_option("--teacher-dim", c.teacher_dim, "Teacher width");
  app->add_option("--lr", c.lr, "Learning rate");
  app->add_option("--epochs", c.epochs, "Training epochs");
  app->add_option("--batch-frames", c.batch_frames, "Frames per update");
  app->add_option("--train-seed", c.seed, "Initialization and mask seed");
  app->add_option("--teacher-seed", c.teacher_seed, "Teacher projection seed");
  app->add_option("--w-sep", c.weights.sep, "Separation loss weight");
  app->add_option("--w-distill", c.weights.distill, "Distillation loss weight");
  app->add_option("--w-recon", c.weights.recon, "Reconstruction loss weight");
  app->add_option("--normalize-targets", c.normalize_targets, "Per-patch normalized targets (true/false)");
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string params_json(const ToyEncoderParams& p, const ToyTrainConfig& c) {
  nlohmann::ordered_json j;
  j["config"] = {{"E", c.embed_dim},
                 {"Ed", c.distill_dim},
                 {"Et", c.teacher_dim},
                 {"rho", c.rho},
                 {"lr", c.lr},
                 {"epochs", c.epochs},
                 {"batchFrames", c.batch_frames},
                 {"seed", c.seed},
                 {"teacherSeed", c.teacher_seed},
                 {"weights", {c.weights.sep, c.weights.distill, c.weights.recon}},
                 {"normalizeTargets", c.normalize_targets}};
  p.for_each([&](const char* name, const Eigen::MatrixXd& m) { j[name] = matrix_json(m); });
  return j.dump(1) + "\n";
}

// Trains the toy encoder on a crop-bearing scenario and swaps the scene's
// embeddings for the learned unmasked encodings.
struct ToyRun {
  Scenario scenario;
  TrainResult trained;
};

ToyRun run_toy(const SimOptions& sim, const ToyTrainConfig& cfg) {
  ToyRun r;
  r.scenario = simulate_scenario(sim, true);
  r.trained = train(r.scenario.scene, cfg);
  embed_scene(r.scenario.scene, r.trained.params);
  return r;
}

int resolve_cameras(int requested, const TrackingResult& a, const TrackingResult& b) {
  if (requested > 0) return requested;
  return std::max(a.max_camera(), b.max_camera()) + 1;
}

std::string csv_number(double fraction) { return format_one_decimal(100.0 * fraction); }

}  // namespace

int run_cli(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibration-free multi-camera multi-object tracking toolkit", "mvtrack"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SimOptions sim;
  TrackOptions trk;
  ToyOptions toy;

  std::string out_dir;
  auto* simulate = app.add_subcommand("simulate", "Write detections, embeddings and ground truth of a synthetic scenario");
  simulate->add_option("--out", out_dir, "Output directory")->required();
  add_sim_options(simulate, sim);

  std::string det_path, emb_path, results_path, local_path;
  int cameras = 0;
  auto* track = app.add_subcommand("track", "Track detections with precomputed embeddings");
  track->add_option("--detections", det_path, "Detections CSV")->required();
  track->add_option("--embeddings", emb_path, "Embeddings CSV")->required();
  track->add_option("--out", results_path, "Results CSV")->required();
  track->add_option("--num-cameras", cameras, "Number of cameras (default: inferred)");
  track->add_option("--local-out", local_path, "Also write per-camera tracklet ids to this CSV");
  add_track_options(track, trk);

  std::string gt_path, report_csv, report_json_path, name = "run";
  double iou_threshold = 0.5;
  auto* eval = app.add_subcommand("eval", "Score results against ground truth");
  eval->add_option("--gt", gt_path, "Ground-truth CSV")->required();
  eval->add_option("--results", results_path, "Results CSV")->required();
  eval->add_option("--num-cameras", cameras, "Number of cameras (default: inferred)");
  eval->add_option("--iou", iou_threshold, "IoU threshold for a match");
  eval->add_option("--name", name, "Row label in the report");
  eval->add_option("--out-csv", report_csv, "Report CSV path");
  eval->add_option("--out-json", report_json_path, "Report JSON path");

  auto* train_toy = app.add_subcommand("train-toy", "Train the toy encoder on a synthetic scenario");
  train_toy->add_option("--out", out_dir, "Output directory")->required();
  train_toy->add_option("--rho", toy.train.rho, "Mask ratio");
  add_sim_options(train_toy, sim);
  add_toy_options(train_toy, toy);

  std::string probe_out;
  double held_out = 0.3;
  std::uint64_t probe_seed = 7;
  auto* probe = app.add_subcommand("probe", "Camera-classification probe on stored embeddings");
  probe->add_option("--detections", det_path, "Detections CSV")->required();
  probe->add_option("--embeddings", emb_path, "Embeddings CSV")->required();
  probe->add_option("--out", probe_out, "Probe CSV")->required();
  probe->add_option("--held-out", held_out, "Held-out fraction");
  probe->add_option("--seed", probe_seed, "Split seed");

  std::vector<double> rhos{0.5, 0.75, 0.9};
  auto* sweep = app.add_subcommand("sweep", "Train, track and score over several mask ratios");
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--rhos", rhos, "Mask ratios");
  add_sim_options(sweep, sim);
  add_toy_options(sweep, toy);
  add_track_options(sweep, trk);

  std::vector<std::string> args;
  try {
    args = expand_config(raw);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      const Scenario s = simulate_scenario(sim, false);
      const fs::path dir(out_dir);
      io::write_detections(dir / "detections.csv", s.scene);
      io::write_embeddings(dir / "embeddings.csv", s.scene);
      io::write_ground_truth(dir / "gt.csv", s.truth);
      out << "simulate: " << s.scene.detection_count() << " detections, " << s.truth.records.size()
          << " ground-truth boxes -> " << dir.string() << "\n";
    } else if (track->parsed()) {
      if (!fs::exists(det_path)) throw IoError("missing detections file " + det_path);
      if (!fs::exists(emb_path)) throw IoError("missing embeddings file " + emb_path);
      Scene scene = io::parse_detections(det_path, cameras);
      io::attach_embeddings(emb_path, scene);
      const PipelineOutput both = run_tracking_detailed(scene, trk.pipeline);
      const TrackingResult& result = both.global;
      io::write_results(results_path, result);
      if (!local_path.empty()) io::write_results(local_path, both.local);
      out << "track: " << result.records.size() << " records -> " << results_path << "\n";
    } else if (eval->parsed()) {
      if (!fs::exists(gt_path)) throw IoError("missing ground-truth file " + gt_path);
      if (!fs::exists(results_path)) throw IoError("missing results file " + results_path);
      const TrackingResult gt = io::parse_ground_truth(gt_path);
      const TrackingResult pred = io::parse_results(results_path);
      const int v = resolve_cameras(cameras, gt, pred);
      const MetricReport report = evaluate(gt, pred, v, iou_threshold);
      if (!report_csv.empty()) io::write_report_csv(report_csv, name, report);
      if (!report_json_path.empty()) io::write_report_json(report_json_path, name, report);
      out << io::report_csv_header() << "\n" << io::report_csv_row(name, report) << "\n";
    } else if (train_toy->parsed()) {
      const ToyRun r = run_toy(sim, toy.train);
      const fs::path dir(out_dir);
      io::write_text(dir / "params.json", params_json(r.trained.params, toy.train));
      io::write_loss_curve(dir / "loss.csv", r.trained.curve);
      io::write_detections(dir / "detections.csv", r.scenario.scene);
      io::write_embeddings(dir / "embeddings.csv", r.scenario.scene);
      io::write_ground_truth(dir / "gt.csv", r.scenario.truth);
      if (!r.trained.curve.empty()) {
        out << "train-toy: total loss " << r.trained.curve.front().total << " -> " << r.trained.curve.back().total
            << "\n";
      }
    } else if (probe->parsed()) {
      if (!fs::exists(det_path)) throw IoError("missing detections file " + det_path);
      if (!fs::exists(emb_path)) throw IoError("missing embeddings file " + emb_path);
      Scene scene = io::parse_detections(det_path);
      io::attach_embeddings(emb_path, scene);
      std::vector<std::vector<double>> fa, fsp, merged;
      std::vector<int> labels;
      std::set<int> cams;
      // With identity labels, sample so that identity does not predict the camera.
      std::vector<const Detection*> picked;
      bool labeled = scene.detection_count() > 0;
      for (const auto& f : scene.frames) {
        for (const auto& cam : f.cameras) {
          for (const auto& d : cam) {
            if (!d.embedding) throw InvalidArgument("detection without embedding");
            labeled = labeled && d.label > 0;
            picked.push_back(&d);
          }
        }
      }
      if (labeled) picked = balanced_probe_set(scene);
      for (const Detection* d : picked) {
        fa.push_back(d->embedding->agnostic);
        fsp.push_back(d->embedding->specific);
        merged.push_back(d->embedding->concatenated());
        labels.push_back(d->camera);
        cams.insert(d->camera);
      }
      std::string text = "features,accuracy\n";
      text += "f_a," + csv_number(camera_probe(fa, labels, held_out, probe_seed)) + "\n";
      text += "f_s," + csv_number(camera_probe(fsp, labels, held_out, probe_seed)) + "\n";
      text += "merged," + csv_number(camera_probe(merged, labels, held_out, probe_seed)) + "\n";
      text += "chance," + csv_number(1.0 / static_cast<double>(cams.size())) + "\n";
      io::write_text(probe_out, text);
      out << text;
    } else if (sweep->parsed()) {
      const fs::path dir(out_dir);
      std::string text = "rho," + io::report_csv_header().substr(std::string("scenario,").size()) + "\n";
      for (double rho : rhos) {
        ToyTrainConfig cfg = toy.train;
        cfg.rho = rho;
        const ToyRun r = run_toy(sim, cfg);
        const TrackingResult result = run_tracking(r.scenario.scene, trk.pipeline);
        const MetricReport report = evaluate(r.scenario.truth, result, r.scenario.scene.num_cameras);
        const std::string label = io::format_significant(rho, 6);
        text += io::report_csv_row(label, report) + "\n";
        io::write_loss_curve(dir / ("loss_rho" + label + ".csv"), r.trained.curve);
      }
      io::write_text(dir / "sweep.csv", text);
      out << text;
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const UndefinedMetric& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace mvtrack
