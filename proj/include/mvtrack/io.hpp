#pragma once

#include "mvtrack/metrics.hpp"
#include "mvtrack/objective.hpp"
#include "mvtrack/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvtrack::io {

// Detections: frame,camera,id,left,top,width,height,confidence (header optional).
// `num_cameras` of 0 infers V from the largest camera index.
Scene parse_detections(const std::filesystem::path& path, int num_cameras = 0);
void write_detections(const std::filesystem::path& path, const Scene& scene);

// Embeddings: "dim=E" header, then frame,camera,detIndex,v1..vE. The detection
// index counts rows of one (frame, camera) in detections-file order.
void write_embeddings(const std::filesystem::path& path, const Scene& scene);
// Attaches embeddings to the matching detections of `scene`; returns E.
int attach_embeddings(const std::filesystem::path& path, Scene& scene);

// Ground truth uses the detections layout with a mandatory id.
TrackingResult parse_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const TrackingResult& truth);

// Results: frame,camera,globalId,left,top,width,height.
TrackingResult parse_results(const std::filesystem::path& path);
void write_results(const std::filesystem::path& path, const TrackingResult& result);

// Report columns in table order: IDP,IDR,IDF1,MOTA,HOTA,AIDP,AIDR,AIDF1,MHAA,A,F.
std::string report_csv_header();
std::string report_csv_row(const std::string& name, const MetricReport& report);
void write_report_csv(const std::filesystem::path& path, const std::string& name,
                      const MetricReport& report);
std::string report_json(const std::string& name, const MetricReport& report);
void write_report_json(const std::filesystem::path& path, const std::string& name,
                       const MetricReport& report);

void write_loss_curve(const std::filesystem::path& path, const std::vector<LossReport>& curve);

// Shortest decimal that reads back to the same double.
std::string format_exact(double value);
std::string format_significant(double value, int digits);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mvtrack::io
