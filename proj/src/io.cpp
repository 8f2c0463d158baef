#include "mvtrack/io.hpp"

#include "mvtrack/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mvtrack::io {

namespace fs = std::filesystem;

std::string format_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_significant(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

struct CsvLine {
  int number = 0;
  std::vector<std::string> fields;
};

std::vector<CsvLine> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<CsvLine> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    CsvLine l;
    l.number = number;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      l.fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (line.back() == ',') l.fields.emplace_back();
    lines.push_back(std::move(l));
  }
  return lines;
}

bool looks_like_header(const CsvLine& l) {
  if (l.fields.empty() || l.fields[0].empty()) return false;
  const char c = l.fields[0][0];
  return !(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.');
}

class FieldReader {
 public:
  FieldReader(const fs::path& path, const CsvLine& line) : path_(path), line_(line) {}

  void expect_count(std::size_t n) const {
    if (line_.fields.size() != n) {
      throw ParseError(path_.string(), line_.number, static_cast<int>(std::min(line_.fields.size(), n)) + 1,
                       "expected " + std::to_string(n) + " fields, found " +
                           std::to_string(line_.fields.size()));
    }
  }

  int integer(std::size_t i) const {
    const std::string& f = line_.fields[i];
    int v = 0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) fail(i, "not an integer: '" + f + "'");
    return v;
  }

  double real(std::size_t i) const {
    const std::string& f = line_.fields[i];
    double v = 0.0;
    const char* begin = f.data();
    if (!f.empty() && f[0] == '+') ++begin;
    const auto res = std::from_chars(begin, f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
      fail(i, "not a finite number: '" + f + "'");
    }
    return v;
  }

  [[noreturn]] void fail(std::size_t i, const std::string& what) const {
    throw ParseError(path_.string(), line_.number, static_cast<int>(i) + 1, what);
  }

 private:
  const fs::path& path_;
  const CsvLine& line_;
};

struct BoxRow {
  int frame;
  int camera;
  int id;
  BoundingBox box;
  double confidence;
};

std::vector<BoxRow> parse_box_rows(const fs::path& path, std::size_t columns, bool id_required) {
  std::vector<BoxRow> rows;
  const auto lines = read_lines(path);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (k == 0 && looks_like_header(lines[k])) continue;
    FieldReader r(path, lines[k]);
    r.expect_count(columns);
    BoxRow row;
    row.frame = r.integer(0);
    row.camera = r.integer(1);
    row.id = r.integer(2);
    row.box = BoundingBox{r.real(3), r.real(4), r.real(5), r.real(6)};
    row.confidence = columns > 7 ? r.real(7) : 1.0;
    if (row.frame < 0) r.fail(0, "frame must be >= 0");
    if (row.camera < 0) r.fail(1, "camera must be >= 0");
    if (id_required && row.id <= 0) r.fail(2, "identity labels must be positive");
    if (!id_required && row.id != -1 && row.id <= 0) r.fail(2, "id must be positive or -1");
    if (row.box.width <= 0.0) r.fail(5, "width must be positive");
    if (row.box.height <= 0.0) r.fail(6, "height must be positive");
    if (columns > 7 && (row.confidence < 0.0 || row.confidence > 1.0)) {
      r.fail(7, "confidence must lie in [0, 1]");
    }
    rows.push_back(row);
  }
  return rows;
}

std::string box_fields(const BoundingBox& b) {
  return format_exact(b.left) + "," + format_exact(b.top) + "," + format_exact(b.width) + "," +
         format_exact(b.height);
}

}  // namespace

Scene parse_detections(const fs::path& path, int num_cameras) {
  const auto rows = parse_box_rows(path, 8, false);
  if (rows.empty()) return Scene::empty(num_cameras, 0, 0);
  int first = rows.front().frame, last = first, max_cam = 0;
  for (const auto& r : rows) {
    first = std::min(first, r.frame);
    last = std::max(last, r.frame);
    max_cam = std::max(max_cam, r.camera);
  }
  if (num_cameras > 0 && max_cam >= num_cameras) {
    throw InvalidArgument("detections reference camera " + std::to_string(max_cam) + " but V = " +
                          std::to_string(num_cameras));
  }
  Scene scene = Scene::empty(num_cameras > 0 ? num_cameras : max_cam + 1, first, last - first + 1);
  for (const auto& r : rows) {
    Detection d;
    d.frame = r.frame;
    d.camera = r.camera;
    d.label = r.id;
    d.box = r.box;
    d.confidence = r.confidence;
    scene.frames[r.frame - first].cameras[r.camera].push_back(std::move(d));
  }
  return scene;
}

void write_detections(const fs::path& path, const Scene& scene) {
  std::string out = "frame,camera,id,left,top,width,height,confidence\n";
  for (const auto& f : scene.frames) {
    for (const auto& cam : f.cameras) {
      for (const auto& d : cam) {
        out += std::to_string(d.frame) + "," + std::to_string(d.camera) + "," + std::to_string(d.label) +
               "," + box_fields(d.box) + "," + format_exact(d.confidence) + "\n";
      }
    }
  }
  write_text(path, out);
}

void write_embeddings(const fs::path& path, const Scene& scene) {
  int dim = -1;
  std::string body;
  for (const auto& f : scene.frames) {
    for (const auto& cam : f.cameras) {
      for (std::size_t i = 0; i < cam.size(); ++i) {
        const auto& d = cam[i];
        if (!d.embedding) throw InvalidArgument("detection without embedding");
        const auto full = d.embedding->concatenated();
        if (dim < 0) dim = static_cast<int>(full.size());
        if (static_cast<int>(full.size()) != dim) throw InvalidArgument("inconsistent embedding dims");
        body += std::to_string(d.frame) + "," + std::to_string(d.camera) + "," + std::to_string(i);
        for (double x : full) body += "," + format_significant(x, 6);
        body += "\n";
      }
    }
  }
  write_text(path, "dim=" + std::to_string(std::max(dim, 0)) + "\n" + body);
}

int attach_embeddings(const fs::path& path, Scene& scene) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string(), 1, 1, "missing 'dim=E' header");
  const CsvLine& head = lines.front();
  int dim = 0;
  {
    const std::string& f = head.fields.empty() ? std::string() : head.fields[0];
    if (head.fields.size() != 1 || f.rfind("dim=", 0) != 0) {
      throw ParseError(path.string(), head.number, 1, "expected header 'dim=E'");
    }
    const auto res = std::from_chars(f.data() + 4, f.data() + f.size(), dim);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size() || dim <= 0 || dim % 2 != 0) {
      throw ParseError(path.string(), head.number, 1, "embedding dimension must be a positive even integer");
    }
  }
  for (std::size_t k = 1; k < lines.size(); ++k) {
    FieldReader r(path, lines[k]);
    r.expect_count(static_cast<std::size_t>(dim) + 3);
    const int frame = r.integer(0);
    const int camera = r.integer(1);
    const int index = r.integer(2);
    const int slot = frame - scene.first_frame();
    if (slot < 0 || slot >= scene.num_frames()) r.fail(0, "frame not present in the detections");
    if (camera < 0 || camera >= scene.num_cameras) r.fail(1, "camera not present in the detections");
    auto& dets = scene.frames[slot].cameras[camera];
    if (index < 0 || index >= static_cast<int>(dets.size())) r.fail(2, "no such detection index");
    std::vector<double> full(dim);
    for (int j = 0; j < dim; ++j) full[j] = r.real(3 + static_cast<std::size_t>(j));
    dets[index].embedding = EmbeddingPair::split(full);
  }
  return dim;
}

TrackingResult parse_ground_truth(const fs::path& path) {
  TrackingResult out;
  for (const auto& r : parse_box_rows(path, 8, true)) {
    out.records.push_back(TrackRecord{r.frame, r.camera, r.id, r.box});
  }
  return out;
}

void write_ground_truth(const fs::path& path, const TrackingResult& truth) {
  std::string out = "frame,camera,id,left,top,width,height,confidence\n";
  for (const auto& r : truth.records) {
    out += std::to_string(r.frame) + "," + std::to_string(r.camera) + "," + std::to_string(r.id) + "," +
           box_fields(r.box) + ",1\n";
  }
  write_text(path, out);
}

TrackingResult parse_results(const fs::path& path) {
  TrackingResult out;
  for (const auto& r : parse_box_rows(path, 7, true)) {
    out.records.push_back(TrackRecord{r.frame, r.camera, r.id, r.box});
  }
  return out;
}

void write_results(const fs::path& path, const TrackingResult& result) {
  std::string out = "frame,camera,globalId,left,top,width,height\n";
  for (const auto& r : result.records) {
    out += std::to_string(r.frame) + "," + std::to_string(r.camera) + "," + std::to_string(r.id) + "," +
           box_fields(r.box) + "\n";
  }
  write_text(path, out);
}

std::string report_csv_header() { return "scenario,IDP,IDR,IDF1,MOTA,HOTA,AIDP,AIDR,AIDF1,MHAA,A,F"; }

std::string report_csv_row(const std::string& name, const MetricReport& m) {
  std::string row = name;
  for (const auto& v : {m.idp, m.idr, m.idf1, m.mota, m.hota, m.aidp, m.aidr, m.aidf1, m.mhaa,
                        m.overall_a, m.overall_f}) {
    row += "," + format_percent(v);
  }
  return row;
}

void write_report_csv(const fs::path& path, const std::string& name, const MetricReport& report) {
  write_text(path, report_csv_header() + "\n" + report_csv_row(name, report) + "\n");
}

std::string report_json(const std::string& name, const MetricReport& m) {
  using nlohmann::ordered_json;
  auto metric = [](const std::optional<double>& v) -> ordered_json {
    return v ? ordered_json(*v) : ordered_json("n/a");
  };
  ordered_json j;
  j["scenario"] = name;
  ordered_json metrics;
  metrics["IDP"] = metric(m.idp);
  metrics["IDR"] = metric(m.idr);
  metrics["IDF1"] = metric(m.idf1);
  metrics["MOTA"] = metric(m.mota);
  metrics["HOTA"] = metric(m.hota);
  metrics["AIDP"] = metric(m.aidp);
  metrics["AIDR"] = metric(m.aidr);
  metrics["AIDF1"] = metric(m.aidf1);
  metrics["MHAA"] = metric(m.mhaa);
  metrics["A"] = metric(m.overall_a);
  metrics["F"] = metric(m.overall_f);
  j["metrics"] = metrics;
  j["counts"] = ordered_json{{"FP", m.fp},         {"FN", m.fn},           {"IDSW", m.idsw},
                             {"IDTP", m.idtp},     {"IDFP", m.idfp},       {"IDFN", m.idfn},
                             {"crossTP", m.cross_tp}, {"crossFP", m.cross_fp}, {"crossFN", m.cross_fn}};
  return j.dump(2) + "\n";
}

void write_report_json(const fs::path& path, const std::string& name, const MetricReport& report) {
  write_text(path, report_json(name, report));
}

void write_loss_curve(const fs::path& path, const std::vector<LossReport>& curve) {
  std::string out = "epoch,lSep,lDistill,lRecon,total\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    const auto& r = curve[e];
    out += std::to_string(e) + "," + format_significant(r.sep, 8) + "," + format_significant(r.distill, 8) +
           "," + format_significant(r.recon, 8) + "," + format_significant(r.total, 8) + "\n";
  }
  write_text(path, out);
}

}  // namespace mvtrack::io
