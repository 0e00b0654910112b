#pragma once

#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvloss/ap_eval.hpp"
#include "uvloss/gps.hpp"
#include "uvloss/numfmt.hpp"

namespace uvloss {

/// Schema or syntax error in an instance file, with the 1-based line number.
class JsonlError : public std::runtime_error {
 public:
  JsonlError(const std::string& path, int line, const std::string& msg)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + msg), line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string image_id_from_json(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<int64_t>());
  throw std::invalid_argument("image_id must be a string or integer");
}

inline InstanceRecord instance_from_json(const nlohmann::json& j, bool expect_score) {
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  InstanceRecord rec;
  rec.image_id = image_id_from_json(j.at("image_id"));
  if (expect_score) {
    rec.score = j.at("score").get<double>();
    if (!(rec.score >= 0.0 && rec.score <= 1.0)) {
      throw std::invalid_argument("score must be in [0, 1]");
    }
  } else if (j.contains("score")) {
    throw std::invalid_argument("ground-truth records must not carry a score");
  }
  const auto& mask = j.at("mask");
  const int w = mask.at("w").get<int>();
  const int h = mask.at("h").get<int>();
  std::vector<int64_t> runs;
  for (const auto& r : mask.at("rle")) runs.push_back(r.get<int64_t>());
  rec.mask = Mask::from_rle(w, h, runs);
  for (const auto& p : j.at("points")) {
    if (!p.is_array() || p.size() != 3) {
      throw std::invalid_argument("each point must be a [part, u, v] triple");
    }
    rec.points.emplace_back(p[0].get<int>(), p[1].get<double>(), p[2].get<double>());
  }
  if (rec.points.size() > 196) {
    throw std::invalid_argument("at most 196 points per instance");
  }
  if (!expect_score && rec.points.empty()) {
    throw std::invalid_argument("ground-truth instances must have at least one point");
  }
  return rec;
}

}  // namespace detail

/// Loads instance records from a JSON-lines file (one object per line; blank
/// lines ignored). Errors carry the offending line number.
inline std::vector<InstanceRecord> load_instances_jsonl(const std::string& path,
                                                        bool expect_score) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::vector<InstanceRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back(detail::instance_from_json(j, expect_score));
    } catch (const std::exception& e) {
      throw JsonlError(path, lineno, e.what());
    }
  }
  return out;
}

inline nlohmann::json instance_to_json(const InstanceRecord& rec, bool with_score) {
  nlohmann::json j;
  j["image_id"] = rec.image_id;
  if (with_score) j["score"] = rec.score;
  j["mask"] = {{"w", rec.mask.width()}, {"h", rec.mask.height()}, {"rle", rec.mask.to_rle()}};
  auto points = nlohmann::json::array();
  for (const SurfacePoint& p : rec.points) {
    points.push_back({p.part, p.u, p.v});
  }
  j["points"] = points;
  return j;
}

inline void write_instances_jsonl(const std::string& path,
                                  std::span<const InstanceRecord> records, bool with_score) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  for (const InstanceRecord& rec : records) {
    out << instance_to_json(rec, with_score).dump() << "\n";
  }
}

inline nlohmann::json ap_report_to_json(const ApReport& report) {
  nlohmann::json j;
  j["AP"] = report.ap;
  auto per = nlohmann::json::array();
  for (const ThresholdAp& t : report.per_threshold) {
    per.push_back({{"t", t.threshold}, {"ap", t.ap}});
  }
  j["per_threshold"] = per;
  j["n_images"] = report.n_images;
  j["n_instances"] = report.n_instances;
  return j;
}

inline void write_instance_metrics_csv(const std::string& path,
                                       std::span<const InstanceMetricsRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write per-instance CSV: " + path);
  out << "image_id,gps,iou,gpsm\n";
  for (const InstanceMetricsRow& r : rows) {
    out << r.image_id << "," << format_double(r.gps) << "," << format_double(r.iou) << ","
        << format_double(r.gpsm) << "\n";
  }
}

}  // namespace uvloss
