#include "lus/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lus/error.hpp"
#include "lus/image.hpp"
#include "lus/rng.hpp"

namespace lus {

using nlohmann::json;

const char* label_name(Label label) { return label == Label::Covid ? "covid" : "healthy"; }

std::vector<std::string> DatasetManifest::video_ids() const {
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.video_id).second) ids.push_back(r.video_id);
  }
  return ids;
}

std::size_t DatasetManifest::count_label(Label label) const {
  std::size_t n = 0;
  for (const auto& r : records) n += (r.label == label) ? 1 : 0;
  return n;
}

std::vector<std::int64_t> select_frames(std::int64_t frame_count, std::int64_t stride) {
  if (stride < 1) throw DataError("select_frames: stride must be >= 1");
  std::vector<std::int64_t> indices;
  for (std::int64_t i = 0; i < frame_count; i += stride) indices.push_back(i);
  return indices;
}

namespace {

std::string line_err(const std::filesystem::path& path, std::size_t line, const std::string& why) {
  return path.string() + ":" + std::to_string(line) + ": " + why;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());

  DatasetManifest manifest;
  manifest.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, std::unordered_set<std::int64_t>> frames_per_video;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(line_err(path, line_no, std::string("malformed JSON: ") + e.what()));
    }
    if (!j.is_object()) throw DataError(line_err(path, line_no, "record must be a JSON object"));

    SampleRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.video_id = j.at("video_id").get<std::string>();
      r.frame_index = j.at("frame_index").get<std::int64_t>();
      const auto label = j.at("label").get<std::string>();
      if (label == "covid") {
        r.label = Label::Covid;
      } else if (label == "healthy") {
        r.label = Label::Healthy;
      } else {
        throw DataError(line_err(path, line_no, "unknown label '" + label + "'"));
      }
      r.image_path = manifest.root / j.at("image_path").get<std::string>();
      if (j.contains("mask_path") && !j.at("mask_path").is_null()) {
        r.mask_path = manifest.root / j.at("mask_path").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw DataError(line_err(path, line_no, std::string("bad record field: ") + e.what()));
    }

    if (r.id.empty()) throw DataError(line_err(path, line_no, "empty id"));
    if (!ids.insert(r.id).second) {
      throw DataError(line_err(path, line_no, "duplicate id '" + r.id + "'"));
    }
    if (r.frame_index < 0) throw DataError(line_err(path, line_no, "negative frame_index"));
    if (!frames_per_video[r.video_id].insert(r.frame_index).second) {
      throw DataError(line_err(path, line_no, "duplicate frame_index " +
                                                  std::to_string(r.frame_index) + " in video '" +
                                                  r.video_id + "'"));
    }
    try {
      check_pgm_readable(r.image_path);
      if (r.mask_path) check_pgm_readable(*r.mask_path);
    } catch (const DataError& e) {
      throw DataError(line_err(path, line_no, e.what()));
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

int FoldPlan::fold_of(const std::string& video_id) const {
  auto it = assignment.find(video_id);
  if (it == assignment.end()) {
    throw DataError("fold plan has no assignment for video '" + video_id + "'");
  }
  return it->second;
}

FoldPlan make_folds(const DatasetManifest& manifest, int k, std::uint64_t seed) {
  if (k < 1) throw DataError("make_folds: k must be >= 1");
  std::vector<std::string> videos = manifest.video_ids();
  if (static_cast<int>(videos.size()) < k) {
    throw DataError("make_folds: " + std::to_string(videos.size()) + " videos < k = " +
                    std::to_string(k));
  }
  // Canonical order first, so the plan depends only on the video set and seed.
  std::sort(videos.begin(), videos.end());
  Pcg32 rng(splitmix64(seed), 0x666f6c64ULL);  // "fold"
  for (std::size_t i = videos.size(); i > 1; --i) {
    const auto j = rng.bounded(static_cast<std::uint32_t>(i));
    std::swap(videos[i - 1], videos[j]);
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    plan.assignment[videos[i]] = static_cast<int>(i % k);
  }
  return plan;
}

void save_fold_plan(const FoldPlan& plan, const std::filesystem::path& path) {
  json j;
  j["k"] = plan.k;
  j["seed"] = plan.seed;
  j["assignment"] = json::object();
  for (const auto& [video, fold] : plan.assignment) j["assignment"][video] = fold;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for write: " + path.string());
  out << j.dump(2) << "\n";
}

FoldPlan load_fold_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open fold plan: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed fold plan: " + e.what());
  }
  FoldPlan plan;
  try {
    plan.k = j.at("k").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [video, fold] : j.at("assignment").items()) {
      plan.assignment[video] = fold.get<int>();
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad fold plan field: " + e.what());
  }
  for (const auto& [video, fold] : plan.assignment) {
    if (fold < 0 || fold >= plan.k) {
      throw DataError(path.string() + ": fold " + std::to_string(fold) + " for video '" + video +
                      "' out of range");
    }
  }
  return plan;
}

std::vector<std::string> check_fold_balance(const DatasetManifest& manifest, const FoldPlan& plan) {
  std::vector<std::string> warnings;
  const std::size_t total = manifest.records.size();
  if (total == 0) return warnings;
  const double global_share = static_cast<double>(manifest.count_label(Label::Covid)) / total;
  if (global_share <= 0.0) return warnings;

  std::vector<std::size_t> covid(plan.k, 0), all(plan.k, 0);
  for (const auto& r : manifest.records) {
    const int f = plan.fold_of(r.video_id);
    ++all[f];
    if (r.label == Label::Covid) ++covid[f];
  }
  for (int f = 0; f < plan.k; ++f) {
    if (all[f] == 0) continue;
    const double share = static_cast<double>(covid[f]) / all[f];
    if (std::abs(share - global_share) > 0.20 * global_share) {
      warnings.push_back("fold " + std::to_string(f) + ": covid share " + std::to_string(share) +
                         " deviates more than 20% from global " + std::to_string(global_share));
    }
  }
  return warnings;
}

}  // namespace lus
