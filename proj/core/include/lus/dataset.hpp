#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lus {

enum class Label { Covid, Healthy };

const char* label_name(Label label);

/// One labeled frame. image_path/mask_path are stored resolved against the
/// manifest's directory.
struct SampleRecord {
  std::string id;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
  Label label = Label::Healthy;
  std::string video_id;
  std::int64_t frame_index = 0;
};

/// The unit of evaluation: a validated list of samples. Manifests are
/// JSON-Lines, one record per line with fields id, image_path, mask_path
/// (nullable), label ("covid"|"healthy"), video_id, frame_index.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<SampleRecord> records;

  /// Distinct video ids in first-appearance order.
  std::vector<std::string> video_ids() const;
  std::size_t count_label(Label label) const;
};

/// Frame-extraction index list: 0, stride, 2*stride, ... < frame_count.
std::vector<std::int64_t> select_frames(std::int64_t frame_count, std::int64_t stride);

/// Parses and validates a JSONL manifest. Every problem (malformed line,
/// unknown label, duplicate id, duplicate frame_index within a video,
/// missing or unreadable image file) is reported with its line number.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Grouped fold assignment: every frame of a video shares the video's fold,
/// so near-duplicate consecutive frames never straddle train and test.
struct FoldPlan {
  int k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignment;  // video_id -> fold in [0, k)

  int fold_of(const std::string& video_id) const;
};

/// Shuffles the sorted video ids with a PCG32 stream derived from the seed,
/// then deals them round-robin. Fold sizes (by video count) differ by at
/// most one. Requires at least k distinct videos.
FoldPlan make_folds(const DatasetManifest& manifest, int k, std::uint64_t seed);

/// Persisted as {"k":...,"seed":...,"assignment":{"video":fold,...}}.
void save_fold_plan(const FoldPlan& plan, const std::filesystem::path& path);
FoldPlan load_fold_plan(const std::filesystem::path& path);

/// Class balance is reported, not enforced: one warning per fold whose
/// covid share deviates from the global share by more than 20% of it.
std::vector<std::string> check_fold_balance(const DatasetManifest& manifest, const FoldPlan& plan);

}  // namespace lus
