#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dlane/anchors.hpp"
#include "dlane/datagen.hpp"
#include "dlane/metrics.hpp"
#include "dlane/prediction.hpp"

namespace dlane {

inline constexpr std::string_view kSchemaVersion = "1";

// Datasets and predictions are JSON Lines: a header line carrying
// schema_version, then one record per line. Doubles are written as the
// shortest decimal that reads back to the same value.

std::string dataset_to_jsonl(const std::vector<FrameRecord>& frames);
/// Throws SchemaError (line + field) on malformed input, VersionError on an
/// unknown schema_version.
std::vector<FrameRecord> dataset_from_jsonl(std::string_view text);

std::string predictions_to_jsonl(const std::vector<FramePrediction>& preds);
/// With `dataset` given, frame ids must exist in it.
std::vector<FramePrediction> predictions_from_jsonl(std::string_view text,
                                                    const std::vector<FrameRecord>* dataset = nullptr);

std::string report_to_json(const EvalReport& report);
/// Fixed-width text table for terminals.
std::string report_table(const EvalReport& report);

std::string anchors_to_json(const AnchorSet& anchors, const ImageSpec& image);

/// Scene specs for the generator: either one scene object or
/// {"scenes": [...], "jitter": {...}}. Missing fields take SceneSpec defaults.
struct SceneFile {
  std::vector<SceneSpec> scenes;
  Jitter jitter;
};
SceneFile scene_file_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames over `path`.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<FrameRecord> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<FrameRecord>& frames);
std::vector<FramePrediction> read_predictions(const std::filesystem::path& path,
                                              const std::vector<FrameRecord>* dataset = nullptr);
void write_predictions(const std::filesystem::path& path, const std::vector<FramePrediction>& preds);

}  // namespace dlane
