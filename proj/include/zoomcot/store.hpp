// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zoomcot/protocol.hpp"
#include "zoomcot/records.hpp"
#include "zoomcot/scene3d.hpp"

namespace zoomcot {

namespace fs = std::filesystem;

struct LineDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

template <typename T>
struct Loaded {
  std::vector<T> records;
  std::vector<LineDiagnostic> diagnostics;
};

/// Reads a JSON Lines file. Blank lines are skipped; unparseable lines become
/// diagnostics. Throws std::runtime_error when the file cannot be opened.
Loaded<nlohmann::json> read_jsonl(const fs::path& path);
/// Writes one compact JSON document per line.
void write_jsonl(const fs::path& path, const std::vector<nlohmann::json>& docs);

struct SampleLoadReport {
  Loaded<SampleRecord> loaded;
  std::size_t repaired = 0;
  std::size_t converted_xywh = 0;
};

/// Loads samples. Raw lines carry `bbox` plus optional `bbox_format`
/// ("xyxy" | "xywh") and `bbox_space` ("pixel" | "ratio"); normalized lines
/// carry `gt_box` in pixels. Relative image paths resolve against
/// `image_root` (default: the file's directory). Records whose image is
/// missing or whose box cannot be repaired are skipped with a diagnostic.
SampleLoadReport load_samples(const fs::path& path,
                              const std::optional<fs::path>& image_root = std::nullopt);
void save_samples(const fs::path& path, const std::vector<SampleRecord>& samples);

Loaded<TraceRecord> load_traces(const fs::path& path);
void save_traces(const fs::path& path, const std::vector<TraceRecord>& traces);

Loaded<Episode> load_episodes(const fs::path& path);
void save_episodes(const fs::path& path, const std::vector<Episode>& episodes);

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DepthLoad {
  DepthRaster raster;
  std::size_t clamped = 0;
};

/// "DPR1", u32 width, u32 height, then width*height float32, all
/// little-endian. Values are clamped to [0,1].
DepthLoad load_depth_raster(const fs::path& path);
void save_depth_raster(const fs::path& path, const DepthRaster& raster);

/// JSON array of {object_id, category, rle: [start, len, ...]}.
std::vector<InstanceMask> load_masks(const fs::path& path, std::int64_t pixel_count = -1);
void save_masks(const fs::path& path, const std::vector<InstanceMask>& masks);

struct SceneRecord {
  std::string id;
  int image_w = 0;
  int image_h = 0;
  std::vector<SceneObject> objects;
  std::size_t merged_regions = 0;
  std::size_t clamped_depth = 0;
};

nlohmann::json to_json(const SceneRecord& s);
SceneRecord scene_from_json(const nlohmann::json& j);

std::string sha256_file(const fs::path& path);
std::string sha256_bytes(std::string_view bytes);

struct ManifestEntry {
  std::string kind;  // image | depth | masks | samples | scenes | traces | transcripts
  std::string path;  // relative to the manifest's directory when possible
  std::string sha256;
  std::uintmax_t bytes = 0;
  bool present = true;
};

struct Manifest {
  std::map<std::string, std::size_t> source_counts;
  std::vector<ManifestEntry> entries;
};

struct ManifestProblem {
  std::string path;
  std::string message;
};

/// Hashes each file; missing files are recorded with present = false.
Manifest build_manifest(const fs::path& base_dir,
                        const std::vector<std::pair<std::string, fs::path>>& files,
                        std::map<std::string, std::size_t> source_counts = {});
nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const fs::path& path, const Manifest& m);
Manifest load_manifest(const fs::path& path);
/// Re-hashes every present entry; reports missing files and hash or size
/// mismatches.
std::vector<ManifestProblem> verify_manifest(const Manifest& m, const fs::path& base_dir);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace zoomcot
