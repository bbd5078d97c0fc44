// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/store.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "zoomcot/imaging.hpp"

namespace zoomcot {
namespace {

using nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string to_hex(const unsigned char* data, std::size_t n) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xF]);
  }
  return out;
}

struct NormalizedBox {
  std::optional<BoxPx> box;
  bool repaired = false;
  std::string error;
};

NormalizedBox normalize_raw_box(const json& bbox, bool xywh, bool ratio, int w, int h) {
  NormalizedBox out;
  if (!bbox.is_array() || bbox.size() != 4 ||
      !std::all_of(bbox.begin(), bbox.end(), [](const json& v) { return v.is_number(); })) {
    out.error = "bbox must be 4 numbers";
    return out;
  }
  std::array<double, 4> v{bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
                          bbox[3].get<double>()};
  if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
    out.error = "bbox has non-finite values";
    return out;
  }
  if (xywh) {
    v[2] += v[0];
    v[3] += v[1];
  }
  if (ratio) {
    v[0] *= w;
    v[2] *= w;
    v[1] *= h;
    v[3] *= h;
  }
  if (v[0] > v[2]) {
    std::swap(v[0], v[2]);
    out.repaired = true;
  }
  if (v[1] > v[3]) {
    std::swap(v[1], v[3]);
    out.repaired = true;
  }
  auto lo = [](double x) { return static_cast<long long>(std::floor(x + 1e-9 * std::max(1.0, std::abs(x)))); };
  auto hi = [](double x) { return static_cast<long long>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)))); };
  const long long x1 = std::clamp<long long>(lo(v[0]), 0, w);
  const long long y1 = std::clamp<long long>(lo(v[1]), 0, h);
  const long long x2 = std::clamp<long long>(hi(v[2]), 0, w);
  const long long y2 = std::clamp<long long>(hi(v[3]), 0, h);
  if (x1 != lo(v[0]) || y1 != lo(v[1]) || x2 != hi(v[2]) || y2 != hi(v[3])) out.repaired = true;
  BoxPx b{static_cast<int>(x1), static_cast<int>(y1), static_cast<int>(x2), static_cast<int>(y2), w, h};
  if (!b.valid()) {
    out.error = "bbox " + to_string(b) + " is empty inside the " + std::to_string(w) + "x" +
                std::to_string(h) + " frame";
    return out;
  }
  out.box = b;
  return out;
}

template <typename T, typename Fn>
Loaded<T> load_records(const fs::path& path, Fn&& convert) {
  const auto raw = read_jsonl(path);
  Loaded<T> out;
  out.diagnostics = raw.diagnostics;
  // read_jsonl keeps line numbers in the document under "__line".
  for (const auto& doc : raw.records) {
    const std::size_t line = doc.at("__line").get<std::size_t>();
    json body = doc.at("doc");
    try {
      out.records.push_back(convert(body));
    } catch (const std::exception& e) {
      out.diagnostics.push_back({line, e.what()});
    }
  }
  std::sort(out.diagnostics.begin(), out.diagnostics.end(),
            [](const LineDiagnostic& a, const LineDiagnostic& b) { return a.line < b.line; });
  return out;
}

}  // namespace

Loaded<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Loaded<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      out.diagnostics.push_back({n, "invalid JSON"});
      continue;
    }
    out.records.push_back({{"__line", n}, {"doc", std::move(doc)}});
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& docs) {
  auto out = open_out(path);
  for (const auto& d : docs) out << d.dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

SampleLoadReport load_samples(const fs::path& path, const std::optional<fs::path>& image_root) {
  const fs::path root = image_root ? *image_root : path.parent_path();
  SampleLoadReport report;
  auto convert = [&](const json& j) {
    check_schema(j, kSampleSchema);
    const std::string image = j.at("image").get<std::string>();
    fs::path image_path(image);
    if (image_path.is_relative()) image_path = root / image_path;
    if (!fs::exists(image_path)) throw RecordError("image not found: " + image_path.string());

    if (j.contains("gt_box")) {
      SampleRecord s = sample_from_json(j);
      s.image = image_path.string();
      return s;
    }
    int w = j.value("image_w", 0);
    int h = j.value("image_h", 0);
    if (w <= 0 || h <= 0) {
      const cv::Size size = probe_image_size(image_path);
      w = size.width;
      h = size.height;
    }
    const std::string format = j.value("bbox_format", "xyxy");
    const std::string space = j.value("bbox_space", "pixel");
    if (format != "xyxy" && format != "xywh") throw RecordError("unknown bbox_format '" + format + "'");
    if (space != "pixel" && space != "ratio") throw RecordError("unknown bbox_space '" + space + "'");
    const auto norm = normalize_raw_box(j.at("bbox"), format == "xywh", space == "ratio", w, h);
    if (!norm.box) throw RecordError(norm.error);

    SampleRecord s;
    s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    s.image = image_path.string();
    s.question = j.value("question", "");
    s.short_answer = j.contains("short_answer") ? j.value("short_answer", "") : j.value("answer", "");
    s.long_answer = j.value("long_answer", "");
    s.source = j.contains("source") ? j.value("source", "") : j.value("dataset", "");
    s.gt_box = *norm.box;
    s.gt_convention = format;
    s.gt_repaired = norm.repaired;
    static const std::set<std::string, std::less<>> known = {
        "schema", "id", "image", "image_w", "image_h", "question", "short_answer", "answer",
        "long_answer", "source", "dataset", "bbox", "bbox_format", "bbox_space"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!known.count(it.key())) s.extra[it.key()] = it.value();
    }
    return s;
  };
  report.loaded = load_records<SampleRecord>(path, convert);
  for (const auto& s : report.loaded.records) {
    if (s.gt_repaired) ++report.repaired;
    if (s.gt_convention == "xywh") ++report.converted_xywh;
  }
  return report;
}

void save_samples(const fs::path& path, const std::vector<SampleRecord>& samples) {
  std::vector<json> docs;
  for (const auto& s : samples) docs.push_back(to_json(s));
  write_jsonl(path, docs);
}

Loaded<TraceRecord> load_traces(const fs::path& path) {
  return load_records<TraceRecord>(path, [](const json& j) { return trace_from_json(j); });
}

void save_traces(const fs::path& path, const std::vector<TraceRecord>& traces) {
  std::vector<json> docs;
  for (const auto& t : traces) docs.push_back(to_json(t));
  write_jsonl(path, docs);
}

Loaded<Episode> load_episodes(const fs::path& path) {
  return load_records<Episode>(path, [](const json& j) { return episode_from_json(j); });
}

void save_episodes(const fs::path& path, const std::vector<Episode>& episodes) {
  std::vector<json> docs;
  for (const auto& e : episodes) docs.push_back(to_json(e));
  write_jsonl(path, docs);
}

DepthLoad load_depth_raster(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12) throw FormatError(path.string() + ": truncated header");
  if (std::memcmp(p, "DPR1", 4) != 0) throw FormatError(path.string() + ": bad magic");
  const std::uint32_t w = read_u32le(p + 4);
  const std::uint32_t h = read_u32le(p + 8);
  if (w == 0 || h == 0) throw FormatError(path.string() + ": zero dimension");
  const std::uint64_t count = static_cast<std::uint64_t>(w) * h;
  const std::uint64_t expected = 12 + 4 * count;
  if (bytes.size() < expected) {
    throw FormatError(path.string() + ": truncated payload (" + std::to_string(bytes.size()) +
                      " of " + std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) throw FormatError(path.string() + ": trailing bytes after payload");
  DepthLoad out;
  out.raster.width = static_cast<int>(w);
  out.raster.height = static_cast<int>(h);
  out.raster.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    float v = std::bit_cast<float>(read_u32le(p + 12 + 4 * i));
    const float c = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
    if (c != v || std::isnan(v)) ++out.clamped;
    out.raster.values[i] = c;
  }
  return out;
}

void save_depth_raster(const fs::path& path, const DepthRaster& raster) {
  if (raster.width <= 0 || raster.height <= 0 ||
      raster.values.size() != static_cast<std::size_t>(raster.pixel_count())) {
    throw FormatError("depth raster dimensions do not match its values");
  }
  std::string out = "DPR1";
  write_u32le(out, static_cast<std::uint32_t>(raster.width));
  write_u32le(out, static_cast<std::uint32_t>(raster.height));
  for (const float v : raster.values) write_u32le(out, std::bit_cast<std::uint32_t>(v));
  auto f = open_out(path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<InstanceMask> load_masks(const fs::path& path, std::int64_t pixel_count) {
  const json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) throw FormatError(path.string() + ": expected a JSON array");
  std::vector<InstanceMask> out;
  for (const auto& m : doc) {
    InstanceMask mask;
    try {
      mask.object_id = m.at("object_id").get<int>();
      mask.category = m.at("category").get<std::string>();
      const auto& rle = m.at("rle");
      if (!rle.is_array() || rle.size() % 2 != 0) throw FormatError("rle must hold start/length pairs");
      for (std::size_t i = 0; i < rle.size(); i += 2) {
        const MaskRun run{rle[i].get<std::int64_t>(), rle[i + 1].get<std::int64_t>()};
        if (run.start < 0 || run.length <= 0) throw FormatError("negative or empty run");
        if (pixel_count >= 0 && run.start + run.length > pixel_count) {
          throw FormatError("run exceeds raster bounds");
        }
        mask.runs.push_back(run);
      }
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ": mask " + m.value("object_id", json()).dump() + ": " +
                        e.what());
    }
    out.push_back(std::move(mask));
  }
  return out;
}

void save_masks(const fs::path& path, const std::vector<InstanceMask>& masks) {
  json arr = json::array();
  for (const auto& m : masks) {
    json rle = json::array();
    for (const auto& r : m.runs) {
      rle.push_back(r.start);
      rle.push_back(r.length);
    }
    arr.push_back({{"object_id", m.object_id}, {"category", m.category}, {"rle", rle}});
  }
  auto out = open_out(path);
  out << arr.dump() << '\n';
}

json to_json(const SceneRecord& s) {
  json objs = json::array();
  for (const auto& o : s.objects) objs.push_back(to_json(o));
  return {{"schema", kSceneSchema},      {"id", s.id},
          {"image_w", s.image_w},        {"image_h", s.image_h},
          {"objects", objs},             {"merged_regions", s.merged_regions},
          {"clamped_depth", s.clamped_depth}};
}

SceneRecord scene_from_json(const json& j) {
  check_schema(j, kSceneSchema);
  SceneRecord s;
  s.id = j.at("id").get<std::string>();
  s.image_w = j.at("image_w").get<int>();
  s.image_h = j.at("image_h").get<int>();
  for (const auto& o : j.at("objects")) s.objects.push_back(scene_object_from_json(o));
  s.merged_regions = j.value("merged_regions", std::size_t{0});
  s.clamped_depth = j.value("clamped_depth", std::size_t{0});
  return s;
}

std::string sha256_bytes(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  return to_hex(digest, len);
}

std::string sha256_file(const fs::path& path) { return sha256_bytes(read_file(path)); }

Manifest build_manifest(const fs::path& base_dir,
                        const std::vector<std::pair<std::string, fs::path>>& files,
                        std::map<std::string, std::size_t> source_counts) {
  Manifest m;
  m.source_counts = std::move(source_counts);
  for (const auto& [kind, file] : files) {
    ManifestEntry e;
    e.kind = kind;
    const fs::path full = file.is_relative() ? base_dir / file : file;
    std::error_code ec;
    const fs::path rel = fs::relative(full, base_dir, ec);
    e.path = (!ec && !rel.empty() && rel.native().rfind("..", 0) != 0) ? rel.generic_string()
                                                                         : full.generic_string();
    if (fs::exists(full)) {
      e.sha256 = sha256_file(full);
      e.bytes = fs::file_size(full);
    } else {
      e.present = false;
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

json to_json(const Manifest& m) {
  json files = json::array();
  for (const auto& e : m.entries) {
    files.push_back({{"kind", e.kind},
                     {"path", e.path},
                     {"sha256", e.sha256},
                     {"bytes", e.bytes},
                     {"present", e.present}});
  }
  return {{"schema", kManifestSchema}, {"sources", m.source_counts}, {"files", files}};
}

Manifest manifest_from_json(const json& j) {
  check_schema(j, kManifestSchema);
  Manifest m;
  m.source_counts = j.value("sources", std::map<std::string, std::size_t>{});
  for (const auto& f : j.at("files")) {
    ManifestEntry e;
    e.kind = f.at("kind").get<std::string>();
    e.path = f.at("path").get<std::string>();
    e.sha256 = f.value("sha256", "");
    e.bytes = f.value("bytes", std::uintmax_t{0});
    e.present = f.value("present", true);
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const fs::path& path, const Manifest& m) {
  auto out = open_out(path);
  out << to_json(m).dump(2) << '\n';
}

Manifest load_manifest(const fs::path& path) {
  const json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw FormatError(path.string() + ": invalid JSON");
  return manifest_from_json(doc);
}

std::vector<ManifestProblem> verify_manifest(const Manifest& m, const fs::path& base_dir) {
  std::vector<ManifestProblem> problems;
  for (const auto& e : m.entries) {
    if (!e.present) continue;
    fs::path full(e.path);
    if (full.is_relative()) full = base_dir / full;
    if (!fs::exists(full)) {
      problems.push_back({e.path, "missing"});
      continue;
    }
    if (fs::file_size(full) != e.bytes) {
      problems.push_back({e.path, "size mismatch"});
      continue;
    }
    if (sha256_file(full) != e.sha256) problems.push_back({e.path, "sha256 mismatch"});
  }
  return problems;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(std::max(1, workers), std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(mu);
        if (first) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace zoomcot
