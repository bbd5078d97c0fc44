// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "zoomcot/config.hpp"
#include "zoomcot/generator_client.hpp"
#include "zoomcot/grounding_parser.hpp"
#include "zoomcot/http_endpoint.hpp"
#include "zoomcot/imaging.hpp"
#include "zoomcot/metrics.hpp"
#include "zoomcot/prompts.hpp"
#include "zoomcot/protocol.hpp"
#include "zoomcot/records.hpp"
#include "zoomcot/scene3d.hpp"
#include "zoomcot/store.hpp"
#include "zoomcot/trace_gen.hpp"

namespace zoomcot {
namespace {

using nlohmann::json;

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoggerScope {
 public:
  explicit LoggerScope(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("zoomcot", sink);
    logger->set_pattern("%l: %v");
    spdlog::set_default_logger(logger);
  }
  ~LoggerScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

std::string rel_to(const fs::path& p, const fs::path& file) {
  const fs::path dir = fs::absolute(file).parent_path();
  std::error_code ec;
  const fs::path rel = fs::relative(fs::absolute(p), dir, ec);
  return ec || rel.empty() ? fs::absolute(p).generic_string() : rel.generic_string();
}

void report_diagnostics(std::ostream& err, const fs::path& file,
                        const std::vector<LineDiagnostic>& diags) {
  for (const auto& d : diags) err << file.string() << ":" << d.line << ": " << d.message << "\n";
}

// Shared state for the commands that talk to a model: either a live endpoint
// from --config or per-id scripts from --oracle / --script.
struct Backend {
  AppConfig config;
  std::shared_ptr<HttpEndpoint> endpoint;
  std::map<std::string, std::vector<std::string>> scripts;
  std::optional<PromptRegistry> prompts;

  const PromptRegistry& registry() const { return prompts ? *prompts : PromptRegistry::builtin(); }

  const std::vector<std::string>& script_for(const std::string& id) const {
    auto it = scripts.find(id);
    if (it == scripts.end()) it = scripts.find("*");
    if (it == scripts.end()) throw CommandError("no scripted responses for '" + id + "'");
    return it->second;
  }

  std::shared_ptr<GeneratorClient> generator(const std::string& id) const {
    if (endpoint) return std::shared_ptr<GeneratorClient>(endpoint, endpoint.get());
    return std::make_shared<ScriptedGenerator>(script_for(id));
  }

  std::shared_ptr<ChatModel> chat(const std::string& id) const {
    if (endpoint) return std::shared_ptr<ChatModel>(endpoint, endpoint.get());
    return std::make_shared<ScriptedChatModel>(script_for(id));
  }
};

std::string response_text(const json& r) {
  if (r.is_string()) return r.get<std::string>();
  if (r.is_object() && r.contains("question")) {
    QAResponse qa;
    qa.question = r.at("question").get<std::string>();
    qa.short_answer = r.value("short_answer", "");
    qa.long_answer = r.value("long_answer", "");
    qa.target_box = box_ratio_from_json(r.at("target_box"));
    return render_qa(qa);
  }
  if (r.is_object()) {
    TripletResponse t;
    t.description = r.value("description", "");
    t.aoi = box_ratio_from_json(r.at("aoi"));
    t.reasoning = r.value("reasoning", "");
    return render_triplet(t);
  }
  throw CommandError("script entries must be strings or objects");
}

std::map<std::string, std::vector<std::string>> load_scripts(const fs::path& path,
                                                             const std::string& key,
                                                             std::ostream& err) {
  const auto raw = read_jsonl(path);
  report_diagnostics(err, path, raw.diagnostics);
  if (!raw.diagnostics.empty()) throw CommandError("malformed script file " + path.string());
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& rec : raw.records) {
    const json& doc = rec.at("doc");
    std::vector<std::string> texts;
    for (const auto& r : doc.at(key)) texts.push_back(response_text(r));
    if (texts.empty()) throw CommandError("empty script for '" + doc.at("id").get<std::string>() + "'");
    out[doc.at("id").get<std::string>()] = std::move(texts);
  }
  return out;
}

struct BackendFlags {
  std::string config;
  std::string script;
  std::string prompts;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f, const std::string& script_flag,
                       const std::string& script_help) {
  auto* cfg = cmd->add_option("--config", f.config, "Config file with endpoint settings")
                  ->check(CLI::ExistingFile);
  auto* scr = cmd->add_option(script_flag, f.script, script_help)->check(CLI::ExistingFile);
  cfg->excludes(scr);
  scr->excludes(cfg);
  cmd->add_option("--prompts", f.prompts, "Directory of prompt overrides (<id>.txt)")
      ->check(CLI::ExistingDirectory);
}

Backend make_backend(const BackendFlags& f, const std::string& script_key, std::ostream& err,
                     bool need_model = true) {
  Backend b;
  if (!f.config.empty()) b.config = load_config(f.config);
  if (need_model) {
    if (!f.config.empty()) {
      if (!b.config.endpoint) throw CommandError(f.config + ": no endpoint.base_url configured");
      b.endpoint = std::make_shared<HttpEndpoint>(*b.config.endpoint);
    } else if (!f.script.empty()) {
      b.scripts = load_scripts(f.script, script_key, err);
    } else {
      throw CommandError("a model is required: pass --config or a script file");
    }
  }
  if (!f.prompts.empty()) {
    b.prompts = PromptRegistry::load_dir(f.prompts);
  } else if (b.config.prompts_dir) {
    b.prompts = PromptRegistry::load_dir(*b.config.prompts_dir);
  }
  return b;
}

int worker_count(int flag, const Backend& b) { return flag > 0 ? flag : b.config.workers; }

// Runs fn over n items, collecting per-item failures instead of aborting.
std::size_t run_items(std::size_t n, int workers, std::ostream& err,
                      const std::function<std::string(std::size_t)>& label,
                      const std::function<void(std::size_t)>& fn) {
  std::mutex mu;
  std::size_t failures = 0;
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      ++failures;
      err << label(i) << ": " << e.what() << "\n";
    }
  });
  return failures;
}

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

std::vector<SampleRecord> load_samples_or_throw(const fs::path& path, std::ostream& err) {
  auto report = load_samples(path);
  report_diagnostics(err, path, report.loaded.diagnostics);
  return std::move(report.loaded.records);
}

// Ground-truth boxes only; images need not exist.
std::map<std::string, SampleRecord> load_gt(const fs::path& path, std::ostream& err) {
  const auto raw = read_jsonl(path);
  report_diagnostics(err, path, raw.diagnostics);
  std::map<std::string, SampleRecord> out;
  for (const auto& rec : raw.records) {
    try {
      auto s = sample_from_json(rec.at("doc"));
      out.emplace(s.id, std::move(s));
    } catch (const std::exception& e) {
      err << path.string() << ":" << rec.at("__line").get<std::size_t>() << ": " << e.what() << "\n";
    }
  }
  return out;
}

std::map<std::string, SceneRecord> load_scenes(const fs::path& path, std::ostream& err) {
  const auto raw = read_jsonl(path);
  report_diagnostics(err, path, raw.diagnostics);
  std::map<std::string, SceneRecord> out;
  for (const auto& rec : raw.records) {
    try {
      auto s = scene_from_json(rec.at("doc"));
      out.emplace(s.id, std::move(s));
    } catch (const std::exception& e) {
      err << path.string() << ":" << rec.at("__line").get<std::size_t>() << ": " << e.what() << "\n";
    }
  }
  return out;
}

template <typename T>
std::vector<T> collect(std::vector<std::optional<T>>& slots) {
  std::vector<T> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  return out;
}

int finish(std::ostream& out, const std::string& command, std::size_t total, std::size_t failures,
           json extra = json::object()) {
  extra["command"] = command;
  extra["records"] = total;
  extra["failed"] = failures;
  print_json(out, extra);
  return failures == 0 ? kExitOk : kExitFailure;
}

std::pair<std::string, fs::path> split_named(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), fs::path(arg)};
  return {arg.substr(0, eq), fs::path(arg.substr(eq + 1))};
}

std::optional<FrameDims> parse_frame(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("--frame", "expected WIDTHxHEIGHT");
  try {
    FrameDims f{std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    if (f.width <= 0 || f.height <= 0) throw std::invalid_argument("non-positive");
    return f;
  } catch (const std::exception&) {
    throw CLI::ValidationError("--frame", "expected WIDTHxHEIGHT");
  }
}

json entries_to_json(const std::map<std::string, GroundingEntry>& entries) {
  json out = json::object();
  for (const auto& [name, e] : entries) {
    out[name] = {{"bbox", box_to_json(e.bbox_ratio)},
                 {"depth", e.depth01 ? json(*e.depth01) : json(nullptr)}};
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  LoggerScope logging(err);
  CLI::App app{"Region-of-interest reasoning traces: generation, evaluation and statistics",
               "zoomcot"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::function<int()> action;

  // ingest
  struct {
    std::string input, out, image_root, manifest;
  } ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Normalize raw sample records to pixel xyxy boxes");
  c_ingest->add_option("--input", ingest.input, "Raw samples (JSON Lines)")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--out", ingest.out, "Normalized samples output")->required();
  c_ingest->add_option("--image-root", ingest.image_root, "Base directory for relative image paths");
  c_ingest->add_option("--manifest", ingest.manifest, "Write a manifest of images and samples here");
  c_ingest->callback([&] {
    action = [&] {
      std::optional<fs::path> root;
      if (!ingest.image_root.empty()) root = fs::path(ingest.image_root);
      auto report = load_samples(ingest.input, root);
      report_diagnostics(err, ingest.input, report.loaded.diagnostics);
      auto& samples = report.loaded.records;
      std::vector<std::pair<std::string, fs::path>> files;
      std::set<std::string> seen;
      std::map<std::string, std::size_t> counts;
      for (auto& s : samples) {
        if (seen.insert(s.image).second) files.emplace_back("image", fs::absolute(s.image));
        ++counts[s.source.empty() ? "unknown" : s.source];
        s.image = rel_to(s.image, ingest.out);
      }
      save_samples(ingest.out, samples);
      if (!ingest.manifest.empty()) {
        files.emplace_back("samples", fs::absolute(ingest.out));
        const fs::path mpath = fs::absolute(ingest.manifest);
        save_manifest(mpath, build_manifest(mpath.parent_path(), files, counts));
      }
      print_json(out, {{"command", "ingest"},
                       {"loaded", samples.size()},
                       {"skipped", report.loaded.diagnostics.size()},
                       {"repaired", report.repaired},
                       {"converted_xywh", report.converted_xywh}});
      return kExitOk;
    };
  });

  // verify-manifest
  std::string verify_path;
  auto* c_verify = app.add_subcommand("verify-manifest", "Re-hash the files listed in a manifest");
  c_verify->add_option("--manifest", verify_path, "Manifest file")->required()->check(CLI::ExistingFile);
  c_verify->callback([&] {
    action = [&] {
      const auto m = load_manifest(verify_path);
      const auto problems = verify_manifest(m, fs::absolute(verify_path).parent_path());
      for (const auto& p : problems) err << p.path << ": " << p.message << "\n";
      print_json(out, {{"command", "verify-manifest"},
                       {"files", m.entries.size()},
                       {"problems", problems.size()}});
      return problems.empty() ? kExitOk : kExitFailure;
    };
  });

  // annotate3d
  struct {
    std::string samples, depth_dir, masks_dir, out, manifest;
    std::int64_t area_floor = -1;
    double depth_gap = kDefaultMergeDepthGap;
    int workers = 0;
  } ann;
  auto* c_ann = app.add_subcommand(
      "annotate3d", "Build ranked scene objects from <id>.dpr depth rasters and <id>.masks.json masks");
  c_ann->add_option("--samples", ann.samples, "Normalized samples")->required()->check(CLI::ExistingFile);
  c_ann->add_option("--depth-dir", ann.depth_dir, "Directory of DPR1 rasters")->required()->check(CLI::ExistingDirectory);
  c_ann->add_option("--masks-dir", ann.masks_dir, "Directory of mask files")->required()->check(CLI::ExistingDirectory);
  c_ann->add_option("--out", ann.out, "Scene records output")->required();
  c_ann->add_option("--area-floor", ann.area_floor, "Merge regions below this many pixels (default 0.5% of the image)");
  c_ann->add_option("--depth-gap", ann.depth_gap, "Largest mean-depth difference for a merge")->check(CLI::Range(0.0, 1.0));
  c_ann->add_option("--manifest", ann.manifest, "Write a manifest of depth, mask and scene files here");
  c_ann->add_option("--workers", ann.workers, "Worker threads")->check(CLI::PositiveNumber);
  c_ann->callback([&] {
    action = [&] {
      const auto samples = load_samples_or_throw(ann.samples, err);
      std::vector<std::optional<SceneRecord>> slots(samples.size());
      std::vector<std::vector<std::pair<std::string, fs::path>>> inputs(samples.size());
      const auto failures = run_items(
          samples.size(), std::max(1, ann.workers), err,
          [&](std::size_t i) { return "annotate3d " + samples[i].id; },
          [&](std::size_t i) {
            const auto& s = samples[i];
            const fs::path dpath = fs::path(ann.depth_dir) / (s.id + ".dpr");
            const fs::path mpath = fs::path(ann.masks_dir) / (s.id + ".masks.json");
            inputs[i] = {{"depth", fs::absolute(dpath)}, {"masks", fs::absolute(mpath)}};
            auto depth = load_depth_raster(dpath);
            if (depth.raster.width != s.gt_box.frame_w || depth.raster.height != s.gt_box.frame_h) {
              throw FormatError("depth raster is " + std::to_string(depth.raster.width) + "x" +
                                std::to_string(depth.raster.height) + " but the image is " +
                                std::to_string(s.gt_box.frame_w) + "x" + std::to_string(s.gt_box.frame_h));
            }
            if (depth.clamped > 0) spdlog::warn("{}: {} depth values clamped", s.id, depth.clamped);
            auto masks = load_masks(mpath, depth.raster.pixel_count());
            const std::int64_t floor =
                ann.area_floor >= 0 ? ann.area_floor : default_area_floor(depth.raster);
            const std::size_t before = masks.size();
            auto merged = merge_small_regions(std::move(masks), depth.raster, floor, ann.depth_gap);
            SceneRecord rec;
            rec.id = s.id;
            rec.image_w = depth.raster.width;
            rec.image_h = depth.raster.height;
            rec.merged_regions = before - merged.size();
            rec.clamped_depth = depth.clamped;
            rec.objects = build_scene(merged, depth.raster);
            slots[i] = std::move(rec);
          });
      std::vector<json> docs;
      std::vector<std::pair<std::string, fs::path>> files;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) {
          docs.push_back(to_json(*slots[i]));
          files.insert(files.end(), inputs[i].begin(), inputs[i].end());
        }
      }
      write_jsonl(ann.out, docs);
      if (!ann.manifest.empty()) {
        files.emplace_back("scenes", fs::absolute(ann.out));
        const fs::path mpath = fs::absolute(ann.manifest);
        save_manifest(mpath, build_manifest(mpath.parent_path(), files));
      }
      return finish(out, "annotate3d", samples.size(), failures);
    };
  });

  // gen-trace / gen-trace-3d
  struct {
    std::string samples, scenes, out;
    BackendFlags backend;
    int workers = 0;
    int r_max = 0;
    double area_ratio = 0.0;
    double tau_large = -1.0;
    bool no_fix = false;
  } gen;
  auto add_gen_flags = [&](CLI::App* cmd) {
    cmd->add_option("--samples", gen.samples, "Normalized samples")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", gen.out, "Trace output")->required();
    add_backend_flags(cmd, gen.backend, "--oracle",
                      "Scripted responses: JSON Lines of {id, responses}; id \"*\" is the fallback");
    cmd->add_option("--workers", gen.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--r-max", gen.r_max, "Round budget")->check(CLI::PositiveNumber);
    cmd->add_option("--area-ratio", gen.area_ratio, "Stop once area(roi) <= N * area(gt)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tau-large", gen.tau_large, "Single-round threshold on area(gt) / area(image)")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_flag("--no-fix", gen.no_fix, "Skip the consistency repair pass");
  };
  auto* c_gen = app.add_subcommand("gen-trace", "Generate multi-round 2D traces");
  add_gen_flags(c_gen);
  auto* c_gen3 = app.add_subcommand("gen-trace-3d", "Generate depth-aware traces");
  add_gen_flags(c_gen3);
  c_gen3->add_option("--scenes", gen.scenes, "Scene records from annotate3d")->required()->check(CLI::ExistingFile);
  auto gen_action = [&](bool depth_aware) {
    const std::string name = depth_aware ? "gen-trace-3d" : "gen-trace";
    Backend backend = make_backend(gen.backend, "responses", err);
    GenPolicy policy = depth_aware ? backend.config.gen_3d : backend.config.gen;
    if (gen.r_max > 0) policy.r_max = gen.r_max;
    if (gen.area_ratio > 0) policy.area_ratio_n = gen.area_ratio;
    if (gen.tau_large >= 0) policy.tau_large = gen.tau_large;
    policy.validate();
    const auto samples = load_samples_or_throw(gen.samples, err);
    std::map<std::string, SceneRecord> scenes;
    if (depth_aware) scenes = load_scenes(gen.scenes, err);
    std::vector<std::optional<TraceRecord>> slots(samples.size());
    const auto failures = run_items(
        samples.size(), worker_count(gen.workers, backend), err,
        [&](std::size_t i) { return name + " " + samples[i].id; },
        [&](std::size_t i) {
          const auto& s = samples[i];
          const ImageView image = load_image(s.image);
          auto client = backend.generator(s.id);
          TraceRecord t;
          try {
            if (depth_aware) {
              auto it = scenes.find(s.id);
              if (it == scenes.end()) throw CommandError("no scene record");
              t = generate_trace_3d(s, image, it->second.objects, policy, *client, backend.registry());
              if (!t.scene) t.scene = it->second.objects;
            } else {
              t = generate_trace_2d(s, image, policy, *client, backend.registry());
            }
          } catch (const TraceError& e) {
            throw CommandError(std::string(e.what()) + " after " +
                               std::to_string(e.partial().rounds.size()) + " rounds");
          }
          if (!gen.no_fix) t = consistency_fix(std::move(t));
          t.image = rel_to(s.image, gen.out);
          slots[i] = std::move(t);
        });
    save_traces(gen.out, collect(slots));
    return finish(out, name, samples.size(), failures);
  };
  c_gen->callback([&] { action = [&] { return gen_action(false); }; });
  c_gen3->callback([&] { action = [&] { return gen_action(true); }; });

  // distill
  struct {
    std::string traces, out;
    BackendFlags backend;
    int workers = 0;
  } dist;
  auto* c_dist = app.add_subcommand("distill", "Compress multi-round traces into a single round");
  c_dist->add_option("--traces", dist.traces, "Traces")->required()->check(CLI::ExistingFile);
  c_dist->add_option("--out", dist.out, "Traces with the distilled round attached")->required();
  add_backend_flags(c_dist, dist.backend, "--oracle", "Scripted responses: JSON Lines of {id, responses}");
  c_dist->add_option("--workers", dist.workers, "Worker threads")->check(CLI::PositiveNumber);
  c_dist->callback([&] {
    action = [&] {
      Backend backend = make_backend(dist.backend, "responses", err);
      auto loaded = load_traces(dist.traces);
      report_diagnostics(err, dist.traces, loaded.diagnostics);
      auto& traces = loaded.records;
      std::vector<std::optional<TraceRecord>> slots(traces.size());
      const auto failures = run_items(
          traces.size(), worker_count(dist.workers, backend), err,
          [&](std::size_t i) { return "distill " + traces[i].id; },
          [&](std::size_t i) {
            TraceRecord t = traces[i];
            auto client = backend.generator(t.id);
            t.distilled = distill_single_round(t, *client, backend.config.gen.retry, backend.registry());
            t.image = rel_to(fs::path(dist.traces).parent_path() / t.image, dist.out);
            slots[i] = std::move(t);
          });
      save_traces(dist.out, collect(slots));
      return finish(out, "distill", traces.size(), failures);
    };
  });

  // augment-ground
  struct {
    std::string traces, scenes, out;
    int precision = -1;
  } aug;
  auto* c_aug = app.add_subcommand("augment-ground",
                                   "Annotate object mentions in trace text with boxes and depths");
  c_aug->add_option("--traces", aug.traces, "Traces")->required()->check(CLI::ExistingFile);
  c_aug->add_option("--scenes", aug.scenes, "Scene records (default: scenes stored in the traces)")
      ->check(CLI::ExistingFile);
  c_aug->add_option("--out", aug.out, "Augmented traces")->required();
  c_aug->add_option("--precision", aug.precision, "Decimal places for inserted numbers (default: shortest)")
      ->check(CLI::Range(-1, 12));
  c_aug->callback([&] {
    action = [&] {
      auto loaded = load_traces(aug.traces);
      report_diagnostics(err, aug.traces, loaded.diagnostics);
      std::map<std::string, SceneRecord> scenes;
      if (!aug.scenes.empty()) scenes = load_scenes(aug.scenes, err);
      std::vector<TraceRecord> done;
      std::size_t failures = 0;
      std::size_t annotated = 0;
      for (auto t : loaded.records) {
        std::vector<SceneObject> scene;
        if (auto it = scenes.find(t.id); it != scenes.end()) {
          scene = it->second.objects;
        } else if (t.scene) {
          scene = *t.scene;
        } else {
          ++failures;
          err << "augment-ground " << t.id << ": no scene objects\n";
          continue;
        }
        const auto objects = grounded_objects(scene);
        auto apply = [&](std::string& s) {
          std::string next = augment_grounding(s, objects, aug.precision);
          if (next != s) ++annotated;
          s = std::move(next);
        };
        for (auto& r : t.rounds) {
          apply(r.description);
          apply(r.rationale);
        }
        if (t.distilled) {
          apply(t.distilled->description);
          apply(t.distilled->rationale);
        }
        if (!t.final_justification.empty()) apply(t.final_justification);
        t.image = rel_to(fs::path(aug.traces).parent_path() / t.image, aug.out);
        done.push_back(std::move(t));
      }
      save_traces(aug.out, done);
      return finish(out, "augment-ground", loaded.records.size(), failures,
                    {{"annotated_fields", annotated}});
    };
  });

  // eval-bench
  struct {
    std::string samples, out;
    BackendFlags backend;
    int workers = 0;
    int r_max = 0;
  } bench;
  auto* c_bench = app.add_subcommand("eval-bench", "Run bounded zoom-tool episodes on samples");
  c_bench->add_option("--samples", bench.samples, "Normalized samples")->required()->check(CLI::ExistingFile);
  c_bench->add_option("--out", bench.out, "Episode transcripts output")->required();
  add_backend_flags(c_bench, bench.backend, "--script",
                    "Scripted assistant turns: JSON Lines of {id, turns}; id \"*\" is the fallback");
  c_bench->add_option("--r-max", bench.r_max, "Round budget (default 5)")->check(CLI::PositiveNumber);
  c_bench->add_option("--workers", bench.workers, "Worker threads")->check(CLI::PositiveNumber);
  c_bench->callback([&] {
    action = [&] {
      Backend backend = make_backend(bench.backend, "turns", err);
      EpisodeOptions opts;
      opts.r_max = bench.r_max > 0 ? bench.r_max : backend.config.eval_r_max;
      opts.budget = backend.config.budget;
      opts.decode = backend.config.gen.decode;
      opts.retry = backend.config.gen.retry;
      const auto samples = load_samples_or_throw(bench.samples, err);
      std::vector<std::optional<Episode>> slots(samples.size());
      const auto failures = run_items(
          samples.size(), worker_count(bench.workers, backend), err,
          [&](std::size_t i) { return "eval-bench " + samples[i].id; },
          [&](std::size_t i) {
            const auto& s = samples[i];
            const ImageView image = load_image(s.image);
            auto model = backend.chat(s.id);
            slots[i] = run_episode(s.id, rel_to(s.image, bench.out), image, s.question, *model, opts,
                                   backend.registry());
          });
      auto episodes = collect(slots);
      std::map<std::string, std::size_t> terminations;
      for (const auto& e : episodes) ++terminations[std::string(to_string(e.termination))];
      save_episodes(bench.out, episodes);
      return finish(out, "eval-bench", samples.size(), failures, {{"terminations", terminations}});
    };
  });

  // eval-roi
  struct {
    std::vector<std::string> transcripts;
    std::string gt, mode = "multi", json_out;
    std::vector<double> thresholds{0.5, 0.75};
    bool table = false;
  } roi;
  auto* c_roi = app.add_subcommand("eval-roi", "Score final regions of interest against ground truth");
  c_roi->add_option("--transcripts", roi.transcripts, "Episode files, optionally as NAME=PATH")->required();
  c_roi->add_option("--gt", roi.gt, "Samples holding the ground-truth boxes")->required()->check(CLI::ExistingFile);
  c_roi->add_option("--mode", roi.mode, "multi: final view after zooms; single: first-turn box")
      ->check(CLI::IsMember({"multi", "single"}));
  c_roi->add_option("--thresholds", roi.thresholds, "IoU thresholds (strictly exceeded)")
      ->check(CLI::Range(0.0, 1.0));
  c_roi->add_flag("--table", roi.table, "Print a text table instead of JSON");
  c_roi->add_option("--json-out", roi.json_out, "Also write the JSON report here");
  c_roi->callback([&] {
    action = [&] {
      const auto gt = load_gt(roi.gt, err);
      const RoiMode mode = roi.mode == "single" ? RoiMode::single_step : RoiMode::multi_round;
      std::vector<std::pair<std::string, RoIReport>> reports;
      for (const auto& arg : roi.transcripts) {
        const auto [name, path] = split_named(arg);
        if (!fs::exists(path)) throw CommandError("no such file: " + path.string());
        auto loaded = load_episodes(path);
        report_diagnostics(err, path, loaded.diagnostics);
        std::vector<RoIPrediction> preds;
        for (const auto& ep : loaded.records) {
          auto it = gt.find(ep.sample_id);
          if (it == gt.end()) {
            err << path.string() << ": no ground truth for '" << ep.sample_id << "'\n";
            continue;
          }
          preds.push_back({ep.sample_id, final_roi(ep, mode), it->second.gt_box});
        }
        reports.emplace_back(name, roi_accuracy(preds, roi.thresholds));
      }
      json j;
      if (reports.size() == 1) {
        j = reports.front().second.to_json();
      } else {
        j = json::object();
        for (const auto& [name, r] : reports) j[name] = r.to_json();
      }
      if (!roi.json_out.empty()) {
        std::ofstream f(roi.json_out);
        f << j.dump(2) << "\n";
      }
      if (roi.table) {
        out << render_roi_table(reports);
      } else {
        print_json(out, j);
      }
      return kExitOk;
    };
  });

  // eval-ground
  struct {
    std::string pred, gt, parse, frame, vocab;
    bool table = false;
  } grd;
  auto* c_grd = app.add_subcommand(
      "eval-ground", "Score object groundings, or with --parse print the groundings found in a text");
  c_grd->add_option("--pred", grd.pred, "Predictions: JSON Lines of {id, text}")->check(CLI::ExistingFile);
  c_grd->add_option("--gt", grd.gt, "References: JSON Lines of {id, text}")->check(CLI::ExistingFile);
  c_grd->add_option("--parse", grd.parse, "Text file to parse; prints JSON entries")->check(CLI::ExistingFile);
  c_grd->add_option("--frame", grd.frame, "Image size WIDTHxHEIGHT for pixel boxes (with --parse)");
  c_grd->add_option("--vocab", grd.vocab, "Comma-separated object names (with --parse)");
  c_grd->add_flag("--table", grd.table, "Print a text table instead of JSON");
  c_grd->callback([&] {
    if (grd.parse.empty() && (grd.pred.empty() || grd.gt.empty())) {
      throw CLI::ValidationError("eval-ground", "give --parse FILE or both --pred and --gt");
    }
    const auto frame = parse_frame(grd.frame);
    action = [&, frame] {
      if (!grd.parse.empty()) {
        GroundingParseOptions opts;
        opts.frame = frame;
        std::stringstream ss(grd.vocab);
        for (std::string name; std::getline(ss, name, ',');) {
          if (!name.empty()) opts.vocabulary.push_back(name);
        }
        const auto parsed = parse_groundings(read_text(grd.parse), opts);
        json diags = json::array();
        for (const auto& d : parsed.diagnostics) {
          diags.push_back({{"offset", d.offset}, {"message", d.message}});
          spdlog::warn("offset {}: {}", d.offset, d.message);
        }
        print_json(out, {{"entries", entries_to_json(parsed.entries)}, {"diagnostics", diags}});
        return kExitOk;
      }
      auto read_texts = [&](const fs::path& path) {
        const auto raw = read_jsonl(path);
        report_diagnostics(err, path, raw.diagnostics);
        std::map<std::string, json> docs;
        for (const auto& rec : raw.records) docs[rec.at("doc").at("id").get<std::string>()] = rec.at("doc");
        return docs;
      };
      auto frame_of = [](const json& d) -> std::optional<FrameDims> {
        if (d.contains("image_w") && d.contains("image_h")) {
          return FrameDims{d.at("image_w").get<int>(), d.at("image_h").get<int>()};
        }
        return std::nullopt;
      };
      const auto gts = read_texts(grd.gt);
      const auto preds = read_texts(grd.pred);
      std::vector<GroundingSample> samples;
      for (const auto& [id, g] : gts) {
        GroundingSample s;
        s.id = id;
        GroundingParseOptions gopt;
        gopt.frame = frame_of(g);
        s.gt = parse_groundings(g.value("text", ""), gopt).entries;
        if (auto it = preds.find(id); it != preds.end()) {
          GroundingParseOptions popt;
          popt.frame = frame_of(it->second) ? frame_of(it->second) : gopt.frame;
          for (const auto& [name, e] : s.gt) popt.vocabulary.push_back(name);
          s.pred = parse_groundings(it->second.value("text", ""), popt).entries;
        } else {
          err << grd.pred << ": no prediction for '" << id << "'\n";
        }
        samples.push_back(std::move(s));
      }
      const auto report = grounding_metrics(samples);
      if (grd.table) {
        out << render_grounding_table({{fs::path(grd.pred).stem().string(), report}});
      } else {
        print_json(out, report.to_json());
      }
      return kExitOk;
    };
  });

  // judge
  struct {
    std::string replies, episodes, gt, replies_out;
    BackendFlags backend;
    int workers = 0;
  } jdg;
  auto* c_jdg = app.add_subcommand(
      "judge", "Grade answers with a judge model and macro-average the scores per dataset");
  c_jdg->add_option("--replies", jdg.replies, "Existing judge replies: JSON Lines of {id, dataset, reply}")
      ->check(CLI::ExistingFile);
  c_jdg->add_option("--episodes", jdg.episodes, "Episodes whose answers are graded")->check(CLI::ExistingFile);
  c_jdg->add_option("--gt", jdg.gt, "Samples holding the reference answers")->check(CLI::ExistingFile);
  c_jdg->add_option("--replies-out", jdg.replies_out, "Write the collected judge replies here");
  add_backend_flags(c_jdg, jdg.backend, "--oracle", "Scripted judge replies: JSON Lines of {id, responses}");
  c_jdg->add_option("--workers", jdg.workers, "Worker threads")->check(CLI::PositiveNumber);
  c_jdg->callback([&] {
    if (jdg.replies.empty() == jdg.episodes.empty()) {
      throw CLI::ValidationError("judge", "give either --replies or --episodes with --gt");
    }
    if (!jdg.episodes.empty() && jdg.gt.empty()) throw CLI::ValidationError("judge", "--episodes needs --gt");
    action = [&] {
      struct Item {
        std::string id, dataset, reply;
      };
      std::vector<Item> items;
      std::size_t failures = 0;
      if (!jdg.replies.empty()) {
        const auto raw = read_jsonl(jdg.replies);
        report_diagnostics(err, jdg.replies, raw.diagnostics);
        for (const auto& rec : raw.records) {
          const json& d = rec.at("doc");
          items.push_back({d.at("id").get<std::string>(), d.value("dataset", "default"),
                           d.at("reply").get<std::string>()});
        }
      } else {
        Backend backend = make_backend(jdg.backend, "responses", err);
        const auto gt = load_gt(jdg.gt, err);
        auto loaded = load_episodes(jdg.episodes);
        report_diagnostics(err, jdg.episodes, loaded.diagnostics);
        const auto& eps = loaded.records;
        std::vector<std::optional<Item>> slots(eps.size());
        failures = run_items(
            eps.size(), worker_count(jdg.workers, backend), err,
            [&](std::size_t i) { return "judge " + eps[i].sample_id; },
            [&](std::size_t i) {
              const auto& ep = eps[i];
              auto it = gt.find(ep.sample_id);
              if (it == gt.end()) throw CommandError("no reference answer");
              const auto answer = extract_answer(ep);
              GenRequest req;
              req.template_id = std::string(prompt_id::kGrader);
              req.text = backend.registry().fill(prompt_id::kGrader,
                                                 {{"Question", it->second.question},
                                                  {"Standard answer", it->second.short_answer},
                                                  {"Model's answer", answer.text}});
              req.decode = backend.config.gen.decode;
              auto client = backend.generator(ep.sample_id);
              std::string reply = call_with_retry(*client, req, backend.config.gen.retry,
                                                  [](std::string s) { return s; });
              slots[i] = Item{ep.sample_id, it->second.source.empty() ? "default" : it->second.source,
                              std::move(reply)};
            });
        items = collect(slots);
      }
      if (!jdg.replies_out.empty()) {
        std::vector<json> docs;
        for (const auto& it : items) docs.push_back({{"id", it.id}, {"dataset", it.dataset}, {"reply", it.reply}});
        write_jsonl(jdg.replies_out, docs);
      }
      std::map<std::string, std::vector<double>> per_dataset;
      std::size_t lenient = 0, clamped = 0, unparsed = 0;
      for (const auto& it : items) {
        try {
          const auto s = parse_judge_score(it.reply);
          per_dataset[it.dataset].push_back(s.score);
          lenient += s.lenient;
          clamped += s.clamped;
        } catch (const JudgeParseError& e) {
          ++unparsed;
          err << "judge " << it.id << ": " << e.what() << "\n";
        }
      }
      json means = json::object();
      for (const auto& [ds, v] : per_dataset) means[ds] = macro_average(std::vector<std::vector<double>>{v});
      json report = {{"per_dataset", means},
                     {"macro_average", per_dataset.empty() ? json(nullptr) : json(macro_average(per_dataset))},
                     {"scored", items.size() - unparsed},
                     {"unparsed", unparsed},
                     {"lenient", lenient},
                     {"clamped", clamped}};
      return finish(out, "judge", items.size() + failures, failures + unparsed, report);
    };
  });

  // stats
  struct {
    std::string traces, unit = "chars";
    bool table = false;
  } st;
  auto* c_st = app.add_subcommand("stats", "Round histogram, area fractions and rationale lengths");
  c_st->add_option("--traces", st.traces, "Traces")->required()->check(CLI::ExistingFile);
  c_st->add_option("--unit", st.unit, "Length unit")->check(CLI::IsMember({"chars", "tokens"}));
  c_st->add_flag("--table", st.table, "Print a text table instead of JSON");
  c_st->callback([&] {
    action = [&] {
      auto loaded = load_traces(st.traces);
      report_diagnostics(err, st.traces, loaded.diagnostics);
      const auto report =
          dataset_stats(loaded.records, st.unit == "tokens" ? LengthUnit::tokens : LengthUnit::chars);
      if (st.table) {
        out << render_stats_table(report);
      } else {
        print_json(out, report.to_json());
      }
      return kExitOk;
    };
  });

  if (args.empty()) {
    out << app.help();
    return kExitUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!action) return kExitUsage;
  try {
    return action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace zoomcot
