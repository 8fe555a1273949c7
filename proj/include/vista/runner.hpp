#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vista/cache.hpp"
#include "vista/data.hpp"
#include "vista/encoder.hpp"
#include "vista/idspace.hpp"
#include "vista/metrics.hpp"
#include "vista/prompts.hpp"
#include "vista/scoring.hpp"

namespace vista {

class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

enum class BackendKind { Mock, Stub, Exported };

struct BackendSpec {
  BackendKind kind = BackendKind::Mock;
  int dim = 512;
  uint64_t seed = 0;
  std::string stub_table_path;   // stub backend
  ExportedModelSpec exported;    // exported backend
};

struct RunConfig {
  BackendSpec backend;
  PromptSetConfig prompts;
  double tau = 10.0;
  double quantile = 0.95;
  bool enable_vp = true;
  bool enable_ta = true;
  bool normalize_before_fusion = false;
  unsigned workers = 0;
  uint64_t seed = 0;
  double min_confidence = 0.5;
  std::string split_config_path;
  std::string id_annotations_path;
  std::string ood_annotations_path;
  std::string images_root;
  std::string output_dir;
  std::string id_space_path;  // optional persisted IdSpace to reuse
  std::string cache_path;     // optional embedding cache file
};

// -- config (de)serialization ----------------------------------------------

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json b;
  switch (c.backend.kind) {
    case BackendKind::Mock:
      b = {{"type", "mock"}, {"dim", c.backend.dim}, {"seed", c.backend.seed}};
      break;
    case BackendKind::Stub:
      b = {{"type", "stub"}, {"table", c.backend.stub_table_path}};
      break;
    case BackendKind::Exported:
      b = {{"type", "exported"},
           {"model", c.backend.exported.model_path},
           {"resolution", c.backend.exported.input_resolution},
           {"mean", c.backend.exported.mean},
           {"std", c.backend.exported.stdev}};
      break;
  }
  return nlohmann::json{
      {"backend", b},
      {"prompts",
       {{"sigma", c.prompts.sigma},
        {"box_color",
         {c.prompts.box_color.r, c.prompts.box_color.g, c.prompts.box_color.b}},
        {"stroke", c.prompts.stroke},
        {"context_margin", c.prompts.context_margin},
        {"include_grayscale", c.prompts.include_grayscale},
        {"include_colorful_box", c.prompts.include_colorful_box}}},
      {"tau", c.tau},
      {"quantile", c.quantile},
      {"enable_vp", c.enable_vp},
      {"enable_ta", c.enable_ta},
      {"normalize_before_fusion", c.normalize_before_fusion},
      {"workers", c.workers},
      {"seed", c.seed},
      {"min_confidence", c.min_confidence},
      {"split_config", c.split_config_path},
      {"id_annotations", c.id_annotations_path},
      {"ood_annotations", c.ood_annotations_path},
      {"images_root", c.images_root},
      {"output_dir", c.output_dir},
      {"id_space_file", c.id_space_path},
      {"cache_file", c.cache_path}};
}

inline RunConfig run_config_from_json(const nlohmann::json& doc) {
  RunConfig c;
  try {
    if (doc.contains("backend")) {
      const auto& b = doc["backend"];
      const std::string type = b.value("type", "mock");
      if (type == "mock") {
        c.backend.kind = BackendKind::Mock;
        c.backend.dim = b.value("dim", 512);
        c.backend.seed = b.value("seed", uint64_t{0});
      } else if (type == "stub") {
        c.backend.kind = BackendKind::Stub;
        c.backend.stub_table_path = b.value("table", std::string{});
        if (c.backend.stub_table_path.empty())
          throw config_error("stub backend requires a table path");
      } else if (type == "exported") {
        c.backend.kind = BackendKind::Exported;
        c.backend.exported.model_path = b.value("model", std::string{});
        c.backend.exported.input_resolution = b.value("resolution", 224);
        if (b.contains("mean"))
          c.backend.exported.mean = b["mean"].get<std::array<float, 3>>();
        if (b.contains("std"))
          c.backend.exported.stdev = b["std"].get<std::array<float, 3>>();
        if (c.backend.exported.model_path.empty())
          throw config_error("exported backend requires a model path");
      } else {
        throw config_error("unknown backend type: " + type);
      }
    }
    if (doc.contains("prompts")) {
      const auto& p = doc["prompts"];
      c.prompts.sigma = p.value("sigma", 2.0);
      if (p.contains("box_color")) {
        const auto col = p["box_color"].get<std::vector<float>>();
        if (col.size() != 3)
          throw config_error("box_color must have 3 entries");
        c.prompts.box_color = {col[0], col[1], col[2]};
      }
      c.prompts.stroke = p.value("stroke", 0);
      c.prompts.context_margin = p.value("context_margin", 1.5);
      c.prompts.include_grayscale = p.value("include_grayscale", false);
      c.prompts.include_colorful_box = p.value("include_colorful_box", false);
    }
    c.tau = doc.value("tau", 10.0);
    c.quantile = doc.value("quantile", 0.95);
    c.enable_vp = doc.value("enable_vp", true);
    c.enable_ta = doc.value("enable_ta", true);
    c.normalize_before_fusion = doc.value("normalize_before_fusion", false);
    c.workers = doc.value("workers", 0u);
    c.seed = doc.value("seed", uint64_t{0});
    c.min_confidence = doc.value("min_confidence", 0.5);
    c.split_config_path = doc.value("split_config", std::string{});
    c.id_annotations_path = doc.value("id_annotations", std::string{});
    c.ood_annotations_path = doc.value("ood_annotations", std::string{});
    c.images_root = doc.value("images_root", std::string{});
    c.output_dir = doc.value("output_dir", std::string{});
    c.id_space_path = doc.value("id_space_file", std::string{});
    c.cache_path = doc.value("cache_file", std::string{});
  } catch (const nlohmann::json::exception& ex) {
    throw config_error(std::string("bad run config: ") + ex.what());
  }
  if (!(c.tau > 0)) throw config_error("tau must be > 0");
  if (!(c.quantile > 0 && c.quantile < 1))
    throw config_error("quantile must be in (0,1)");
  if (c.prompts.sigma <= 0) throw config_error("prompt sigma must be > 0");
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open run config: " + path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw config_error("malformed run config " + path + ": " + ex.what());
  }
  return run_config_from_json(doc);
}

// -- backend construction ---------------------------------------------------

/// Stub table file: {"dim": D, "noise_norm": r, "ambiguous_axis": i,
/// "code_tolerance": t, "entries": [{"label": "...", "code": v, "axis": i}]}.
/// Entries with an empty label are image-only (OOD) codes.
inline std::shared_ptr<SemanticStubBackend> load_stub_backend(
    const std::string& table_path) {
  std::ifstream is(table_path);
  if (!is) throw config_error("cannot open stub table: " + table_path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw config_error("malformed stub table " + table_path + ": " + ex.what());
  }
  try {
    const int dim = doc.at("dim").get<int>();
    std::vector<StubEntry> entries;
    for (const auto& e : doc.at("entries"))
      entries.push_back({e.value("label", std::string{}),
                         e.at("code").get<double>(), e.at("axis").get<int>()});
    return std::make_shared<SemanticStubBackend>(
        dim, std::move(entries), doc.value("noise_norm", 0.3),
        doc.value("ambiguous_axis", -1), doc.value("code_tolerance", 0.01));
  } catch (const nlohmann::json::exception& ex) {
    throw config_error("bad stub table " + table_path + ": " + ex.what());
  }
}

inline std::shared_ptr<EncoderBackend> make_backend(const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendKind::Mock:
      return std::make_shared<MockBackend>(spec.dim, spec.seed);
    case BackendKind::Stub:
      return load_stub_backend(spec.stub_table_path);
    case BackendKind::Exported:
      return std::make_shared<ExportedModelBackend>(spec.exported);
  }
  throw config_error("unknown backend kind");
}

// -- pipeline ---------------------------------------------------------------

/// Prompt set implied by the ablation switches: VP off collapses to the
/// tight crop; TA off collapses every text template to the plain one.
inline PromptSet resolve_prompt_set(const RunConfig& config) {
  PromptSet set = config.enable_vp ? default_prompt_set(config.prompts)
                                   : crop_only_prompt_set();
  if (config.enable_ta) return set;
  std::vector<PromptSpec> specs = set.specs();
  for (PromptSpec& s : specs)
    s.text_template = default_text_template(VisualPromptKind::Crop);
  return PromptSet(std::move(specs));
}

using ImageLoader = std::function<ImageBuffer(const std::string&)>;

/// Materialize score inputs for a record list via the given image loader.
inline std::vector<ScoreInput> make_score_inputs(
    const std::vector<InstanceRecord>& records, const ImageLoader& loader) {
  std::vector<ScoreInput> inputs;
  inputs.reserve(records.size());
  for (const InstanceRecord& rec : records) {
    ScoreInput in;
    in.image_id = rec.image_id;
    in.image = loader(rec.image_path);
    in.box = rec.box;
    inputs.push_back(std::move(in));
  }
  return inputs;
}

struct EvaluationResult {
  EvalReport report;
  double gamma = 0.0;
  std::vector<ScoredInstance> id_scored;
  std::vector<ScoredInstance> ood_scored;
  std::vector<BatchError> id_errors;
  std::vector<BatchError> ood_errors;
};

/// Core evaluation over in-memory instances: build the ID space, score ID
/// instances, calibrate gamma at the configured quantile, score OOD
/// instances, and assemble the metric report.
inline EvaluationResult evaluate_instances(
    const std::vector<ScoreInput>& id_instances,
    const std::vector<ScoreInput>& ood_instances,
    const std::vector<std::string>& id_labels, const PromptSet& prompts,
    EncoderBackend& backend, const RunConfig& config,
    const IdSpace* prebuilt_space = nullptr) {
  IdSpaceOptions space_opts;
  space_opts.normalize_before_fusion = config.normalize_before_fusion;
  const IdSpace space =
      prebuilt_space ? *prebuilt_space
                     : build_id_space(id_labels, prompts, backend, space_opts);

  ScoringConfig scoring;
  scoring.tau = config.tau;
  scoring.quantile = config.quantile;
  scoring.workers = config.workers;
  scoring.normalize_before_fusion = config.normalize_before_fusion;

  EvaluationResult result;
  BatchResult id_batch =
      score_batch(id_instances, prompts, backend, space, scoring);
  if (id_batch.scored.empty())
    throw data_error("no ID instance survived scoring");

  std::vector<double> id_scores;
  id_scores.reserve(id_batch.scored.size());
  for (const ScoredInstance& s : id_batch.scored)
    id_scores.push_back(s.uncertainty);
  result.gamma = calibrate_gamma(id_scores, config.quantile);

  scoring.gamma = result.gamma;
  for (ScoredInstance& s : id_batch.scored)
    s.decision = classify(s.uncertainty, result.gamma);
  BatchResult ood_batch =
      score_batch(ood_instances, prompts, backend, space, scoring);
  if (ood_batch.scored.empty())
    throw data_error("no OOD instance survived scoring");

  std::vector<double> ood_scores;
  ood_scores.reserve(ood_batch.scored.size());
  for (const ScoredInstance& s : ood_batch.scored)
    ood_scores.push_back(s.uncertainty);

  result.report = summarize(id_scores, ood_scores, config.quantile);
  result.id_scored = std::move(id_batch.scored);
  result.ood_scored = std::move(ood_batch.scored);
  result.id_errors = std::move(id_batch.errors);
  result.ood_errors = std::move(ood_batch.errors);
  return result;
}

inline void write_score_file(const std::vector<ScoredInstance>& scored,
                             const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot open score file for write: " + path);
  for (const ScoredInstance& s : scored) os << format_score_record(s) << '\n';
}

inline std::vector<ScoredInstance> read_score_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open score file: " + path);
  std::vector<ScoredInstance> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(parse_score_record(line));
  return out;
}

/// Load the datasets named in the config and produce (id, ood) score inputs
/// plus the ID label list.
struct LoadedDatasets {
  std::vector<ScoreInput> id_instances;
  std::vector<ScoreInput> ood_instances;
  std::vector<std::string> id_labels;
  size_t excluded_ood = 0;
};

inline LoadedDatasets load_datasets(const RunConfig& config,
                                    const ImageLoader& loader) {
  if (config.split_config_path.empty())
    throw config_error("split_config path is required");
  if (config.id_annotations_path.empty() || config.ood_annotations_path.empty())
    throw config_error("id_annotations and ood_annotations paths are required");

  const SplitConfig split = load_split_config(config.split_config_path);

  CocoLoadOptions id_opts;
  id_opts.origin = Origin::Id;
  id_opts.min_confidence = config.min_confidence;
  CocoLoadOptions ood_opts;
  ood_opts.origin = Origin::Ood;
  ood_opts.min_confidence = config.min_confidence;

  std::vector<InstanceRecord> id_records = load_coco_annotations(
      config.id_annotations_path, config.images_root, id_opts);
  std::vector<InstanceRecord> ood_records = load_coco_annotations(
      config.ood_annotations_path, config.images_root, ood_opts);

  LoadedDatasets out;
  ood_records = apply_ood_exclusion(std::move(ood_records), split,
                                    &out.excluded_ood);
  out.id_labels = split.id_class_names;
  out.id_instances = make_score_inputs(id_records, loader);
  out.ood_instances = make_score_inputs(ood_records, loader);
  return out;
}

/// File-driven evaluation: load, evaluate, and write artifacts (score files,
/// report, resolved-config snapshot) into the output directory.
inline EvaluationResult run_evaluation(const RunConfig& config,
                                       const ImageLoader& loader) {
  const LoadedDatasets data = load_datasets(config, loader);
  const PromptSet prompts = resolve_prompt_set(config);

  std::shared_ptr<EncoderBackend> backend = make_backend(config.backend);
  auto caching = std::make_shared<CachingBackend>(backend);
  if (!config.cache_path.empty() &&
      std::filesystem::exists(config.cache_path))
    caching->load(config.cache_path);

  std::optional<IdSpace> loaded_space;
  if (!config.id_space_path.empty() &&
      std::filesystem::exists(config.id_space_path)) {
    loaded_space = load_id_space(config.id_space_path);
    if (loaded_space->prompt_fingerprint != prompt_fingerprint(prompts))
      throw config_error("persisted id space was built with a different "
                         "prompt set: " + config.id_space_path);
  }

  EvaluationResult result = evaluate_instances(
      data.id_instances, data.ood_instances, data.id_labels, prompts, *caching,
      config, loaded_space ? &*loaded_space : nullptr);

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path dir(config.output_dir);
    write_score_file(result.id_scored, (dir / "id_scores.txt").string());
    write_score_file(result.ood_scored, (dir / "ood_scores.txt").string());
    std::ofstream report(dir / "eval_report.txt", std::ios::trunc);
    report << format_report_table(result.report, "vista")
           << format_report_record(result.report) << '\n';
    std::ofstream snapshot(dir / "resolved_config.json", std::ios::trunc);
    snapshot << run_config_to_json(config).dump(2) << '\n';
  }
  if (!config.cache_path.empty()) caching->save(config.cache_path);
  return result;
}

// -- ablation grid ----------------------------------------------------------

struct AblationRow {
  bool ta = false;
  bool vp = false;
  EvalReport report;
};

inline std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(6) << "TA" << std::setw(6) << "VP" << std::right
     << std::setw(12) << "FPR95 v" << std::setw(12) << "AUROC ^" << '\n';
  for (const AblationRow& row : rows)
    os << std::left << std::setw(6) << (row.ta ? "x" : "-") << std::setw(6)
       << (row.vp ? "x" : "-") << std::right << std::setw(12)
       << 100.0 * row.report.fpr_at_q << std::setw(12)
       << 100.0 * row.report.auroc << '\n';
  return os.str();
}

/// The {TA, VP} x {on, off} grid in the canonical row order:
/// (-,-), (TA,-), (-,VP), (TA,VP). Encodings are shared across rows through
/// one caching backend, so the crop view is encoded once.
inline std::vector<AblationRow> run_ablation(const RunConfig& config,
                                             const ImageLoader& loader) {
  const LoadedDatasets data = load_datasets(config, loader);
  std::shared_ptr<EncoderBackend> backend = make_backend(config.backend);
  auto caching = std::make_shared<CachingBackend>(backend);

  static constexpr std::pair<bool, bool> kGrid[4] = {
      {false, false}, {true, false}, {false, true}, {true, true}};

  std::vector<AblationRow> rows;
  for (auto [ta, vp] : kGrid) {
    RunConfig row_config = config;
    row_config.enable_ta = ta;
    row_config.enable_vp = vp;
    const PromptSet prompts = resolve_prompt_set(row_config);
    EvaluationResult r =
        evaluate_instances(data.id_instances, data.ood_instances,
                           data.id_labels, prompts, *caching, row_config);
    rows.push_back({ta, vp, r.report});
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    std::ofstream os(std::filesystem::path(config.output_dir) /
                     "ablation.txt", std::ios::trunc);
    os << format_ablation_table(rows);
  }
  return rows;
}

}  // namespace vista
