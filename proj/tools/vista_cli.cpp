// Command-line front end: wires config -> data -> prompts -> encoder ->
// id space -> scoring -> metrics.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 backend error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vista/image_io.hpp"
#include "vista/vista.hpp"

namespace fs = std::filesystem;

namespace {

vista::RunConfig load_config_or_die(const std::string& path) {
  return vista::load_run_config(path);
}

void apply_overrides(vista::RunConfig& cfg, double tau, double quantile,
                     int workers, const std::string& output_dir) {
  if (tau > 0) cfg.tau = tau;
  if (quantile > 0) cfg.quantile = quantile;
  if (workers >= 0) cfg.workers = static_cast<unsigned>(workers);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
}

int cmd_build_space(const std::string& config_path, const std::string& out) {
  vista::RunConfig cfg = load_config_or_die(config_path);
  const vista::SplitConfig split =
      vista::load_split_config(cfg.split_config_path);
  const vista::PromptSet prompts = vista::resolve_prompt_set(cfg);
  auto backend = vista::make_backend(cfg.backend);
  vista::IdSpaceOptions space_opts;
  space_opts.normalize_before_fusion = cfg.normalize_before_fusion;
  const vista::IdSpace space = vista::build_id_space(split.id_class_names,
                                                     prompts, *backend,
                                                     space_opts);
  const std::string path = out.empty() ? cfg.id_space_path : out;
  if (path.empty())
    throw vista::config_error("build-space: no output path (--out or "
                              "id_space_file in config)");
  vista::save_id_space(space, path);
  std::cout << "id space: " << space.size() << " classes, dim "
            << space.dim() << " -> " << path << "\n";
  return 0;
}

int cmd_calibrate(const std::string& scores_path, double quantile) {
  const auto scored = vista::read_score_file(scores_path);
  if (scored.empty())
    throw vista::data_error("calibrate: empty score file: " + scores_path);
  std::vector<double> scores;
  for (const auto& s : scored) scores.push_back(s.uncertainty);
  const double gamma = vista::calibrate_gamma(scores, quantile);
  std::cout.precision(17);
  std::cout << "gamma " << gamma << " (q=" << quantile << ", n="
            << scores.size() << ")\n";
  return 0;
}

int cmd_score(const std::string& config_path, const std::string& annotations,
              const std::string& origin, const std::string& out,
              double gamma) {
  vista::RunConfig cfg = load_config_or_die(config_path);
  const vista::SplitConfig split =
      vista::load_split_config(cfg.split_config_path);
  const vista::PromptSet prompts = vista::resolve_prompt_set(cfg);

  auto backend = vista::make_backend(cfg.backend);
  auto caching = std::make_shared<vista::CachingBackend>(backend);
  if (!cfg.cache_path.empty() && fs::exists(cfg.cache_path))
    caching->load(cfg.cache_path);

  vista::IdSpace space;
  if (!cfg.id_space_path.empty() && fs::exists(cfg.id_space_path)) {
    space = vista::load_id_space(cfg.id_space_path);
    if (space.prompt_fingerprint != vista::prompt_fingerprint(prompts))
      throw vista::config_error(
          "persisted id space does not match the configured prompt set");
  } else {
    vista::IdSpaceOptions space_opts;
    space_opts.normalize_before_fusion = cfg.normalize_before_fusion;
    space = vista::build_id_space(split.id_class_names, prompts, *caching,
                                  space_opts);
  }

  vista::CocoLoadOptions load_opts;
  load_opts.min_confidence = cfg.min_confidence;
  load_opts.origin = origin == "ood" ? vista::Origin::Ood : vista::Origin::Id;
  auto records = vista::load_coco_annotations(annotations, cfg.images_root,
                                              load_opts);
  if (load_opts.origin == vista::Origin::Ood)
    records = vista::apply_ood_exclusion(std::move(records), split);
  const auto inputs = vista::make_score_inputs(records, vista::load_image);

  vista::ScoringConfig scoring;
  scoring.tau = cfg.tau;
  scoring.quantile = cfg.quantile;
  scoring.workers = cfg.workers;
  scoring.normalize_before_fusion = cfg.normalize_before_fusion;
  if (std::isfinite(gamma)) scoring.gamma = gamma;

  const vista::BatchResult batch =
      vista::score_batch(inputs, prompts, *caching, space, scoring);
  for (const auto& err : batch.errors)
    std::cerr << "instance " << err.index << ": " << err.message << "\n";
  vista::write_score_file(batch.scored, out);
  if (!cfg.cache_path.empty()) caching->save(cfg.cache_path);
  std::cout << batch.scored.size() << " instances scored -> " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, double tau, double quantile,
             int workers, const std::string& output_dir) {
  vista::RunConfig cfg = load_config_or_die(config_path);
  apply_overrides(cfg, tau, quantile, workers, output_dir);
  const vista::EvaluationResult r =
      vista::run_evaluation(cfg, vista::load_image);
  std::cout << vista::format_report_table(r.report, "vista");
  std::cout << vista::format_report_record(r.report) << "\n";
  for (const auto& err : r.id_errors)
    std::cerr << "id instance " << err.index << ": " << err.message << "\n";
  for (const auto& err : r.ood_errors)
    std::cerr << "ood instance " << err.index << ": " << err.message << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, double tau, double quantile,
               int workers, const std::string& output_dir) {
  vista::RunConfig cfg = load_config_or_die(config_path);
  apply_overrides(cfg, tau, quantile, workers, output_dir);
  const auto rows = vista::run_ablation(cfg, vista::load_image);
  std::cout << vista::format_ablation_table(rows);
  return 0;
}

int cmd_render_prompts(const std::string& config_path,
                       const std::string& annotations, size_t count,
                       const std::string& out_dir) {
  vista::RunConfig cfg = load_config_or_die(config_path);
  const vista::PromptSet prompts = vista::resolve_prompt_set(cfg);
  vista::CocoLoadOptions load_opts;
  load_opts.min_confidence = cfg.min_confidence;
  const auto records =
      vista::load_coco_annotations(annotations, cfg.images_root, load_opts);
  fs::create_directories(out_dir);
  size_t rendered = 0;
  for (const auto& rec : records) {
    if (rendered >= count) break;
    const vista::ImageBuffer image = vista::load_image(rec.image_path);
    for (const vista::PromptSpec& spec : prompts) {
      const vista::ImageBuffer view =
          vista::apply_visual_prompt(spec, image, rec.box);
      const fs::path out = fs::path(out_dir) /
                           (rec.image_id + "_" + std::to_string(rendered) +
                            "_" + vista::to_string(spec.kind) + ".png");
      vista::save_image(view, out.string());
    }
    ++rendered;
  }
  std::cout << rendered << " instances rendered -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot object-level OOD detection (visual prompts + "
               "text-augmented ID space)"};
  app.require_subcommand(1);

  std::string config_path, annotations, out, origin = "id", output_dir;
  std::string scores_path;
  double tau = -1, quantile = -1, gamma = std::nan("");
  double calib_quantile = 0.95;
  int workers = -1;
  size_t count = 4;

  auto* build = app.add_subcommand("build-space",
                                   "Build and persist the ID embedding space");
  build->add_option("--config", config_path, "Run config JSON")->required();
  build->add_option("--out", out, "Output id-space file");

  auto* calibrate =
      app.add_subcommand("calibrate", "Compute gamma from an ID score file");
  calibrate->add_option("--scores", scores_path, "ID score file")->required();
  calibrate->add_option("--quantile", calib_quantile, "ID retention level");

  auto* score = app.add_subcommand("score", "Score instances from a COCO file");
  score->add_option("--config", config_path, "Run config JSON")->required();
  score->add_option("--annotations", annotations, "COCO annotation JSON")
      ->required();
  score->add_option("--origin", origin, "id|ood")
      ->check(CLI::IsMember({"id", "ood"}));
  score->add_option("--out", out, "Output score file")->required();
  score->add_option("--gamma", gamma, "Threshold for decisions");

  auto* eval = app.add_subcommand("eval", "Full evaluation run");
  eval->add_option("--config", config_path, "Run config JSON")->required();
  eval->add_option("--tau", tau, "Temperature override");
  eval->add_option("--quantile", quantile, "ID retention override");
  eval->add_option("--workers", workers, "Worker count override");
  eval->add_option("--output-dir", output_dir, "Artifact directory override");

  auto* ablate = app.add_subcommand("ablate", "Run the {TA,VP} ablation grid");
  ablate->add_option("--config", config_path, "Run config JSON")->required();
  ablate->add_option("--tau", tau, "Temperature override");
  ablate->add_option("--quantile", quantile, "ID retention override");
  ablate->add_option("--workers", workers, "Worker count override");
  ablate->add_option("--output-dir", output_dir, "Artifact directory override");

  auto* render = app.add_subcommand(
      "render-prompts", "Write prompted views as images for inspection");
  render->add_option("--config", config_path, "Run config JSON")->required();
  render->add_option("--annotations", annotations, "COCO annotation JSON")
      ->required();
  render->add_option("--count", count, "Number of instances to render");
  render->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_space(config_path, out);
    if (calibrate->parsed()) return cmd_calibrate(scores_path, calib_quantile);
    if (score->parsed())
      return cmd_score(config_path, annotations, origin, out, gamma);
    if (eval->parsed())
      return cmd_eval(config_path, tau, quantile, workers, output_dir);
    if (ablate->parsed())
      return cmd_ablate(config_path, tau, quantile, workers, output_dir);
    if (render->parsed())
      return cmd_render_prompts(config_path, annotations, count, out);
  } catch (const vista::config_error& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 1;
  } catch (const vista::data_error& ex) {
    std::cerr << "data error: " << ex.what() << "\n";
    return 2;
  } catch (const vista::backend_error& ex) {
    std::cerr << "backend error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
