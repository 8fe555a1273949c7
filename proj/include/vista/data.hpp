#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vista/image.hpp"

namespace vista {

class data_error : public std::runtime_error {
public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

enum class Origin { Id, Ood };

/// One annotated or detected object instance.
struct InstanceRecord {
  std::string image_path;
  std::string image_id;
  BoundingBox box;
  std::string category;            // may be empty for detector outputs
  std::optional<double> score;     // detector confidence, when present
  Origin origin = Origin::Id;
};

struct LoadStats {
  size_t loaded = 0;
  size_t dropped_degenerate = 0;   // zero area after rounding/clamping
  size_t dropped_low_confidence = 0;
};

struct CocoLoadOptions {
  double min_confidence = 0.5;  // gates records that carry a `score` field
  Origin origin = Origin::Id;
};

/// Parse COCO-style JSON: `images` (id, file_name, width, height),
/// `annotations` (image_id, bbox [x,y,w,h], category_id, optional score),
/// `categories` (id, name). Boxes are converted to corner form, rounded
/// half-away-from-zero, and clamped to image bounds; degenerate boxes are
/// dropped and counted.
inline std::vector<InstanceRecord> load_coco_annotations(
    const std::string& annotation_path, const std::string& images_root,
    const CocoLoadOptions& opts = {}, LoadStats* stats = nullptr) {
  std::ifstream is(annotation_path);
  if (!is) throw data_error("cannot open annotation file: " + annotation_path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw data_error("malformed JSON in " + annotation_path + ": " + ex.what());
  }

  struct ImageInfo {
    std::string file_name;
    int width = 0, height = 0;
  };
  std::map<int64_t, ImageInfo> images;
  std::map<int64_t, std::string> categories;
  try {
    for (const auto& img : doc.at("images"))
      images[img.at("id").get<int64_t>()] = {
          img.at("file_name").get<std::string>(), img.at("width").get<int>(),
          img.at("height").get<int>()};
    for (const auto& cat : doc.value("categories", nlohmann::json::array()))
      categories[cat.at("id").get<int64_t>()] =
          cat.at("name").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw data_error("bad images/categories section in " + annotation_path +
                     ": " + ex.what());
  }

  LoadStats local;
  std::vector<InstanceRecord> records;
  size_t ann_index = 0;
  for (const auto& ann : doc.at("annotations")) {
    const std::string where =
        annotation_path + " annotation #" + std::to_string(ann_index++);
    int64_t image_id;
    std::vector<double> bbox;
    try {
      image_id = ann.at("image_id").get<int64_t>();
      bbox = ann.at("bbox").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& ex) {
      throw data_error(where + ": " + ex.what());
    }
    const auto img = images.find(image_id);
    if (img == images.end())
      throw data_error(where + ": dangling image_id " +
                       std::to_string(image_id));
    if (bbox.size() != 4)
      throw data_error(where + ": bbox must have 4 entries");

    InstanceRecord rec;
    rec.image_id = std::to_string(image_id);
    rec.image_path = images_root.empty()
                         ? img->second.file_name
                         : images_root + "/" + img->second.file_name;
    rec.origin = opts.origin;
    if (ann.contains("category_id")) {
      const int64_t cat_id = ann["category_id"].get<int64_t>();
      const auto cat = categories.find(cat_id);
      if (cat == categories.end())
        throw data_error(where + ": dangling category_id " +
                         std::to_string(cat_id));
      rec.category = cat->second;
    }
    if (ann.contains("score")) {
      rec.score = ann["score"].get<double>();
      if (*rec.score < opts.min_confidence) {
        ++local.dropped_low_confidence;
        continue;
      }
    }

    BoundingBox raw{round_half_away(bbox[0]), round_half_away(bbox[1]),
                    round_half_away(bbox[0] + bbox[2]),
                    round_half_away(bbox[1] + bbox[3])};
    try {
      rec.box = clamp_box(raw, img->second.width, img->second.height);
    } catch (const malformed_region_error&) {
      ++local.dropped_degenerate;
      continue;
    }
    records.push_back(std::move(rec));
    ++local.loaded;
  }
  if (stats) *stats = local;
  return records;
}

struct SplitConfig {
  std::vector<std::string> id_class_names;
  std::string ood_source;
  bool exclude_id_classes = true;
};

/// Split config file: JSON with keys `id_classes` (non-empty string array),
/// optional `ood_source` (tag), optional `exclude_id_classes` (default true).
inline SplitConfig load_split_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open split config: " + path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw data_error("malformed split config " + path + ": " + ex.what());
  }
  SplitConfig cfg;
  try {
    cfg.id_class_names = doc.at("id_classes").get<std::vector<std::string>>();
    cfg.ood_source = doc.value("ood_source", std::string{});
    cfg.exclude_id_classes = doc.value("exclude_id_classes", true);
  } catch (const nlohmann::json::exception& ex) {
    throw data_error("bad split config " + path + ": " + ex.what());
  }
  if (cfg.id_class_names.empty())
    throw data_error("split config " + path + ": id_classes is empty");
  std::set<std::string> unique(cfg.id_class_names.begin(),
                               cfg.id_class_names.end());
  if (unique.size() != cfg.id_class_names.size())
    throw data_error("split config " + path + ": duplicate id class names");
  return cfg;
}

/// Enforce the class-exclusion rule on OOD-side records: any record whose
/// category is an ID class is dropped (or kept with a warning count when
/// exclusion is off).
inline std::vector<InstanceRecord> apply_ood_exclusion(
    std::vector<InstanceRecord> records, const SplitConfig& split,
    size_t* warning_count = nullptr) {
  const std::set<std::string> id_classes(split.id_class_names.begin(),
                                         split.id_class_names.end());
  size_t flagged = 0;
  std::vector<InstanceRecord> kept;
  kept.reserve(records.size());
  for (InstanceRecord& rec : records) {
    const bool collides = rec.origin == Origin::Ood && !rec.category.empty() &&
                          id_classes.count(rec.category) > 0;
    if (collides) {
      ++flagged;
      if (split.exclude_id_classes) continue;
    }
    kept.push_back(std::move(rec));
  }
  if (warning_count) *warning_count = flagged;
  return kept;
}

}  // namespace vista
