#pragma once

// Synthetic dataset builders for end-to-end tests. Class identity is carried
// by the green channel: the semantic stub backend decodes a view by its
// median green intensity. Codes sit on the 8-bit grid so PNG round-trips
// keep them exact.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vista/encoder.hpp"
#include "vista/image.hpp"
#include "vista/runner.hpp"

namespace fixture {

inline constexpr int kNumClasses = 10;
inline constexpr int kNumOodCodes = 8;
inline constexpr int kDim = 64;
inline constexpr int kAmbiguousAxis = kDim - 1;

inline const std::vector<std::string>& class_names() {
  static const std::vector<std::string> names{
      "airplane", "bicycle", "bird", "boat", "bottle",
      "bus",      "car",     "cat",  "chair", "cow"};
  return names;
}

inline double id_code(int cls) { return (10.0 * (cls + 1)) / 255.0; }
inline double ood_code(int j) { return (120.0 + 10.0 * j) / 255.0; }

inline std::vector<vista::StubEntry> stub_entries() {
  std::vector<vista::StubEntry> entries;
  for (int i = 0; i < kNumClasses; ++i)
    entries.push_back({class_names()[i], id_code(i), i});
  for (int j = 0; j < kNumOodCodes; ++j)
    entries.push_back({"", ood_code(j), kNumClasses + j});
  return entries;
}

inline nlohmann::json stub_table_json(double noise_norm = 0.3) {
  nlohmann::json entries = nlohmann::json::array();
  for (const vista::StubEntry& e : stub_entries())
    entries.push_back(
        {{"label", e.label}, {"code", e.code}, {"axis", e.axis}});
  return {{"dim", kDim},
          {"noise_norm", noise_norm},
          {"ambiguous_axis", kAmbiguousAxis},
          {"code_tolerance", 0.008},
          {"entries", entries}};
}

/// Whole image carries the class code; every prompted view decodes it.
/// The red channel varies per instance so embeddings (and their noise)
/// differ across instances of one class.
inline vista::ImageBuffer plain_instance_image(double green_code,
                                               int instance_index) {
  vista::ImageBuffer img(32, 32);
  const float red = static_cast<float>((instance_index % 200) / 255.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      img.at(x, y, 0) = red;
      img.at(x, y, 1) = static_cast<float>(green_code);
      img.at(x, y, 2) = 0.25f;
    }
  return img;
}

inline vista::BoundingBox plain_instance_box() { return {8, 8, 24, 24}; }

/// Context-signal variant: the object region is an uninformative 0.5 while
/// the background carries the code. A tight crop sees no signal; context
/// prompts (margin > 1) do.
inline vista::ImageBuffer context_instance_image(double green_code,
                                                 int instance_index) {
  vista::ImageBuffer img(80, 80);
  const vista::BoundingBox box{30, 30, 50, 50};
  const float red = static_cast<float>((instance_index % 200) / 255.0);
  const float ambiguous = 128.0f / 255.0f;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const bool inside = x >= box.x_min && x < box.x_max && y >= box.y_min &&
                          y < box.y_max;
      img.at(x, y, 0) = red;
      img.at(x, y, 1) = inside ? ambiguous : static_cast<float>(green_code);
      img.at(x, y, 2) = 0.25f;
    }
  return img;
}

inline vista::BoundingBox context_instance_box() { return {30, 30, 50, 50}; }

enum class FixtureStyle { Plain, ContextSignal };

struct Dataset {
  std::vector<vista::ScoreInput> id_instances;
  std::vector<vista::ScoreInput> ood_instances;
};

inline Dataset make_dataset(size_t n_id, size_t n_ood, FixtureStyle style) {
  Dataset out;
  for (size_t i = 0; i < n_id; ++i) {
    vista::ScoreInput in;
    const int cls = static_cast<int>(i % kNumClasses);
    in.image_id = "id_" + std::to_string(i);
    in.image = style == FixtureStyle::Plain
                   ? plain_instance_image(id_code(cls), static_cast<int>(i))
                   : context_instance_image(id_code(cls), static_cast<int>(i));
    in.box = style == FixtureStyle::Plain ? plain_instance_box()
                                          : context_instance_box();
    out.id_instances.push_back(std::move(in));
  }
  for (size_t i = 0; i < n_ood; ++i) {
    vista::ScoreInput in;
    const int code = static_cast<int>(i % kNumOodCodes);
    in.image_id = "ood_" + std::to_string(i);
    in.image = style == FixtureStyle::Plain
                   ? plain_instance_image(ood_code(code),
                                          static_cast<int>(1000 + i))
                   : context_instance_image(ood_code(code),
                                            static_cast<int>(1000 + i));
    in.box = style == FixtureStyle::Plain ? plain_instance_box()
                                          : context_instance_box();
    out.ood_instances.push_back(std::move(in));
  }
  return out;
}

/// Materialized on-disk variant: split config, stub table, COCO annotation
/// files, and an in-memory loader keyed by the synthetic image paths.
struct DiskFixture {
  std::filesystem::path root;
  vista::RunConfig config;
  std::map<std::string, vista::ImageBuffer> images;

  vista::ImageLoader loader() const {
    return [this](const std::string& path) -> vista::ImageBuffer {
      const auto it = images.find(path);
      if (it == images.end())
        throw vista::data_error("fixture: unknown image path " + path);
      return it->second;
    };
  }
};

inline nlohmann::json coco_json(const std::vector<vista::ScoreInput>& inputs,
                                const std::string& prefix,
                                const std::vector<std::string>& categories,
                                const std::vector<int>& category_of) {
  nlohmann::json images = nlohmann::json::array();
  nlohmann::json annotations = nlohmann::json::array();
  nlohmann::json cats = nlohmann::json::array();
  for (size_t c = 0; c < categories.size(); ++c)
    cats.push_back({{"id", c + 1}, {"name", categories[c]}});
  for (size_t i = 0; i < inputs.size(); ++i) {
    const vista::ScoreInput& in = inputs[i];
    images.push_back({{"id", i + 1},
                      {"file_name", prefix + "_" + std::to_string(i) + ".png"},
                      {"width", in.image.width},
                      {"height", in.image.height}});
    annotations.push_back(
        {{"image_id", i + 1},
         {"category_id", category_of[i] + 1},
         {"bbox",
          {in.box.x_min, in.box.y_min, in.box.width(), in.box.height()}}});
  }
  return {{"images", images}, {"annotations", annotations},
          {"categories", cats}};
}

inline DiskFixture make_disk_fixture(const std::filesystem::path& root,
                                     size_t n_id, size_t n_ood,
                                     FixtureStyle style) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  Dataset data = make_dataset(n_id, n_ood, style);

  DiskFixture fx;
  fx.root = root;

  std::vector<int> id_cats, ood_cats;
  for (size_t i = 0; i < n_id; ++i)
    id_cats.push_back(static_cast<int>(i % kNumClasses));
  std::vector<std::string> ood_names;
  for (int j = 0; j < kNumOodCodes; ++j)
    ood_names.push_back("novel" + std::to_string(j));
  for (size_t i = 0; i < n_ood; ++i)
    ood_cats.push_back(static_cast<int>(i % kNumOodCodes));

  for (size_t i = 0; i < data.id_instances.size(); ++i)
    fx.images[(root / ("id_" + std::to_string(i) + ".png")).string()] =
        data.id_instances[i].image;
  for (size_t i = 0; i < data.ood_instances.size(); ++i)
    fx.images[(root / ("ood_" + std::to_string(i) + ".png")).string()] =
        data.ood_instances[i].image;

  std::ofstream(root / "id.json")
      << coco_json(data.id_instances, "id", class_names(), id_cats).dump();
  std::ofstream(root / "ood.json")
      << coco_json(data.ood_instances, "ood", ood_names, ood_cats).dump();
  std::ofstream(root / "stub.json") << stub_table_json().dump();
  {
    nlohmann::json split = {{"id_classes", class_names()},
                            {"ood_source", "synthetic"},
                            {"exclude_id_classes", true}};
    std::ofstream(root / "split.json") << split.dump();
  }

  fx.config.backend.kind = vista::BackendKind::Stub;
  fx.config.backend.stub_table_path = (root / "stub.json").string();
  fx.config.split_config_path = (root / "split.json").string();
  fx.config.id_annotations_path = (root / "id.json").string();
  fx.config.ood_annotations_path = (root / "ood.json").string();
  fx.config.images_root = root.string();
  if (style == FixtureStyle::ContextSignal)
    fx.config.prompts.context_margin = 2.5;
  return fx;
}

}  // namespace fixture
