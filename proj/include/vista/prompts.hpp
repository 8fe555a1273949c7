#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vista/image.hpp"

namespace vista {

enum class VisualPromptKind {
  Crop,
  BlurInside,
  BlurOutside,
  Box,
  Grayscale,
  ColorfulBox,
};

inline const char* to_string(VisualPromptKind k) {
  switch (k) {
    case VisualPromptKind::Crop: return "crop";
    case VisualPromptKind::BlurInside: return "blur_inside";
    case VisualPromptKind::BlurOutside: return "blur_outside";
    case VisualPromptKind::Box: return "box";
    case VisualPromptKind::Grayscale: return "grayscale";
    case VisualPromptKind::ColorfulBox: return "colorful_box";
  }
  return "unknown";
}

inline std::optional<VisualPromptKind> prompt_kind_from_string(
    const std::string& s) {
  if (s == "crop") return VisualPromptKind::Crop;
  if (s == "blur_inside") return VisualPromptKind::BlurInside;
  if (s == "blur_outside") return VisualPromptKind::BlurOutside;
  if (s == "box") return VisualPromptKind::Box;
  if (s == "grayscale") return VisualPromptKind::Grayscale;
  if (s == "colorful_box") return VisualPromptKind::ColorfulBox;
  return std::nullopt;
}

/// One visual prompt plus its paired text template. The template must
/// contain the placeholder `{label}` exactly once.
struct PromptSpec {
  VisualPromptKind kind = VisualPromptKind::Crop;
  double sigma = 2.0;                 // blur kinds
  Rgb color{1.0f, 0.0f, 0.0f};        // box kind
  int stroke = 0;                     // 0 = resolution-scaled default
  double margin = 1.5;                // context crop after the transform
  std::string text_template;

  bool operator==(const PromptSpec&) const = default;
};

inline std::string default_text_template(VisualPromptKind k) {
  switch (k) {
    case VisualPromptKind::Crop: return "a photo of {label}";
    case VisualPromptKind::BlurOutside:
      return "A photo of {label} with a blurred background";
    case VisualPromptKind::BlurInside:
      return "A photo of {label} with blurred details";
    case VisualPromptKind::Box: return "a photo of {label} in a red box";
    case VisualPromptKind::Grayscale: return "a grayscale photo of {label}";
    case VisualPromptKind::ColorfulBox:
      return "a photo of {label} in a colorful box";
  }
  return "a photo of {label}";
}

/// Ordered set of prompt specs with unique kinds.
class PromptSet {
public:
  explicit PromptSet(std::vector<PromptSpec> specs) : specs_(std::move(specs)) {
    if (specs_.empty()) throw std::invalid_argument("PromptSet: empty");
    std::set<VisualPromptKind> seen;
    for (const PromptSpec& s : specs_) {
      if (!seen.insert(s.kind).second)
        throw std::invalid_argument(std::string("PromptSet: duplicate kind ") +
                                    to_string(s.kind));
      const size_t pos = s.text_template.find("{label}");
      if (pos == std::string::npos ||
          s.text_template.find("{label}", pos + 1) != std::string::npos)
        throw std::invalid_argument(
            "PromptSet: text template must contain {label} exactly once: \"" +
            s.text_template + "\"");
      if ((s.kind == VisualPromptKind::BlurInside ||
           s.kind == VisualPromptKind::BlurOutside) &&
          !(s.sigma > 0))
        throw std::invalid_argument("PromptSet: sigma must be > 0");
    }
  }

  const std::vector<PromptSpec>& specs() const { return specs_; }
  size_t size() const { return specs_.size(); }
  const PromptSpec& operator[](size_t i) const { return specs_[i]; }
  auto begin() const { return specs_.begin(); }
  auto end() const { return specs_.end(); }

  bool operator==(const PromptSet&) const = default;

private:
  std::vector<PromptSpec> specs_;
};

struct PromptSetConfig {
  double sigma = 2.0;
  Rgb box_color{1.0f, 0.0f, 0.0f};
  int stroke = 0;
  double context_margin = 1.5;
  bool include_grayscale = false;
  bool include_colorful_box = false;
};

/// The default vocabulary: crop, blur outside, blur inside, red box.
/// Ablation kinds are appended only when the config asks for them.
inline PromptSet default_prompt_set(const PromptSetConfig& cfg = {}) {
  auto make = [&](VisualPromptKind k, double margin) {
    PromptSpec s;
    s.kind = k;
    s.sigma = cfg.sigma;
    s.color = cfg.box_color;
    s.stroke = cfg.stroke;
    s.margin = margin;
    s.text_template = default_text_template(k);
    return s;
  };
  std::vector<PromptSpec> specs{
      make(VisualPromptKind::Crop, 1.0),
      make(VisualPromptKind::BlurOutside, cfg.context_margin),
      make(VisualPromptKind::BlurInside, cfg.context_margin),
      make(VisualPromptKind::Box, cfg.context_margin),
  };
  if (cfg.include_grayscale)
    specs.push_back(make(VisualPromptKind::Grayscale, 1.0));
  if (cfg.include_colorful_box)
    specs.push_back(make(VisualPromptKind::ColorfulBox, cfg.context_margin));
  return PromptSet(std::move(specs));
}

/// Crop-only set used when contextual visual prompts are disabled.
inline PromptSet crop_only_prompt_set() {
  PromptSpec s;
  s.kind = VisualPromptKind::Crop;
  s.margin = 1.0;
  s.text_template = default_text_template(VisualPromptKind::Crop);
  return PromptSet({s});
}

/// Apply the spec's transform and produce the view fed to the image encoder.
/// Context prompts transform the full image first, then crop with the spec's
/// margin so the surrounding background survives. Crop and Grayscale work on
/// the tight crop.
inline ImageBuffer apply_visual_prompt(const PromptSpec& spec,
                                       const ImageBuffer& image,
                                       const BoundingBox& box) {
  switch (spec.kind) {
    case VisualPromptKind::Crop:
      return crop_with_margin(image, box, 1.0);
    case VisualPromptKind::Grayscale:
      return grayscale(crop_with_margin(image, box, 1.0));
    case VisualPromptKind::BlurInside:
      return crop_with_margin(
          blur_region(image, box, BlurMode::Inside, spec.sigma), box,
          spec.margin);
    case VisualPromptKind::BlurOutside:
      return crop_with_margin(
          blur_region(image, box, BlurMode::Outside, spec.sigma), box,
          spec.margin);
    case VisualPromptKind::Box: {
      const int w = spec.stroke > 0
                        ? spec.stroke
                        : default_stroke_width(image.width, image.height);
      return crop_with_margin(draw_box(image, box, spec.color, w), box,
                              spec.margin);
    }
    case VisualPromptKind::ColorfulBox: {
      const int w = spec.stroke > 0
                        ? spec.stroke
                        : default_stroke_width(image.width, image.height);
      return crop_with_margin(draw_colorful_box(image, box, w), box,
                              spec.margin);
    }
  }
  throw std::logic_error("unreachable prompt kind");
}

/// Substitute `{label}` into the spec's text template.
inline std::string render_text_prompt(const PromptSpec& spec,
                                      const std::string& label) {
  if (label.empty())
    throw std::invalid_argument("render_text_prompt: empty label");
  std::string out = spec.text_template;
  const size_t pos = out.find("{label}");
  out.replace(pos, 7, label);
  return out;
}

}  // namespace vista
