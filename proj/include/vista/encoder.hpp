#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "vista/image.hpp"

namespace vista {

/// Raised when an encoder backend cannot be constructed or fails mid-run.
class backend_error : public std::runtime_error {
public:
  explicit backend_error(const std::string& what) : std::runtime_error(what) {}
};

using Embedding = std::vector<float>;

inline double l2_norm(const Embedding& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

inline Embedding l2_normalize(const Embedding& v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::domain_error("cannot normalize zero or non-finite vector");
  Embedding out(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    out[i] = static_cast<float>(v[i] / n);
  return out;
}

inline double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    dot += static_cast<double>(a[i]) * b[i];
  const double na = l2_norm(a), nb = l2_norm(b);
  if (!(na > 0.0) || !(nb > 0.0))
    throw std::domain_error("cosine: zero-norm operand");
  return dot / (na * nb);
}

/// Dual-encoder boundary: image -> R^D and text -> R^D in a shared space.
/// Implementations must be deterministic. `concurrent_safe()` declares
/// whether calls may overlap; the pipeline serializes otherwise.
class EncoderBackend {
public:
  virtual ~EncoderBackend() = default;
  virtual Embedding encode_image(const ImageBuffer& image) = 0;
  virtual Embedding encode_text(const std::string& text) = 0;
  virtual int dim() const = 0;
  virtual bool concurrent_safe() const { return true; }
};

// -- canonical payload serialization ---------------------------------------

/// Little-endian byte serialization of an image, stable across platforms.
inline std::vector<uint8_t> image_payload(const ImageBuffer& image) {
  std::vector<uint8_t> out;
  out.reserve(16 + image.pixels.size() * 4);
  auto push_u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
  };
  push_u32(0x564d4701);  // image payload tag
  push_u32(static_cast<uint32_t>(image.width));
  push_u32(static_cast<uint32_t>(image.height));
  for (float p : image.pixels) {
    uint32_t bits;
    std::memcpy(&bits, &p, 4);
    push_u32(bits);
  }
  return out;
}

inline std::vector<uint8_t> text_payload(const std::string& text) {
  std::vector<uint8_t> out;
  out.reserve(4 + text.size());
  for (uint8_t b : {0x54, 0x58, 0x54, 0x01}) out.push_back(b);  // tag
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

inline uint64_t fnv1a64(const uint8_t* data, size_t n,
                        uint64_t seed = 0xcbf29ce484222325ull) {
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Draw D values from a symmetric distribution keyed by hash(seed, payload)
/// and L2-normalize. Bit-reproducible on any platform.
inline Embedding mock_encode(const std::vector<uint8_t>& payload, int dim,
                             uint64_t seed) {
  if (payload.empty())
    throw std::invalid_argument("mock_encode: empty payload");
  uint64_t state = fnv1a64(payload.data(), payload.size(),
                           0xcbf29ce484222325ull ^ seed);
  Embedding v(static_cast<size_t>(dim));
  for (float& x : v) {
    const uint64_t bits = splitmix64(state);
    // uniform in (-1, 1), symmetric about 0
    x = static_cast<float>(
        (static_cast<double>(bits >> 11) * 0x1.0p-53 - 0.5) * 2.0);
  }
  return l2_normalize(v);
}

/// Deterministic offline test double for the dual encoder. Image and text
/// payloads live in disjoint seed namespaces.
class MockBackend : public EncoderBackend {
public:
  explicit MockBackend(int dim = 512, uint64_t seed = 0)
      : dim_(dim), seed_(seed) {}

  Embedding encode_image(const ImageBuffer& image) override {
    return mock_encode(image_payload(image), dim_, seed_ * 2 + 1);
  }
  Embedding encode_text(const std::string& text) override {
    return mock_encode(text_payload(text), dim_, seed_ * 2 + 2);
  }
  int dim() const override { return dim_; }

private:
  int dim_;
  uint64_t seed_;
};

// -- semantic stub ----------------------------------------------------------

/// One class the stub understands: label text, an intensity code carried by
/// the image's green channel, and a basis axis for the embedding.
struct StubEntry {
  std::string label;   // empty for OOD-only codes
  double code = 0.0;   // median green intensity that identifies the class
  int axis = 0;        // basis direction e_axis in R^D
};

/// Table-driven backend for end-to-end separation tests. Text prompts that
/// mention a known label map to that label's unit axis exactly. Images are
/// decoded by the median of their green channel (robust to the blur and box
/// prompts): a matching code yields the entry's axis plus deterministic
/// noise of the configured norm; an unmatched view yields the ambiguous
/// axis plus noise.
class SemanticStubBackend : public EncoderBackend {
public:
  SemanticStubBackend(int dim, std::vector<StubEntry> entries,
                      double noise_norm = 0.3, int ambiguous_axis = -1,
                      double code_tolerance = 0.01)
      : dim_(dim), entries_(std::move(entries)), noise_norm_(noise_norm),
        ambiguous_axis_(ambiguous_axis < 0 ? dim - 1 : ambiguous_axis),
        code_tolerance_(code_tolerance) {
    for (const StubEntry& e : entries_)
      if (e.axis < 0 || e.axis >= dim_)
        throw std::invalid_argument("stub axis out of range");
  }

  Embedding encode_image(const ImageBuffer& image) override {
    const double code = median_green(image);
    int axis = ambiguous_axis_;
    for (const StubEntry& e : entries_)
      if (std::abs(e.code - code) <= code_tolerance_) {
        axis = e.axis;
        break;
      }
    Embedding v = axis_vector(axis);
    if (noise_norm_ > 0.0) {
      const Embedding n =
          mock_encode(image_payload(image), dim_, kNoiseSeed);
      for (int i = 0; i < dim_; ++i)
        v[i] += static_cast<float>(noise_norm_) * n[i];
    }
    return v;
  }

  Embedding encode_text(const std::string& text) override {
    const StubEntry* best = nullptr;
    for (const StubEntry& e : entries_) {
      if (e.label.empty() || text.find(e.label) == std::string::npos) continue;
      if (!best || e.label.size() > best->label.size()) best = &e;
    }
    if (!best)
      throw backend_error("stub backend: no known label in text: \"" + text +
                          "\"");
    return axis_vector(best->axis);
  }

  int dim() const override { return dim_; }

  static double median_green(const ImageBuffer& image) {
    std::vector<float> greens;
    greens.reserve(static_cast<size_t>(image.width) * image.height);
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        greens.push_back(image.at(x, y, 1));
    const size_t mid = greens.size() / 2;
    std::nth_element(greens.begin(), greens.begin() + mid, greens.end());
    return greens[mid];
  }

private:
  static constexpr uint64_t kNoiseSeed = 0x5eedf00d;

  Embedding axis_vector(int axis) const {
    Embedding v(static_cast<size_t>(dim_), 0.0f);
    v[static_cast<size_t>(axis)] = 1.0f;
    return v;
  }

  int dim_;
  std::vector<StubEntry> entries_;
  double noise_norm_;
  int ambiguous_axis_;
  double code_tolerance_;
};

// -- real-backend adapter contract -----------------------------------------

/// Preprocessing constants for an exported CLIP-style model.
struct ExportedModelSpec {
  std::string model_path;
  int input_resolution = 224;
  std::array<float, 3> mean{0.48145466f, 0.4578275f, 0.40821073f};
  std::array<float, 3> stdev{0.26862954f, 0.26130258f, 0.27577711f};
};

/// Bilinear resize; used by the exported-model preprocessing contract.
inline ImageBuffer resize_bilinear(const ImageBuffer& image, int out_w,
                                   int out_h) {
  if (out_w < 1 || out_h < 1)
    throw std::invalid_argument("resize: target dimensions must be >= 1");
  ImageBuffer out(out_w, out_h);
  const double sx = static_cast<double>(image.width) / out_w;
  const double sy = static_cast<double>(image.height) / out_h;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const double fy = (y + 0.5) * sy - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0,
                                image.width - 1);
      const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0,
                                image.height - 1);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const int y1 = std::min(y0 + 1, image.height - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      const double wy = std::clamp(fy - y0, 0.0, 1.0);
      for (int c = 0; c < ImageBuffer::channels; ++c) {
        const double top = (1 - wx) * image.at(x0, y0, c) +
                           wx * image.at(x1, y0, c);
        const double bot = (1 - wx) * image.at(x0, y1, c) +
                           wx * image.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1 - wy) * top + wy * bot);
      }
    }
  return out;
}

/// Resize shortest side to `resolution`, center-crop to square, then apply
/// per-channel affine normalization. Output layout is CHW float.
inline std::vector<float> preprocess_for_encoder(const ImageBuffer& image,
                                                 int resolution,
                                                 std::array<float, 3> mean,
                                                 std::array<float, 3> stdev) {
  const double scale =
      static_cast<double>(resolution) / std::min(image.width, image.height);
  const int rw = std::max(resolution,
                          round_half_away(scale * image.width));
  const int rh = std::max(resolution,
                          round_half_away(scale * image.height));
  const ImageBuffer resized = resize_bilinear(image, rw, rh);
  const int ox = (rw - resolution) / 2;
  const int oy = (rh - resolution) / 2;
  std::vector<float> chw(static_cast<size_t>(3) * resolution * resolution);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < resolution; ++y)
      for (int x = 0; x < resolution; ++x)
        chw[(static_cast<size_t>(c) * resolution + y) * resolution + x] =
            (resized.at(ox + x, oy + y, c) - mean[c]) / stdev[c];
  return chw;
}

/// Adapter for a user-supplied exported inference graph. The artifact ships
/// without weights or an inference runtime; constructing this backend
/// reports what is needed instead of guessing.
class ExportedModelBackend : public EncoderBackend {
public:
  explicit ExportedModelBackend(const ExportedModelSpec& spec) {
    throw backend_error(
        "exported-model backend: no inference runtime is bundled with this "
        "build; supply embeddings via the cache file (see README) or use the "
        "mock/stub backends. Requested model: " +
        spec.model_path);
  }
  Embedding encode_image(const ImageBuffer&) override { return {}; }
  Embedding encode_text(const std::string&) override { return {}; }
  int dim() const override { return 0; }
};

}  // namespace vista
