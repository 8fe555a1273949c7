#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vista/cache.hpp"
#include "vista/encoder.hpp"
#include "vista/prompts.hpp"

namespace vista {

/// Text-augmented ID embedding space: one unit-norm embedding per class.
struct IdSpace {
  std::vector<std::string> labels;
  std::vector<Embedding> embeddings;  // parallel to labels, unit L2 norm
  uint64_t prompt_fingerprint = 0;

  size_t size() const { return labels.size(); }
  int dim() const {
    return embeddings.empty() ? 0 : static_cast<int>(embeddings[0].size());
  }
};

/// Stable hash of a prompt set so persisted spaces can be matched to the
/// configuration that produced them.
inline uint64_t prompt_fingerprint(const PromptSet& prompts) {
  std::string repr;
  for (const PromptSpec& s : prompts) {
    repr += to_string(s.kind);
    repr += '|' + std::to_string(s.sigma);
    repr += '|' + std::to_string(s.color.r) + ',' + std::to_string(s.color.g) +
            ',' + std::to_string(s.color.b);
    repr += '|' + std::to_string(s.stroke);
    repr += '|' + std::to_string(s.margin);
    repr += '|' + s.text_template;
    repr += ';';
  }
  return fnv1a64(reinterpret_cast<const uint8_t*>(repr.data()), repr.size());
}

/// Lowercase and map underscores to spaces. Text towers are sensitive to
/// casing; annotation class names often carry underscores.
inline std::string normalize_label(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c == '_') c = ' ';
  }
  return out;
}

namespace detail {

/// Prompt indices ordered by kind. Summation follows this order regardless
/// of how the PromptSet is permuted, so fused embeddings are bit-stable.
inline std::vector<size_t> kind_sorted_order(const PromptSet& prompts) {
  std::vector<size_t> order(prompts.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return static_cast<int>(prompts[a].kind) < static_cast<int>(prompts[b].kind);
  });
  return order;
}

}  // namespace detail

struct IdSpaceOptions {
  bool normalize_labels = true;
  // Raw encoder outputs are summed by default; stock CLIP practice would
  // L2-normalize each term first. Switchable so both conventions are
  // reproducible.
  bool normalize_before_fusion = false;
};

/// Build the ID space: for each label, render every prompt-aligned text
/// template, encode, sum in kind order, and L2-normalize.
inline IdSpace build_id_space(const std::vector<std::string>& labels,
                              const PromptSet& prompts,
                              EncoderBackend& backend,
                              const IdSpaceOptions& opts = {}) {
  if (labels.empty())
    throw std::invalid_argument("build_id_space: no labels");
  std::set<std::string> unique(labels.begin(), labels.end());
  if (unique.size() != labels.size())
    throw std::invalid_argument("build_id_space: duplicate labels");

  const std::vector<size_t> order = detail::kind_sorted_order(prompts);

  IdSpace space;
  space.labels = labels;
  space.prompt_fingerprint = prompt_fingerprint(prompts);
  space.embeddings.reserve(labels.size());
  for (const std::string& raw : labels) {
    const std::string label = opts.normalize_labels ? normalize_label(raw) : raw;
    std::vector<double> sum(static_cast<size_t>(backend.dim()), 0.0);
    for (size_t idx : order) {
      const std::string prompt = render_text_prompt(prompts[idx], label);
      Embedding e;
      try {
        e = backend.encode_text(prompt);
      } catch (const std::exception& ex) {
        throw backend_error("text encoding failed for prompt \"" + prompt +
                            "\": " + ex.what());
      }
      if (e.size() != sum.size())
        throw backend_error("backend emitted wrong dimension for \"" + prompt +
                            "\"");
      if (opts.normalize_before_fusion) e = l2_normalize(e);
      for (size_t i = 0; i < sum.size(); ++i) sum[i] += e[i];
    }
    Embedding fused(sum.size());
    for (size_t i = 0; i < sum.size(); ++i)
      fused[i] = static_cast<float>(sum[i]);
    try {
      space.embeddings.push_back(l2_normalize(fused));
    } catch (const std::domain_error&) {
      throw std::runtime_error("degenerate embedding for label \"" + raw +
                               "\": prompt embeddings sum to zero");
    }
  }
  return space;
}

// -- persistence ------------------------------------------------------------

inline constexpr uint32_t kIdSpaceMagic = 0x56494431;  // "VID1"

/// Binary layout: magic, D, K, prompt_fingerprint, then per label a
/// length-prefixed name followed by an embedding record (label hash + D
/// little-endian floats), matching the cache record shape.
inline void save_id_space(const IdSpace& space, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("id space: cannot open for write: " + path);
  detail::write_u32(os, kIdSpaceMagic);
  detail::write_u32(os, static_cast<uint32_t>(space.dim()));
  detail::write_u32(os, static_cast<uint32_t>(space.size()));
  detail::write_u64(os, space.prompt_fingerprint);
  for (size_t i = 0; i < space.size(); ++i) {
    const std::string& name = space.labels[i];
    detail::write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u64(os, fnv1a64(reinterpret_cast<const uint8_t*>(name.data()),
                                  name.size()));
    for (float f : space.embeddings[i]) detail::write_f32(os, f);
  }
}

inline IdSpace load_id_space(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("id space: cannot open: " + path);
  if (detail::read_u32(is) != kIdSpaceMagic)
    throw std::runtime_error("id space: bad magic in " + path);
  const uint32_t dim = detail::read_u32(is);
  const uint32_t count = detail::read_u32(is);
  IdSpace space;
  space.prompt_fingerprint = detail::read_u64(is);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t len = detail::read_u32(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const uint64_t stored_hash = detail::read_u64(is);
    if (stored_hash != fnv1a64(reinterpret_cast<const uint8_t*>(name.data()),
                               name.size()))
      throw std::runtime_error("id space: label hash mismatch in " + path);
    Embedding emb(dim);
    for (uint32_t d = 0; d < dim; ++d) emb[d] = detail::read_f32(is);
    space.labels.push_back(std::move(name));
    space.embeddings.push_back(std::move(emb));
  }
  if (!is) throw std::runtime_error("id space: truncated file: " + path);
  return space;
}

}  // namespace vista
