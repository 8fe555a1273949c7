#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "vista/encoder.hpp"

namespace vista {

/// Binary embedding store: header {magic, D, count} followed by `count`
/// records of (key-hash: 8 bytes, D little-endian 32-bit floats). Lets
/// metric re-runs skip re-encoding.
struct EmbeddingCacheFile {
  static constexpr uint32_t kMagic = 0x56454331;  // "VEC1"

  uint32_t dim = 0;
  std::map<uint64_t, Embedding> records;  // ordered for stable file layout
};

namespace detail {

inline void write_u32(std::ostream& os, uint32_t v) {
  uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline uint32_t read_u32(std::istream& is) {
  uint8_t b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("embedding cache: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

inline uint64_t read_u64(std::istream& is) {
  uint8_t b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("embedding cache: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f32(std::ostream& os, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
  const uint32_t bits = read_u32(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace detail

inline void save_embedding_cache(const EmbeddingCacheFile& cache,
                                 const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw std::runtime_error("embedding cache: cannot open for write: " + path);
  detail::write_u32(os, EmbeddingCacheFile::kMagic);
  detail::write_u32(os, cache.dim);
  detail::write_u64(os, cache.records.size());
  for (const auto& [key, emb] : cache.records) {
    if (emb.size() != cache.dim)
      throw std::runtime_error("embedding cache: record dimension mismatch");
    detail::write_u64(os, key);
    for (float f : emb) detail::write_f32(os, f);
  }
}

inline EmbeddingCacheFile load_embedding_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("embedding cache: cannot open: " + path);
  if (detail::read_u32(is) != EmbeddingCacheFile::kMagic)
    throw std::runtime_error("embedding cache: bad magic in " + path);
  EmbeddingCacheFile cache;
  cache.dim = detail::read_u32(is);
  const uint64_t count = detail::read_u64(is);
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t key = detail::read_u64(is);
    Embedding emb(cache.dim);
    for (uint32_t d = 0; d < cache.dim; ++d) emb[d] = detail::read_f32(is);
    cache.records.emplace(key, std::move(emb));
  }
  return cache;
}

/// Memoizing wrapper around any backend, keyed by payload hash. Optionally
/// persisted in the cache file format above.
class CachingBackend : public EncoderBackend {
public:
  explicit CachingBackend(std::shared_ptr<EncoderBackend> inner)
      : inner_(std::move(inner)) {}

  Embedding encode_image(const ImageBuffer& image) override {
    const auto payload = image_payload(image);
    return lookup(fnv1a64(payload.data(), payload.size()),
                  [&] { return inner_->encode_image(image); });
  }

  Embedding encode_text(const std::string& text) override {
    const auto payload = text_payload(text);
    return lookup(fnv1a64(payload.data(), payload.size()),
                  [&] { return inner_->encode_text(text); });
  }

  int dim() const override { return inner_->dim(); }
  bool concurrent_safe() const override { return true; }

  void load(const std::string& path) {
    EmbeddingCacheFile file = load_embedding_cache(path);
    if (file.dim != static_cast<uint32_t>(inner_->dim()))
      throw std::runtime_error("embedding cache: dimension mismatch");
    std::lock_guard lock(mutex_);
    for (auto& [k, v] : file.records) entries_.insert_or_assign(k, std::move(v));
  }

  void save(const std::string& path) const {
    EmbeddingCacheFile file;
    file.dim = static_cast<uint32_t>(inner_->dim());
    {
      std::lock_guard lock(mutex_);
      file.records = entries_;
    }
    save_embedding_cache(file, path);
  }

  size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

private:
  template <typename Compute>
  Embedding lookup(uint64_t key, Compute&& compute) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end())
        return it->second;
    }
    Embedding value;
    if (inner_->concurrent_safe()) {
      value = compute();
    } else {
      std::lock_guard lock(inner_mutex_);
      value = compute();
    }
    std::lock_guard lock(mutex_);
    return entries_.emplace(key, std::move(value)).first->second;
  }

  std::shared_ptr<EncoderBackend> inner_;
  mutable std::mutex mutex_;
  std::mutex inner_mutex_;
  std::map<uint64_t, Embedding> entries_;
};

}  // namespace vista
