#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>

#include "vista/cache.hpp"
#include "vista/encoder.hpp"

using namespace vista;

TEST_CASE("mock_encode: deterministic across calls") {
  const auto payload = text_payload("hello world");
  CHECK(mock_encode(payload, 128, 7) == mock_encode(payload, 128, 7));
  CHECK(mock_encode(payload, 128, 7) != mock_encode(payload, 128, 8));
}

TEST_CASE("mock_encode: output is unit norm") {
  for (int i = 0; i < 20; ++i) {
    const auto payload = text_payload("sample " + std::to_string(i));
    CHECK(l2_norm(mock_encode(payload, 512, 0)) ==
          Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("mock_encode: rejects empty payloads") {
  CHECK_THROWS(mock_encode({}, 64, 0));
}

TEST_CASE("mock_encode: distinct payloads give pseudo-orthogonal vectors") {
  // independent random unit vectors in R^512 concentrate near cos = 0
  double max_abs_cos = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::string base = "payload " + std::to_string(i);
    std::string tweaked = base;
    tweaked[0] ^= 1;
    const Embedding a = mock_encode(text_payload(base), 512, 3);
    const Embedding b = mock_encode(text_payload(tweaked), 512, 3);
    max_abs_cos = std::max(max_abs_cos, std::abs(cosine(a, b)));
  }
  CHECK(max_abs_cos < 0.3);
}

TEST_CASE("MockBackend: image and text namespaces never collide") {
  MockBackend backend(64, 0);
  std::set<std::vector<float>> seen;
  size_t total = 0;
  for (int i = 0; i < 5000; ++i) {
    seen.insert(backend.encode_text("t" + std::to_string(i)));
    ++total;
  }
  for (int i = 0; i < 5000; ++i) {
    ImageBuffer img(2, 2, static_cast<float>((i % 251) / 255.0));
    img.at(0, 0, 0) = static_cast<float>((i / 251) / 255.0);
    seen.insert(backend.encode_image(img));
    ++total;
  }
  CHECK(seen.size() == total);
}

TEST_CASE("SemanticStubBackend: text lookup returns the label axis") {
  SemanticStubBackend stub(16, {{"dog", 0.1, 0}, {"cat", 0.2, 1}}, 0.0);
  const Embedding dog = stub.encode_text("a photo of dog");
  CHECK(dog[0] == 1.0f);
  CHECK(l2_norm(dog) == Catch::Approx(1.0));
  const Embedding cat = stub.encode_text("A photo of cat with blurred details");
  CHECK(cat[1] == 1.0f);
  CHECK_THROWS_AS(stub.encode_text("a photo of zebra"), backend_error);
}

TEST_CASE("SemanticStubBackend: image decode via median green") {
  SemanticStubBackend stub(16, {{"dog", 0.1, 0}, {"cat", 0.2, 1}}, 0.0, 15);
  ImageBuffer img(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) img.at(x, y, 1) = 0.1f;
  CHECK(stub.encode_image(img)[0] == 1.0f);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) img.at(x, y, 1) = 0.77f;  // unknown code
  CHECK(stub.encode_image(img)[15] == 1.0f);
}

TEST_CASE("SemanticStubBackend: image noise is bounded and deterministic") {
  SemanticStubBackend stub(32, {{"dog", 0.1, 0}}, 0.3);
  ImageBuffer img(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) img.at(x, y, 1) = 0.1f;
  const Embedding a = stub.encode_image(img);
  CHECK(a == stub.encode_image(img));
  Embedding noise = a;
  noise[0] -= 1.0f;
  CHECK(l2_norm(noise) == Catch::Approx(0.3).margin(1e-6));
}

TEST_CASE("cosine: basic identities") {
  const Embedding a{1, 0}, b{0, 1}, c{0.6f, 0.8f};
  CHECK(cosine(a, a) == Catch::Approx(1.0));
  CHECK(cosine(a, b) == Catch::Approx(0.0));
  CHECK(cosine(a, c) == Catch::Approx(0.6));
  CHECK_THROWS(cosine(a, Embedding{1, 2, 3}));
  CHECK_THROWS(cosine(a, Embedding{0, 0}));
}

TEST_CASE("resize_bilinear: identity at matching size, constant preserved") {
  ImageBuffer img(6, 4, 0.5f);
  CHECK(resize_bilinear(img, 6, 4) == img);
  const ImageBuffer up = resize_bilinear(img, 13, 9);
  for (float p : up.pixels) CHECK(p == Catch::Approx(0.5f).margin(1e-6));
}

TEST_CASE("preprocess_for_encoder: shape and normalization") {
  const ImageBuffer img(30, 20, 0.5f);
  const std::array<float, 3> mean{0.5f, 0.5f, 0.5f};
  const std::array<float, 3> stdev{0.25f, 0.25f, 0.25f};
  const auto chw = preprocess_for_encoder(img, 16, mean, stdev);
  REQUIRE(chw.size() == 3u * 16 * 16);
  for (float v : chw) CHECK(v == Catch::Approx(0.0f).margin(1e-5));
}

TEST_CASE("ExportedModelBackend: reports the missing runtime") {
  ExportedModelSpec spec;
  spec.model_path = "/no/such/model.onnx";
  CHECK_THROWS_AS(ExportedModelBackend{spec}, backend_error);
}

TEST_CASE("embedding cache: file round trip") {
  EmbeddingCacheFile cache;
  cache.dim = 4;
  cache.records[42] = {1.0f, 2.0f, 3.0f, 4.0f};
  cache.records[7] = {-1.0f, 0.5f, 0.0f, 2.5f};
  const std::string path = "/tmp/vista_test_cache.bin";
  save_embedding_cache(cache, path);
  const EmbeddingCacheFile loaded = load_embedding_cache(path);
  CHECK(loaded.dim == 4);
  CHECK(loaded.records == cache.records);
}

TEST_CASE("CachingBackend: memoizes and persists") {
  struct CountingBackend : EncoderBackend {
    int calls = 0;
    Embedding encode_image(const ImageBuffer& img) override {
      ++calls;
      return mock_encode(image_payload(img), 8, 1);
    }
    Embedding encode_text(const std::string& t) override {
      ++calls;
      return mock_encode(text_payload(t), 8, 2);
    }
    int dim() const override { return 8; }
  };
  auto inner = std::make_shared<CountingBackend>();
  CachingBackend caching(inner);
  const Embedding a = caching.encode_text("hello");
  const Embedding b = caching.encode_text("hello");
  CHECK(a == b);
  CHECK(inner->calls == 1);

  const std::string path = "/tmp/vista_test_cache2.bin";
  caching.save(path);
  auto inner2 = std::make_shared<CountingBackend>();
  CachingBackend warm(inner2);
  warm.load(path);
  CHECK(warm.encode_text("hello") == a);
  CHECK(inner2->calls == 0);
}
