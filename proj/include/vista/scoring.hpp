#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vista/encoder.hpp"
#include "vista/idspace.hpp"
#include "vista/image.hpp"
#include "vista/prompts.hpp"

namespace vista {

enum class Decision { In, Out, Undecided };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::In: return "in";
    case Decision::Out: return "out";
    case Decision::Undecided: return "undecided";
  }
  return "unknown";
}

struct ScoredInstance {
  std::string image_id;
  BoundingBox box;
  std::vector<double> similarities;  // length K, label order
  double uncertainty = 0.0;
  Decision decision = Decision::Undecided;
};

struct ScoringConfig {
  double tau = 10.0;                    // temperature
  double quantile = 0.95;               // ID-retention level for calibration
  std::optional<double> gamma;          // threshold, set by calibration
  unsigned workers = 0;                 // 0 = hardware concurrency
  bool normalize_before_fusion = false; // see IdSpaceOptions
};

/// Fused object embedding: encode every prompted view, sum in kind order,
/// L2-normalize. Always unit norm on success. `normalize_before_fusion`
/// mirrors IdSpaceOptions: off sums raw outputs, on normalizes each view
/// embedding first.
inline Embedding encode_object(const ImageBuffer& image, const BoundingBox& box,
                               const PromptSet& prompts,
                               EncoderBackend& backend,
                               bool normalize_before_fusion = false) {
  validate_box(box, image);
  const std::vector<size_t> order = detail::kind_sorted_order(prompts);
  std::vector<double> sum(static_cast<size_t>(backend.dim()), 0.0);
  for (size_t idx : order) {
    const ImageBuffer view = apply_visual_prompt(prompts[idx], image, box);
    Embedding z;
    try {
      z = backend.encode_image(view);
    } catch (const std::exception& ex) {
      throw backend_error(std::string("image encoding failed for prompt ") +
                          to_string(prompts[idx].kind) + ": " + ex.what());
    }
    if (z.size() != sum.size())
      throw backend_error("backend emitted wrong embedding dimension");
    if (normalize_before_fusion) z = l2_normalize(z);
    for (size_t i = 0; i < sum.size(); ++i) sum[i] += z[i];
  }
  Embedding fused(sum.size());
  for (size_t i = 0; i < sum.size(); ++i) fused[i] = static_cast<float>(sum[i]);
  try {
    return l2_normalize(fused);
  } catch (const std::domain_error&) {
    throw std::runtime_error("degenerate object embedding: prompt embeddings "
                             "sum to zero");
  }
}

/// Cosine similarity against every class embedding, in label order.
inline std::vector<double> similarities(const Embedding& z,
                                        const IdSpace& space) {
  std::vector<double> sims;
  sims.reserve(space.size());
  for (const Embedding& l : space.embeddings) sims.push_back(cosine(z, l));
  return sims;
}

/// Uncertainty score: -log sum_i exp(tau * S_i), max-shifted for stability.
/// Lower means more ID-like.
inline double uncertainty(const std::vector<double>& sims, double tau) {
  if (sims.empty()) throw std::invalid_argument("uncertainty: empty vector");
  if (!(tau > 0.0)) throw std::invalid_argument("uncertainty: tau must be > 0");
  const double m = *std::max_element(sims.begin(), sims.end());
  double acc = 0.0;
  for (double s : sims) acc += std::exp(tau * (s - m));
  return -(tau * m + std::log(acc));
}

/// Smallest score in the list such that at least ceil(q*N) scores are <= it
/// (lower empirical quantile, no interpolation). Guarantees the fraction
/// classified "in" on the calibration set is >= q.
inline double calibrate_gamma(std::vector<double> id_uncertainties, double q) {
  if (id_uncertainties.empty())
    throw std::invalid_argument("calibrate_gamma: empty score list");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("calibrate_gamma: q must be in (0,1)");
  std::sort(id_uncertainties.begin(), id_uncertainties.end());
  const size_t n = id_uncertainties.size();
  const size_t need = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
  return id_uncertainties[std::max<size_t>(need, 1) - 1];
}

/// Decision rule: the boundary is ID.
inline Decision classify(double uncertainty_score, double gamma) {
  if (!std::isfinite(uncertainty_score) || !std::isfinite(gamma))
    throw std::invalid_argument("classify: non-finite input");
  return uncertainty_score <= gamma ? Decision::In : Decision::Out;
}

struct ScoreInput {
  std::string image_id;
  ImageBuffer image;
  BoundingBox box;
};

struct BatchError {
  size_t index;
  std::string message;
};

struct BatchResult {
  std::vector<ScoredInstance> scored;  // input order, failed entries omitted
  std::vector<BatchError> errors;
};

/// Score a batch of (image, box) instances. Instances are processed
/// independently; a malformed box fails that instance only. Output keeps
/// input order regardless of worker scheduling.
inline BatchResult score_batch(const std::vector<ScoreInput>& instances,
                               const PromptSet& prompts,
                               EncoderBackend& backend, const IdSpace& space,
                               const ScoringConfig& config) {
  struct Slot {
    std::optional<ScoredInstance> scored;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(instances.size());

  auto process = [&](size_t i) {
    const ScoreInput& in = instances[i];
    try {
      ScoredInstance out;
      out.image_id = in.image_id;
      out.box = in.box;
      const Embedding z = encode_object(in.image, in.box, prompts, backend,
                                        config.normalize_before_fusion);
      out.similarities = similarities(z, space);
      out.uncertainty = uncertainty(out.similarities, config.tau);
      out.decision = config.gamma ? classify(out.uncertainty, *config.gamma)
                                  : Decision::Undecided;
      slots[i].scored = std::move(out);
    } catch (const std::exception& ex) {
      slots[i].error = ex.what();
    }
  };

  unsigned workers = config.workers ? config.workers
                                    : std::thread::hardware_concurrency();
  if (!backend.concurrent_safe()) workers = 1;
  workers = std::max(1u, std::min<unsigned>(
                             workers, static_cast<unsigned>(
                                          std::max<size_t>(instances.size(), 1))));

  if (workers <= 1 || instances.size() < 2) {
    for (size_t i = 0; i < instances.size(); ++i) process(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (size_t i = w; i < instances.size(); i += workers) process(i);
      });
    for (std::thread& t : pool) t.join();
  }

  BatchResult result;
  for (size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].scored)
      result.scored.push_back(std::move(*slots[i].scored));
    else
      result.errors.push_back({i, *slots[i].error});
  }
  return result;
}

// -- plain-text score records ----------------------------------------------

/// One record per line, tab-separated:
///   image_id  x_min y_min x_max y_max  S_1 .. S_K  uncertainty  decision
inline std::string format_score_record(const ScoredInstance& s) {
  std::ostringstream os;
  os.precision(17);
  os << s.image_id << '\t' << s.box.x_min << ' ' << s.box.y_min << ' '
     << s.box.x_max << ' ' << s.box.y_max << '\t';
  for (size_t i = 0; i < s.similarities.size(); ++i) {
    if (i) os << ' ';
    os << s.similarities[i];
  }
  os << '\t' << s.uncertainty << '\t' << to_string(s.decision);
  return os.str();
}

inline ScoredInstance parse_score_record(const std::string& line) {
  ScoredInstance s;
  std::istringstream is(line);
  std::string field;
  if (!std::getline(is, s.image_id, '\t'))
    throw std::runtime_error("score record: missing image id");
  if (!std::getline(is, field, '\t'))
    throw std::runtime_error("score record: missing box");
  {
    std::istringstream bs(field);
    if (!(bs >> s.box.x_min >> s.box.y_min >> s.box.x_max >> s.box.y_max))
      throw std::runtime_error("score record: malformed box");
  }
  if (!std::getline(is, field, '\t'))
    throw std::runtime_error("score record: missing similarities");
  {
    std::istringstream ss(field);
    double v;
    while (ss >> v) s.similarities.push_back(v);
  }
  if (!std::getline(is, field, '\t'))
    throw std::runtime_error("score record: missing uncertainty");
  s.uncertainty = std::stod(field);
  if (!std::getline(is, field))
    throw std::runtime_error("score record: missing decision");
  if (field == "in") s.decision = Decision::In;
  else if (field == "out") s.decision = Decision::Out;
  else s.decision = Decision::Undecided;
  return s;
}

}  // namespace vista
