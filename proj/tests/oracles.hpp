#pragma once

// Independent reference implementations used to check the library. These
// deliberately take the slow, obvious route and share no code with the
// implementation paths they verify.

#include <algorithm>
#include <cmath>
#include <vector>

#include "vista/image.hpp"

namespace oracles {

/// Dense 2-D Gaussian convolution with edge replication: builds the full
/// 2-D kernel as an outer product of the 1-D taps and convolves directly.
inline vista::ImageBuffer dense_gaussian_blur(const vista::ImageBuffer& image,
                                              double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;

  vista::ImageBuffer out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < vista::ImageBuffer::channels; ++c) {
        double acc = 0.0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const int sx = std::clamp(x + dx, 0, image.width - 1);
            const int sy = std::clamp(y + dy, 0, image.height - 1);
            acc += taps[dy + radius] * taps[dx + radius] * image.at(sx, sy, c);
          }
        out.at(x, y, c) = static_cast<float>(acc);
      }
  return out;
}

/// Per-pixel copy of the region covered by a clamped expanded box.
inline vista::ImageBuffer brute_force_crop(const vista::ImageBuffer& image,
                                           int x_min, int y_min, int x_max,
                                           int y_max) {
  vista::ImageBuffer out(x_max - x_min, y_max - y_min);
  for (int y = y_min; y < y_max; ++y)
    for (int x = x_min; x < x_max; ++x)
      for (int c = 0; c < vista::ImageBuffer::channels; ++c)
        out.at(x - x_min, y - y_min, c) = image.at(x, y, c);
  return out;
}

/// O(N^2) pair count: P(ood > id) with ties counted one-half.
inline double brute_force_auroc(const std::vector<double>& id_scores,
                                const std::vector<double>& ood_scores) {
  double wins = 0.0;
  for (double o : ood_scores)
    for (double i : id_scores) {
      if (o > i) wins += 1.0;
      else if (o == i) wins += 0.5;
    }
  return wins / (double(id_scores.size()) * double(ood_scores.size()));
}

/// Exhaustive threshold sweep: smallest candidate gamma from the ID list
/// accepting at least ceil(q*N) ID scores, then the OOD acceptance rate.
inline double sweep_fpr_at_tpr(const std::vector<double>& id_scores,
                               const std::vector<double>& ood_scores,
                               double q) {
  std::vector<double> candidates = id_scores;
  std::sort(candidates.begin(), candidates.end());
  const size_t need =
      static_cast<size_t>(std::ceil(q * double(id_scores.size())));
  double gamma = candidates.back();
  for (double cand : candidates) {
    size_t accepted = 0;
    for (double s : id_scores)
      if (s <= cand) ++accepted;
    if (accepted >= need) {
      gamma = cand;
      break;
    }
  }
  size_t false_accepts = 0;
  for (double s : ood_scores)
    if (s <= gamma) ++false_accepts;
  return double(false_accepts) / double(ood_scores.size());
}

/// Extended-precision logsumexp uncertainty, no max shift.
inline long double naive_uncertainty(const std::vector<double>& sims,
                                     long double tau) {
  long double acc = 0.0L;
  for (double s : sims) acc += std::exp(tau * static_cast<long double>(s));
  return -std::log(acc);
}

}  // namespace oracles
