#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vista/metrics.hpp"

using namespace vista;

namespace {

std::vector<double> random_scores(size_t n, std::mt19937_64& rng,
                                  bool heavy_ties) {
  std::vector<double> out(n);
  if (heavy_ties) {
    std::uniform_int_distribution<int> dist(-5, 5);
    for (double& s : out) s = dist(rng) * 0.5;
  } else {
    std::normal_distribution<double> dist(0.0, 2.0);
    for (double& s : out) s = dist(rng);
  }
  return out;
}

}  // namespace

TEST_CASE("auroc: perfect separation") {
  CHECK(auroc({1.0, 2.0, 3.0}, {4.0, 5.0}) == 1.0);
  CHECK(auroc({4.0, 5.0}, {1.0, 2.0, 3.0}) == 0.0);
}

TEST_CASE("auroc: identical multisets give one half") {
  CHECK(auroc({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == Catch::Approx(0.5));
  CHECK(auroc({7.0}, {7.0}) == Catch::Approx(0.5));
}

TEST_CASE("auroc: hand-counted pair example") {
  // pairs: (1,1.5) win, (1,3) win, (2,1.5) loss, (2,3) win -> 3/4
  CHECK(auroc({1.0, 2.0}, {1.5, 3.0}) == Catch::Approx(0.75));
}

TEST_CASE("auroc: rejects empty and non-finite input") {
  CHECK_THROWS(auroc({}, {1.0}));
  CHECK_THROWS(auroc({1.0}, {}));
  CHECK_THROWS(auroc({std::nan("")}, {1.0}));
}

TEST_CASE("auroc: midranks equal brute-force pair counting exactly") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const bool ties = trial % 2 == 0;
    const auto id = random_scores(1 + rng() % 400, rng, ties);
    const auto ood = random_scores(1 + rng() % 400, rng, ties);
    CHECK(auroc(id, ood) == oracles::brute_force_auroc(id, ood));
  }
}

TEST_CASE("fpr_at_tpr: trivial separable cases") {
  CHECK(fpr_at_tpr({1.0, 2.0, 3.0}, {10.0, 11.0}, 0.95) == 0.0);
  CHECK(fpr_at_tpr({5.0, 6.0}, {1.0, 2.0}, 0.95) == 1.0);
}

TEST_CASE("fpr_at_tpr: calibration-oracle example") {
  std::vector<double> id;
  for (int i = 1; i <= 100; ++i) id.push_back(i);
  const std::vector<double> ood{90.0, 94.0, 95.0, 96.0, 200.0};
  CHECK(fpr_at_tpr(id, ood, 0.95) == Catch::Approx(0.6));
}

TEST_CASE("fpr_at_tpr: equals the exhaustive sweep oracle") {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 60; ++trial) {
    const bool ties = trial % 3 == 0;
    const auto id = random_scores(1 + rng() % 300, rng, ties);
    const auto ood = random_scores(1 + rng() % 300, rng, ties);
    for (double q : {0.5, 0.9, 0.95})
      CHECK(fpr_at_tpr(id, ood, q) == oracles::sweep_fpr_at_tpr(id, ood, q));
  }
}

TEST_CASE("metrics: invariant under strictly increasing transforms") {
  std::mt19937_64 rng(103);
  const auto id = random_scores(150, rng, false);
  const auto ood = random_scores(130, rng, false);
  auto transform = [](std::vector<double> v) {
    for (double& x : v) x = std::exp(0.5 * x) + x * 3.0;
    return v;
  };
  CHECK(auroc(id, ood) == Catch::Approx(auroc(transform(id), transform(ood))));
  CHECK(fpr_at_tpr(id, ood, 0.95) ==
        Catch::Approx(fpr_at_tpr(transform(id), transform(ood), 0.95)));
}

TEST_CASE("auroc: swapping lists complements the score when tie-free") {
  std::mt19937_64 rng(104);
  const auto id = random_scores(97, rng, false);
  const auto ood = random_scores(83, rng, false);
  CHECK(auroc(id, ood) == Catch::Approx(1.0 - auroc(ood, id)));
}

TEST_CASE("summarize: separable and identical fixtures") {
  const std::vector<double> low{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> high{10.0, 11.0, 12.0};
  const EvalReport sep = summarize(low, high, 0.95);
  CHECK(sep.fpr_at_q == 0.0);
  CHECK(sep.auroc == 1.0);
  CHECK(sep.n_id == 4);
  CHECK(sep.n_ood == 3);
  CHECK(sep.gamma_used == 4.0);
  CHECK(sep.id_summary.mean == Catch::Approx(2.5));
  CHECK(sep.id_summary.min == 1.0);
  CHECK(sep.id_summary.max == 4.0);

  std::mt19937_64 rng(105);
  const auto shared = random_scores(400, rng, false);
  const EvalReport same = summarize(shared, shared, 0.95);
  CHECK(same.auroc == Catch::Approx(0.5));
  CHECK(same.fpr_at_q ==
        Catch::Approx(oracles::sweep_fpr_at_tpr(shared, shared, 0.95)));
}

TEST_CASE("report formatting: percent with two decimals") {
  EvalReport r;
  r.fpr_at_q = 0.0868;
  r.auroc = 0.9776;
  const std::string table = format_report_table(r, "vista");
  CHECK(table.find("8.68") != std::string::npos);
  CHECK(table.find("97.76") != std::string::npos);
  const std::string record = format_report_record(r);
  CHECK(record.find("auroc=") != std::string::npos);
}
