#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rvm/fusion_eval.hpp"
#include "rvm/rng.hpp"

using namespace rvm;
using namespace rvm::eval;

namespace {

std::vector<ClassedId> make_ids(int classes, int samples) {
  std::vector<ClassedId> ids;
  for (int c = 0; c < classes; ++c)
    for (int s = 0; s < samples; ++s)
      ids.push_back({"s" + std::to_string(c) + "_" + std::to_string(s),
                     "s" + std::to_string(c)});
  return ids;
}

ScoreSet set_from(std::vector<double> genuine, std::vector<double> imposter) {
  ScoreSet s;
  int n = 0;
  for (double v : genuine) s.records.push_back({"g" + std::to_string(n++), "x", true, v, true});
  for (double v : imposter) s.records.push_back({"i" + std::to_string(n++), "x", false, v, true});
  return s;
}

}  // namespace

TEST_CASE("pair counts reproduce the benchmark combinatorics") {
  auto counts = count_pairs(make_ids(336, 6));
  CHECK(counts.genuine == 5040);
  CHECK(counts.imposter == 2026080);
  auto closed = expected_pair_counts(336, 6);
  CHECK(closed.genuine == counts.genuine);
  CHECK(closed.imposter == counts.imposter);

  counts = count_pairs(make_ids(1000, 2));
  CHECK(counts.genuine == 1000);
  CHECK(counts.imposter == 1998000);

  counts = count_pairs(make_ids(1, 2));
  CHECK(counts.genuine == 1);
  CHECK(counts.imposter == 0);
}

TEST_CASE("pair-count identity holds for arbitrary class structures") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = rng.uniform_int(1, 12);
    const int s = rng.uniform_int(1, 7);
    auto counts = count_pairs(make_ids(c, s));
    const long long total = static_cast<long long>(c) * s;
    CHECK(counts.genuine == static_cast<long long>(c) * s * (s - 1) / 2);
    CHECK(counts.genuine + counts.imposter == total * (total - 1) / 2);
  }
}

TEST_CASE("enumerate_pairs rejects duplicate ids") {
  std::vector<ClassedId> ids = {{"a", "c1"}, {"b", "c1"}, {"a", "c2"}};
  CHECK_THROWS_AS(enumerate_pairs(ids), DataError);
}

TEST_CASE("min-max normalization endpoints and rank preservation") {
  ScoreSet s = set_from({2.0, 6.0}, {4.0});
  auto n = normalize_scores(s);
  CHECK(n.records[0].score == 0.0);
  CHECK(n.records[1].score == 1.0);
  CHECK(n.records[2].score == 0.5);

  // NBIS-like range collapses to the endpoints
  auto nbis = normalize_scores(set_from({325.0}, {300.0}));
  CHECK(nbis.records[0].score == 1.0);
  CHECK(nbis.records[1].score == 0.0);

  // already spanning [0, 1] is a fixed point
  auto fixed = normalize_scores(set_from({0.0, 1.0}, {0.25}));
  CHECK(fixed.records[0].score == 0.0);
  CHECK(fixed.records[1].score == 1.0);
  CHECK(fixed.records[2].score == 0.25);

  CHECK_THROWS_AS(normalize_scores(set_from({1.0, 1.0}, {1.0})),
                  std::invalid_argument);

  Rng rng(5);
  ScoreSet random_set;
  for (int i = 0; i < 200; ++i)
    random_set.records.push_back({"p" + std::to_string(i), "g", i % 3 == 0,
                                  rng.uniform(-50.0, 900.0), true});
  auto normalized = normalize_scores(random_set);
  for (size_t i = 0; i < random_set.records.size(); ++i)
    for (size_t j = 0; j < random_set.records.size(); ++j)
      if (random_set.records[i].score < random_set.records[j].score)
        CHECK(normalized.records[i].score <= normalized.records[j].score);
}

TEST_CASE("fusion is the weighted mean and monotone") {
  ScoreSet a = set_from({0.4}, {0.1});
  a.channel = ScoreChannel::Ridge;
  ScoreSet b = set_from({0.6}, {0.3});
  b.channel = ScoreChannel::Valley;
  auto f = fuse_scores(a, b, 0.5);
  CHECK(f.records[0].score == Catch::Approx(0.5));
  CHECK(f.channel == ScoreChannel::Fused);

  auto all_a = fuse_scores(a, b, 1.0);
  CHECK(all_a.records[0].score == a.records[0].score);
  CHECK(all_a.records[1].score == a.records[1].score);

  // raising one input never lowers the fused score
  ScoreSet b2 = b;
  b2.records[0].score += 0.2;
  auto f2 = fuse_scores(a, b2, 0.5);
  CHECK(f2.records[0].score >= f.records[0].score);

  ScoreSet mismatched = b;
  mismatched.records[0].probe_id = "other";
  CHECK_THROWS_AS(fuse_scores(a, mismatched, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(fuse_scores(a, a, 0.5), std::invalid_argument);
}

TEST_CASE("ROC endpoints and separable sets") {
  auto roc = compute_roc(set_from({0.8, 0.9}, {0.1, 0.2}));
  REQUIRE(!roc.points.empty());
  CHECK(roc.points.front().far == 0.0);
  CHECK(roc.points.front().gar == 0.0);  // reject-all at +inf
  CHECK(roc.points.back().far == 1.0);
  CHECK(roc.points.back().gar == 1.0);  // accept-all at the min score

  // a mid threshold separates perfectly
  bool found = false;
  for (const auto& p : roc.points)
    if (p.far == 0.0 && p.gar == 1.0) found = true;
  CHECK(found);

  CHECK(compute_eer(roc) == 0.0);
  CHECK_THROWS_AS(compute_roc(set_from({}, {0.1})), std::invalid_argument);
}

TEST_CASE("ROC monotone as threshold decreases") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> g, i;
    for (int k = 0; k < 100; ++k) {
      g.push_back(rng.normal(0.6, 0.2));
      i.push_back(rng.normal(0.4, 0.2));
    }
    auto roc = compute_roc(set_from(g, i));
    for (size_t k = 1; k < roc.points.size(); ++k) {
      CHECK(roc.points[k].threshold < roc.points[k - 1].threshold);
      CHECK(roc.points[k].far >= roc.points[k - 1].far);
      CHECK(roc.points[k].gar >= roc.points[k - 1].gar);
    }
  }
}

TEST_CASE("EER worked example and chance level") {
  // FRR 0.5 and FAR 0.5 co-occur on (0.4, 0.5]
  auto roc = compute_roc(set_from({0.6, 0.4}, {0.5, 0.3}));
  CHECK(compute_eer(roc) == Catch::Approx(0.5).margin(1e-12));

  // paired samples from the identical distribution sit at chance
  Rng rng(31);
  std::vector<double> g, i;
  for (int k = 0; k < 4000; ++k) {
    g.push_back(rng.uniform());
    i.push_back(rng.uniform());
  }
  CHECK(compute_eer(compute_roc(set_from(g, i))) ==
        Catch::Approx(0.5).margin(0.03));
}

TEST_CASE("EER matches the brute-force oracle on random score sets") {
  Rng rng(20240811);
  for (int trial = 0; trial < 40; ++trial) {
    const int ng = rng.uniform_int(5, 400);
    const int ni = rng.uniform_int(5, 400);
    std::vector<double> g, i;
    const double sep = rng.uniform(0.0, 0.5);
    for (int k = 0; k < ng; ++k) g.push_back(rng.normal(0.5 + sep, 0.2));
    for (int k = 0; k < ni; ++k) i.push_back(rng.normal(0.5 - sep, 0.2));
    const double got = compute_eer(compute_roc(set_from(g, i)));
    const double want = oracle::brute_force_eer(g, i);
    CHECK(got == Catch::Approx(want).margin(1e-9));
  }
}

TEST_CASE("gar_at_far step convention and measurability floor") {
  auto roc = compute_roc(set_from({0.8, 0.9}, {0.1, 0.2}));
  CHECK(gar_at_far(roc, 1.0).value() == 1.0);
  CHECK(gar_at_far(roc, 0.5).value() == 1.0);  // separable: any target is perfect

  // 10 imposters cannot measure FAR 0.01
  std::vector<double> imp(10);
  for (int k = 0; k < 10; ++k) imp[k] = 0.05 * k;
  auto r2 = compute_roc(set_from({0.9, 0.7}, imp));
  CHECK(!gar_at_far(r2, 0.01).has_value());
  CHECK(gar_at_far(r2, 0.1).has_value());
  CHECK_THROWS_AS(gar_at_far(r2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gar_at_far(r2, 1.5), std::invalid_argument);
}

TEST_CASE("fusion lowers EER when channels carry independent noise") {
  Rng rng(99);
  ScoreSet a, b;
  a.channel = ScoreChannel::Ridge;
  b.channel = ScoreChannel::Valley;
  int n = 0;
  auto add = [&](bool genuine, double mean) {
    const std::string id = "p" + std::to_string(n++);
    a.records.push_back({id, "g", genuine, mean + rng.normal(0.0, 0.15), true});
    b.records.push_back({id, "g", genuine, mean + rng.normal(0.0, 0.15), true});
  };
  for (int k = 0; k < 2000; ++k) add(true, 0.7);
  for (int k = 0; k < 2000; ++k) add(false, 0.3);

  const double eer_a = compute_eer(compute_roc(a));
  const double eer_b = compute_eer(compute_roc(b));
  const double eer_f = compute_eer(compute_roc(
      fuse_scores(normalize_scores(a), normalize_scores(b), 0.5)));
  CHECK(eer_f < eer_a);
  CHECK(eer_f < eer_b);
}

TEST_CASE("score CSV round trip preserves full precision") {
  const auto path = std::filesystem::temp_directory_path() / "rvm_scores.csv";
  ScoreSet s;
  Rng rng(1);
  for (int k = 0; k < 50; ++k)
    s.records.push_back({"p" + std::to_string(k), "g" + std::to_string(k),
                         k % 2 == 0, rng.uniform(), k % 7 != 0});
  save_scores_csv(path, s);
  auto back = load_scores_csv(path, ScoreChannel::Ridge);
  REQUIRE(back.records.size() == s.records.size());
  for (size_t k = 0; k < s.records.size(); ++k) {
    CHECK(back.records[k].probe_id == s.records[k].probe_id);
    CHECK(back.records[k].gallery_id == s.records[k].gallery_id);
    CHECK(back.records[k].genuine == s.records[k].genuine);
    CHECK(back.records[k].score == s.records[k].score);  // bit exact
  }
}
