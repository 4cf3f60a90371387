#include "csa/baselines.hpp"
#include "csa/benchmark.hpp"
#include "csa/synthetic.hpp"
#include "test_util.hpp"

using namespace csa;

TEST_CASE("split conformal rank") {
  CHECK(split_conformal(std::vector<double>{9, 1, 8, 2, 7, 3, 6, 4, 5}, 0.1) == 9.0);
  CHECK(std::isinf(split_conformal(std::vector<double>{1, 2, 3, 4, 5}, 0.1)));
  Rng rng(1);
  const Mat u = test::uniform_matrix(10000, 1, rng);
  const double q = split_conformal(Vec(u.col(0)), 0.05);
  CHECK(q >= 0.945);
  CHECK(q <= 0.955);
  // Rank against a sort.
  std::vector<double> v(u.data(), u.data() + 101);
  CHECK(split_conformal(v, 0.2) == test::kth_smallest(v, 82));
}

TEST_CASE("vote thresholds are strict") {
  const VoteAggregate m3 = VoteAggregate::uniform(3, VoteVariant::kMajority);
  CHECK(majority_vote_membership(m3, {true, true, true}));
  const VoteAggregate m2 = VoteAggregate::uniform(2, VoteVariant::kMajority);
  CHECK_FALSE(majority_vote_membership(m2, {true, false}));
  const VoteAggregate u3 = VoteAggregate::uniform(3, VoteVariant::kRandomized, 0.9);
  CHECK_FALSE(majority_vote_membership(u3, {true, true, false}));
  CHECK(majority_vote_membership(u3, {true, true, true}));
  const VoteAggregate r2 = VoteAggregate::uniform(2, VoteVariant::kPartiallyRandomized, 0.0);
  CHECK_FALSE(majority_vote_membership(r2, {false, true}));
  CHECK(r2.threshold() == 0.5);

  CHECK(parse_vote_variant("cm") == VoteVariant::kMajority);
  CHECK_THROWS_AS(parse_vote_variant("cx"), Error);
  CHECK_THROWS_AS(VoteAggregate::uniform(2, VoteVariant::kRandomized, 1.5).validate(), Error);
}

TEST_CASE("majority vote with one member is that member") {
  Rng rng(2);
  const Mat s = test::uniform_matrix(1000, 1, rng);
  const Membership vote = vote_membership(VoteAggregate::uniform(1, VoteVariant::kMajority),
                                          Vec::Constant(1, 0.5));
  const std::vector<bool> in = vote(s);
  for (Index i = 0; i < s.rows(); ++i) CHECK(in[static_cast<std::size_t>(i)] == (s(i, 0) <= 0.5));
}

TEST_CASE("randomized vote keeps coverage") {
  const double alpha = 0.1;
  Index covered = 0, total = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    SyntheticSpec spec;
    spec.K = 3;
    spec.rho = 0.5;
    spec.n_cal = 500;
    spec.n_test = 1000;
    spec.seed = t;
    const ScoreData d = generate_scores(spec);
    Vec q(3);
    for (Index k = 0; k < 3; ++k) q[k] = split_conformal(Vec(d.cal.values().col(k)), alpha / 2);
    Rng rng(derive_seed(t, "u"));
    const double u = std::uniform_real_distribution<double>(0, 1)(rng);
    const std::vector<bool> in =
        vote_membership(VoteAggregate::uniform(3, VoteVariant::kRandomized, u), q)(d.test.values());
    covered += std::count(in.begin(), in.end(), true);
    total += static_cast<Index>(in.size());
  }
  CHECK(static_cast<double>(covered) / static_cast<double>(total) >= 1 - alpha - 0.01);
}

TEST_CASE("bonferroni envelope") {
  Rng rng(3);
  const ScoreMatrix s(test::exponential_matrix(300, 2, rng));
  const DirectionSet one = sample_directions(2, 1, 0);
  const QuantileEnvelope b = bonferroni_envelope(s, one, 0.1);
  CHECK(b.raw_thresholds[0] == split_conformal(Vec(project_scores(s, one).col(0)), 0.1));
  CHECK(b.t_hat == 1.0);
  CHECK(b.has_flag(envelope_flags::kBonferroni));

  // Rank overflow gives an infinite threshold.
  const QuantileEnvelope wide = bonferroni_envelope(s, sample_directions(2, 512, 0), 0.1);
  CHECK(std::isinf(wide.raw_thresholds[0]));
}

TEST_CASE("bonferroni coverage") {
  double total = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    SyntheticSpec spec;
    spec.K = 2;
    spec.rho = 0.5;
    spec.n_cal = 1000;
    spec.seed = t;
    const ScoreData d = generate_scores(spec);
    const QuantileEnvelope b = bonferroni_envelope(d.cal, sample_directions(2, 8, 0), 0.1);
    total += test::fraction_true(b.contains_rows(d.test.values()));
  }
  CHECK(total / 100 >= 0.9);
}

TEST_CASE("single direction with K=1 is split conformal on stage 2") {
  Rng rng(4);
  const ScoreMatrix s1(test::exponential_matrix(100, 1, rng));
  const ScoreMatrix s2(test::exponential_matrix(300, 1, rng));
  const SingleDirection d =
      best_single_direction(s1, s2, sample_directions(1, 1, 0), 0.1, interval_length_oracle());
  CHECK(d.index == 0);
  CHECK(d.threshold == split_conformal(Vec(s2.values().col(0)), 0.1));
}

TEST_CASE("single direction prefers the tight coordinate") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kAnisotropic;
  spec.K = 2;
  spec.seed = 5;
  const ScoreData d = generate_scores(spec);
  const auto [s1, s2] = split_scores(d.cal, 0.25, 5);
  const SingleDirection best = best_single_direction(
      s1, s2, sample_directions(2, 64, 0), 0.1, halfplane_area_oracle(s1.values().maxCoeff()));
  CHECK(best.direction[0] > best.direction[1]);
}

TEST_CASE("CSA is no larger than the single direction on anisotropic scores") {
  int wins = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::kAnisotropic;
    spec.K = 2;
    spec.rho = 0.5;
    spec.seed = static_cast<std::uint64_t>(t);
    const ScoreData d = generate_scores(spec);
    BenchmarkConfig cfg;
    cfg.task = BenchTask::kScores;
    cfg.mc_points = 20000;
    const std::uint64_t seed = derive_seed(0, "trial", static_cast<std::uint64_t>(t));
    const MonteCarloBox box = MonteCarloBox::around(d.cal, cfg.mc_points, seed);
    const double csa = box.area(fit_score_method("csa", d.cal, box, cfg, seed).member(box.points));
    const double vf = box.area(fit_score_method("vfcp", d.cal, box, cfg, seed).member(box.points));
    if (csa <= vf) ++wins;
  }
  CHECK(wins >= 90);
}

TEST_CASE("model selection") {
  CHECK(model_selection({3, 1, 2}) == 1);
  CHECK(model_selection({2, 2, 2}) == 0);
  Rng rng(6);
  Mat s = test::exponential_matrix(2000, 3, rng);
  s.col(2) *= 0.3;
  std::vector<double> sizes;
  for (Index k = 0; k < 3; ++k) sizes.push_back(2 * split_conformal(Vec(s.col(k)), 0.1));
  CHECK(model_selection(sizes) == 2);
}
