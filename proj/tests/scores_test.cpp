#include "csa/scores.hpp"
#include "test_util.hpp"

#include <numeric>

using namespace csa;

TEST_CASE("residual score") {
  CHECK(residual_score(3.0, 3.0) == 0.0);
  CHECK(residual_score(1.5, -0.5) == 2.0);
  Rng rng(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 1000; ++i) {
    const double a = n(rng), b = n(rng);
    CHECK(residual_score(a, b) == residual_score(b, a));
  }
}

TEST_CASE("ensemble score") {
  Vec p(2);
  p << 1, 3;
  CHECK(ensemble_score(p, 2.0).value == 0.0);
  p << 0, 2;
  const EnsembleScore e = ensemble_score(p, 3.0);
  CHECK(e.value == doctest::Approx(2.0));
  CHECK_FALSE(e.degenerate);

  Vec same(3);
  same << 5, 5, 5;
  const EnsembleScore d = ensemble_score(same, 6.0);
  CHECK(d.degenerate);
  CHECK(d.value == kEnsembleScoreCap);
  CHECK(ensemble_score(same, 5.0).value == 0.0);
  CHECK_THROWS_AS(ensemble_score(Vec::Ones(1), 0.0), Error);
}

TEST_CASE("ensemble score is permutation invariant") {
  Rng rng(2);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 200; ++rep) {
    Vec p(5);
    for (Index i = 0; i < 5; ++i) p[i] = n(rng);
    const double y = n(rng);
    std::vector<Index> perm(5);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Vec q(5);
    for (Index i = 0; i < 5; ++i) q[i] = p[perm[static_cast<std::size_t>(i)]];
    CHECK(ensemble_score(q, y).value == doctest::Approx(ensemble_score(p, y).value).epsilon(1e-12));
  }
}

TEST_CASE("APS score hand values") {
  Vec p(3);
  p << 0.5, 0.3, 0.2;
  const ProbVector probs(p);
  CHECK(aps_score(probs, 0) == doctest::Approx(0.5));
  CHECK(aps_score(probs, 1) == doctest::Approx(0.8));
  CHECK(aps_score(probs, 2) == doctest::Approx(1.0));
  Vec shuffled(3);
  shuffled << 0.2, 0.5, 0.3;
  CHECK(aps_score(ProbVector(shuffled), 2) == doctest::Approx(0.8));
  CHECK_THROWS_AS(aps_score(probs, 3), Error);
  CHECK_THROWS_AS(aps_score(probs, -1), Error);
}

TEST_CASE("APS ties go to the smaller label") {
  const ProbVector u(Vec::Constant(4, 0.25));
  for (Index l = 0; l < 4; ++l) {
    CHECK(aps_score(u, l) == doctest::Approx(0.25 * static_cast<double>(l + 1)));
  }
}

TEST_CASE("APS is monotone in label probability") {
  Rng rng(3);
  std::exponential_distribution<double> e;
  for (int rep = 0; rep < 500; ++rep) {
    Vec p(6);
    for (Index i = 0; i < 6; ++i) p[i] = e(rng);
    p /= p.sum();
    const ProbVector probs(p);
    for (Index a = 0; a < 6; ++a) {
      for (Index b = 0; b < 6; ++b) {
        if (p[a] > p[b]) CHECK(aps_score(probs, a) <= aps_score(probs, b));
      }
    }
  }
}

TEST_CASE("probability vector validation") {
  Vec bad(2);
  bad << 0.7, 0.7;
  CHECK_THROWS_AS(ProbVector{bad}, Error);
  bad << -0.1, 1.1;
  CHECK_THROWS_AS(ProbVector{bad}, Error);
  CHECK_THROWS_AS(ProbVector{Vec::Ones(1)}, Error);
}

TEST_CASE("GPCP score") {
  Mat s(2, 2);
  s << 0, 0, 4, 0;
  const SampleBank bank({s});
  Vec c(2);
  c << 1, 0;
  CHECK(gpcp_score(bank, 0, c) == 1.0);
  CHECK(gpcp_score(bank, 0, Vec(s.row(1).transpose())) == 0.0);
  CHECK_THROWS_AS(gpcp_score(bank, 0, Vec::Zero(3)), Error);
  CHECK_THROWS_AS(gpcp_score(bank, 1, c), Error);
}

TEST_CASE("GPCP score matches exhaustive distances") {
  Rng rng(4);
  const Mat samples = test::uniform_matrix(50, 3, rng, -1, 1);
  const SampleBank bank({samples});
  for (int rep = 0; rep < 100; ++rep) {
    const Vec c = test::uniform_matrix(1, 3, rng, -2, 2).row(0).transpose();
    double best = kInf;
    for (Index j = 0; j < 50; ++j) {
      double d2 = 0;
      for (Index k = 0; k < 3; ++k) d2 += (samples(j, k) - c[k]) * (samples(j, k) - c[k]);
      best = std::min(best, std::sqrt(d2));
    }
    CHECK(gpcp_score(bank, 0, c) == doctest::Approx(best).epsilon(1e-14));
  }
}

TEST_CASE("GPCP score is 1-Lipschitz") {
  Rng rng(5);
  const SampleBank bank({test::uniform_matrix(8, 4, rng)});
  for (int rep = 0; rep < 1000; ++rep) {
    const Vec a = test::uniform_matrix(1, 4, rng, -2, 2).row(0).transpose();
    const Vec b = test::uniform_matrix(1, 4, rng, -2, 2).row(0).transpose();
    CHECK(std::abs(gpcp_score(bank, 0, a) - gpcp_score(bank, 0, b)) <= (a - b).norm() + 1e-12);
  }
}

TEST_CASE("sample bank shape") {
  const SampleBank bank({Mat::Zero(4, 3), Mat::Ones(1, 3)});
  CHECK(bank.K() == 2);
  CHECK(bank.D() == 3);
  CHECK(bank.J(0) == 4);
  CHECK(bank.tuple_count() == 4);
  CHECK_THROWS_AS(SampleBank({Mat::Zero(2, 3), Mat::Zero(2, 2)}), Error);
  CHECK_THROWS_AS(SampleBank({Mat::Zero(0, 3)}), Error);
  CHECK_THROWS_AS(SampleBank(std::vector<Mat>{}), Error);
}

TEST_CASE("stacking keeps predictor order") {
  const Vec v = stack_scores({0.1, 0.2});
  CHECK(v[0] == 0.1);
  CHECK(v[1] == 0.2);
  CHECK(stack_scores({0.0}).size() == 1);
  CHECK_THROWS_AS(stack_scores({0.1, -0.2}), Error);

  Mat a(1, 2), b(2, 2);
  a << 0, 0;
  b << 1, 1, 3, 3;
  Vec c(2);
  c << 1, 0;
  const Vec fwd = gpcp_scores(SampleBank({a, b}), c);
  const Vec rev = gpcp_scores(SampleBank({b, a}), c);
  CHECK(fwd[0] == rev[1]);
  CHECK(fwd[1] == rev[0]);
}
