#include "csa/synthetic.hpp"

#include <algorithm>

namespace csa {

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "gaussian_residual") return SyntheticKind::kGaussianResidual;
  if (name == "lognormal") return SyntheticKind::kLognormal;
  if (name == "chi2_check") return SyntheticKind::kChi2Check;
  if (name == "anisotropic") return SyntheticKind::kAnisotropic;
  if (name == "routing_toy") return SyntheticKind::kRoutingToy;
  fail(ErrorKind::kInvalidArgument, "unknown synthetic kind '" + name + "'");
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kGaussianResidual:
      return "gaussian_residual";
    case SyntheticKind::kLognormal:
      return "lognormal";
    case SyntheticKind::kChi2Check:
      return "chi2_check";
    case SyntheticKind::kAnisotropic:
      return "anisotropic";
    case SyntheticKind::kRoutingToy:
      return "routing_toy";
  }
  return "?";
}

void SyntheticSpec::validate() const {
  require(K >= 1, "synthetic: K must be positive");
  require(rho >= -1.0 && rho <= 1.0, "synthetic: rho must lie in [-1, 1]");
  require(n_cal >= 4 && n_test >= 4, "synthetic: sample sizes must be at least 4");
  if (K > 1) {
    require(rho >= -1.0 / static_cast<double>(K - 1) - 1e-12,
            "synthetic: rho below -1/(K-1) gives an invalid equicorrelation matrix");
  }
}

Mat correlated_normals(Index n, Index K, double rho, Rng& rng) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(K, K, rho);
  cov.diagonal().setOnes();
  // Symmetric square root handles the singular rho = 1 and rho = -1/(K-1) cases.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::MatrixXd root = eig.eigenvectors() *
                               eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                               eig.eigenvectors().transpose();
  std::normal_distribution<double> normal;
  Mat z(n, K);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < K; ++k) z(i, k) = normal(rng);
  }
  return z * root;
}

namespace {

Mat transform_scores(const Mat& z, SyntheticKind kind) {
  const Index K = z.cols();
  switch (kind) {
    case SyntheticKind::kGaussianResidual:
      return z.cwiseAbs();
    case SyntheticKind::kLognormal:
      return z.array().exp().matrix();
    case SyntheticKind::kChi2Check:
      return z.array().square().matrix();
    case SyntheticKind::kAnisotropic: {
      Mat s = z.cwiseAbs();
      for (Index k = 0; k < K; ++k) {
        const double scale =
            K == 1 ? 1.0 : std::pow(10.0, static_cast<double>(k) / static_cast<double>(K - 1));
        s.col(k) *= scale;
      }
      return s;
    }
    case SyntheticKind::kRoutingToy:
      break;
  }
  fail(ErrorKind::kInvalidArgument, "routing_toy does not produce a score matrix");
}

}  // namespace

ScoreData generate_scores(const SyntheticSpec& spec) {
  spec.validate();
  Rng cal_rng(derive_seed(spec.seed, "synthetic.cal"));
  Rng test_rng(derive_seed(spec.seed, "synthetic.test"));
  const Mat cal = correlated_normals(spec.n_cal, spec.K, spec.rho, cal_rng);
  const Mat test = correlated_normals(spec.n_test, spec.K, spec.rho, test_rng);
  return {ScoreMatrix(transform_scores(cal, spec.kind)),
          ScoreMatrix(transform_scores(test, spec.kind))};
}

ScoreMatrix RoutingInstance::calibration_scores() const {
  Mat s(static_cast<Index>(calibration.size()), 2);
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    s.row(static_cast<Index>(i)) =
        gpcp_scores(calibration[i].bank, calibration[i].truth).transpose();
  }
  return ScoreMatrix(std::move(s));
}

namespace {

RoutingDraw routing_draw(const Vec& nominal, const RoutingParams& params, double rho, Rng& rng) {
  const Index E = nominal.size();
  const Index K = static_cast<Index>(params.samples_per_predictor.size());
  std::normal_distribution<double> normal;
  Vec field(E);
  for (Index e = 0; e < E; ++e) field[e] = params.truth_sigma * normal(rng);
  RoutingDraw draw;
  draw.truth = nominal.array() * field.array().exp();
  // Per-edge view errors, correlated across predictors.
  const Mat errors = correlated_normals(E, K, rho, rng);
  std::vector<Mat> samples;
  for (Index k = 0; k < K; ++k) {
    const Index J = params.samples_per_predictor[static_cast<std::size_t>(k)];
    const Vec center = field + params.view_noise[static_cast<std::size_t>(k)] * errors.col(k);
    Mat s(J, E);
    for (Index j = 0; j < J; ++j) {
      for (Index e = 0; e < E; ++e) {
        const double jitter = params.sample_noise[static_cast<std::size_t>(k)] * normal(rng);
        s(j, e) = nominal[e] * std::exp(center[e] + jitter);
      }
    }
    samples.push_back(std::move(s));
  }
  draw.bank = SampleBank(std::move(samples));
  return draw;
}

}  // namespace

RoutingInstance generate_routing(const SyntheticSpec& spec, const RoutingParams& params) {
  spec.validate();
  const Index K = static_cast<Index>(params.samples_per_predictor.size());
  require(K >= 1 && params.view_noise.size() == params.samples_per_predictor.size() &&
              params.sample_noise.size() == params.samples_per_predictor.size(),
          "routing: per-predictor parameter lists must have equal length");
  const Index g = params.grid;
  const Index E = g * (g - 1) * 2;
  Rng rng(derive_seed(spec.seed, "routing.nominal"));
  std::uniform_real_distribution<double> uniform(1.0, 2.0);
  Vec nominal(E);
  for (Index e = 0; e < E; ++e) nominal[e] = uniform(rng);

  RoutingInstance inst{grid_graph(g, g, nominal), {}, {}};
  Rng cal_rng(derive_seed(spec.seed, "routing.cal"));
  Rng test_rng(derive_seed(spec.seed, "routing.test"));
  for (Index i = 0; i < spec.n_cal; ++i) {
    inst.calibration.push_back(routing_draw(nominal, params, spec.rho, cal_rng));
  }
  for (Index i = 0; i < spec.n_test; ++i) {
    inst.test.push_back(routing_draw(nominal, params, spec.rho, test_rng));
  }
  return inst;
}

SampleBank predictor_bank(const SampleBank& bank, Index k) {
  return SampleBank({bank.samples(k)});
}

namespace {

Vec softmax(const Vec& logits) {
  const Vec e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

void classification_rows(Index n, Index K, Index labels, double rho, Rng& rng,
                         std::vector<LabeledPoint>& out, std::vector<LabeledPoint>& ensemble) {
  std::uniform_int_distribution<Index> pick(0, labels - 1);
  for (Index i = 0; i < n; ++i) {
    const Index y = pick(rng);
    const Mat noise = correlated_normals(labels, K, rho, rng);  // labels x K
    Mat scores(labels, K);
    Vec mean_probs = Vec::Zero(labels);
    for (Index k = 0; k < K; ++k) {
      const double signal = std::max(0.5, 2.5 - 0.5 * static_cast<double>(k));
      Vec logits = noise.col(k);
      logits[y] += signal;
      Vec probs = softmax(logits);
      probs /= probs.sum();
      mean_probs += probs;
      const ProbVector p(probs);
      for (Index l = 0; l < labels; ++l) scores(l, k) = aps_score(p, l);
    }
    mean_probs /= static_cast<double>(K);
    mean_probs /= mean_probs.sum();
    const ProbVector pm(mean_probs);
    Mat ens(labels, 1);
    for (Index l = 0; l < labels; ++l) ens(l, 0) = aps_score(pm, l);
    out.push_back(classification_point(std::move(scores), y));
    ensemble.push_back(classification_point(std::move(ens), y));
  }
}

}  // namespace

ClassificationData generate_classification(const SyntheticSpec& spec, Index labels) {
  spec.validate();
  require(labels >= 2, "classification: need at least 2 labels");
  ClassificationData data;
  Rng cal_rng(derive_seed(spec.seed, "classification.cal"));
  Rng test_rng(derive_seed(spec.seed, "classification.test"));
  classification_rows(spec.n_cal, spec.K, labels, spec.rho, cal_rng, data.cal, data.cal_ensemble);
  classification_rows(spec.n_test, spec.K, labels, spec.rho, test_rng, data.test,
                      data.test_ensemble);
  return data;
}

RegressionData generate_regression(const SyntheticSpec& spec, Index grid_points) {
  spec.validate();
  require(spec.K >= 2, "regression: need at least 2 predictors");
  Rng cal_rng(derive_seed(spec.seed, "regression.cal"));
  Rng test_rng(derive_seed(spec.seed, "regression.test"));
  std::normal_distribution<double> normal;
  const auto draw = [&](Index n, Rng& rng, Mat& preds, Vec& ys) {
    preds = correlated_normals(n, spec.K, spec.rho, rng);
    ys.resize(n);
    for (Index i = 0; i < n; ++i) {
      ys[i] = 3.0 * normal(rng);
      for (Index k = 0; k < spec.K; ++k) {
        preds(i, k) = ys[i] + (1.0 + 0.5 * static_cast<double>(k)) * preds(i, k);
      }
    }
  };
  Mat cal_pred, test_pred;
  Vec cal_y, test_y;
  draw(spec.n_cal, cal_rng, cal_pred, cal_y);
  draw(spec.n_test, test_rng, test_pred, test_y);

  RegressionData data;
  data.grid = default_grid(cal_y, grid_points);
  const auto fill = [&](const Mat& preds, const Vec& ys, std::vector<LabeledPoint>& pts,
                        std::vector<LabeledPoint>& ens) {
    for (Index i = 0; i < preds.rows(); ++i) {
      const Vec f = preds.row(i).transpose();
      pts.push_back(regression_point(f, ys[i], data.grid));
      LabeledPoint e;
      e.cell_measure = data.grid.step;
      e.true_score = Vec::Constant(1, ensemble_score(f, ys[i]).value);
      e.candidate_scores.resize(data.grid.count(), 1);
      for (Index g = 0; g < data.grid.count(); ++g) {
        e.candidate_scores(g, 0) = ensemble_score(f, data.grid.point(g)).value;
      }
      ens.push_back(std::move(e));
    }
  };
  fill(cal_pred, cal_y, data.cal, data.cal_ensemble);
  fill(test_pred, test_y, data.test, data.test_ensemble);
  return data;
}

ScoreMatrix true_scores(const std::vector<LabeledPoint>& points) {
  require(!points.empty(), "true_scores: no points");
  Mat s(static_cast<Index>(points.size()), points.front().true_score.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    s.row(static_cast<Index>(i)) = points[i].true_score.transpose();
  }
  return ScoreMatrix(std::move(s));
}

}  // namespace csa
