#include "csa/benchmark.hpp"
#include "csa/io.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <sstream>

using namespace csa;

namespace {

std::vector<LabeledPoint> group_label_rows(const ScoreTable& table) {
  if (!table.labels) fail(ErrorKind::kParse, "scores file needs a y column naming the candidate label");
  const std::vector<Index>& y = *table.labels;
  const Index L = *std::max_element(y.begin(), y.end()) + 1;
  const Index N = table.scores.N();
  if (N % L != 0) {
    fail(ErrorKind::kValidation, "scores file: " + std::to_string(N) +
                                     " rows do not split into blocks of " + std::to_string(L) +
                                     " candidate labels");
  }
  std::vector<LabeledPoint> points;
  for (Index p = 0; p < N / L; ++p) {
    LabeledPoint pt;
    pt.candidate_scores.resize(L, table.scores.K());
    std::vector<bool> seen(static_cast<std::size_t>(L), false);
    for (Index r = 0; r < L; ++r) {
      const Index row = p * L + r;
      const Index label = y[static_cast<std::size_t>(row)];
      if (seen[static_cast<std::size_t>(label)]) {
        fail(ErrorKind::kValidation, "scores file: label " + std::to_string(label) +
                                         " repeated within point " + std::to_string(p));
      }
      seen[static_cast<std::size_t>(label)] = true;
      pt.candidate_scores.row(label) = table.scores.row(row);
    }
    points.push_back(std::move(pt));
  }
  return points;
}

Vec single_column(const std::filesystem::path& path, const std::string& name) {
  const CsvTable t = read_csv(path);
  const Index c = t.column(name);
  if (c < 0) fail(ErrorKind::kParse, path.string() + ": missing column '" + name + "'");
  return t.rows.col(c);
}

std::string join_labels(const std::vector<Index>& labels) {
  std::ostringstream out;
  for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? " " : "") << labels[i];
  return out.str();
}

void print_summary(const std::string& what, double coverage, double size) {
  std::cout << what << ": coverage " << std::setprecision(6) << coverage << ", mean size " << size
            << "\n";
}

int run_calibrate(const std::string& scores_path, const CalibrationConfig& cfg,
                  const std::string& out) {
  const ScoreTable table = load_scores_csv(scores_path);
  const QuantileEnvelope env = calibrate(table.scores, cfg);
  save_envelope(out, env);
  for (const std::string& w : env.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "calibrated K=" << env.K() << " M=" << env.M() << " beta*=" << env.beta_star
            << " t_hat=" << env.t_hat << " -> " << out << "\n";
  return 0;
}

int run_eval_class(const std::string& scores_path, const std::string& labels_path,
                   const std::string& envelope_path, const std::string& out) {
  const ScoreTable table = load_scores_csv(scores_path);
  const QuantileEnvelope env = load_envelope(envelope_path);
  std::vector<LabeledPoint> points = group_label_rows(table);
  const Vec truth = single_column(labels_path, "y");
  if (truth.size() != static_cast<Index>(points.size())) {
    fail(ErrorKind::kValidation, "labels file has " + std::to_string(truth.size()) +
                                     " rows for " + std::to_string(points.size()) + " points");
  }
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "point,y,covered,size,set\n";
  double covered = 0, total = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto y = static_cast<Index>(truth[static_cast<Index>(i)]);
    if (y < 0 || y >= points[i].candidate_scores.rows()) {
      fail(ErrorKind::kValidation, "label " + std::to_string(y) + " out of range at point " +
                                       std::to_string(i));
    }
    const PredictionSet set = classification_set(points[i].candidate_scores, env);
    const bool hit = set.contains(y);
    covered += hit;
    total += static_cast<double>(set.size());
    rows.push_back({{"y", y}, {"covered", hit}, {"set", set.labels}});
    csv << i << ',' << y << ',' << hit << ',' << set.size() << ',' << join_labels(set.labels)
        << '\n';
  }
  const double n = static_cast<double>(points.size());
  if (result_format_for(out) == ResultFormat::kJson) {
    write_json(out, {{"coverage", covered / n}, {"mean_size", total / n}, {"points", rows}});
  } else {
    write_text(out, csv.str());
  }
  print_summary("eval-class", covered / n, total / n);
  return 0;
}

int run_eval_reg(const std::string& pred_path, const std::string& targets_path,
                 const std::string& envelope_path, const GridSpec& grid, const std::string& out) {
  const CsvTable preds = read_csv(pred_path);
  for (std::size_t k = 0; k < preds.header.size(); ++k) {
    if (preds.header[k] != "f_" + std::to_string(k + 1)) {
      fail(ErrorKind::kParse, pred_path + ": expected header f_1,...,f_K");
    }
  }
  const Vec y = single_column(targets_path, "y");
  if (y.size() != preds.rows.rows()) {
    fail(ErrorKind::kValidation, "targets and predictions have different row counts");
  }
  grid.validate();
  const QuantileEnvelope env = load_envelope(envelope_path);
  Json rows = Json::array();
  std::ostringstream csv;
  csv << std::setprecision(17) << "point,y,covered,length,components\n";
  double covered = 0, total = 0;
  for (Index i = 0; i < preds.rows.rows(); ++i) {
    const Vec f = preds.rows.row(i).transpose();
    const ScoreFn fn = residual_score_fn(f);
    const GridRegion region = regression_region(fn, env, grid);
    const bool hit = env.contains(fn(y[i]));
    covered += hit;
    total += region.length;
    rows.push_back({{"y", y[i]},
                    {"covered", hit},
                    {"length", region.length},
                    {"components", region.components}});
    csv << i << ',' << y[i] << ',' << hit << ',' << region.length << ',' << region.components
        << '\n';
  }
  const double n = static_cast<double>(y.size());
  if (result_format_for(out) == ResultFormat::kJson) {
    write_json(out, {{"coverage", covered / n}, {"mean_length", total / n}, {"points", rows}});
  } else {
    write_text(out, csv.str());
  }
  print_summary("eval-reg", covered / n, total / n);
  return 0;
}

int run_baseline(const std::string& method, const std::string& scores_path,
                 const std::string& test_path, const BenchmarkConfig& cfg,
                 const std::string& out) {
  const ScoreTable table = load_scores_csv(scores_path);
  const MonteCarloBox box = MonteCarloBox::around(table.scores, cfg.mc_points, cfg.seed);
  const FittedMethod fitted = fit_score_method(method, table.scores, box, cfg, cfg.seed);
  Json j = fitted.summary;
  j["method"] = method;
  j["alpha"] = cfg.alpha;
  j["seed"] = cfg.seed;
  j["box_area"] = box.area(fitted.member(box.points));
  if (!test_path.empty()) {
    const ScoreTable test = load_scores_csv(test_path);
    const std::vector<bool> in = fitted.member(test.scores.values());
    j["test_coverage"] = static_cast<double>(std::count(in.begin(), in.end(), true)) /
                         static_cast<double>(in.size());
  }
  write_json(out, j);
  std::cout << "baseline " << method << " -> " << out << "\n";
  return 0;
}

int run_pto(const std::string& graph_path, const std::string& bank_path,
            const std::string& envelope_path, RouteOptions opts, const std::string& mode,
            std::optional<Index> source, std::optional<Index> target, const std::string& out) {
  if (mode == "fw") {
    opts.mode = RouteMode::kFrankWolfe;
  } else if (mode == "pgd") {
    opts.mode = RouteMode::kProjectedSubgradient;
    if (!(opts.eta > 0)) fail(ErrorKind::kValidation, "--mode pgd requires a positive --eta");
  } else {
    fail(ErrorKind::kValidation, "--mode must be fw or pgd");
  }
  const FlowProblem problem = load_graph_csv(graph_path, source, target);
  const SampleBank bank = load_bank(bank_path);
  const QuantileEnvelope env = load_envelope(envelope_path);
  if (bank.D() != problem.edge_count()) {
    fail(ErrorKind::kValidation, "sample bank has " + std::to_string(bank.D()) +
                                     " edge costs per sample but the graph has " +
                                     std::to_string(problem.edge_count()) + " edges");
  }
  const RobustSolution sol = robust_route(problem, bank, env, opts);
  write_json(out, solution_to_json(sol));
  std::cout << "robust value " << std::setprecision(10) << sol.robust_value << ", gap " << sol.gap
            << ", " << sol.iterations << " iterations (" << to_string(sol.status) << ")\n";
  return 0;
}

int run_synth(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  if (spec.kind != SyntheticKind::kRoutingToy) {
    const ScoreData data = generate_scores(spec);
    save_scores_csv(dir / "cal_scores.csv", data.cal);
    save_scores_csv(dir / "test_scores.csv", data.test);
    std::cout << "wrote " << data.cal.N() << " calibration and " << data.test.N()
              << " test rows to " << dir.string() << "\n";
    return 0;
  }
  const RoutingInstance inst = generate_routing(spec);
  save_graph_csv(dir / "graph.csv", inst.problem);
  save_scores_csv(dir / "cal_scores.csv", inst.calibration_scores());
  Mat truth(static_cast<Index>(inst.test.size()), inst.problem.edge_count());
  for (std::size_t i = 0; i < inst.test.size(); ++i) {
    truth.row(static_cast<Index>(i)) = inst.test[i].truth.transpose();
    std::ostringstream name;
    name << "bank_" << std::setw(4) << std::setfill('0') << i << ".json";
    save_bank(dir / "test" / name.str(), inst.test[i].bank);
  }
  std::vector<std::string> header;
  for (Index e = 0; e < inst.problem.edge_count(); ++e) header.push_back("c_" + std::to_string(e + 1));
  write_csv(dir / "test_truth.csv", header, truth);
  std::cout << "wrote routing instance (" << inst.calibration.size() << " calibration draws, "
            << inst.test.size() << " test draws) to " << dir.string() << "\n";
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal score aggregation: calibration, prediction regions, baselines and "
               "robust routing"};
  app.require_subcommand(1);

  // calibrate
  std::string scores, out, labels, envelope, predictions, targets, graph, samples, method, test;
  CalibrationConfig cal_cfg;
  double epsilon = 0;
  auto* cal = app.add_subcommand("calibrate", "Fit a quantile envelope to calibration scores");
  cal->add_option("--scores", scores, "Score CSV (s_1,...,s_K)")->required();
  cal->add_option("--alpha", cal_cfg.alpha, "Miscoverage level")->default_val(0.1);
  cal->add_option("--m", cal_cfg.M, "Number of directions (0: default)")->default_val(0);
  cal->add_option("--split", cal_cfg.split_fraction, "Stage-1 fraction")->default_val(0.25);
  auto* eps_opt = cal->add_option("--epsilon", epsilon, "Stage-1 coverage window width");
  cal->add_option("--seed", cal_cfg.seed, "Random seed")->default_val(0);
  cal->add_option("--out", out, "Envelope JSON")->required();

  // eval-class
  auto* ec = app.add_subcommand("eval-class", "Classification prediction sets and coverage");
  ec->add_option("--scores", scores, "Per-candidate score CSV with a y column")->required();
  ec->add_option("--labels", labels, "True labels CSV (y)")->required();
  ec->add_option("--envelope", envelope, "Envelope JSON")->required();
  ec->add_option("--out", out, "Output .csv or .json")->required();

  // eval-reg
  GridSpec grid;
  auto* er = app.add_subcommand("eval-reg", "Regression regions on a grid and coverage");
  er->add_option("--predictions", predictions, "Predictions CSV (f_1,...,f_K)")->required();
  er->add_option("--targets", targets, "Targets CSV (y)")->required();
  er->add_option("--envelope", envelope, "Envelope JSON")->required();
  er->add_option("--grid-min", grid.y_min)->required();
  er->add_option("--grid-max", grid.y_max)->required();
  er->add_option("--grid-step", grid.step)->required();
  er->add_option("--out", out, "Output .csv or .json")->required();

  // baseline
  BenchmarkConfig base_cfg;
  double base_eps = 0;
  auto* bl = app.add_subcommand("baseline", "Fit a comparison method on score vectors");
  bl->add_option("--method", method)
      ->required()
      ->check(CLI::IsMember({"csa", "single_stage", "bonferroni", "cm", "cr", "cu", "vfcp",
                             "ensemble", "split"}));
  bl->add_option("--scores", scores, "Calibration score CSV")->required();
  bl->add_option("--test", test, "Optional test score CSV for coverage");
  bl->add_option("--alpha", base_cfg.alpha)->default_val(0.1);
  bl->add_option("--m", base_cfg.M)->default_val(0);
  bl->add_option("--split", base_cfg.split_fraction)->default_val(0.25);
  auto* base_eps_opt = bl->add_option("--epsilon", base_eps);
  bl->add_option("--seed", base_cfg.seed)->default_val(0);
  bl->add_option("--out", out, "Output JSON")->required();

  // pto
  RouteOptions route;
  std::string mode = "fw";
  Index source = -1, target = -1;
  auto* pto = app.add_subcommand("pto", "Robust routing over the calibrated region");
  pto->add_option("--graph", graph, "Edge list CSV (src,dst,nominal_cost)")->required();
  pto->add_option("--samples", samples, "Sample bank JSON")->required();
  pto->add_option("--envelope", envelope, "Envelope JSON")->required();
  pto->add_option("--iters", route.iters)->default_val(100);
  pto->add_option("--mode", mode, "fw or pgd")->default_val("fw");
  pto->add_option("--eta", route.eta, "Step size (pgd)");
  pto->add_option("--source", source, "Source vertex (default 0)");
  pto->add_option("--target", target, "Target vertex (default: largest id)");
  pto->add_option("--out", out, "Solution JSON")->required();

  // synth
  SyntheticSpec spec;
  std::string kind = "gaussian_residual";
  auto* sy = app.add_subcommand("synth", "Write a synthetic dataset");
  sy->add_option("--kind", kind)->default_val("gaussian_residual");
  sy->add_option("--k", spec.K)->default_val(2);
  sy->add_option("--rho", spec.rho)->default_val(0.0);
  sy->add_option("--n-cal", spec.n_cal)->default_val(2000);
  sy->add_option("--n-test", spec.n_test)->default_val(1000);
  sy->add_option("--seed", spec.seed)->default_val(0);
  sy->add_option("--out", out, "Output directory")->required();

  // bench
  BenchmarkConfig bench;
  std::string task = "classification", methods, score_kind = "gaussian_residual";
  bool no_warmup = false;
  auto* be = app.add_subcommand("bench", "Seeded multi-trial benchmark");
  be->add_option("--task", task, "classification, regression, pto or scores")
      ->default_val("classification");
  be->add_option("--trials", bench.trials)->default_val(10);
  be->add_option("--alpha", bench.alpha)->default_val(0.1);
  be->add_option("--seed", bench.seed)->default_val(0);
  be->add_option("--methods", methods, "Comma-separated methods (default: all for the task)");
  be->add_option("--k", bench.K)->default_val(3);
  be->add_option("--rho", bench.rho)->default_val(0.5);
  auto* n_cal_opt = be->add_option("--n-cal", bench.n_cal);
  auto* n_test_opt = be->add_option("--n-test", bench.n_test);
  be->add_option("--m", bench.M)->default_val(0);
  be->add_option("--kind", score_kind, "Score generator for --task scores");
  be->add_option("--iters", bench.route.iters, "Routing iterations (pto)")->default_val(100);
  be->add_flag("--no-warmup", no_warmup, "Skip the discarded warm-up trial");
  be->add_option("--out", out, "Results .csv or .json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cal) {
      if (*eps_opt) cal_cfg.epsilon = epsilon;
      return run_calibrate(scores, cal_cfg, out);
    }
    if (*ec) return run_eval_class(scores, labels, envelope, out);
    if (*er) return run_eval_reg(predictions, targets, envelope, grid, out);
    if (*bl) {
      if (*base_eps_opt) base_cfg.epsilon = base_eps;
      return run_baseline(method, scores, test, base_cfg, out);
    }
    if (*pto) {
      return run_pto(graph, samples, envelope, route, mode,
                     source >= 0 ? std::optional<Index>(source) : std::nullopt,
                     target >= 0 ? std::optional<Index>(target) : std::nullopt, out);
    }
    if (*sy) {
      spec.kind = parse_synthetic_kind(kind);
      return run_synth(spec, out);
    }
    if (*be) {
      bench.task = parse_bench_task(task);
      bench.methods = split_list(methods);
      bench.score_kind = parse_synthetic_kind(score_kind);
      bench.warmup = !no_warmup;
      const bool pto_task = bench.task == BenchTask::kPto;
      if (pto_task) bench.K = 2;
      if (!*n_cal_opt) bench.n_cal = pto_task ? 1000 : 2000;
      if (!*n_test_opt) bench.n_test = pto_task ? 200 : 1000;
      const auto results = run_benchmark(bench);
      emit_results(results, result_format_for(out), out);
      std::cout << results_csv(results);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
