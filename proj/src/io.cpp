#include "csa/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace csa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

double parse_number(const std::string& field, const std::filesystem::path& path,
                    std::size_t line) {
  double v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last) {
    fail(ErrorKind::kParse, where(path, line) + ": cannot parse '" + field + "' as a number");
  }
  return v;
}

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::kIo, "write to '" + path.string() + "' failed");
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Index>(i);
  }
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(ErrorKind::kParse, where(path, line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) row.push_back(parse_number(f, path, line_no));
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) fail(ErrorKind::kParse, path.string() + ": missing header row");
  table.rows.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      table.rows(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return table;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Mat& rows) {
  require(static_cast<Index>(header.size()) == rows.cols(), "write_csv: header width mismatch");
  std::ofstream out = open_output(path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index j = 0; j < rows.cols(); ++j) out << (j ? "," : "") << format_double(rows(i, j));
    out << '\n';
  }
  finish(out, path);
}

ScoreTable load_scores_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  Index K = static_cast<Index>(t.header.size());
  const bool has_labels = K > 0 && t.header.back() == "y";
  if (has_labels) --K;
  if (K < 1) fail(ErrorKind::kParse, path.string() + ": header has no score columns");
  for (Index k = 0; k < K; ++k) {
    const std::string expected = "s_" + std::to_string(k + 1);
    if (t.header[static_cast<std::size_t>(k)] != expected) {
      fail(ErrorKind::kParse, where(path, 1) + ": expected column '" + expected + "', found '" +
                                  t.header[static_cast<std::size_t>(k)] + "'");
    }
  }
  // Data rows start on line 2 (blank lines aside); report the row's ordinal line.
  for (Index i = 0; i < t.rows.rows(); ++i) {
    for (Index k = 0; k < K; ++k) {
      const double v = t.rows(i, k);
      if (!std::isfinite(v)) {
        fail(ErrorKind::kValidation, where(path, static_cast<std::size_t>(i + 2)) +
                                         ": scores must be finite");
      }
      if (v < 0) {
        fail(ErrorKind::kValidation,
             where(path, static_cast<std::size_t>(i + 2)) +
                 ": negative score; score functions are assumed nonnegative");
      }
    }
  }
  ScoreTable out{ScoreMatrix(t.rows.leftCols(K)), std::nullopt};
  if (has_labels) {
    std::vector<Index> labels;
    labels.reserve(static_cast<std::size_t>(t.rows.rows()));
    for (Index i = 0; i < t.rows.rows(); ++i) {
      const double y = t.rows(i, K);
      if (!(y >= 0) || y != std::floor(y)) {
        fail(ErrorKind::kParse, where(path, static_cast<std::size_t>(i + 2)) +
                                    ": label must be a nonnegative integer");
      }
      labels.push_back(static_cast<Index>(y));
    }
    out.labels = std::move(labels);
  }
  return out;
}

void save_scores_csv(const std::filesystem::path& path, const ScoreMatrix& scores,
                     const std::optional<std::vector<Index>>& labels) {
  std::vector<std::string> header;
  for (Index k = 0; k < scores.K(); ++k) header.push_back("s_" + std::to_string(k + 1));
  Mat rows = scores.values();
  if (labels) {
    require(static_cast<Index>(labels->size()) == scores.N(), "save_scores_csv: label count");
    header.emplace_back("y");
    rows.conservativeResize(Eigen::NoChange, scores.K() + 1);
    for (Index i = 0; i < scores.N(); ++i) {
      rows(i, scores.K()) = static_cast<double>((*labels)[static_cast<std::size_t>(i)]);
    }
  }
  write_csv(path, header, rows);
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_from_json(const Json& j) {
  if (j.is_null()) return kInf;
  if (!j.is_number()) fail(ErrorKind::kParse, "expected a number, found " + j.dump());
  return j.get<double>();
}

namespace {

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
  return a;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorKind::kParse, "expected an array");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number_from_json(j[i]);
  return v;
}

Json mat_to_json(const Mat& m) {
  Json a = Json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vec_to_json(m.row(i).transpose()));
  return a;
}

Mat mat_from_json(const Json& j, Index cols_hint = -1) {
  if (!j.is_array()) fail(ErrorKind::kParse, "expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : std::max<Index>(cols_hint, 0);
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vec r = vec_from_json(j[static_cast<std::size_t>(i)]);
    if (r.size() != cols) fail(ErrorKind::kParse, "ragged matrix rows");
    m.row(i) = r.transpose();
  }
  return m;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorKind::kParse, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

Json envelope_to_json(const QuantileEnvelope& env) {
  Json j;
  j["schema_version"] = kEnvelopeSchemaVersion;
  j["alpha"] = env.alpha;
  j["K"] = env.K();
  j["M"] = env.M();
  j["seed"] = env.dirs.seed ? Json(*env.dirs.seed) : Json(nullptr);
  j["beta_star"] = env.beta_star;
  j["t_hat"] = number_or_null(env.t_hat);
  j["directions"] = mat_to_json(env.dirs.directions);
  j["raw_thresholds"] = vec_to_json(env.raw_thresholds);
  j["final_thresholds"] = vec_to_json(env.final_thresholds);
  j["n_stage1"] = env.n_stage1;
  j["n_stage2"] = env.n_stage2;
  j["flags"] = env.flags;
  return j;
}

QuantileEnvelope envelope_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::kParse, "envelope: expected a JSON object");
  const int version = field<int>(j, "schema_version");
  if (version != kEnvelopeSchemaVersion) {
    fail(ErrorKind::kParse, "envelope: unsupported schema_version " + std::to_string(version));
  }
  QuantileEnvelope env;
  env.alpha = field<double>(j, "alpha");
  const Index K = field<Index>(j, "K");
  const Index M = field<Index>(j, "M");
  if (j.contains("seed") && !j["seed"].is_null()) env.dirs.seed = j["seed"].get<std::uint64_t>();
  env.beta_star = field<double>(j, "beta_star");
  if (!j.contains("t_hat")) fail(ErrorKind::kParse, "missing field 't_hat'");
  env.t_hat = number_from_json(j["t_hat"]);
  env.dirs.directions = mat_from_json(j.at("directions"), K);
  env.raw_thresholds = vec_from_json(j.at("raw_thresholds"));
  env.final_thresholds = vec_from_json(j.at("final_thresholds"));
  env.n_stage1 = field<Index>(j, "n_stage1");
  env.n_stage2 = field<Index>(j, "n_stage2");
  env.flags = field<std::vector<std::string>>(j, "flags");
  if (env.dirs.directions.rows() != M || env.dirs.directions.cols() != K ||
      env.raw_thresholds.size() != M || env.final_thresholds.size() != M) {
    fail(ErrorKind::kValidation, "envelope: K/M do not match the stored arrays");
  }
  if (!(env.alpha > 0 && env.alpha < 1)) fail(ErrorKind::kValidation, "envelope: bad alpha");
  return env;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
  finish(out, path);
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

void save_envelope(const std::filesystem::path& path, const QuantileEnvelope& envelope) {
  write_json(path, envelope_to_json(envelope));
}

QuantileEnvelope load_envelope(const std::filesystem::path& path) {
  return envelope_from_json(read_json(path));
}

Json bank_to_json(const SampleBank& bank) {
  Json preds = Json::array();
  for (Index k = 0; k < bank.K(); ++k) {
    preds.push_back({{"J", bank.J(k)}, {"samples", mat_to_json(bank.samples(k))}});
  }
  return {{"predictors", preds}};
}

SampleBank bank_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("predictors") || !j["predictors"].is_array()) {
    fail(ErrorKind::kParse, "sample bank: expected {\"predictors\": [...]}");
  }
  std::vector<Mat> samples;
  for (const Json& p : j["predictors"]) {
    Mat s = mat_from_json(p.at("samples"));
    if (p.contains("J") && p["J"].get<Index>() != s.rows()) {
      fail(ErrorKind::kValidation, "sample bank: J does not match the sample count");
    }
    samples.push_back(std::move(s));
  }
  try {
    return SampleBank(std::move(samples));
  } catch (const Error& e) {
    fail(ErrorKind::kValidation, std::string("sample bank: ") + e.what());
  }
}

void save_bank(const std::filesystem::path& path, const SampleBank& bank) {
  write_json(path, bank_to_json(bank));
}

SampleBank load_bank(const std::filesystem::path& path) { return bank_from_json(read_json(path)); }

FlowProblem load_graph_csv(const std::filesystem::path& path, std::optional<Index> source,
                           std::optional<Index> target) {
  const CsvTable t = read_csv(path);
  const Index src = t.column("src"), dst = t.column("dst"), cost = t.column("nominal_cost");
  if (src < 0 || dst < 0 || cost < 0) {
    fail(ErrorKind::kParse, where(path, 1) + ": expected header src,dst,nominal_cost");
  }
  std::vector<Edge> edges;
  Index max_id = 0;
  for (Index i = 0; i < t.rows.rows(); ++i) {
    const double a = t.rows(i, src), b = t.rows(i, dst);
    if (a < 0 || b < 0 || a != std::floor(a) || b != std::floor(b)) {
      fail(ErrorKind::kParse, where(path, static_cast<std::size_t>(i + 2)) +
                                  ": vertex ids must be nonnegative integers");
    }
    edges.push_back({static_cast<Index>(a), static_cast<Index>(b), t.rows(i, cost)});
    max_id = std::max({max_id, edges.back().src, edges.back().dst});
  }
  try {
    return FlowProblem(max_id + 1, std::move(edges), source.value_or(0), target.value_or(max_id));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInvalidArgument) {
      fail(ErrorKind::kValidation, path.string() + ": " + e.what());
    }
    throw;
  }
}

void save_graph_csv(const std::filesystem::path& path, const FlowProblem& problem) {
  Mat rows(problem.edge_count(), 3);
  for (Index e = 0; e < problem.edge_count(); ++e) {
    const Edge& edge = problem.edges()[static_cast<std::size_t>(e)];
    rows.row(e) << static_cast<double>(edge.src), static_cast<double>(edge.dst),
        edge.nominal_cost;
  }
  write_csv(path, {"src", "dst", "nominal_cost"}, rows);
}

Json solution_to_json(const RobustSolution& solution) {
  return {{"flow", vec_to_json(solution.flow)},
          {"robust_value", number_or_null(solution.robust_value)},
          {"gap", number_or_null(solution.gap)},
          {"iters", solution.iterations},
          {"status", to_string(solution.status)}};
}

}  // namespace csa
