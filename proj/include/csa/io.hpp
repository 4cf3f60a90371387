#pragma once

#include "csa/calibration.hpp"
#include "csa/flow.hpp"
#include "csa/robust.hpp"
#include "csa/scores.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace csa {

using Json = nlohmann::json;

inline constexpr int kEnvelopeSchemaVersion = 1;

/// Numeric CSV with a header row. Parse errors carry the 1-based line number.
struct CsvTable {
  std::vector<std::string> header;
  Mat rows;

  Index column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Mat& rows);

/// Score file: header s_1,...,s_K with an optional trailing y column.
struct ScoreTable {
  ScoreMatrix scores;
  std::optional<std::vector<Index>> labels;
};

ScoreTable load_scores_csv(const std::filesystem::path& path);
void save_scores_csv(const std::filesystem::path& path, const ScoreMatrix& scores,
                     const std::optional<std::vector<Index>>& labels = std::nullopt);

/// +inf is written as null.
Json envelope_to_json(const QuantileEnvelope& envelope);
QuantileEnvelope envelope_from_json(const Json& j);
void save_envelope(const std::filesystem::path& path, const QuantileEnvelope& envelope);
QuantileEnvelope load_envelope(const std::filesystem::path& path);

/// {"predictors": [{"J": J_k, "samples": [[edge costs...], ...]}, ...]}
Json bank_to_json(const SampleBank& bank);
SampleBank bank_from_json(const Json& j);
void save_bank(const std::filesystem::path& path, const SampleBank& bank);
SampleBank load_bank(const std::filesystem::path& path);

/// Edge list src,dst,nominal_cost. Source defaults to 0 and target to the largest vertex id.
FlowProblem load_graph_csv(const std::filesystem::path& path,
                           std::optional<Index> source = std::nullopt,
                           std::optional<Index> target = std::nullopt);
void save_graph_csv(const std::filesystem::path& path, const FlowProblem& problem);

/// {"flow": [...], "robust_value": v, "gap": g, "iters": n}
Json solution_to_json(const RobustSolution& solution);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

Json number_or_null(double x);
double number_from_json(const Json& j);  // null reads back as +inf

}  // namespace csa
