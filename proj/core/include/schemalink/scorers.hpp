#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schemalink/ground_truth.hpp"
#include "schemalink/schema.hpp"

namespace schemalink {

/// One unit of prediction: a question paired with one schema chunk.
struct LinkingInstance {
    std::string question_id;
    std::string db_id;
    std::string question;
    PromptChunk chunk;
    std::optional<SchemaLink> labels;  // restricted to the chunk's candidates

    /// Throws ValidationError when labels reference columns outside the chunk.
    void validate() const;
};

/// Restricts a full-schema link to the columns a chunk carries.
SchemaLink restrict_link(const SchemaLink& link, const PromptChunk& chunk);

struct ColumnScores {
    double relevant = 0.0;
    std::optional<std::array<double, kRoleCount>> roles;  // canonical role order

    bool operator==(const ColumnScores&) const = default;
};

struct PredictionRecord {
    std::string question_id;
    std::string db_id;
    std::map<QualifiedColumn, ColumnScores> scores;

    bool operator==(const PredictionRecord&) const = default;
};

enum class Granularity { Coarse, Fine };

/// Oracle logit magnitude: saturated far outside the studied threshold
/// range so thresholds in (-10, 10) never interact with oracle noise.
inline constexpr double kOracleLogit = 10.0;

/// Perfect-linker reference with controlled corruption: labeled columns
/// score +10, others -10, then positives drop with probability fn_rate and
/// negatives rise with probability fp_rate. Flips are drawn from a
/// deterministic substream of (seed, question_id, column).
PredictionRecord oracle_score(const LinkingInstance& instance, double fp_rate, double fn_rate,
                              std::uint64_t seed, Granularity granularity = Granularity::Fine);

/// Name-overlap baseline: per column, a weighted overlap between question
/// word n-grams (n <= 3, case-folded, plural-folded) and the underscore-split
/// column and table names, mapped to a logit in [-10, 10] by log-odds.
PredictionRecord lexical_score(const LinkingInstance& instance);

/// Exposed for tests: the normalized overlap in [0, 1] before the log-odds map.
double lexical_overlap(const std::string& question, const QualifiedColumn& column);
double overlap_to_logit(double overlap);

/// Merges chunk records of one question into a full-schema record.
/// Throws ValidationError on question/db mismatch or duplicate columns.
PredictionRecord merge_records(const std::vector<PredictionRecord>& parts);

/// Groups records by question_id (preserving first-seen order) and merges
/// each group.
std::vector<PredictionRecord> merge_by_question(std::vector<PredictionRecord> records);

// Prediction file: one JSON object per line, {"question_id", "db_id",
// "scores": {"table.column": {"relevant": x, "selected": x, ...}}}; role
// keys optional, "relevant" required.

std::string prediction_to_json_line(const PredictionRecord& record);
PredictionRecord prediction_from_json_line(std::string_view line);

void write_prediction_file(const std::string& path, const std::vector<PredictionRecord>& records);

/// Loads and checks a prediction file: duplicate (question_id, column) pairs
/// are an error; chunked records for one question are merged.
std::vector<PredictionRecord> load_predictions(const std::string& path);

/// Additionally validates every scored column against the catalog schema
/// for its db_id. Throws ValidationError listing offenders.
std::vector<PredictionRecord> load_predictions(const std::string& path,
                                               const std::vector<DatabaseSchema>& catalog);

void validate_predictions(const std::vector<PredictionRecord>& records,
                          const std::vector<DatabaseSchema>& catalog);

}  // namespace schemalink
