#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schemalink/ground_truth.hpp"
#include "schemalink/schema.hpp"
#include "schemalink/scorers.hpp"

namespace schemalink {

struct FocusPolicy {
    double relevance_threshold = -3.0;
    double role_threshold = -3.0;
    bool include_sample_rows = false;
    int rows_per_table = 3;
    /// When set, the line placed before and after the role block.
    std::optional<std::string> role_block_fence;
};

/// Thresholded sub-schema plus the per-role column lists of the prompt.
struct FocusedSchema {
    DatabaseSchema retained;  // tables restricted to retained columns and keys
    bool has_role_block = false;
    std::array<std::vector<QualifiedColumn>, kRoleCount> role_block;  // descending role logit
    std::string question;
    bool empty_retained = false;  // warning flag: nothing cleared the threshold
    std::optional<std::string> role_block_fence;
    /// Per retained table: rows of rendered values, one per retained column.
    std::map<std::string, std::vector<std::vector<std::string>>> sample_rows;
};

/// Retains columns whose relevance logit clears policy.relevance_threshold.
/// A table survives iff it retains a column; key annotations survive only if
/// their endpoints are retained. Role lists keep retained columns whose role
/// logit clears policy.role_threshold, sorted by descending logit (ties by
/// qualified name). The record must cover every schema column.
FocusedSchema apply_threshold(const PredictionRecord& record, const DatabaseSchema& schema,
                              const FocusPolicy& policy, std::string question = "");

/// DDL of the retained sub-schema, the five fixed-order role lines
/// (`None` when empty, omitted entirely for coarse records), then the
/// question. Sample rows render as `-- ` comment lines after each block.
std::string render_focused_prompt(const FocusedSchema& fs);

/// Adds noise columns for SQL-generation training: draws
/// floor(noise_rate * |D| + 0.5) columns uniformly without replacement from
/// D = schema columns minus link columns, seeded by (seed, question_id).
/// Added entries carry empty role sets and the noise flag.
SchemaLink inject_noise(const SchemaLink& link, const DatabaseSchema& schema, double noise_rate,
                        std::uint64_t seed);

/// Attaches caller-supplied sample rows; each row must match the retained
/// column count of its table. Throws ValidationError on arity mismatch or
/// unknown table.
FocusedSchema attach_sample_rows(
    FocusedSchema fs,
    const std::map<std::string, std::vector<std::vector<std::string>>>& rows);

/// Reads a {table: [[values...]]} JSON file, rendering scalars to strings.
std::map<std::string, std::vector<std::vector<std::string>>> load_sample_rows(
    const std::string& path);

/// A fine-grained record equivalent to a ground-truth link: +10 relevance
/// for linked columns (fallback and noise entries included), -10 otherwise;
/// role logits +10 exactly for the roles the link records.
PredictionRecord record_from_link(const SchemaLink& link, const DatabaseSchema& schema);

}  // namespace schemalink
