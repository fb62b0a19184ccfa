#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "schemalink/ground_truth.hpp"
#include "schemalink/scorers.hpp"

namespace schemalink {

enum class MetricLevel { Table, Column };

std::string_view to_string(MetricLevel level);
MetricLevel metric_level_from_string(std::string_view name);

struct MetricsConfig {
    double beta = 6.0;
    std::vector<double> thresholds = {0.0, -1.0, -2.0, -3.0, -4.0, -5.0, -6.0};
    MetricLevel level = MetricLevel::Column;

    /// beta > 0, thresholds non-empty and strictly decreasing.
    void validate() const;
};

struct PrfResult {
    double precision = 0.0;
    double recall = 0.0;
    double f_beta = 0.0;
};

double f_beta_score(double precision, double recall, double beta);

/// Micro-averaged precision/recall/F over pooled counts. A column is
/// predicted iff its relevance logit clears the threshold; at table level a
/// table is predicted iff any of its columns clears it and true iff the
/// link touches it. Predictions and ground truth must cover identical
/// question_id sets.
PrfResult prf(const std::vector<PredictionRecord>& predictions,
              const std::vector<SchemaLink>& ground_truth, double threshold, MetricLevel level,
              double beta);

/// Macro variant for sensitivity checks: per-instance precision/recall/F
/// averaged with equal instance weight. prf itself is always micro.
PrfResult prf_macro(const std::vector<PredictionRecord>& predictions,
                    const std::vector<SchemaLink>& ground_truth, double threshold,
                    MetricLevel level, double beta);

struct ScoredLabel {
    double score = 0.0;
    bool label = false;
};

/// Pools every (score, label) pair at the requested level across instances.
std::vector<ScoredLabel> pooled_scores(const std::vector<PredictionRecord>& predictions,
                                       const std::vector<SchemaLink>& ground_truth,
                                       MetricLevel level);

/// Mann-Whitney formulation with ties credited 0.5. Requires at least one
/// positive and one negative.
double roc_auc(const std::vector<ScoredLabel>& scores);

struct PrAucResult {
    double value = 0.0;       // stable tie order: input order within equal scores
    double worst_case = 0.0;  // negatives first within tie groups
    double best_case = 0.0;   // positives first within tie groups
};

/// Average precision (step-wise, no interpolation). Requires a positive.
PrAucResult pr_auc(const std::vector<ScoredLabel>& scores);

/// Spearman rank correlation with average ranks for ties. Throws on
/// constant input or length < 2.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct ThresholdRow {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_beta = 0.0;
};

struct MetricsReport {
    MetricLevel level = MetricLevel::Column;
    double beta = 6.0;
    std::vector<ThresholdRow> rows;
    double roc_auc_value = 0.0;
    PrAucResult pr_auc_value;
    double best_threshold = 0.0;  // F_beta maximizer; ties resolve to the lowest threshold
    double best_f_beta = 0.0;
    std::vector<std::pair<std::string, double>> per_instance_f;  // at best_threshold

    std::string to_json() const;
    std::string to_text() const;
    std::string to_csv() const;  // threshold,precision,recall,f_beta
};

MetricsReport sweep(const std::vector<PredictionRecord>& predictions,
                    const std::vector<SchemaLink>& ground_truth, const MetricsConfig& config);

/// Per-instance F_beta at one threshold, ordered as ground_truth.
std::vector<std::pair<std::string, double>> per_instance_f(
    const std::vector<PredictionRecord>& predictions,
    const std::vector<SchemaLink>& ground_truth, double threshold, MetricLevel level, double beta);

/// F-score predicate: f is in the bucket iff lo <= f < hi.
struct FScoreBucket {
    std::string label;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
};

/// The cumulative buckets used throughout: <80%, >=80%, >=90%.
std::vector<FScoreBucket> default_buckets();

struct BucketResult {
    std::string label;
    std::size_t count = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;  // 0 when the bucket is empty
};

/// Outcome accuracy within each f-score bucket. Outcomes are externally
/// supplied per-question flags; ids must align with per_instance_f.
std::vector<BucketResult> bucket_analysis(
    const std::vector<std::pair<std::string, double>>& per_instance_f,
    const std::vector<std::pair<std::string, bool>>& outcomes,
    const std::vector<FScoreBucket>& buckets);

struct ImperfectRecallReport {
    std::size_t count = 0;     // instances with column recall < 1 at the threshold
    double fraction = 0.0;     // of the whole corpus
    double accuracy = 0.0;     // outcome accuracy on that subset
};

ImperfectRecallReport imperfect_recall_report(
    const std::vector<PredictionRecord>& predictions,
    const std::vector<SchemaLink>& ground_truth,
    const std::vector<std::pair<std::string, bool>>& outcomes, double threshold);

}  // namespace schemalink
