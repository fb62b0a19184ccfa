#include "schemalink/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "schemalink/errors.hpp"

namespace schemalink {

using nlohmann::json;

std::string_view to_string(MetricLevel level) {
    return level == MetricLevel::Table ? "table" : "column";
}

MetricLevel metric_level_from_string(std::string_view name) {
    if (name == "table") return MetricLevel::Table;
    if (name == "column") return MetricLevel::Column;
    throw ValidationError("unknown metric level '" + std::string(name) + "'");
}

void MetricsConfig::validate() const {
    if (beta <= 0.0) throw ValidationError("beta must be positive");
    if (thresholds.empty()) throw ValidationError("threshold list is empty");
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (thresholds[i] >= thresholds[i - 1]) {
            throw ValidationError("thresholds must be strictly decreasing");
        }
    }
}

double f_beta_score(double precision, double recall, double beta) {
    double b2 = beta * beta;
    double denominator = b2 * precision + recall;
    if (denominator == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / denominator;
}

namespace {

struct InstancePair {
    const PredictionRecord* record;
    const SchemaLink* link;
};

/// Aligns predictions with ground truth by question_id; both sides must
/// cover exactly the same instances. Order follows ground_truth.
std::vector<InstancePair> align(const std::vector<PredictionRecord>& predictions,
                                const std::vector<SchemaLink>& ground_truth) {
    std::map<std::string, const PredictionRecord*> by_id;
    for (const PredictionRecord& record : predictions) {
        if (!by_id.emplace(record.question_id, &record).second) {
            throw ValidationError("duplicate prediction record for question '" +
                                  record.question_id + "'");
        }
    }
    std::vector<InstancePair> pairs;
    pairs.reserve(ground_truth.size());
    for (const SchemaLink& link : ground_truth) {
        auto it = by_id.find(link.question_id);
        if (it == by_id.end()) {
            throw ValidationError("no prediction for question '" + link.question_id + "'");
        }
        pairs.push_back({it->second, &link});
        by_id.erase(it);
    }
    if (!by_id.empty()) {
        throw ValidationError("prediction for question '" + by_id.begin()->first +
                              "' has no ground truth");
    }
    return pairs;
}

struct Counts {
    std::size_t true_positive = 0;
    std::size_t predicted = 0;
    std::size_t actual = 0;
};

Counts count_instance(const InstancePair& pair, double threshold, MetricLevel level) {
    Counts counts;
    if (level == MetricLevel::Column) {
        for (const auto& [qc, scores] : pair.record->scores) {
            if (scores.relevant >= threshold) {
                ++counts.predicted;
                if (pair.link->contains(qc)) ++counts.true_positive;
            }
        }
        counts.actual = pair.link->entries.size();
    } else {
        std::set<std::string> predicted_tables;
        for (const auto& [qc, scores] : pair.record->scores) {
            if (scores.relevant >= threshold) predicted_tables.insert(qc.table);
        }
        std::set<std::string> actual_tables;
        for (const auto& [qc, entry] : pair.link->entries) actual_tables.insert(qc.table);
        counts.predicted = predicted_tables.size();
        counts.actual = actual_tables.size();
        for (const std::string& t : predicted_tables) {
            counts.true_positive += actual_tables.count(t);
        }
    }
    return counts;
}

PrfResult prf_from_counts(const Counts& counts, double beta) {
    PrfResult result;
    result.precision = counts.predicted == 0
                           ? 0.0
                           : static_cast<double>(counts.true_positive) /
                                 static_cast<double>(counts.predicted);
    result.recall = counts.actual == 0 ? 0.0
                                       : static_cast<double>(counts.true_positive) /
                                             static_cast<double>(counts.actual);
    result.f_beta = f_beta_score(result.precision, result.recall, beta);
    return result;
}

}  // namespace

PrfResult prf(const std::vector<PredictionRecord>& predictions,
              const std::vector<SchemaLink>& ground_truth, double threshold, MetricLevel level,
              double beta) {
    Counts pooled;
    for (const InstancePair& pair : align(predictions, ground_truth)) {
        Counts counts = count_instance(pair, threshold, level);
        pooled.true_positive += counts.true_positive;
        pooled.predicted += counts.predicted;
        pooled.actual += counts.actual;
    }
    return prf_from_counts(pooled, beta);
}

PrfResult prf_macro(const std::vector<PredictionRecord>& predictions,
                    const std::vector<SchemaLink>& ground_truth, double threshold,
                    MetricLevel level, double beta) {
    std::vector<InstancePair> pairs = align(predictions, ground_truth);
    if (pairs.empty()) throw ValidationError("prf_macro: no instances");
    PrfResult mean;
    for (const InstancePair& pair : pairs) {
        PrfResult r = prf_from_counts(count_instance(pair, threshold, level), beta);
        mean.precision += r.precision;
        mean.recall += r.recall;
        mean.f_beta += r.f_beta;
    }
    double n = static_cast<double>(pairs.size());
    mean.precision /= n;
    mean.recall /= n;
    mean.f_beta /= n;
    return mean;
}

std::vector<ScoredLabel> pooled_scores(const std::vector<PredictionRecord>& predictions,
                                       const std::vector<SchemaLink>& ground_truth,
                                       MetricLevel level) {
    std::vector<ScoredLabel> pooled;
    for (const InstancePair& pair : align(predictions, ground_truth)) {
        if (level == MetricLevel::Column) {
            for (const auto& [qc, scores] : pair.record->scores) {
                pooled.push_back({scores.relevant, pair.link->contains(qc)});
            }
        } else {
            std::map<std::string, double> table_scores;
            for (const auto& [qc, scores] : pair.record->scores) {
                auto [it, inserted] = table_scores.try_emplace(qc.table, scores.relevant);
                if (!inserted) it->second = std::max(it->second, scores.relevant);
            }
            for (const auto& [table, score] : table_scores) {
                pooled.push_back({score, pair.link->touches_table(table)});
            }
        }
    }
    return pooled;
}

double roc_auc(const std::vector<ScoredLabel>& scores) {
    std::size_t positives = 0;
    for (const ScoredLabel& s : scores) positives += s.label ? 1 : 0;
    std::size_t negatives = scores.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw ValidationError(positives == 0 ? "roc_auc: no positive labels"
                                             : "roc_auc: no negative labels");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });

    // Average ranks over tie groups, then the Mann-Whitney statistic.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]].score == scores[order[i]].score) ++j;
        double average_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (scores[order[k]].label) positive_rank_sum += average_rank;
        }
        i = j;
    }
    double p = static_cast<double>(positives);
    double n = static_cast<double>(negatives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

namespace {

/// Average precision over an explicit ranking (descending relevance).
/// One division at the end keeps perfect rankings at exactly 1.0.
double average_precision(const std::vector<const ScoredLabel*>& ranked, std::size_t positives) {
    double precision_sum = 0.0;
    std::size_t seen_positives = 0;
    for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
        if (!ranked[rank]->label) continue;
        ++seen_positives;
        precision_sum += static_cast<double>(seen_positives) / static_cast<double>(rank + 1);
    }
    return precision_sum / static_cast<double>(positives);
}

}  // namespace

PrAucResult pr_auc(const std::vector<ScoredLabel>& scores) {
    std::size_t positives = 0;
    for (const ScoredLabel& s : scores) positives += s.label ? 1 : 0;
    if (positives == 0) throw ValidationError("pr_auc: no positive labels");

    std::vector<const ScoredLabel*> ranked(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = &scores[i];

    auto by_score_desc = [](const ScoredLabel* a, const ScoredLabel* b) {
        return a->score > b->score;
    };
    PrAucResult result;

    std::stable_sort(ranked.begin(), ranked.end(), by_score_desc);
    result.value = average_precision(ranked, positives);

    std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredLabel* a, const ScoredLabel* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->label < b->label;  // negatives first
    });
    result.worst_case = average_precision(ranked, positives);

    std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredLabel* a, const ScoredLabel* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->label > b->label;  // positives first
    });
    result.best_case = average_precision(ranked, positives);
    return result;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        double average = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = average;
        i = j;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
    if (x.size() < 2) throw ValidationError("spearman: need at least two observations");
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double value) { return value == v.front(); });
    };
    if (constant(x) || constant(y)) {
        throw ValidationError("spearman: correlation undefined for a constant vector");
    }

    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);
    double n = static_cast<double>(x.size());
    double mean_x = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double mean_y = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double covariance = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mean_x;
        double dy = ry[i] - mean_y;
        covariance += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    return covariance / std::sqrt(var_x * var_y);
}

std::vector<std::pair<std::string, double>> per_instance_f(
    const std::vector<PredictionRecord>& predictions,
    const std::vector<SchemaLink>& ground_truth, double threshold, MetricLevel level,
    double beta) {
    std::vector<std::pair<std::string, double>> out;
    for (const InstancePair& pair : align(predictions, ground_truth)) {
        Counts counts = count_instance(pair, threshold, level);
        out.emplace_back(pair.link->question_id, prf_from_counts(counts, beta).f_beta);
    }
    return out;
}

MetricsReport sweep(const std::vector<PredictionRecord>& predictions,
                    const std::vector<SchemaLink>& ground_truth, const MetricsConfig& config) {
    config.validate();
    MetricsReport report;
    report.level = config.level;
    report.beta = config.beta;

    for (double threshold : config.thresholds) {
        PrfResult r = prf(predictions, ground_truth, threshold, config.level, config.beta);
        report.rows.push_back({threshold, r.precision, r.recall, r.f_beta});
    }
    // Ties resolve toward the lowest threshold: recall is the cheaper miss.
    report.best_threshold = report.rows.front().threshold;
    report.best_f_beta = report.rows.front().f_beta;
    for (const ThresholdRow& row : report.rows) {
        if (row.f_beta >= report.best_f_beta) {
            report.best_f_beta = row.f_beta;
            report.best_threshold = row.threshold;
        }
    }

    std::vector<ScoredLabel> pooled = pooled_scores(predictions, ground_truth, config.level);
    report.roc_auc_value = roc_auc(pooled);
    report.pr_auc_value = pr_auc(pooled);
    report.per_instance_f = per_instance_f(predictions, ground_truth, report.best_threshold,
                                           config.level, config.beta);
    return report;
}

std::vector<FScoreBucket> default_buckets() {
    return {{"<80%", 0.0, 0.8},
            {">=80%", 0.8, std::numeric_limits<double>::infinity()},
            {">=90%", 0.9, std::numeric_limits<double>::infinity()}};
}

std::vector<BucketResult> bucket_analysis(
    const std::vector<std::pair<std::string, double>>& per_instance_f,
    const std::vector<std::pair<std::string, bool>>& outcomes,
    const std::vector<FScoreBucket>& buckets) {
    std::map<std::string, bool> outcome_by_id(outcomes.begin(), outcomes.end());
    if (outcome_by_id.size() != outcomes.size()) {
        throw ValidationError("bucket_analysis: duplicate outcome ids");
    }
    for (const auto& [qid, f] : per_instance_f) {
        if (outcome_by_id.count(qid) == 0) {
            throw ValidationError("bucket_analysis: no outcome for question '" + qid + "'");
        }
    }
    if (outcome_by_id.size() != per_instance_f.size()) {
        throw ValidationError("bucket_analysis: outcomes do not align with f-scores");
    }

    std::vector<BucketResult> results;
    for (const FScoreBucket& bucket : buckets) {
        BucketResult result;
        result.label = bucket.label;
        for (const auto& [qid, f] : per_instance_f) {
            if (f < bucket.lo || f >= bucket.hi) continue;
            ++result.count;
            if (outcome_by_id.at(qid)) ++result.correct;
        }
        result.accuracy = result.count == 0 ? 0.0
                                            : static_cast<double>(result.correct) /
                                                  static_cast<double>(result.count);
        results.push_back(std::move(result));
    }
    return results;
}

ImperfectRecallReport imperfect_recall_report(
    const std::vector<PredictionRecord>& predictions,
    const std::vector<SchemaLink>& ground_truth,
    const std::vector<std::pair<std::string, bool>>& outcomes, double threshold) {
    std::map<std::string, bool> outcome_by_id(outcomes.begin(), outcomes.end());
    ImperfectRecallReport report;
    std::size_t total = 0;
    std::size_t correct = 0;
    for (const InstancePair& pair : align(predictions, ground_truth)) {
        ++total;
        Counts counts = count_instance(pair, threshold, MetricLevel::Column);
        bool full_recall = counts.true_positive == counts.actual;
        if (full_recall) continue;
        auto it = outcome_by_id.find(pair.link->question_id);
        if (it == outcome_by_id.end()) {
            throw ValidationError("imperfect_recall_report: no outcome for question '" +
                                  pair.link->question_id + "'");
        }
        ++report.count;
        if (it->second) ++correct;
    }
    report.fraction = total == 0 ? 0.0
                                 : static_cast<double>(report.count) / static_cast<double>(total);
    report.accuracy = report.count == 0
                          ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(report.count);
    return report;
}

// --- report serialization ---------------------------------------------------

namespace {

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

}  // namespace

std::string MetricsReport::to_json() const {
    json rows_json = json::array();
    for (const ThresholdRow& row : rows) {
        rows_json.push_back({{"threshold", row.threshold},
                             {"precision", row.precision},
                             {"recall", row.recall},
                             {"f_beta", row.f_beta}});
    }
    json per_instance = json::array();
    for (const auto& [qid, f] : per_instance_f) {
        per_instance.push_back({{"question_id", qid}, {"f", f}});
    }
    json doc = {{"level", std::string(to_string(level))},
                {"beta", beta},
                {"thresholds", rows_json},
                {"roc_auc", roc_auc_value},
                {"pr_auc",
                 {{"value", pr_auc_value.value},
                  {"worst_case", pr_auc_value.worst_case},
                  {"best_case", pr_auc_value.best_case}}},
                {"best_threshold", best_threshold},
                {"best_f_beta", best_f_beta},
                {"per_instance_f", per_instance}};
    return doc.dump(2) + "\n";
}

std::string MetricsReport::to_text() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-12s %-12s %-12s\n", "threshold", "precision",
                  "recall", ("F" + format_double(beta)).c_str());
    out += line;
    for (const ThresholdRow& row : rows) {
        std::snprintf(line, sizeof(line), "%-12.4g %-12.6f %-12.6f %-12.6f\n", row.threshold,
                      row.precision, row.recall, row.f_beta);
        out += line;
    }
    std::snprintf(line, sizeof(line), "ROC AUC: %.6f\n", roc_auc_value);
    out += line;
    std::snprintf(line, sizeof(line), "PR AUC: %.6f [worst %.6f, best %.6f]\n", pr_auc_value.value,
                  pr_auc_value.worst_case, pr_auc_value.best_case);
    out += line;
    std::snprintf(line, sizeof(line), "best threshold by F%s: %.4g (F = %.6f)\n",
                  format_double(beta).c_str(), best_threshold, best_f_beta);
    out += line;
    return out;
}

std::string MetricsReport::to_csv() const {
    std::string out = "threshold,precision,recall,f_beta\n";
    for (const ThresholdRow& row : rows) {
        out += format_double(row.threshold) + "," + format_double(row.precision) + "," +
               format_double(row.recall) + "," + format_double(row.f_beta) + "\n";
    }
    return out;
}

}  // namespace schemalink
