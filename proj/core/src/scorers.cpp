#include "schemalink/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schemalink/errors.hpp"
#include "schemalink/rng.hpp"
#include "schemalink/text.hpp"

namespace schemalink {

using nlohmann::json;

void LinkingInstance::validate() const {
    if (!labels.has_value()) return;
    std::set<QualifiedColumn> candidate_set(chunk.candidates.begin(), chunk.candidates.end());
    for (const auto& [qc, entry] : labels->entries) {
        if (candidate_set.count(qc) == 0) {
            throw ValidationError("instance '" + question_id + "': label column '" +
                                  qc.to_string() + "' is not a candidate of the chunk");
        }
    }
}

SchemaLink restrict_link(const SchemaLink& link, const PromptChunk& chunk) {
    SchemaLink restricted;
    restricted.question_id = link.question_id;
    restricted.db_id = link.db_id;
    std::set<QualifiedColumn> candidate_set(chunk.candidates.begin(), chunk.candidates.end());
    for (const auto& [qc, entry] : link.entries) {
        if (candidate_set.count(qc) > 0) restricted.entries.emplace(qc, entry);
    }
    return restricted;
}

PredictionRecord oracle_score(const LinkingInstance& instance, double fp_rate, double fn_rate,
                              std::uint64_t seed, Granularity granularity) {
    if (!instance.labels.has_value()) {
        throw ValidationError("oracle_score: instance '" + instance.question_id +
                              "' carries no labels");
    }
    instance.validate();

    PredictionRecord record;
    record.question_id = instance.question_id;
    record.db_id = instance.db_id;
    for (const QualifiedColumn& qc : instance.chunk.candidates) {
        auto labeled = instance.labels->entries.find(qc);
        bool positive = labeled != instance.labels->entries.end();

        double draw = substream(seed, instance.question_id, qc.to_string()).next_double();
        bool flipped = positive ? draw < fn_rate : draw < fp_rate;
        bool outcome = flipped ? !positive : positive;

        ColumnScores scores;
        scores.relevant = outcome ? kOracleLogit : -kOracleLogit;
        if (granularity == Granularity::Fine) {
            std::array<double, kRoleCount> roles;
            roles.fill(-kOracleLogit);
            if (outcome && positive) {
                for (Role r : labeled->second.roles.to_vector()) {
                    roles[static_cast<std::size_t>(r)] = kOracleLogit;
                }
            }
            scores.roles = roles;
        }
        record.scores.emplace(qc, scores);
    }
    return record;
}

namespace {

/// Case-folds and strips a plural 's' from words longer than three letters,
/// so "titles" matches "title" and "books" matches "book".
std::string fold_word(std::string word) {
    if (word.size() > 3 && word.back() == 's') word.pop_back();
    return word;
}

std::vector<std::string> folded_words(std::string_view text) {
    std::vector<std::string> words = split_words(text);
    for (std::string& w : words) w = fold_word(std::move(w));
    return words;
}

}  // namespace

double lexical_overlap(const std::string& question, const QualifiedColumn& column) {
    std::vector<std::string> question_words = folded_words(question);
    std::set<std::string> unigrams(question_words.begin(), question_words.end());
    std::set<std::string> ngrams(question_words.begin(), question_words.end());
    for (std::size_t n = 2; n <= 3; ++n) {
        for (std::size_t i = 0; i + n <= question_words.size(); ++i) {
            std::string gram = question_words[i];
            for (std::size_t j = 1; j < n; ++j) gram += " " + question_words[i + j];
            ngrams.insert(std::move(gram));
        }
    }

    auto matched_fraction = [&](const std::vector<std::string>& words) {
        if (words.empty()) return 0.0;
        std::size_t hits = 0;
        for (const std::string& w : words) hits += unigrams.count(w);
        return static_cast<double>(hits) / static_cast<double>(words.size());
    };

    std::vector<std::string> column_words = folded_words(column.column);
    std::vector<std::string> table_words = folded_words(column.table);

    double phrase_hit = 0.0;
    if (!column_words.empty() && column_words.size() <= 3) {
        std::string phrase = column_words[0];
        for (std::size_t i = 1; i < column_words.size(); ++i) phrase += " " + column_words[i];
        phrase_hit = ngrams.count(phrase) > 0 ? 1.0 : 0.0;
    }

    return 0.6 * matched_fraction(column_words) + 0.2 * matched_fraction(table_words) +
           0.2 * phrase_hit;
}

double overlap_to_logit(double overlap) {
    if (overlap <= 0.0) return -kOracleLogit;
    if (overlap >= 1.0) return kOracleLogit;
    double logit = std::log(overlap / (1.0 - overlap));
    return std::clamp(logit, -kOracleLogit, kOracleLogit);
}

PredictionRecord lexical_score(const LinkingInstance& instance) {
    PredictionRecord record;
    record.question_id = instance.question_id;
    record.db_id = instance.db_id;
    for (const QualifiedColumn& qc : instance.chunk.candidates) {
        ColumnScores scores;
        scores.relevant = overlap_to_logit(lexical_overlap(instance.question, qc));
        record.scores.emplace(qc, scores);
    }
    return record;
}

PredictionRecord merge_records(const std::vector<PredictionRecord>& parts) {
    if (parts.empty()) throw ValidationError("merge_records: nothing to merge");
    PredictionRecord merged;
    merged.question_id = parts.front().question_id;
    merged.db_id = parts.front().db_id;
    for (const PredictionRecord& part : parts) {
        if (part.question_id != merged.question_id || part.db_id != merged.db_id) {
            throw ValidationError("merge_records: mixed questions ('" + merged.question_id +
                                  "' vs '" + part.question_id + "')");
        }
        for (const auto& [qc, scores] : part.scores) {
            if (!merged.scores.emplace(qc, scores).second) {
                throw ValidationError("duplicate prediction for question '" + merged.question_id +
                                      "', column '" + qc.to_string() + "'");
            }
        }
    }
    return merged;
}

std::vector<PredictionRecord> merge_by_question(std::vector<PredictionRecord> records) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<PredictionRecord>> groups;
    for (PredictionRecord& record : records) {
        auto [it, inserted] = groups.try_emplace(record.question_id);
        if (inserted) order.push_back(record.question_id);
        it->second.push_back(std::move(record));
    }
    std::vector<PredictionRecord> merged;
    merged.reserve(order.size());
    for (const std::string& qid : order) merged.push_back(merge_records(groups.at(qid)));
    return merged;
}

std::string prediction_to_json_line(const PredictionRecord& record) {
    json scores = json::object();
    for (const auto& [qc, cs] : record.scores) {
        json entry = {{"relevant", cs.relevant}};
        if (cs.roles.has_value()) {
            for (Role r : kAllRoles) {
                entry[std::string(to_string(r))] = (*cs.roles)[static_cast<std::size_t>(r)];
            }
        }
        scores[qc.to_string()] = std::move(entry);
    }
    json doc = {{"question_id", record.question_id},
                {"db_id", record.db_id},
                {"scores", scores}};
    return doc.dump();
}

PredictionRecord prediction_from_json_line(std::string_view line) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("prediction line: ") + err.what(), err.byte);
    }
    PredictionRecord record;
    record.question_id = doc.at("question_id").get<std::string>();
    record.db_id = doc.at("db_id").get<std::string>();
    for (const auto& [key, value] : doc.at("scores").items()) {
        QualifiedColumn qc = qualified_column_from_string(key);
        ColumnScores scores;
        if (!value.contains("relevant")) {
            throw ValidationError("prediction for '" + key + "' lacks the required 'relevant' key");
        }
        scores.relevant = value.at("relevant").get<double>();
        bool any_role = false;
        std::array<double, kRoleCount> roles;
        roles.fill(-kOracleLogit);
        for (Role r : kAllRoles) {
            auto it = value.find(std::string(to_string(r)));
            if (it != value.end()) {
                roles[static_cast<std::size_t>(r)] = it->get<double>();
                any_role = true;
            }
        }
        if (any_role) scores.roles = roles;
        if (!record.scores.emplace(qc, scores).second) {
            throw ValidationError("duplicate column '" + key + "' in prediction for question '" +
                                  record.question_id + "'");
        }
    }
    return record;
}

void write_prediction_file(const std::string& path,
                           const std::vector<PredictionRecord>& records) {
    std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write prediction file '" + path + "'");
        for (const PredictionRecord& record : records) {
            out << prediction_to_json_line(record) << "\n";
        }
    }
    std::rename(temp.c_str(), path.c_str());
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open prediction file '" + path + "'");
    std::vector<PredictionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            records.push_back(prediction_from_json_line(line));
        } catch (const std::exception& err) {
            throw ValidationError("prediction file '" + path + "' line " +
                                  std::to_string(line_no) + ": " + err.what());
        }
    }
    return merge_by_question(std::move(records));
}

std::vector<PredictionRecord> load_predictions(const std::string& path,
                                               const std::vector<DatabaseSchema>& catalog) {
    std::vector<PredictionRecord> records = load_predictions(path);
    validate_predictions(records, catalog);
    return records;
}

void validate_predictions(const std::vector<PredictionRecord>& records,
                          const std::vector<DatabaseSchema>& catalog) {
    std::vector<std::string> offenders;
    for (const PredictionRecord& record : records) {
        const DatabaseSchema* schema = nullptr;
        for (const DatabaseSchema& s : catalog) {
            if (s.db_id == record.db_id) {
                schema = &s;
                break;
            }
        }
        if (schema == nullptr) {
            offenders.push_back("question '" + record.question_id + "': unknown db_id '" +
                                record.db_id + "'");
            continue;
        }
        for (const auto& [qc, scores] : record.scores) {
            if (!schema->has_column(qc)) {
                offenders.push_back("question '" + record.question_id + "': column '" +
                                    qc.to_string() + "' not in schema '" + record.db_id + "'");
            }
        }
    }
    if (!offenders.empty()) {
        std::string message = "prediction validation failed:";
        for (const std::string& o : offenders) message += "\n  " + o;
        throw ValidationError(message);
    }
}

}  // namespace schemalink
