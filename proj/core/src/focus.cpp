#include "schemalink/focus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schemalink/errors.hpp"
#include "schemalink/rng.hpp"

namespace schemalink {

using nlohmann::json;

FocusedSchema apply_threshold(const PredictionRecord& record, const DatabaseSchema& schema,
                              const FocusPolicy& policy, std::string question) {
    for (const QualifiedColumn& qc : schema.all_columns()) {
        if (record.scores.count(qc) == 0) {
            throw ValidationError("prediction for question '" + record.question_id +
                                  "' does not cover column '" + qc.to_string() + "'");
        }
    }

    FocusedSchema fs;
    fs.retained.db_id = schema.db_id;
    fs.question = std::move(question);
    fs.role_block_fence = policy.role_block_fence;

    std::set<QualifiedColumn> retained;
    for (const auto& [qc, scores] : record.scores) {
        if (scores.relevant >= policy.relevance_threshold) retained.insert(qc);
        if (scores.roles.has_value()) fs.has_role_block = true;
    }
    fs.empty_retained = retained.empty();

    for (const Table& table : schema.tables) {
        Table kept;
        kept.name = table.name;
        for (const Column& column : table.columns) {
            if (retained.count({table.name, column.name}) > 0) kept.columns.push_back(column);
        }
        if (kept.columns.empty()) continue;
        for (const std::string& pk : table.primary_keys) {
            if (kept.find_column(pk) != nullptr) kept.primary_keys.push_back(pk);
        }
        fs.retained.tables.push_back(std::move(kept));
    }
    // Foreign keys survive only with both endpoints retained.
    for (std::size_t i = 0; i < fs.retained.tables.size(); ++i) {
        Table& kept = fs.retained.tables[i];
        const Table* original = schema.find_table(kept.name);
        for (const ForeignKey& fk : original->foreign_keys) {
            if (kept.find_column(fk.local_column) == nullptr) continue;
            const Table* target = fs.retained.find_table(fk.foreign_table);
            if (target != nullptr && target->find_column(fk.foreign_column) != nullptr) {
                kept.foreign_keys.push_back(fk);
            }
        }
    }

    if (fs.has_role_block) {
        for (Role role : kAllRoles) {
            std::vector<std::pair<double, QualifiedColumn>> scored;
            for (const auto& [qc, scores] : record.scores) {
                if (!scores.roles.has_value() || retained.count(qc) == 0) continue;
                double logit = (*scores.roles)[static_cast<std::size_t>(role)];
                if (logit >= policy.role_threshold) scored.emplace_back(logit, qc);
            }
            std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (auto& [logit, qc] : scored) {
                fs.role_block[static_cast<std::size_t>(role)].push_back(std::move(qc));
            }
        }
    }
    return fs;
}

std::string render_focused_prompt(const FocusedSchema& fs) {
    std::vector<std::string> sections;

    if (!fs.retained.tables.empty()) {
        std::string ddl;
        for (std::size_t i = 0; i < fs.retained.tables.size(); ++i) {
            const Table& table = fs.retained.tables[i];
            if (i > 0) ddl += "\n\n";
            ddl += render_ddl(table);
            auto rows = fs.sample_rows.find(table.name);
            if (rows != fs.sample_rows.end()) {
                for (const std::vector<std::string>& row : rows->second) {
                    ddl += "\n-- ";
                    for (std::size_t v = 0; v < row.size(); ++v) {
                        if (v > 0) ddl += ", ";
                        ddl += row[v];
                    }
                }
            }
        }
        sections.push_back(std::move(ddl));
    }

    if (fs.has_role_block) {
        std::string block;
        if (fs.role_block_fence.has_value()) block += *fs.role_block_fence + "\n";
        for (Role role : kAllRoles) {
            const auto& columns = fs.role_block[static_cast<std::size_t>(role)];
            block += std::string(to_string(role)) + ":";
            if (columns.empty()) {
                block += " None";
            } else {
                for (std::size_t i = 0; i < columns.size(); ++i) {
                    block += i == 0 ? " " : ", ";
                    block += columns[i].to_string();
                }
            }
            if (role != kAllRoles.back()) block += "\n";
        }
        if (fs.role_block_fence.has_value()) block += "\n" + *fs.role_block_fence;
        sections.push_back(std::move(block));
    }

    if (!fs.question.empty()) sections.push_back(fs.question);

    std::string out;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += sections[i];
    }
    return out;
}

SchemaLink inject_noise(const SchemaLink& link, const DatabaseSchema& schema, double noise_rate,
                        std::uint64_t seed) {
    if (noise_rate < 0.0 || noise_rate > 1.0) {
        throw ValidationError("noise_rate must lie in [0, 1]");
    }
    std::vector<QualifiedColumn> pool;
    for (const QualifiedColumn& qc : schema.all_columns()) {
        if (!link.contains(qc)) pool.push_back(qc);
    }
    auto count = static_cast<std::size_t>(
        std::floor(noise_rate * static_cast<double>(pool.size()) + 0.5));

    SchemaLink noisy = link;
    SplitMix64 gen = substream(seed, link.question_id, "noise");
    // Partial Fisher-Yates over the schema-ordered pool.
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + static_cast<std::size_t>(gen.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        LinkEntry entry;
        entry.noise = true;
        noisy.entries.emplace(pool[i], entry);
    }
    return noisy;
}

FocusedSchema attach_sample_rows(
    FocusedSchema fs, const std::map<std::string, std::vector<std::vector<std::string>>>& rows) {
    for (const auto& [table_name, table_rows] : rows) {
        const Table* table = fs.retained.find_table(table_name);
        if (table == nullptr) {
            throw ValidationError("sample rows reference table '" + table_name +
                                  "' which retains no columns");
        }
        for (const std::vector<std::string>& row : table_rows) {
            if (row.size() != table->columns.size()) {
                throw ValidationError(
                    "sample row for table '" + table_name + "' has " +
                    std::to_string(row.size()) + " values, retained column count is " +
                    std::to_string(table->columns.size()));
            }
        }
        fs.sample_rows[table_name] = table_rows;
    }
    return fs;
}

std::map<std::string, std::vector<std::vector<std::string>>> load_sample_rows(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open sample-rows file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buffer.str());
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("sample rows: ") + err.what(), err.byte);
    }
    std::map<std::string, std::vector<std::vector<std::string>>> rows;
    for (const auto& [table, table_rows] : doc.items()) {
        for (const json& row : table_rows) {
            std::vector<std::string> values;
            for (const json& value : row) {
                values.push_back(value.is_string() ? value.get<std::string>() : value.dump());
            }
            rows[table].push_back(std::move(values));
        }
    }
    return rows;
}

PredictionRecord record_from_link(const SchemaLink& link, const DatabaseSchema& schema) {
    PredictionRecord record;
    record.question_id = link.question_id;
    record.db_id = link.db_id;
    for (const QualifiedColumn& qc : schema.all_columns()) {
        auto entry = link.entries.find(qc);
        ColumnScores scores;
        scores.relevant = entry != link.entries.end() ? kOracleLogit : -kOracleLogit;
        std::array<double, kRoleCount> roles;
        roles.fill(-kOracleLogit);
        if (entry != link.entries.end()) {
            for (Role r : entry->second.roles.to_vector()) {
                roles[static_cast<std::size_t>(r)] = kOracleLogit;
            }
        }
        scores.roles = roles;
        record.scores.emplace(qc, scores);
    }
    return record;
}

}  // namespace schemalink
