#include "pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schemalink/errors.hpp"
#include "schemalink/focus.hpp"
#include "schemalink/ground_truth.hpp"
#include "schemalink/metrics.hpp"
#include "schemalink/rng.hpp"
#include "schemalink/schema.hpp"
#include "schemalink/scorers.hpp"
#include "schemalink/text.hpp"

namespace schemalink::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_exists(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("missing required path: ") + what);
    if (!fs::exists(path)) {
        throw UsageError(std::string(what) + " '" + path + "' does not exist");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << content;
    }
    fs::rename(temp, target);
}

json meta_block(const char* command, const PipelineConfig& config) {
    return {{"command", command}, {"seed", config.seed}};
}

/// Sidecar header for line-oriented artifacts (JSONL, CSV, prompt sets).
void write_meta_sidecar(const std::string& artifact_path, const char* command,
                        const PipelineConfig& config) {
    atomic_write(artifact_path + ".meta.json", meta_block(command, config).dump(2) + "\n");
}

std::uint64_t command_seed(const PipelineConfig& config, const char* command) {
    return fnv1a64(command, fnv1a64_u64(config.seed, 0x9e3779b97f4a7c15ULL));
}

struct DatasetRow {
    std::string question_id;
    std::string db_id;
    std::string question;
    std::string sql;  // may be empty (render does not need it)
};

std::vector<DatasetRow> load_dataset_rows(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("dataset: ") + err.what(), err.byte);
    }
    if (!doc.is_array()) throw ValidationError("dataset must be a JSON array");
    std::vector<DatasetRow> rows;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& entry = doc.at(i);
        DatasetRow row;
        row.question_id = std::to_string(i);
        if (entry.contains("question_id")) {
            const json& qid = entry.at("question_id");
            row.question_id = qid.is_string() ? qid.get<std::string>() : qid.dump();
        }
        row.db_id = entry.value("db_id", "");
        row.question = entry.value("question", "");
        if (entry.contains("query")) {
            row.sql = entry.at("query").get<std::string>();
        } else if (entry.contains("SQL")) {
            row.sql = entry.at("SQL").get<std::string>();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// question_id becomes part of output filenames; keep it path-safe.
std::string sanitize_filename(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        if (!ascii_alnum(c) && c != '-' && c != '_') c = '_';
    }
    return out.empty() ? "_" : out;
}

std::map<std::string, const DatabaseSchema*> index_catalog(
    const std::vector<DatabaseSchema>& catalog) {
    std::map<std::string, const DatabaseSchema*> by_id;
    for (const DatabaseSchema& schema : catalog) by_id.emplace(schema.db_id, &schema);
    return by_id;
}

Granularity granularity_from(const PipelineConfig& config) {
    if (config.granularity == "coarse") return Granularity::Coarse;
    if (config.granularity == "fine") return Granularity::Fine;
    throw UsageError("granularity must be 'coarse' or 'fine', got '" + config.granularity + "'");
}

MetricsConfig metrics_config_from(const PipelineConfig& config) {
    MetricsConfig mc;
    mc.beta = config.beta;
    mc.thresholds = config.thresholds;
    mc.level = metric_level_from_string(config.level);
    mc.validate();
    return mc;
}

FocusPolicy focus_policy_from(const PipelineConfig& config) {
    FocusPolicy policy;
    policy.relevance_threshold = config.relevance_threshold;
    policy.role_threshold = config.role_threshold;
    policy.include_sample_rows = config.include_sample_rows;
    policy.rows_per_table = config.rows_per_table;
    policy.role_block_fence = config.role_block_fence;
    return policy;
}

/// Ground truth for eval/sweep: either a canonical link file (JSONL) or a
/// raw dataset (JSON array), distinguished by the first non-space byte.
std::vector<SchemaLink> load_ground_truth(const PipelineConfig& config) {
    require_exists(config.dataset_path, "--dataset");
    std::string text = read_file(config.dataset_path);
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        return read_link_file(config.dataset_path);
    }
    require_exists(config.schemas_path, "--schemas");
    std::vector<DatabaseSchema> catalog = load_schema_catalog(config.schemas_path);
    ExtractionResult result = extract_corpus_from_json(text, catalog);
    if (!result.report.failures.empty()) {
        std::cerr << result.report.failures.size()
                  << " dataset rows failed ground-truth extraction and are excluded\n";
    }
    std::vector<SchemaLink> links;
    links.reserve(result.examples.size());
    for (const LabeledExample& example : result.examples) links.push_back(example.link);
    return links;
}

}  // namespace

PipelineConfig load_config_file(const std::string& path) {
    require_exists(path, "--config");
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& err) {
        throw UsageError("config '" + path + "': " + err.what());
    }
    PipelineConfig config;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "schemas") config.schemas_path = value.get<std::string>();
            else if (key == "dataset") config.dataset_path = value.get<std::string>();
            else if (key == "predictions") config.predictions_path = value.get<std::string>();
            else if (key == "out") config.out_dir = value.get<std::string>();
            else if (key == "budget") config.budget = value.get<std::size_t>();
            else if (key == "granularity") config.granularity = value.get<std::string>();
            else if (key == "scorer") config.scorer = value.get<std::string>();
            else if (key == "threshold") config.relevance_threshold = value.get<double>();
            else if (key == "role_threshold") config.role_threshold = value.get<double>();
            else if (key == "include_sample_rows") config.include_sample_rows = value.get<bool>();
            else if (key == "sample_rows") config.sample_rows_path = value.get<std::string>();
            else if (key == "rows_per_table") config.rows_per_table = value.get<int>();
            else if (key == "role_block_fence") config.role_block_fence = value.get<std::string>();
            else if (key == "beta") config.beta = value.get<double>();
            else if (key == "thresholds") config.thresholds = value.get<std::vector<double>>();
            else if (key == "level") config.level = value.get<std::string>();
            else if (key == "noise_rate") config.noise_rate = value.get<double>();
            else if (key == "fp_rate") config.fp_rate = value.get<double>();
            else if (key == "fn_rate") config.fn_rate = value.get<double>();
            else if (key == "seed") config.seed = value.get<std::uint64_t>();
            else throw UsageError("config '" + path + "': unknown key '" + key + "'");
        } catch (const json::exception& err) {
            throw UsageError("config '" + path + "', key '" + key + "': " + err.what());
        }
    }
    return config;
}

int cmd_extract_gt(const PipelineConfig& config) {
    require_exists(config.schemas_path, "--schemas");
    require_exists(config.dataset_path, "--dataset");
    std::vector<DatabaseSchema> catalog = load_schema_catalog(config.schemas_path);
    ExtractionResult result = extract_corpus(config.dataset_path, catalog);

    fs::create_directories(config.out_dir);
    std::string links_path = config.out_dir + "/links.jsonl";
    std::vector<SchemaLink> links;
    links.reserve(result.examples.size());
    for (const LabeledExample& example : result.examples) links.push_back(example.link);
    write_link_file(links_path, links);
    write_meta_sidecar(links_path, "extract-gt", config);

    json report = json::parse(result.report.to_json());
    report["meta"] = meta_block("extract-gt", config);
    atomic_write(config.out_dir + "/extract_report.json", report.dump(2) + "\n");

    if (!result.report.failures.empty()) {
        std::cerr << result.report.failures.size() << " of " << result.report.total_rows
                  << " rows failed extraction (see extract_report.json)\n";
    }
    bool fatal = result.report.total_rows > 0 && result.report.extracted == 0;
    return fatal ? 1 : 0;
}

int cmd_render(const PipelineConfig& config) {
    require_exists(config.schemas_path, "--schemas");
    require_exists(config.dataset_path, "--dataset");
    std::vector<DatabaseSchema> catalog = load_schema_catalog(config.schemas_path);
    auto by_id = index_catalog(catalog);
    std::vector<DatasetRow> rows = load_dataset_rows(config.dataset_path);

    json instances = json::array();
    std::size_t failures = 0;
    for (const DatasetRow& row : rows) {
        try {
            auto schema = by_id.find(row.db_id);
            if (schema == by_id.end()) throw IntegrityError("unknown db_id '" + row.db_id + "'");
            std::vector<PromptChunk> chunks =
                chunk_schema(*schema->second, row.question, config.budget);
            for (std::size_t k = 0; k < chunks.size(); ++k) {
                std::string rel =
                    "prompts/" + sanitize_filename(row.question_id) + "_" + std::to_string(k) +
                    ".txt";
                atomic_write(config.out_dir + "/" + rel, chunks[k].rendered_text);
                instances.push_back({{"question_id", row.question_id},
                                     {"db_id", row.db_id},
                                     {"chunk_index", k},
                                     {"path", rel},
                                     {"token_count", chunks[k].token_count},
                                     {"tables", chunks[k].tables_included.size()},
                                     {"candidates", chunks[k].candidates.size()}});
            }
        } catch (const std::exception& err) {
            ++failures;
            std::cerr << "render: question '" << row.question_id << "' failed: " << err.what()
                      << "\n";
        }
    }
    json manifest = {{"meta", meta_block("render", config)},
                     {"budget", config.budget},
                     {"instances", instances}};
    atomic_write(config.out_dir + "/render_manifest.json", manifest.dump(2) + "\n");
    return failures > 0 && instances.empty() ? 1 : 0;
}

namespace {

/// Chunks one example and scores every chunk, returning the merged
/// full-schema record.
PredictionRecord score_example(const DatasetRow& row, const DatabaseSchema& schema,
                               const std::optional<SchemaLink>& link,
                               const PipelineConfig& config, std::uint64_t seed) {
    std::vector<PromptChunk> chunks = chunk_schema(schema, row.question, config.budget);
    std::vector<PredictionRecord> parts;
    for (PromptChunk& chunk : chunks) {
        LinkingInstance instance;
        instance.question_id = row.question_id;
        instance.db_id = row.db_id;
        instance.question = row.question;
        instance.chunk = std::move(chunk);
        if (link.has_value()) instance.labels = restrict_link(*link, instance.chunk);

        if (config.scorer == "oracle") {
            parts.push_back(oracle_score(instance, config.fp_rate, config.fn_rate, seed,
                                         granularity_from(config)));
        } else if (config.scorer == "lexical") {
            parts.push_back(lexical_score(instance));
        } else {
            throw UsageError("scorer must be 'oracle', 'lexical' or 'file', got '" +
                             config.scorer + "'");
        }
    }
    return merge_records(parts);
}

}  // namespace

int cmd_score(const PipelineConfig& config) {
    require_exists(config.schemas_path, "--schemas");
    std::vector<DatabaseSchema> catalog = load_schema_catalog(config.schemas_path);

    std::vector<PredictionRecord> records;
    std::size_t failures = 0;
    if (config.scorer == "file") {
        require_exists(config.predictions_path, "--predictions");
        records = load_predictions(config.predictions_path, catalog);
    } else {
        require_exists(config.dataset_path, "--dataset");
        auto by_id = index_catalog(catalog);
        std::vector<DatasetRow> rows = load_dataset_rows(config.dataset_path);
        std::uint64_t seed = command_seed(config, "score");
        for (const DatasetRow& row : rows) {
            try {
                auto schema = by_id.find(row.db_id);
                if (schema == by_id.end()) {
                    throw IntegrityError("unknown db_id '" + row.db_id + "'");
                }
                std::optional<SchemaLink> link;
                if (config.scorer == "oracle") {
                    link = extract_ground_truth(row.sql, *schema->second, row.question_id);
                }
                records.push_back(score_example(row, *schema->second, link, config, seed));
            } catch (const UsageError&) {
                throw;
            } catch (const std::exception& err) {
                ++failures;
                std::cerr << "score: question '" << row.question_id << "' failed: " << err.what()
                          << "\n";
            }
        }
    }

    fs::create_directories(config.out_dir);
    std::string path = config.out_dir + "/predictions.jsonl";
    write_prediction_file(path, records);
    write_meta_sidecar(path, "score", config);
    return failures > 0 && records.empty() ? 1 : 0;
}

int cmd_focus(const PipelineConfig& config) {
    require_exists(config.schemas_path, "--schemas");
    require_exists(config.dataset_path, "--dataset");
    std::vector<DatabaseSchema> catalog = load_schema_catalog(config.schemas_path);
    auto by_id = index_catalog(catalog);
    std::vector<DatasetRow> rows = load_dataset_rows(config.dataset_path);

    std::map<std::string, PredictionRecord> predictions;
    bool from_file = !config.predictions_path.empty();
    if (from_file) {
        require_exists(config.predictions_path, "--predictions");
        for (PredictionRecord& record : load_predictions(config.predictions_path, catalog)) {
            predictions.emplace(record.question_id, std::move(record));
        }
    }

    std::map<std::string, std::vector<std::vector<std::string>>> sample_rows;
    if (config.include_sample_rows && !config.sample_rows_path.empty()) {
        require_exists(config.sample_rows_path, "sample rows file");
        sample_rows = load_sample_rows(config.sample_rows_path);
    }

    FocusPolicy policy = focus_policy_from(config);
    std::uint64_t seed = command_seed(config, "focus");
    bool fine = granularity_from(config) == Granularity::Fine;

    json manifest_entries = json::array();
    std::size_t failures = 0;
    std::size_t rendered = 0;
    for (const DatasetRow& row : rows) {
        try {
            auto schema_it = by_id.find(row.db_id);
            if (schema_it == by_id.end()) {
                throw IntegrityError("unknown db_id '" + row.db_id + "'");
            }
            const DatabaseSchema& schema = *schema_it->second;

            PredictionRecord record;
            if (from_file) {
                auto it = predictions.find(row.question_id);
                if (it == predictions.end()) {
                    throw ValidationError("no prediction for question '" + row.question_id + "'");
                }
                record = it->second;
            } else {
                SchemaLink link = extract_ground_truth(row.sql, schema, row.question_id);
                if (config.noise_rate > 0.0) {
                    link = inject_noise(link, schema, config.noise_rate, seed);
                }
                record = record_from_link(link, schema);
            }
            if (!fine) {
                for (auto& [qc, scores] : record.scores) scores.roles.reset();
            }

            FocusedSchema focused = apply_threshold(record, schema, policy, row.question);
            if (policy.include_sample_rows && !sample_rows.empty()) {
                std::map<std::string, std::vector<std::vector<std::string>>> restricted;
                for (const Table& table : focused.retained.tables) {
                    auto it = sample_rows.find(table.name);
                    if (it == sample_rows.end()) continue;
                    auto rows_for_table = it->second;
                    if (rows_for_table.size() >
                        static_cast<std::size_t>(std::max(policy.rows_per_table, 0))) {
                        rows_for_table.resize(
                            static_cast<std::size_t>(std::max(policy.rows_per_table, 0)));
                    }
                    // Full-width rows are cut down to the retained columns;
                    // rows already sized for the retained set pass through.
                    const Table& original = *schema.find_table(table.name);
                    if (table.columns.size() != original.columns.size()) {
                        std::vector<std::size_t> keep;
                        for (std::size_t c = 0; c < original.columns.size(); ++c) {
                            if (table.find_column(original.columns[c].name) != nullptr) {
                                keep.push_back(c);
                            }
                        }
                        for (auto& values : rows_for_table) {
                            if (values.size() != original.columns.size()) continue;
                            std::vector<std::string> sliced;
                            for (std::size_t c : keep) sliced.push_back(std::move(values[c]));
                            values = std::move(sliced);
                        }
                    }
                    restricted.emplace(table.name, std::move(rows_for_table));
                }
                focused = attach_sample_rows(std::move(focused), restricted);
            }

            std::string rel = "focused/" + sanitize_filename(row.question_id) + ".txt";
            atomic_write(config.out_dir + "/" + rel, render_focused_prompt(focused));
            manifest_entries.push_back({{"question_id", row.question_id},
                                        {"db_id", row.db_id},
                                        {"path", rel},
                                        {"empty_retained", focused.empty_retained},
                                        {"retained_tables", focused.retained.tables.size()}});
            if (focused.empty_retained) {
                std::cerr << "focus: question '" << row.question_id
                          << "' retained no columns at threshold " << policy.relevance_threshold
                          << "\n";
            }
            ++rendered;
        } catch (const std::exception& err) {
            ++failures;
            std::cerr << "focus: question '" << row.question_id << "' failed: " << err.what()
                      << "\n";
        }
    }
    json manifest = {{"meta", meta_block("focus", config)}, {"instances", manifest_entries}};
    atomic_write(config.out_dir + "/focus_manifest.json", manifest.dump(2) + "\n");
    return failures > 0 && rendered == 0 ? 1 : 0;
}

int cmd_eval(const PipelineConfig& config) {
    require_exists(config.predictions_path, "--predictions");
    std::vector<SchemaLink> ground_truth = load_ground_truth(config);
    std::vector<PredictionRecord> predictions =
        config.schemas_path.empty()
            ? load_predictions(config.predictions_path)
            : load_predictions(config.predictions_path, load_schema_catalog(config.schemas_path));

    MetricsReport report = sweep(predictions, ground_truth, metrics_config_from(config));

    fs::create_directories(config.out_dir);
    json doc = json::parse(report.to_json());
    doc["meta"] = meta_block("eval", config);
    atomic_write(config.out_dir + "/metrics.json", doc.dump(2) + "\n");
    atomic_write(config.out_dir + "/metrics.txt", report.to_text());
    std::cout << report.to_text();
    return 0;
}

int cmd_sweep(const PipelineConfig& config) {
    require_exists(config.predictions_path, "--predictions");
    std::vector<SchemaLink> ground_truth = load_ground_truth(config);
    std::vector<PredictionRecord> predictions =
        config.schemas_path.empty()
            ? load_predictions(config.predictions_path)
            : load_predictions(config.predictions_path, load_schema_catalog(config.schemas_path));

    MetricsReport report = sweep(predictions, ground_truth, metrics_config_from(config));

    fs::create_directories(config.out_dir);
    std::string csv_path = config.out_dir + "/sweep.csv";
    atomic_write(csv_path, report.to_csv());
    write_meta_sidecar(csv_path, "sweep", config);

    char line[128];
    std::snprintf(line, sizeof(line), "best_threshold=%.10g f_beta=%.10g\n",
                  report.best_threshold, report.best_f_beta);
    std::cout << line;
    return 0;
}

int cmd_diff_links(const PipelineConfig& config, const std::string& path_a,
                   const std::string& path_b) {
    require_exists(path_a, "first link file");
    require_exists(path_b, "second link file");
    std::map<std::string, SchemaLink> a_links, b_links;
    for (SchemaLink& link : read_link_file(path_a)) {
        a_links.emplace(link.question_id, std::move(link));
    }
    for (SchemaLink& link : read_link_file(path_b)) {
        b_links.emplace(link.question_id, std::move(link));
    }

    json differences = json::array();
    json only_a = json::array(), only_b = json::array();
    for (const auto& [qid, link] : a_links) {
        auto it = b_links.find(qid);
        if (it == b_links.end()) {
            only_a.push_back(qid);
            continue;
        }
        LinkDiff diff = diff_links(link, it->second);
        if (!diff.empty()) {
            json entry = json::parse(diff.to_json());
            entry["question_id"] = qid;
            differences.push_back(std::move(entry));
        }
    }
    for (const auto& [qid, link] : b_links) {
        if (a_links.count(qid) == 0) only_b.push_back(qid);
    }

    json doc = {{"meta", meta_block("diff-links", config)},
                {"differing", differences},
                {"only_in_a", only_a},
                {"only_in_b", only_b}};
    std::string text = doc.dump(2) + "\n";
    if (!config.out_dir.empty()) {
        atomic_write(config.out_dir + "/diff.json", text);
    }
    std::cout << text;
    return 0;
}

}  // namespace schemalink::pipeline
