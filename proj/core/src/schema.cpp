#include "schemalink/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schemalink/errors.hpp"
#include "schemalink/text.hpp"

namespace schemalink {

using nlohmann::json;

std::string_view to_string(ColumnType type) {
    switch (type) {
        case ColumnType::Text: return "TEXT";
        case ColumnType::Number: return "NUMBER";
        case ColumnType::Time: return "TIME";
        case ColumnType::Boolean: return "BOOLEAN";
        case ColumnType::Others: return "OTHERS";
    }
    return "OTHERS";
}

ColumnType column_type_from_string(std::string_view name) {
    std::string lowered = ascii_lower(name);
    if (lowered == "text") return ColumnType::Text;
    if (lowered == "number") return ColumnType::Number;
    if (lowered == "time") return ColumnType::Time;
    if (lowered == "boolean") return ColumnType::Boolean;
    return ColumnType::Others;
}

const Column* Table::find_column(std::string_view column_name) const {
    for (const Column& c : columns) {
        if (c.name == column_name) return &c;
    }
    return nullptr;
}

bool Table::is_primary_key(std::string_view column_name) const {
    return std::find(primary_keys.begin(), primary_keys.end(), column_name) != primary_keys.end();
}

QualifiedColumn qualified_column_from_string(std::string_view text) {
    auto dot = text.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size()) {
        throw ValidationError("expected qualified column of the form table.column, got '" +
                              std::string(text) + "'");
    }
    return QualifiedColumn{std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
}

const Table* DatabaseSchema::find_table(std::string_view table_name) const {
    for (const Table& t : tables) {
        if (t.name == table_name) return &t;
    }
    return nullptr;
}

bool DatabaseSchema::has_column(const QualifiedColumn& qc) const {
    const Table* t = find_table(qc.table);
    return t != nullptr && t->find_column(qc.column) != nullptr;
}

std::vector<QualifiedColumn> DatabaseSchema::all_columns() const {
    std::vector<QualifiedColumn> out;
    for (const Table& t : tables) {
        for (const Column& c : t.columns) out.push_back({t.name, c.name});
    }
    return out;
}

void DatabaseSchema::validate() const {
    std::set<std::string> table_names;
    for (const Table& t : tables) {
        if (trim(t.name).empty()) {
            throw IntegrityError("schema '" + db_id + "': empty table name");
        }
        if (!table_names.insert(ascii_lower(t.name)).second) {
            throw IntegrityError("schema '" + db_id + "': duplicate table name '" + t.name + "'");
        }
        if (t.columns.empty()) {
            throw IntegrityError("schema '" + db_id + "': table '" + t.name + "' has no columns");
        }
        std::set<std::string> column_names;
        for (const Column& c : t.columns) {
            if (trim(c.name).empty()) {
                throw IntegrityError("schema '" + db_id + "': table '" + t.name +
                                     "' has an empty column name");
            }
            if (!column_names.insert(ascii_lower(c.name)).second) {
                throw IntegrityError("schema '" + db_id + "': duplicate column '" + t.name + "." +
                                     c.name + "'");
            }
        }
        for (const std::string& pk : t.primary_keys) {
            if (t.find_column(pk) == nullptr) {
                throw IntegrityError("schema '" + db_id + "': primary key '" + pk +
                                     "' is not a column of table '" + t.name + "'");
            }
        }
    }
    for (const Table& t : tables) {
        for (const ForeignKey& fk : t.foreign_keys) {
            if (t.find_column(fk.local_column) == nullptr) {
                throw IntegrityError("schema '" + db_id + "': foreign key column '" + t.name + "." +
                                     fk.local_column + "' does not exist");
            }
            const Table* foreign = find_table(fk.foreign_table);
            if (foreign == nullptr || foreign->find_column(fk.foreign_column) == nullptr) {
                throw IntegrityError("schema '" + db_id + "': foreign key target '" +
                                     fk.foreign_table + "." + fk.foreign_column +
                                     "' does not exist");
            }
        }
    }
}

namespace {

int require_int(const json& value, const std::string& db_id, const char* where) {
    if (!value.is_number_integer()) {
        throw ValidationError("schema '" + db_id + "': expected integer in " + where);
    }
    return value.get<int>();
}

DatabaseSchema schema_from_json(const json& entry) {
    if (!entry.is_object()) throw ValidationError("catalog entry is not an object");
    if (!entry.contains("db_id")) throw ValidationError("catalog entry missing db_id");
    DatabaseSchema schema;
    schema.db_id = entry.at("db_id").get<std::string>();

    for (const char* key : {"table_names_original", "column_names_original", "column_types"}) {
        if (!entry.contains(key) || !entry.at(key).is_array()) {
            throw ValidationError("schema '" + schema.db_id + "': missing array field '" +
                                  key + "'");
        }
    }

    const json& table_names = entry.at("table_names_original");
    const json& column_names = entry.at("column_names_original");
    const json& column_types = entry.at("column_types");
    if (column_types.size() != column_names.size()) {
        throw IntegrityError("schema '" + schema.db_id +
                             "': column_types length does not match column_names_original");
    }

    for (const json& name : table_names) {
        Table t;
        t.name = ascii_lower(name.get<std::string>());
        schema.tables.push_back(std::move(t));
    }

    // Global column index -> (table index, canonical name). The synthetic
    // "*" entry (table index -1) stays addressable by index but is dropped
    // from the schema itself.
    std::vector<std::pair<int, std::string>> column_index;
    column_index.reserve(column_names.size());
    for (std::size_t i = 0; i < column_names.size(); ++i) {
        const json& pair = column_names.at(i);
        if (!pair.is_array() || pair.size() != 2) {
            throw ValidationError("schema '" + schema.db_id +
                                  "': column_names_original entries must be [table_index, name]");
        }
        int table_idx = require_int(pair.at(0), schema.db_id, "column_names_original");
        std::string name = ascii_lower(pair.at(1).get<std::string>());
        column_index.emplace_back(table_idx, name);
        if (table_idx == -1) continue;  // the "*" pseudo-column
        if (table_idx < 0 || static_cast<std::size_t>(table_idx) >= schema.tables.size()) {
            throw IntegrityError("schema '" + schema.db_id + "': column '" + name +
                                 "' references table index " + std::to_string(table_idx) +
                                 " out of range");
        }
        ColumnType type = column_type_from_string(column_types.at(i).get<std::string>());
        schema.tables[static_cast<std::size_t>(table_idx)].columns.push_back(Column{name, type});
    }

    auto resolve_column = [&](int idx, const char* where) -> QualifiedColumn {
        if (idx < 0 || static_cast<std::size_t>(idx) >= column_index.size()) {
            throw IntegrityError("schema '" + schema.db_id + "': dangling column index " +
                                 std::to_string(idx) + " in " + where);
        }
        const auto& [table_idx, name] = column_index[static_cast<std::size_t>(idx)];
        if (table_idx < 0) {
            throw IntegrityError("schema '" + schema.db_id + "': " + where +
                                 " references the '*' pseudo-column");
        }
        return QualifiedColumn{schema.tables[static_cast<std::size_t>(table_idx)].name, name};
    };

    if (entry.contains("primary_keys")) {
        for (const json& pk : entry.at("primary_keys")) {
            // BIRD composite keys arrive as nested index arrays.
            std::vector<int> indices;
            if (pk.is_array()) {
                for (const json& member : pk) {
                    indices.push_back(require_int(member, schema.db_id, "primary_keys"));
                }
            } else {
                indices.push_back(require_int(pk, schema.db_id, "primary_keys"));
            }
            for (int idx : indices) {
                QualifiedColumn qc = resolve_column(idx, "primary_keys");
                Table* t = const_cast<Table*>(schema.find_table(qc.table));
                t->primary_keys.push_back(qc.column);
            }
        }
    }

    if (entry.contains("foreign_keys")) {
        for (const json& fk : entry.at("foreign_keys")) {
            if (!fk.is_array() || fk.size() != 2) {
                throw ValidationError("schema '" + schema.db_id +
                                      "': foreign_keys entries must be [local, foreign] indices");
            }
            QualifiedColumn local =
                resolve_column(require_int(fk.at(0), schema.db_id, "foreign_keys"), "foreign_keys");
            QualifiedColumn foreign =
                resolve_column(require_int(fk.at(1), schema.db_id, "foreign_keys"), "foreign_keys");
            Table* t = const_cast<Table*>(schema.find_table(local.table));
            t->foreign_keys.push_back(ForeignKey{local.column, foreign.table, foreign.column});
        }
    }

    schema.validate();
    return schema;
}

}  // namespace

std::vector<DatabaseSchema> parse_schema_catalog(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("schema catalog: ") + err.what(), err.byte);
    }
    if (!doc.is_array()) throw ValidationError("schema catalog must be a JSON array");
    std::vector<DatabaseSchema> catalog;
    catalog.reserve(doc.size());
    for (const json& entry : doc) catalog.push_back(schema_from_json(entry));
    return catalog;
}

std::vector<DatabaseSchema> load_schema_catalog(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open schema catalog '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_schema_catalog(buffer.str());
}

std::string render_ddl(const Table& table) {
    // Each item is one element of the CREATE TABLE body. Foreign keys span
    // two lines with the REFERENCES clause indented under FOREIGN KEY.
    std::vector<std::string> items;
    for (const Column& c : table.columns) {
        std::string line = "  " + c.name + " " + std::string(to_string(c.data_type));
        if (table.is_primary_key(c.name)) line += " PRIMARY KEY";
        items.push_back(std::move(line));
    }
    for (const ForeignKey& fk : table.foreign_keys) {
        items.push_back("  FOREIGN KEY(" + fk.local_column + ")\n     REFERENCES " +
                        fk.foreign_table + "(" + fk.foreign_column + ")");
    }
    std::string out = "CREATE TABLE " + table.name + " (\n";
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += items[i];
        out += (i + 1 < items.size()) ? ",\n" : " );";
    }
    return out;
}

std::string render_ddl(const DatabaseSchema& schema) {
    std::string out;
    for (std::size_t i = 0; i < schema.tables.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += render_ddl(schema.tables[i]);
    }
    return out;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

// Parses "name(column)" out of "FOREIGN KEY(col)" / "REFERENCES t(c)" bodies.
std::pair<std::string, std::string> parse_call_form(std::string_view text, std::size_t line_no) {
    auto open = text.find('(');
    auto close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw ParseError("ddl line " + std::to_string(line_no) + ": expected '(...)' in '" +
                         std::string(text) + "'");
    }
    return {std::string(trim(text.substr(0, open))),
            std::string(trim(text.substr(open + 1, close - open - 1)))};
}

}  // namespace

DatabaseSchema read_ddl(std::string_view ddl_text, std::string db_id) {
    DatabaseSchema schema;
    schema.db_id = std::move(db_id);

    auto lines = split_lines(ddl_text);
    std::size_t i = 0;
    while (i < lines.size()) {
        if (trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        std::string_view header = lines[i];
        constexpr std::string_view kPrefix = "CREATE TABLE ";
        if (!header.starts_with(kPrefix) || !trim(header).ends_with("(")) {
            throw ParseError("ddl line " + std::to_string(i + 1) +
                             ": expected 'CREATE TABLE name ('");
        }
        Table table;
        table.name = std::string(
            trim(header.substr(kPrefix.size(), header.size() - kPrefix.size() - 2)));
        ++i;

        bool closed = false;
        while (i < lines.size() && !closed) {
            std::string_view raw = lines[i];
            std::string_view line = trim(raw);
            if (line.empty()) {
                throw ParseError("ddl line " + std::to_string(i + 1) +
                                 ": unexpected blank line inside CREATE TABLE");
            }
            if (line.ends_with(");")) {
                closed = true;
                line = trim(line.substr(0, line.size() - 2));
            } else if (line.ends_with(",")) {
                line = trim(line.substr(0, line.size() - 1));
            }

            if (line.starts_with("FOREIGN KEY(")) {
                auto [_, local] = parse_call_form(line, i + 1);
                ++i;
                if (i >= lines.size()) {
                    throw ParseError("ddl line " + std::to_string(i) +
                                     ": FOREIGN KEY without REFERENCES line");
                }
                std::string_view ref = trim(lines[i]);
                if (ref.ends_with(");")) {
                    closed = true;
                    ref = trim(ref.substr(0, ref.size() - 2));
                } else if (ref.ends_with(",")) {
                    ref = trim(ref.substr(0, ref.size() - 1));
                }
                if (!ref.starts_with("REFERENCES ")) {
                    throw ParseError("ddl line " + std::to_string(i + 1) +
                                     ": expected REFERENCES clause");
                }
                auto [foreign_table, foreign_column] =
                    parse_call_form(ref.substr(std::string_view("REFERENCES ").size()), i + 1);
                table.foreign_keys.push_back(ForeignKey{local, foreign_table, foreign_column});
            } else {
                bool primary = false;
                if (line.ends_with(" PRIMARY KEY")) {
                    primary = true;
                    line = trim(line.substr(0, line.size() - std::string_view(" PRIMARY KEY").size()));
                }
                auto space = line.rfind(' ');
                if (space == std::string_view::npos) {
                    throw ParseError("ddl line " + std::to_string(i + 1) +
                                     ": expected 'name TYPE' column line");
                }
                Column column;
                column.name = std::string(trim(line.substr(0, space)));
                column.data_type = column_type_from_string(trim(line.substr(space + 1)));
                if (primary) table.primary_keys.push_back(column.name);
                table.columns.push_back(std::move(column));
            }
            ++i;
        }
        if (!closed) {
            throw ParseError("ddl: CREATE TABLE " + table.name + " is never closed with ');'");
        }
        schema.tables.push_back(std::move(table));
    }
    schema.validate();
    return schema;
}

std::size_t default_token_estimator(std::string_view text) {
    std::size_t count = 0;
    bool in_run = false;
    for (char c : text) {
        unsigned char byte = static_cast<unsigned char>(c);
        if (ascii_alnum(c)) {
            if (!in_run) {
                ++count;
                in_run = true;
            }
            continue;
        }
        in_run = false;
        if (ascii_space(c)) continue;
        if ((byte & 0xc0) == 0x80) continue;  // UTF-8 continuation byte
        ++count;
    }
    return count;
}

LinkingPrompt render_linking_prompt(const std::vector<Table>& schema_subset,
                                    const std::string& question) {
    if (schema_subset.empty()) {
        throw ValidationError("render_linking_prompt: schema subset is empty");
    }
    if (question.find(kOpenMarker) != std::string::npos ||
        question.find(kCloseMarker) != std::string::npos) {
        throw ValidationError(
            "render_linking_prompt: question contains a candidate marker character");
    }

    LinkingPrompt prompt;
    for (std::size_t i = 0; i < schema_subset.size(); ++i) {
        if (i > 0) prompt.text += "\n\n";
        prompt.text += render_ddl(schema_subset[i]);
    }
    prompt.text += "\nTo answer:\n";
    prompt.text += question;
    prompt.text += "\nWe need columns:";
    for (const Table& t : schema_subset) {
        for (const Column& c : t.columns) {
            prompt.text += "\n";
            prompt.text += kOpenMarker;
            prompt.text += " " + t.name + " " + c.name;
            prompt.text += kCloseMarker;
            prompt.candidates.push_back(QualifiedColumn{t.name, c.name});
        }
    }
    return prompt;
}

std::vector<PromptChunk> chunk_schema(const DatabaseSchema& schema, const std::string& question,
                                      std::size_t budget, const TokenEstimator& estimator) {
    std::vector<PromptChunk> chunks;
    std::size_t start = 0;
    while (start < schema.tables.size()) {
        std::vector<Table> included;
        LinkingPrompt accepted;
        std::size_t accepted_tokens = 0;

        std::size_t end = start;
        while (end < schema.tables.size()) {
            std::vector<Table> attempt(schema.tables.begin() + start,
                                       schema.tables.begin() + end + 1);
            LinkingPrompt rendered = render_linking_prompt(attempt, question);
            std::size_t tokens = estimator(rendered.text);
            if (tokens > budget) break;
            included = std::move(attempt);
            accepted = std::move(rendered);
            accepted_tokens = tokens;
            ++end;
        }
        if (included.empty()) {
            throw ValidationError("chunk_schema: table '" + schema.tables[start].name +
                                  "' does not fit the token budget of " + std::to_string(budget) +
                                  " on its own");
        }
        chunks.push_back(PromptChunk{schema.db_id, std::move(included), std::move(accepted.candidates),
                                     std::move(accepted.text), accepted_tokens});
        start = end;
    }
    return chunks;
}

}  // namespace schemalink
