#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace schemalink {

/// Spider column type vocabulary. Rendered verbatim in DDL.
enum class ColumnType { Text, Number, Time, Boolean, Others };

std::string_view to_string(ColumnType type);
ColumnType column_type_from_string(std::string_view name);

struct Column {
    std::string name;  // lower-case canonical form
    ColumnType data_type = ColumnType::Text;
};

struct ForeignKey {
    std::string local_column;
    std::string foreign_table;
    std::string foreign_column;

    auto operator<=>(const ForeignKey&) const = default;
};

struct Table {
    std::string name;  // lower-case canonical form
    std::vector<Column> columns;  // source order; "first column" semantics rely on it
    std::vector<std::string> primary_keys;
    std::vector<ForeignKey> foreign_keys;

    const Column* find_column(std::string_view column_name) const;
    bool is_primary_key(std::string_view column_name) const;
};

/// A column identified by its table, both components lower-case.
struct QualifiedColumn {
    std::string table;
    std::string column;

    std::string to_string() const { return table + "." + column; }
    auto operator<=>(const QualifiedColumn&) const = default;
};

/// Parses "table.column". Throws ValidationError if there is no dot.
QualifiedColumn qualified_column_from_string(std::string_view text);

struct DatabaseSchema {
    std::string db_id;
    std::vector<Table> tables;

    const Table* find_table(std::string_view table_name) const;
    bool has_column(const QualifiedColumn& qc) const;

    /// Every column of every table, in schema order.
    std::vector<QualifiedColumn> all_columns() const;

    /// Checks name uniqueness (case-insensitive), non-empty column lists and
    /// foreign-key endpoint existence. Throws IntegrityError on violation.
    void validate() const;
};

/// Loads a Spider-layout `tables.json` catalog: index-based keys are resolved
/// to names, the synthetic "*" column is dropped and all identifiers are
/// lower-cased. Throws ParseError (with byte offset) on malformed JSON and
/// IntegrityError (naming the db_id) on dangling indices.
std::vector<DatabaseSchema> load_schema_catalog(const std::string& path);
std::vector<DatabaseSchema> parse_schema_catalog(std::string_view json_text);

/// Renders the schema as CREATE TABLE blocks: 2-space indented `name TYPE`
/// column lines, `PRIMARY KEY` suffix on key columns, two-line
/// `FOREIGN KEY(c)` / `REFERENCES t(c)` entries, ` );` closing the last line,
/// blocks separated by one blank line.
std::string render_ddl(const DatabaseSchema& schema);
std::string render_ddl(const Table& table);

/// Reads DDL in exactly the grammar render_ddl emits, producing an equal
/// schema (round-trip identity). The db_id is not part of the DDL text.
DatabaseSchema read_ddl(std::string_view ddl_text, std::string db_id = "");

/// Pluggable token estimator: rendered text -> estimated token count.
using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// Default estimator: number of maximal alphanumeric runs plus number of
/// non-space punctuation characters (UTF-8 continuation bytes do not count).
/// Deterministic and tokenizer-free.
std::size_t default_token_estimator(std::string_view text);

struct LinkingPrompt {
    std::string text;
    std::vector<QualifiedColumn> candidates;  // aligned with marker pairs in text
};

inline constexpr std::string_view kOpenMarker = "«";   // «
inline constexpr std::string_view kCloseMarker = "»";  // »

/// Renders the linking prompt: subset DDL, `To answer:`, the question,
/// `We need columns:` and one `« {table} {column}»` line per candidate in
/// table order then column order. Throws ValidationError if the question
/// contains a marker character or the subset is empty.
LinkingPrompt render_linking_prompt(const std::vector<Table>& schema_subset,
                                    const std::string& question);

struct PromptChunk {
    std::string db_id;
    std::vector<Table> tables_included;  // ordered subset of the schema
    std::vector<QualifiedColumn> candidates;
    std::string rendered_text;
    std::size_t token_count = 0;
};

/// Greedy first-fit over tables in schema order: a table joins the current
/// chunk while the fully rendered chunk stays within the budget. Every table
/// lands in exactly one chunk. Throws ValidationError naming the table when a
/// single table cannot fit the budget on its own.
std::vector<PromptChunk> chunk_schema(const DatabaseSchema& schema, const std::string& question,
                                      std::size_t budget,
                                      const TokenEstimator& estimator = default_token_estimator);

/// Default prompt budget used across the toolkit.
inline constexpr std::size_t kDefaultTokenBudget = 3000;

}  // namespace schemalink
