#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "schemalink/ground_truth.hpp"
#include "schemalink/rng.hpp"
#include "schemalink/schema.hpp"

namespace schemalink::testing {

inline std::string fixture_path(const std::string& name) {
    return std::string(SCHEMALINK_FIXTURE_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
    return std::string(SCHEMALINK_GOLDEN_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(static_cast<bool>(in), "missing file ", path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::vector<DatabaseSchema> fixture_catalog() {
    return load_schema_catalog(fixture_path("tables_fixture.json"));
}

inline const DatabaseSchema& schema_by_id(const std::vector<DatabaseSchema>& catalog,
                                          const std::string& db_id) {
    for (const DatabaseSchema& schema : catalog) {
        if (schema.db_id == db_id) return schema;
    }
    REQUIRE_MESSAGE(false, "no schema ", db_id, " in catalog");
    static DatabaseSchema dummy;
    return dummy;
}

/// A two-table schema with globally unique column names, so template
/// queries never hit accidental ambiguity.
inline DatabaseSchema generator_schema() {
    DatabaseSchema schema;
    schema.db_id = "gen_db";
    Table alpha;
    alpha.name = "alpha";
    alpha.columns = {{"a_key", ColumnType::Number}, {"a_name", ColumnType::Text},
                     {"a_size", ColumnType::Number}, {"a_city", ColumnType::Text},
                     {"a_score", ColumnType::Number}, {"a_note", ColumnType::Text}};
    alpha.primary_keys = {"a_key"};
    Table beta;
    beta.name = "beta";
    beta.columns = {{"b_ref", ColumnType::Number}, {"b_label", ColumnType::Text},
                    {"b_count", ColumnType::Number}, {"b_state", ColumnType::Text},
                    {"b_level", ColumnType::Number}, {"b_tag", ColumnType::Text}};
    beta.foreign_keys = {{"b_ref", "alpha", "a_key"}};
    schema.tables = {alpha, beta};
    schema.validate();
    return schema;
}

/// A random query in the supported subset plus the role map the query
/// implies by construction: the independent oracle for role extraction.
struct TemplateCase {
    std::string sql;
    std::map<QualifiedColumn, LinkEntry> expected;
};

inline TemplateCase make_template_case(SplitMix64& rng, const DatabaseSchema& schema,
                                       const char* alias_a = "T1", const char* alias_b = "T2") {
    const Table& alpha = schema.tables[0];
    const Table& beta = schema.tables[1];
    auto pick = [&](const Table& t) { return t.columns[rng.next_below(t.columns.size())].name; };
    auto add = [](std::map<QualifiedColumn, LinkEntry>& m, const std::string& t,
                  const std::string& c, Role role) { m[{t, c}].roles.insert(role); };

    TemplateCase out;
    switch (rng.next_below(8)) {
        case 0: {
            std::string c1 = pick(alpha), c2 = pick(alpha);
            out.sql = "SELECT " + c1 + ", " + c2 + " FROM alpha";
            add(out.expected, "alpha", c1, Role::Selected);
            add(out.expected, "alpha", c2, Role::Selected);
            break;
        }
        case 1: {
            std::string c1 = pick(alpha), c2 = pick(alpha);
            out.sql = "SELECT " + c1 + " FROM alpha WHERE " + c2 + " > 5";
            add(out.expected, "alpha", c1, Role::Selected);
            add(out.expected, "alpha", c2, Role::Condition);
            break;
        }
        case 2: {
            std::string c1 = pick(beta), c2 = pick(beta), c3 = pick(beta), c4 = pick(beta);
            out.sql = "SELECT " + c1 + " FROM beta WHERE " + c2 + " > 5 AND " + c3 +
                      " LIKE 'x%' ORDER BY " + c4 + " DESC";
            add(out.expected, "beta", c1, Role::Selected);
            add(out.expected, "beta", c2, Role::Condition);
            add(out.expected, "beta", c3, Role::Condition);
            add(out.expected, "beta", c4, Role::Order);
            break;
        }
        case 3: {
            std::string c1 = pick(alpha), c2 = pick(alpha);
            std::string a = alias_a, b = alias_b;
            out.sql = "SELECT " + a + "." + c1 + " FROM alpha AS " + a + " JOIN beta AS " + b +
                      " ON " + a + ".a_key = " + b + ".b_ref GROUP BY " + a + "." + c2 +
                      " HAVING COUNT(*) > 2";
            add(out.expected, "alpha", c1, Role::Selected);
            add(out.expected, "alpha", "a_key", Role::Join);
            add(out.expected, "beta", "b_ref", Role::Join);
            add(out.expected, "alpha", c2, Role::Group);
            break;
        }
        case 4: {
            std::string c1 = pick(alpha);
            out.sql = "SELECT " + c1 + ", COUNT(*) FROM alpha GROUP BY " + c1 +
                      " ORDER BY COUNT(*) DESC LIMIT 5";
            add(out.expected, "alpha", c1, Role::Selected);
            add(out.expected, "alpha", c1, Role::Group);
            break;
        }
        case 5: {
            std::string c1 = pick(alpha), c2 = pick(alpha), c3 = pick(beta), c4 = pick(beta);
            out.sql = "SELECT " + c1 + " FROM alpha WHERE " + c2 + " IN (SELECT " + c3 +
                      " FROM beta WHERE " + c4 + " = 'x')";
            add(out.expected, "alpha", c1, Role::Selected);
            add(out.expected, "alpha", c2, Role::Condition);
            add(out.expected, "beta", c3, Role::Selected);
            add(out.expected, "beta", c4, Role::Condition);
            break;
        }
        case 6: {
            out.sql = "SELECT COUNT(*) FROM beta";
            LinkEntry fallback;
            fallback.fallback = true;
            out.expected.emplace(QualifiedColumn{"beta", beta.columns.front().name}, fallback);
            break;
        }
        default: {
            std::string c1 = pick(beta), c2 = pick(beta);
            out.sql = "SELECT DISTINCT " + c1 + " FROM beta WHERE " + c2 + " BETWEEN 1 AND 10";
            add(out.expected, "beta", c1, Role::Selected);
            add(out.expected, "beta", c2, Role::Condition);
            break;
        }
    }
    return out;
}

}  // namespace schemalink::testing
