#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "schemalink/schema.hpp"

namespace schemalink {

/// Clause-level function a column plays in a query. Order is canonical and
/// used everywhere roles are listed or serialized.
enum class Role : std::uint8_t { Selected = 0, Join, Condition, Order, Group };

inline constexpr std::array<Role, 5> kAllRoles = {Role::Selected, Role::Join, Role::Condition,
                                                  Role::Order, Role::Group};
inline constexpr std::size_t kRoleCount = kAllRoles.size();

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

/// Small value-semantic set over the five roles.
class RoleSet {
  public:
    constexpr RoleSet() = default;
    constexpr RoleSet(std::initializer_list<Role> roles) {
        for (Role r : roles) insert(r);
    }

    constexpr void insert(Role role) { bits_ |= mask(role); }
    constexpr bool contains(Role role) const { return (bits_ & mask(role)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::size_t size() const { return static_cast<std::size_t>(__builtin_popcount(bits_)); }

    std::vector<Role> to_vector() const {
        std::vector<Role> out;
        for (Role r : kAllRoles) {
            if (contains(r)) out.push_back(r);
        }
        return out;
    }

    constexpr auto operator<=>(const RoleSet&) const = default;

  private:
    static constexpr std::uint8_t mask(Role role) {
        return static_cast<std::uint8_t>(1u << static_cast<std::uint8_t>(role));
    }
    std::uint8_t bits_ = 0;
};

struct LinkEntry {
    RoleSet roles;
    bool fallback = false;  // first-column fallback; role set empty by construction
    bool noise = false;     // added by noise injection, not by SQL analysis

    auto operator<=>(const LinkEntry&) const = default;
};

/// Role-labeled set of qualified columns for one question.
struct SchemaLink {
    std::string question_id;
    std::string db_id;
    std::map<QualifiedColumn, LinkEntry> entries;

    bool contains(const QualifiedColumn& qc) const { return entries.count(qc) > 0; }
    bool touches_table(std::string_view table) const;

    bool operator==(const SchemaLink&) const = default;
};

struct LabeledExample {
    std::string question_id;
    std::string db_id;
    std::string question;
    std::string sql;
    SchemaLink link;
};

struct AuditNote {
    std::string question_id;
    std::string kind;  // "where_equijoin" | "order_by_aggregate"
    std::string detail;
};

struct RowFailure {
    std::size_t row_index = 0;
    std::string question_id;
    std::string db_id;
    std::string reason;
};

struct ExtractionReport {
    std::size_t total_rows = 0;
    std::size_t extracted = 0;
    std::vector<RowFailure> failures;
    std::vector<AuditNote> notes;

    std::string to_json() const;  // deterministic, indented
};

struct ExtractionResult {
    std::vector<LabeledExample> examples;
    ExtractionReport report;
};

/// Parses the SQL and assigns roles to every referenced base column:
/// selected for SELECT lists (outermost or sub-select, including aggregate
/// arguments), join for JOIN..ON comparisons, condition for all other
/// comparisons, order/group for ORDER BY / GROUP BY. Tables referenced
/// without contributing a column get their first schema column with the
/// fallback flag. Throws ParseError / ResolutionError / IntegrityError.
SchemaLink extract_ground_truth(const std::string& sql, const DatabaseSchema& schema,
                                std::string question_id = "",
                                std::vector<AuditNote>* notes = nullptr);

/// Runs extract_ground_truth over a Spider/BIRD-layout dataset file
/// (JSON array with question, query|SQL, db_id). Per-row failures are
/// collected in the report, never thrown.
ExtractionResult extract_corpus(const std::string& dataset_path,
                                const std::vector<DatabaseSchema>& catalog);
ExtractionResult extract_corpus_from_json(std::string_view json_text,
                                          const std::vector<DatabaseSchema>& catalog);

struct RoleMismatch {
    QualifiedColumn column;
    RoleSet in_a;
    RoleSet in_b;
};

struct LinkDiff {
    std::vector<QualifiedColumn> only_in_a;
    std::vector<QualifiedColumn> only_in_b;
    std::vector<RoleMismatch> role_mismatches;

    bool empty() const {
        return only_in_a.empty() && only_in_b.empty() && role_mismatches.empty();
    }
    std::string to_json() const;
};

/// Structured difference between two links for the same database.
/// Throws ValidationError when the db_ids differ.
LinkDiff diff_links(const SchemaLink& a, const SchemaLink& b);

// Canonical link file format: one JSON object per line with question_id,
// db_id and a columns array carrying table, column, roles and fallback.

std::string link_to_json_line(const SchemaLink& link);
SchemaLink link_from_json_line(std::string_view line);

void write_link_file(const std::string& path, const std::vector<SchemaLink>& links);
std::vector<SchemaLink> read_link_file(const std::string& path);

}  // namespace schemalink
