#include "schemalink/ground_truth.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>

#include "schemalink/errors.hpp"
#include "schemalink/sql.hpp"
#include "schemalink/text.hpp"

namespace schemalink {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::Selected: return "selected";
        case Role::Join: return "join";
        case Role::Condition: return "condition";
        case Role::Order: return "order";
        case Role::Group: return "group";
    }
    return "selected";
}

Role role_from_string(std::string_view name) {
    for (Role r : kAllRoles) {
        if (to_string(r) == name) return r;
    }
    throw ValidationError("unknown role name '" + std::string(name) + "'");
}

bool SchemaLink::touches_table(std::string_view table) const {
    for (const auto& [qc, entry] : entries) {
        if (qc.table == table) return true;
    }
    return false;
}

namespace {

constexpr bool is_aggregate_name(std::string_view name) {
    return name == "count" || name == "sum" || name == "avg" || name == "min" || name == "max";
}

/// Walks one parsed query against a schema, accumulating role-labeled base
/// columns. Subqueries are role boundaries: their columns take roles from
/// their own clauses, never from the enclosing expression.
class Extractor {
  public:
    Extractor(const DatabaseSchema& schema, std::string question_id,
              std::vector<AuditNote>* notes)
        : schema_(schema), notes_(notes) {
        link_.question_id = std::move(question_id);
        link_.db_id = schema.db_id;
    }

    SchemaLink run(const sql::Query& query) {
        walk_query(query, nullptr);
        add_fallback_entries();
        return std::move(link_);
    }

  private:
    struct Scope;

    struct Source {
        std::string alias;               // may be empty
        const Table* table = nullptr;    // base table, exclusive with derived
        const Scope* derived = nullptr;  // scope of a FROM (SELECT ...) first core
    };

    struct Scope {
        std::vector<Source> sources;
        const Scope* parent = nullptr;
        const sql::SelectCore* core = nullptr;
    };

    // --- query traversal ----------------------------------------------------

    const Scope* walk_query(const sql::Query& query, const Scope* parent) {
        const Scope* first = nullptr;
        for (const sql::SelectCore& core : query.cores) {
            const Scope* scope = walk_core(core, parent);
            if (first == nullptr) first = scope;
        }
        return first;
    }

    const Scope* walk_core(const sql::SelectCore& core, const Scope* parent) {
        arena_.push_back(std::make_unique<Scope>());
        Scope& scope = *arena_.back();
        scope.parent = parent;
        scope.core = &core;

        for (const sql::TableRef& ref : core.from) add_source(scope, ref, parent);
        for (const sql::JoinClause& join : core.joins) add_source(scope, join.table, parent);

        for (const sql::SelectItem& item : core.select_list) walk_value(*item.expr, scope);
        for (const sql::JoinClause& join : core.joins) {
            if (join.on) walk_clause(*join.on, scope, Role::Join, false);
        }
        if (core.where) walk_clause(*core.where, scope, Role::Condition, false);
        for (const sql::ExprPtr& item : core.group_by) {
            walk_positional(*item, scope, Role::Group, true);
        }
        if (core.having) walk_clause(*core.having, scope, Role::Condition, true);
        for (const sql::OrderItem& item : core.order_by) {
            walk_positional(*item.expr, scope, Role::Order, true);
        }
        return &scope;
    }

    void add_source(Scope& scope, const sql::TableRef& ref, const Scope* parent) {
        Source src;
        src.alias = ref.alias;
        if (ref.subquery) {
            src.derived = walk_query(*ref.subquery, parent);
        } else {
            const Table* table = schema_.find_table(ref.table);
            if (table == nullptr) {
                throw IntegrityError("query references unknown table '" + ref.table +
                                     "' in schema '" + schema_.db_id + "'");
            }
            src.table = table;
            referenced_tables_.insert(table->name);
        }
        scope.sources.push_back(std::move(src));
    }

    // --- select-list walk: value positions are `selected` --------------------

    void walk_value(const sql::Expr& expr, const Scope& scope) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, sql::ColumnRef>) {
                    apply_ref(node, scope, Role::Selected, false);
                } else if constexpr (std::is_same_v<T, sql::Star>) {
                    for (const QualifiedColumn& qc : expand_star(node.qualifier, scope)) {
                        add_role(qc, Role::Selected);
                    }
                } else if constexpr (std::is_same_v<T, sql::UnaryMinus>) {
                    walk_value(*node.operand, scope);
                } else if constexpr (std::is_same_v<T, sql::Arithmetic>) {
                    walk_value(*node.left, scope);
                    walk_value(*node.right, scope);
                } else if constexpr (std::is_same_v<T, sql::FunctionCall>) {
                    for (const sql::ExprPtr& arg : node.args) walk_value(*arg, scope);
                } else if constexpr (std::is_same_v<T, sql::CaseExpr>) {
                    // WHEN predicates are comparisons; THEN/ELSE produce the value.
                    if (node.operand) walk_clause(*node.operand, scope, Role::Condition, false);
                    for (const auto& [condition, result] : node.whens) {
                        walk_clause(*condition, scope, Role::Condition, false);
                        walk_value(*result, scope);
                    }
                    if (node.else_expr) walk_value(*node.else_expr, scope);
                } else if constexpr (std::is_same_v<T, sql::ScalarSubquery>) {
                    walk_query(*node.query, &scope);
                } else if constexpr (std::is_same_v<T, sql::Comparison> ||
                                     std::is_same_v<T, sql::BoolCombine> ||
                                     std::is_same_v<T, sql::NotExpr> ||
                                     std::is_same_v<T, sql::Between> ||
                                     std::is_same_v<T, sql::InList> ||
                                     std::is_same_v<T, sql::InSubquery> ||
                                     std::is_same_v<T, sql::Like> ||
                                     std::is_same_v<T, sql::IsNull>) {
                    // A predicate selected as a value is still a comparison.
                    walk_clause(expr, scope, Role::Condition, false);
                }
                // literals: nothing
            },
            expr.node);
    }

    // --- predicate walk: every column gets `role` ----------------------------

    void walk_clause(const sql::Expr& expr, const Scope& scope, Role role, bool alias_fallback) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, sql::ColumnRef>) {
                    apply_ref(node, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::Star>) {
                    for (const QualifiedColumn& qc : expand_star(node.qualifier, scope)) {
                        add_role(qc, role);
                    }
                } else if constexpr (std::is_same_v<T, sql::UnaryMinus>) {
                    walk_clause(*node.operand, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::Arithmetic>) {
                    walk_clause(*node.left, scope, role, alias_fallback);
                    walk_clause(*node.right, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::Comparison>) {
                    maybe_note_where_equijoin(node, scope, role);
                    walk_clause(*node.left, scope, role, alias_fallback);
                    walk_clause(*node.right, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::BoolCombine>) {
                    walk_clause(*node.left, scope, role, alias_fallback);
                    walk_clause(*node.right, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::NotExpr>) {
                    walk_clause(*node.operand, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::Between>) {
                    walk_clause(*node.operand, scope, role, alias_fallback);
                    walk_clause(*node.low, scope, role, alias_fallback);
                    walk_clause(*node.high, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::InList>) {
                    walk_clause(*node.operand, scope, role, alias_fallback);
                    for (const sql::ExprPtr& item : node.items) {
                        walk_clause(*item, scope, role, alias_fallback);
                    }
                } else if constexpr (std::is_same_v<T, sql::InSubquery>) {
                    walk_clause(*node.operand, scope, role, alias_fallback);
                    walk_query(*node.subquery, &scope);
                } else if constexpr (std::is_same_v<T, sql::Like>) {
                    walk_clause(*node.operand, scope, role, alias_fallback);
                    walk_clause(*node.pattern, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::IsNull>) {
                    walk_clause(*node.operand, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::FunctionCall>) {
                    for (const sql::ExprPtr& arg : node.args) {
                        walk_clause(*arg, scope, role, alias_fallback);
                    }
                } else if constexpr (std::is_same_v<T, sql::CaseExpr>) {
                    if (node.operand) walk_clause(*node.operand, scope, role, alias_fallback);
                    for (const auto& [condition, result] : node.whens) {
                        walk_clause(*condition, scope, role, alias_fallback);
                        walk_clause(*result, scope, role, alias_fallback);
                    }
                    if (node.else_expr) walk_clause(*node.else_expr, scope, role, alias_fallback);
                } else if constexpr (std::is_same_v<T, sql::ScalarSubquery>) {
                    walk_query(*node.query, &scope);
                }
            },
            expr.node);
    }

    // --- ORDER BY / GROUP BY walk --------------------------------------------

    void walk_positional(const sql::Expr& expr, const Scope& scope, Role role, bool top_level) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, sql::NumberLit>) {
                    if (top_level) apply_output_position(node.text, scope, role);
                } else if constexpr (std::is_same_v<T, sql::ColumnRef>) {
                    apply_ref(node, scope, role, true);
                } else if constexpr (std::is_same_v<T, sql::Star>) {
                    for (const QualifiedColumn& qc : expand_star(node.qualifier, scope)) {
                        add_role(qc, role);
                    }
                } else if constexpr (std::is_same_v<T, sql::UnaryMinus>) {
                    walk_positional(*node.operand, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::Arithmetic>) {
                    walk_positional(*node.left, scope, role, false);
                    walk_positional(*node.right, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::Comparison>) {
                    walk_positional(*node.left, scope, role, false);
                    walk_positional(*node.right, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::BoolCombine>) {
                    walk_positional(*node.left, scope, role, false);
                    walk_positional(*node.right, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::NotExpr>) {
                    walk_positional(*node.operand, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::Between>) {
                    walk_positional(*node.operand, scope, role, false);
                    walk_positional(*node.low, scope, role, false);
                    walk_positional(*node.high, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::InList>) {
                    walk_positional(*node.operand, scope, role, false);
                    for (const sql::ExprPtr& item : node.items) {
                        walk_positional(*item, scope, role, false);
                    }
                } else if constexpr (std::is_same_v<T, sql::InSubquery>) {
                    walk_positional(*node.operand, scope, role, false);
                    walk_query(*node.subquery, &scope);
                } else if constexpr (std::is_same_v<T, sql::Like>) {
                    walk_positional(*node.operand, scope, role, false);
                    walk_positional(*node.pattern, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::IsNull>) {
                    walk_positional(*node.operand, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::FunctionCall>) {
                    if (role == Role::Order && is_aggregate_name(node.name) && !node.args.empty()) {
                        note_order_by_aggregate(node, scope);
                    }
                    for (const sql::ExprPtr& arg : node.args) {
                        walk_positional(*arg, scope, role, false);
                    }
                } else if constexpr (std::is_same_v<T, sql::CaseExpr>) {
                    if (node.operand) walk_positional(*node.operand, scope, role, false);
                    for (const auto& [condition, result] : node.whens) {
                        walk_positional(*condition, scope, role, false);
                        walk_positional(*result, scope, role, false);
                    }
                    if (node.else_expr) walk_positional(*node.else_expr, scope, role, false);
                } else if constexpr (std::is_same_v<T, sql::ScalarSubquery>) {
                    walk_query(*node.query, &scope);
                }
            },
            expr.node);
    }

    /// ORDER BY 2 / GROUP BY 1: the integer names a select-list position.
    void apply_output_position(const std::string& text, const Scope& scope, Role role) {
        if (scope.core == nullptr) return;
        long long position = 0;
        try {
            position = std::stoll(text);
        } catch (...) {
            return;
        }
        const auto& items = scope.core->select_list;
        if (position < 1 || static_cast<std::size_t>(position) > items.size()) return;
        for (const QualifiedColumn& qc :
             collect_value_columns(*items[static_cast<std::size_t>(position - 1)].expr, scope)) {
            add_role(qc, role);
        }
    }

    /// Base columns in value positions of an expression, subqueries excluded.
    std::vector<QualifiedColumn> collect_value_columns(const sql::Expr& expr, const Scope& scope) {
        std::vector<QualifiedColumn> out;
        collect_value_columns_into(expr, scope, out);
        return out;
    }

    void collect_value_columns_into(const sql::Expr& expr, const Scope& scope,
                                    std::vector<QualifiedColumn>& out) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, sql::ColumnRef>) {
                    if (auto qc = resolve_ref(node, scope)) out.push_back(*qc);
                } else if constexpr (std::is_same_v<T, sql::Star>) {
                    for (const QualifiedColumn& qc : expand_star(node.qualifier, scope)) {
                        out.push_back(qc);
                    }
                } else if constexpr (std::is_same_v<T, sql::UnaryMinus>) {
                    collect_value_columns_into(*node.operand, scope, out);
                } else if constexpr (std::is_same_v<T, sql::Arithmetic>) {
                    collect_value_columns_into(*node.left, scope, out);
                    collect_value_columns_into(*node.right, scope, out);
                } else if constexpr (std::is_same_v<T, sql::Comparison>) {
                    collect_value_columns_into(*node.left, scope, out);
                    collect_value_columns_into(*node.right, scope, out);
                } else if constexpr (std::is_same_v<T, sql::FunctionCall>) {
                    for (const sql::ExprPtr& arg : node.args) {
                        collect_value_columns_into(*arg, scope, out);
                    }
                } else if constexpr (std::is_same_v<T, sql::CaseExpr>) {
                    if (node.operand) collect_value_columns_into(*node.operand, scope, out);
                    for (const auto& [condition, result] : node.whens) {
                        collect_value_columns_into(*condition, scope, out);
                        collect_value_columns_into(*result, scope, out);
                    }
                    if (node.else_expr) collect_value_columns_into(*node.else_expr, scope, out);
                }
            },
            expr.node);
    }

    // --- name resolution ------------------------------------------------------

    /// Resolution result for a ref that lands somewhere legal: either a base
    /// column or nothing (derived expression output).
    using Resolution = std::optional<QualifiedColumn>;

    void apply_ref(const sql::ColumnRef& ref, const Scope& scope, Role role,
                   bool alias_fallback) {
        if (alias_fallback && ref.qualifier.empty() && scope.core != nullptr &&
            !name_visible(ref.column, scope)) {
            // GROUP BY / ORDER BY / HAVING may name a select alias.
            for (const sql::SelectItem& item : scope.core->select_list) {
                if (select_output_name(item) == ref.column) {
                    for (const QualifiedColumn& qc : collect_value_columns(*item.expr, scope)) {
                        add_role(qc, role);
                    }
                    return;
                }
            }
        }
        if (Resolution qc = resolve_ref(ref, scope)) add_role(*qc, role);
    }

    bool name_visible(const std::string& column, const Scope& scope) const {
        for (const Scope* s = &scope; s != nullptr; s = s->parent) {
            for (const Source& src : s->sources) {
                if (src.table != nullptr && src.table->find_column(column) != nullptr) return true;
                if (src.derived != nullptr && derived_lookup(*src.derived, column).has_value()) {
                    return true;
                }
            }
        }
        return false;
    }

    /// Resolves a column reference to its base column. Throws ResolutionError
    /// on ambiguity and IntegrityError when the name matches nothing.
    Resolution resolve_ref(const sql::ColumnRef& ref, const Scope& scope) {
        if (!ref.qualifier.empty()) {
            for (const Scope* s = &scope; s != nullptr; s = s->parent) {
                for (const Source& src : s->sources) {
                    if (!source_matches(src, ref.qualifier)) continue;
                    if (src.table != nullptr) {
                        if (src.table->find_column(ref.column) == nullptr) {
                            throw IntegrityError("column '" + ref.column + "' does not exist in " +
                                                 "table '" + src.table->name + "' (schema '" +
                                                 schema_.db_id + "')");
                        }
                        return QualifiedColumn{src.table->name, ref.column};
                    }
                    auto hit = derived_lookup(*src.derived, ref.column);
                    if (!hit.has_value()) {
                        throw IntegrityError("column '" + ref.column +
                                             "' is not an output of derived table '" +
                                             ref.qualifier + "'");
                    }
                    return *hit;
                }
            }
            throw ResolutionError("unknown table or alias '" + ref.qualifier + "'");
        }

        for (const Scope* s = &scope; s != nullptr; s = s->parent) {
            std::vector<std::pair<const Source*, Resolution>> hits;
            for (const Source& src : s->sources) {
                if (src.table != nullptr) {
                    if (src.table->find_column(ref.column) != nullptr) {
                        hits.emplace_back(&src, QualifiedColumn{src.table->name, ref.column});
                    }
                } else if (auto hit = derived_lookup(*src.derived, ref.column)) {
                    hits.emplace_back(&src, *hit);
                }
            }
            if (hits.size() > 1) {
                std::string owners;
                for (const auto& [src, _] : hits) {
                    if (!owners.empty()) owners += ", ";
                    owners += src->table != nullptr ? src->table->name
                                                    : (src->alias.empty() ? "<derived>" : src->alias);
                }
                throw ResolutionError("column '" + ref.column + "' is ambiguous between " + owners);
            }
            if (hits.size() == 1) return hits.front().second;
        }
        throw IntegrityError("column '" + ref.column + "' cannot be resolved against any table " +
                             "in scope (schema '" + schema_.db_id + "')");
    }

    static bool source_matches(const Source& src, const std::string& qualifier) {
        if (!src.alias.empty() && src.alias == qualifier) return true;
        return src.table != nullptr && src.table->name == qualifier;
    }

    /// Looks up a name among a derived table's outputs without throwing.
    /// outer optional: name found at all; inner Resolution: base column or not.
    std::optional<Resolution> derived_lookup(const Scope& derived,
                                             const std::string& column) const {
        if (derived.core == nullptr) return std::nullopt;
        for (const sql::SelectItem& item : derived.core->select_list) {
            if (const auto* star = std::get_if<sql::Star>(&item.expr->node)) {
                auto through = star_lookup(*star, derived, column);
                if (through.has_value()) return through;
                continue;
            }
            if (select_output_name(item) != column) continue;
            if (const auto* ref = std::get_if<sql::ColumnRef>(&item.expr->node)) {
                return lookup_nothrow(*ref, derived);
            }
            return Resolution{};  // expression output: legal name, no base column
        }
        return std::nullopt;
    }

    std::optional<Resolution> star_lookup(const sql::Star& star, const Scope& scope,
                                          const std::string& column) const {
        for (const Source& src : scope.sources) {
            if (!star.qualifier.empty() && !source_matches(src, star.qualifier)) continue;
            if (src.table != nullptr) {
                if (src.table->find_column(column) != nullptr) {
                    return Resolution{QualifiedColumn{src.table->name, column}};
                }
            } else if (auto hit = derived_lookup(*src.derived, column)) {
                return hit;
            }
        }
        return std::nullopt;
    }

    std::optional<Resolution> lookup_nothrow(const sql::ColumnRef& ref, const Scope& scope) const {
        if (!ref.qualifier.empty()) {
            for (const Scope* s = &scope; s != nullptr; s = s->parent) {
                for (const Source& src : s->sources) {
                    if (!source_matches(src, ref.qualifier)) continue;
                    if (src.table != nullptr) {
                        if (src.table->find_column(ref.column) != nullptr) {
                            return Resolution{QualifiedColumn{src.table->name, ref.column}};
                        }
                        return std::nullopt;
                    }
                    return derived_lookup(*src.derived, ref.column);
                }
            }
            return std::nullopt;
        }
        for (const Scope* s = &scope; s != nullptr; s = s->parent) {
            for (const Source& src : s->sources) {
                if (src.table != nullptr && src.table->find_column(ref.column) != nullptr) {
                    return Resolution{QualifiedColumn{src.table->name, ref.column}};
                }
                if (src.derived != nullptr) {
                    if (auto hit = derived_lookup(*src.derived, ref.column)) return hit;
                }
            }
        }
        return std::nullopt;
    }

    static std::string select_output_name(const sql::SelectItem& item) {
        if (!item.alias.empty()) return item.alias;
        if (const auto* ref = std::get_if<sql::ColumnRef>(&item.expr->node)) return ref->column;
        return "";
    }

    std::vector<QualifiedColumn> expand_star(const std::string& qualifier, const Scope& scope) {
        std::vector<QualifiedColumn> out;
        auto expand_source = [&](const Source& src) {
            if (src.table != nullptr) {
                for (const Column& c : src.table->columns) out.push_back({src.table->name, c.name});
            } else if (src.derived != nullptr && src.derived->core != nullptr) {
                for (const sql::SelectItem& item : src.derived->core->select_list) {
                    for (const QualifiedColumn& qc :
                         collect_value_columns(*item.expr, *src.derived)) {
                        out.push_back(qc);
                    }
                }
            }
        };
        if (qualifier.empty()) {
            for (const Source& src : scope.sources) expand_source(src);
            return out;
        }
        for (const Scope* s = &scope; s != nullptr; s = s->parent) {
            for (const Source& src : s->sources) {
                if (source_matches(src, qualifier)) {
                    expand_source(src);
                    return out;
                }
            }
        }
        throw ResolutionError("unknown table or alias '" + qualifier + "' in '" + qualifier +
                              ".*'");
    }

    // --- audit notes ----------------------------------------------------------

    void maybe_note_where_equijoin(const sql::Comparison& node, const Scope& scope, Role role) {
        if (notes_ == nullptr || role != Role::Condition || node.op != sql::CompareOp::Eq) return;
        const auto* left = std::get_if<sql::ColumnRef>(&node.left->node);
        const auto* right = std::get_if<sql::ColumnRef>(&node.right->node);
        if (left == nullptr || right == nullptr) return;
        auto lhs = lookup_nothrow(*left, scope);
        auto rhs = lookup_nothrow(*right, scope);
        if (!lhs || !*lhs || !rhs || !*rhs) return;
        if ((**lhs).table == (**rhs).table) return;
        notes_->push_back({link_.question_id, "where_equijoin",
                           (**lhs).to_string() + " = " + (**rhs).to_string()});
    }

    void note_order_by_aggregate(const sql::FunctionCall& call, const Scope& scope) {
        if (notes_ == nullptr) return;
        std::string cols;
        for (const sql::ExprPtr& arg : call.args) {
            for (const QualifiedColumn& qc : collect_value_columns(*arg, scope)) {
                if (!cols.empty()) cols += ", ";
                cols += qc.to_string();
            }
        }
        if (cols.empty()) return;
        notes_->push_back({link_.question_id, "order_by_aggregate", call.name + "(" + cols + ")"});
    }

    // --- link assembly ----------------------------------------------------------

    void add_role(const QualifiedColumn& qc, Role role) { link_.entries[qc].roles.insert(role); }

    void add_fallback_entries() {
        for (const std::string& table_name : referenced_tables_) {
            if (link_.touches_table(table_name)) continue;
            const Table* table = schema_.find_table(table_name);
            LinkEntry entry;
            entry.fallback = true;
            link_.entries.emplace(QualifiedColumn{table->name, table->columns.front().name},
                                  entry);
        }
    }

    const DatabaseSchema& schema_;
    std::vector<AuditNote>* notes_;
    SchemaLink link_;
    std::set<std::string> referenced_tables_;
    std::vector<std::unique_ptr<Scope>> arena_;
};

}  // namespace

SchemaLink extract_ground_truth(const std::string& sql, const DatabaseSchema& schema,
                                std::string question_id, std::vector<AuditNote>* notes) {
    sql::Query query = sql::parse_sql(sql);
    Extractor extractor(schema, std::move(question_id), notes);
    return extractor.run(query);
}

// --- corpus extraction ---------------------------------------------------------

ExtractionResult extract_corpus_from_json(std::string_view json_text,
                                          const std::vector<DatabaseSchema>& catalog) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("dataset: ") + err.what(), err.byte);
    }
    if (!doc.is_array()) throw ValidationError("dataset must be a JSON array");

    ExtractionResult result;
    result.report.total_rows = doc.size();

    for (std::size_t row = 0; row < doc.size(); ++row) {
        const json& entry = doc.at(row);
        std::string question_id = std::to_string(row);
        std::string db_id;
        try {
            if (!entry.is_object()) throw ValidationError("row is not an object");
            if (entry.contains("question_id")) {
                const json& qid = entry.at("question_id");
                question_id = qid.is_string() ? qid.get<std::string>() : qid.dump();
            }
            db_id = entry.value("db_id", "");
            std::string question = entry.value("question", "");
            std::string sql_text;
            if (entry.contains("query")) {
                sql_text = entry.at("query").get<std::string>();
            } else if (entry.contains("SQL")) {
                sql_text = entry.at("SQL").get<std::string>();
            } else {
                throw ValidationError("row has neither 'query' nor 'SQL'");
            }

            const DatabaseSchema* schema = nullptr;
            for (const DatabaseSchema& s : catalog) {
                if (s.db_id == db_id) {
                    schema = &s;
                    break;
                }
            }
            if (schema == nullptr) throw IntegrityError("unknown db_id '" + db_id + "'");

            LabeledExample example;
            example.question_id = question_id;
            example.db_id = db_id;
            example.question = std::move(question);
            example.sql = sql_text;
            example.link =
                extract_ground_truth(sql_text, *schema, question_id, &result.report.notes);
            result.examples.push_back(std::move(example));
            ++result.report.extracted;
        } catch (const std::exception& err) {
            result.report.failures.push_back({row, question_id, db_id, err.what()});
        }
    }
    return result;
}

ExtractionResult extract_corpus(const std::string& dataset_path,
                                const std::vector<DatabaseSchema>& catalog) {
    std::ifstream in(dataset_path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + dataset_path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return extract_corpus_from_json(buffer.str(), catalog);
}

std::string ExtractionReport::to_json() const {
    json failures_json = json::array();
    for (const RowFailure& f : failures) {
        failures_json.push_back({{"row", f.row_index},
                                 {"question_id", f.question_id},
                                 {"db_id", f.db_id},
                                 {"reason", f.reason}});
    }
    json notes_json = json::array();
    for (const AuditNote& n : notes) {
        notes_json.push_back(
            {{"question_id", n.question_id}, {"kind", n.kind}, {"detail", n.detail}});
    }
    json doc = {{"total_rows", total_rows},
                {"extracted", extracted},
                {"failures", failures_json},
                {"notes", notes_json}};
    return doc.dump(2) + "\n";
}

// --- diff -----------------------------------------------------------------------

LinkDiff diff_links(const SchemaLink& a, const SchemaLink& b) {
    if (a.db_id != b.db_id) {
        throw ValidationError("diff_links: database mismatch ('" + a.db_id + "' vs '" + b.db_id +
                              "')");
    }
    LinkDiff diff;
    for (const auto& [qc, entry] : a.entries) {
        auto it = b.entries.find(qc);
        if (it == b.entries.end()) {
            diff.only_in_a.push_back(qc);
        } else if (entry.roles != it->second.roles) {
            diff.role_mismatches.push_back({qc, entry.roles, it->second.roles});
        }
    }
    for (const auto& [qc, entry] : b.entries) {
        if (a.entries.count(qc) == 0) diff.only_in_b.push_back(qc);
    }
    return diff;
}

namespace {

json roles_to_json(const RoleSet& roles) {
    json arr = json::array();
    for (Role r : roles.to_vector()) arr.push_back(std::string(to_string(r)));
    return arr;
}

}  // namespace

std::string LinkDiff::to_json() const {
    json only_a = json::array();
    for (const QualifiedColumn& qc : only_in_a) only_a.push_back(qc.to_string());
    json only_b = json::array();
    for (const QualifiedColumn& qc : only_in_b) only_b.push_back(qc.to_string());
    json mismatches = json::array();
    for (const RoleMismatch& m : role_mismatches) {
        mismatches.push_back({{"column", m.column.to_string()},
                              {"roles_a", roles_to_json(m.in_a)},
                              {"roles_b", roles_to_json(m.in_b)}});
    }
    json doc = {{"only_in_a", only_a}, {"only_in_b", only_b}, {"role_mismatches", mismatches}};
    return doc.dump(2) + "\n";
}

// --- canonical link file ----------------------------------------------------------

std::string link_to_json_line(const SchemaLink& link) {
    json columns = json::array();
    for (const auto& [qc, entry] : link.entries) {
        json column = {{"table", qc.table},
                       {"column", qc.column},
                       {"roles", roles_to_json(entry.roles)},
                       {"fallback", entry.fallback}};
        if (entry.noise) column["noise"] = true;
        columns.push_back(std::move(column));
    }
    json doc = {{"question_id", link.question_id}, {"db_id", link.db_id}, {"columns", columns}};
    return doc.dump();
}

SchemaLink link_from_json_line(std::string_view line) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("link line: ") + err.what(), err.byte);
    }
    SchemaLink link;
    link.question_id = doc.at("question_id").get<std::string>();
    link.db_id = doc.at("db_id").get<std::string>();
    for (const json& column : doc.at("columns")) {
        QualifiedColumn qc{column.at("table").get<std::string>(),
                           column.at("column").get<std::string>()};
        LinkEntry entry;
        for (const json& role : column.at("roles")) {
            entry.roles.insert(role_from_string(role.get<std::string>()));
        }
        entry.fallback = column.value("fallback", false);
        entry.noise = column.value("noise", false);
        if (!link.entries.emplace(qc, entry).second) {
            throw ValidationError("link line for question '" + link.question_id +
                                  "' repeats column '" + qc.to_string() + "'");
        }
    }
    return link;
}

void write_link_file(const std::string& path, const std::vector<SchemaLink>& links) {
    std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write link file '" + path + "'");
        for (const SchemaLink& link : links) out << link_to_json_line(link) << "\n";
    }
    std::rename(temp.c_str(), path.c_str());
}

std::vector<SchemaLink> read_link_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open link file '" + path + "'");
    std::vector<SchemaLink> links;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        links.push_back(link_from_json_line(line));
    }
    return links;
}

}  // namespace schemalink
