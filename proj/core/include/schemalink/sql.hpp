#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace schemalink::sql {

// AST for the cross-database Text-to-SQL subset: single SELECT statements
// with joins, nested subqueries, set operations, aggregates, CASE, and the
// usual predicate forms. Identifiers are lower-cased at lex time.

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Query;
using QueryPtr = std::unique_ptr<Query>;

enum class CompareOp { Eq, Ne, Lt, Gt, Le, Ge };
enum class ArithOp { Add, Sub, Mul, Div, Mod };
enum class BoolOp { And, Or };

struct ColumnRef {
    std::string qualifier;  // alias or table name as written (lowered); empty if unqualified
    std::string column;
};

struct NumberLit {
    std::string text;
};
struct StringLit {
    std::string text;
};
struct NullLit {};

/// `*` or `t.*` as a select item or COUNT(*) argument.
struct Star {
    std::string qualifier;  // empty for bare *
};

struct UnaryMinus {
    ExprPtr operand;
};
struct Arithmetic {
    ArithOp op;
    ExprPtr left, right;
};
struct Comparison {
    CompareOp op;
    ExprPtr left, right;
};
struct BoolCombine {
    BoolOp op;
    ExprPtr left, right;
};
struct NotExpr {
    ExprPtr operand;
};
struct Between {
    bool negated = false;
    ExprPtr operand, low, high;
};
struct InList {
    bool negated = false;
    ExprPtr operand;
    std::vector<ExprPtr> items;
};
struct InSubquery {
    bool negated = false;
    ExprPtr operand;
    QueryPtr subquery;
};
struct Like {
    bool negated = false;
    ExprPtr operand, pattern;
};
struct IsNull {
    bool negated = false;
    ExprPtr operand;
};
struct FunctionCall {
    std::string name;  // lowered
    bool distinct = false;
    bool star_argument = false;  // COUNT(*)
    std::vector<ExprPtr> args;
};
struct CaseExpr {
    ExprPtr operand;  // may be null (searched CASE)
    std::vector<std::pair<ExprPtr, ExprPtr>> whens;
    ExprPtr else_expr;  // may be null
};
struct ScalarSubquery {
    QueryPtr query;
};

struct Expr {
    std::variant<ColumnRef, NumberLit, StringLit, NullLit, Star, UnaryMinus, Arithmetic, Comparison,
                 BoolCombine, NotExpr, Between, InList, InSubquery, Like, IsNull, FunctionCall,
                 CaseExpr, ScalarSubquery>
        node;
};

struct TableRef {
    std::string table;  // base table name (lowered); empty for derived tables
    QueryPtr subquery;  // non-null for FROM (SELECT ...)
    std::string alias;  // lowered; may be empty
};

struct JoinClause {
    TableRef table;
    ExprPtr on;  // may be null (CROSS JOIN / comma semantics)
};

struct SelectItem {
    ExprPtr expr;
    std::string alias;  // lowered; may be empty
};

struct OrderItem {
    ExprPtr expr;
    bool descending = false;
};

struct SelectCore {
    bool distinct = false;
    std::vector<SelectItem> select_list;
    std::vector<TableRef> from;  // comma-separated sources; first is the anchor
    std::vector<JoinClause> joins;
    ExprPtr where;   // may be null
    std::vector<ExprPtr> group_by;
    ExprPtr having;  // may be null
    std::vector<OrderItem> order_by;
    std::optional<long long> limit;
    std::optional<long long> offset;
};

enum class SetOp { Union, UnionAll, Intersect, Except };

/// A possibly-compound query: cores joined left-to-right by set operations.
/// ops.size() == cores.size() - 1.
struct Query {
    std::vector<SelectCore> cores;
    std::vector<SetOp> ops;
};

/// Parses one statement of the supported subset. Alias scopes are checked
/// structurally: every qualifier must name an alias or a FROM source of its
/// own or an enclosing query. Throws ParseError (with character position)
/// on syntax errors and ResolutionError on unknown qualifiers.
Query parse_sql(const std::string& sql);

}  // namespace schemalink::sql
