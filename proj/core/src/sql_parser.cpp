#include "schemalink/sql.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <string_view>

#include "schemalink/errors.hpp"
#include "schemalink/text.hpp"

namespace schemalink::sql {

namespace {

enum class TokenKind { Ident, Number, String, Punct, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;      // identifiers lowered, punctuation verbatim
    std::size_t position = 0;
};

const std::set<std::string> kKeywords = {
    "select", "distinct", "from",  "where", "group",   "by",        "having", "order",
    "limit",  "offset",   "join",  "inner", "left",    "right",     "full",   "outer",
    "cross",  "on",       "as",    "and",   "or",      "not",       "in",     "between",
    "like",   "is",       "null",  "union", "all",     "intersect", "except", "case",
    "when",   "then",     "else",  "end",   "asc",     "desc"};

class Lexer {
  public:
    explicit Lexer(std::string_view input) : input_(input) { tokenize(); }

    const std::vector<Token>& tokens() const { return tokens_; }

  private:
    void tokenize() {
        std::size_t i = 0;
        while (i < input_.size()) {
            char c = input_[i];
            if (ascii_space(c)) {
                ++i;
                continue;
            }
            if (ascii_alnum(c) || c == '_') {
                std::size_t start = i;
                bool numeric = std::isdigit(static_cast<unsigned char>(c)) != 0;
                while (i < input_.size() && (ascii_alnum(input_[i]) || input_[i] == '_' ||
                                             (numeric && input_[i] == '.'))) {
                    // Numbers may contain one dot; identifiers may not.
                    if (input_[i] == '.' &&
                        input_.substr(start, i - start).find('.') != std::string_view::npos) {
                        break;
                    }
                    ++i;
                }
                std::string text(input_.substr(start, i - start));
                if (numeric) {
                    tokens_.push_back({TokenKind::Number, text, start});
                } else {
                    tokens_.push_back({TokenKind::Ident, ascii_lower(text), start});
                }
                continue;
            }
            if (c == '\'' || c == '"') {
                tokens_.push_back(lex_string(i, c));
                continue;
            }
            if (c == '`') {
                std::size_t start = ++i;
                while (i < input_.size() && input_[i] != '`') ++i;
                if (i >= input_.size()) {
                    throw ParseError("unterminated quoted identifier", start - 1);
                }
                tokens_.push_back(
                    {TokenKind::Ident, ascii_lower(input_.substr(start, i - start)), start - 1});
                ++i;
                continue;
            }
            // Multi-character operators first.
            std::string_view rest = input_.substr(i);
            for (std::string_view op : {"!=", "<>", "<=", ">=", "=="}) {
                if (rest.starts_with(op)) {
                    tokens_.push_back({TokenKind::Punct, std::string(op), i});
                    i += op.size();
                    goto next;
                }
            }
            if (std::string_view("=<>+-*/%(),.;").find(c) != std::string_view::npos) {
                tokens_.push_back({TokenKind::Punct, std::string(1, c), i});
                ++i;
                continue;
            }
            throw ParseError(std::string("unexpected character '") + c + "' in SQL", i);
        next:;
        }
        tokens_.push_back({TokenKind::End, "", input_.size()});
    }

    Token lex_string(std::size_t& i, char quote) {
        std::size_t start = i;
        ++i;
        std::string value;
        while (i < input_.size()) {
            if (input_[i] == quote) {
                if (i + 1 < input_.size() && input_[i + 1] == quote) {
                    value.push_back(quote);
                    i += 2;
                    continue;
                }
                ++i;
                return {TokenKind::String, value, start};
            }
            value.push_back(input_[i]);
            ++i;
        }
        throw ParseError("unterminated string literal", start);
    }

    std::string_view input_;
    std::vector<Token> tokens_;
};

class Parser {
  public:
    explicit Parser(const std::string& sql) : lexer_(sql) {}

    Query parse_statement() {
        Query query = parse_query();
        accept_punct(";");
        expect_end();
        return query;
    }

  private:
    const Token& peek(std::size_t ahead = 0) const {
        std::size_t idx = std::min(pos_ + ahead, lexer_.tokens().size() - 1);
        return lexer_.tokens()[idx];
    }

    const Token& advance() { return lexer_.tokens()[pos_++]; }

    bool at_keyword(std::string_view kw) const {
        return peek().kind == TokenKind::Ident && peek().text == kw &&
               kKeywords.count(peek().text) > 0;
    }

    bool accept_keyword(std::string_view kw) {
        if (at_keyword(kw)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_keyword(std::string_view kw) {
        if (!accept_keyword(kw)) {
            throw ParseError("expected '" + std::string(kw) + "', got '" + peek().text + "'",
                             peek().position);
        }
    }

    bool at_punct(std::string_view p) const {
        return peek().kind == TokenKind::Punct && peek().text == p;
    }

    bool accept_punct(std::string_view p) {
        if (at_punct(p)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_punct(std::string_view p) {
        if (!accept_punct(p)) {
            throw ParseError("expected '" + std::string(p) + "', got '" + peek().text + "'",
                             peek().position);
        }
    }

    void expect_end() {
        if (peek().kind != TokenKind::End) {
            throw ParseError("trailing input after statement: '" + peek().text + "'",
                             peek().position);
        }
    }

    std::string expect_identifier(const char* what) {
        if (peek().kind != TokenKind::Ident || kKeywords.count(peek().text) > 0) {
            throw ParseError(std::string("expected ") + what + ", got '" + peek().text + "'",
                             peek().position);
        }
        return advance().text;
    }

    Query parse_query() {
        Query query;
        query.cores.push_back(parse_select_core());
        while (true) {
            if (accept_keyword("union")) {
                query.ops.push_back(accept_keyword("all") ? SetOp::UnionAll : SetOp::Union);
            } else if (accept_keyword("intersect")) {
                query.ops.push_back(SetOp::Intersect);
            } else if (accept_keyword("except")) {
                query.ops.push_back(SetOp::Except);
            } else {
                break;
            }
            query.cores.push_back(parse_select_core());
        }
        return query;
    }

    SelectCore parse_select_core() {
        expect_keyword("select");
        SelectCore core;
        core.distinct = accept_keyword("distinct");

        do {
            core.select_list.push_back(parse_select_item());
        } while (accept_punct(","));

        if (accept_keyword("from")) {
            core.from.push_back(parse_table_ref());
            while (true) {
                if (accept_punct(",")) {
                    core.from.push_back(parse_table_ref());
                    continue;
                }
                if (auto join = try_parse_join()) {
                    core.joins.push_back(std::move(*join));
                    continue;
                }
                break;
            }
        }
        if (accept_keyword("where")) core.where = parse_expr();
        if (accept_keyword("group")) {
            expect_keyword("by");
            do {
                core.group_by.push_back(parse_expr());
            } while (accept_punct(","));
        }
        if (accept_keyword("having")) core.having = parse_expr();
        if (accept_keyword("order")) {
            expect_keyword("by");
            do {
                OrderItem item;
                item.expr = parse_expr();
                if (accept_keyword("desc")) {
                    item.descending = true;
                } else {
                    accept_keyword("asc");
                }
                core.order_by.push_back(std::move(item));
            } while (accept_punct(","));
        }
        if (accept_keyword("limit")) {
            core.limit = parse_integer("LIMIT");
            if (accept_keyword("offset")) {
                core.offset = parse_integer("OFFSET");
            } else if (accept_punct(",")) {
                // MySQL-style LIMIT offset, count.
                core.offset = core.limit;
                core.limit = parse_integer("LIMIT");
            }
        }
        return core;
    }

    long long parse_integer(const char* clause) {
        bool negative = accept_punct("-");
        if (peek().kind != TokenKind::Number) {
            throw ParseError(std::string(clause) + " expects a number, got '" + peek().text + "'",
                             peek().position);
        }
        const Token& token = advance();
        long long value = 0;
        try {
            value = std::stoll(token.text);
        } catch (const std::exception&) {
            throw ParseError(std::string(clause) + " value '" + token.text + "' is not a usable " +
                             "integer", token.position);
        }
        return negative ? -value : value;
    }

    SelectItem parse_select_item() {
        SelectItem item;
        item.expr = parse_expr();
        if (accept_keyword("as")) {
            item.alias = expect_identifier("select alias");
        }
        return item;
    }

    TableRef parse_table_ref() {
        TableRef ref;
        if (accept_punct("(")) {
            ref.subquery = std::make_unique<Query>(parse_query());
            expect_punct(")");
        } else {
            ref.table = expect_identifier("table name");
        }
        if (accept_keyword("as")) {
            ref.alias = expect_identifier("table alias");
        } else if (peek().kind == TokenKind::Ident && kKeywords.count(peek().text) == 0) {
            ref.alias = advance().text;  // bare alias
        }
        return ref;
    }

    std::optional<JoinClause> try_parse_join() {
        std::size_t saved = pos_;
        bool qualified = false;
        if (accept_keyword("inner") || accept_keyword("cross")) {
            qualified = true;
        } else if (accept_keyword("left") || accept_keyword("right") || accept_keyword("full")) {
            accept_keyword("outer");
            qualified = true;
        }
        if (!accept_keyword("join")) {
            if (qualified) {
                throw ParseError("expected JOIN after join qualifier", peek().position);
            }
            pos_ = saved;
            return std::nullopt;
        }
        JoinClause join;
        join.table = parse_table_ref();
        if (accept_keyword("on")) join.on = parse_expr();
        return join;
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr left = parse_and();
        while (accept_keyword("or")) {
            ExprPtr right = parse_and();
            left = make(BoolCombine{BoolOp::Or, std::move(left), std::move(right)});
        }
        return left;
    }

    ExprPtr parse_and() {
        ExprPtr left = parse_not();
        while (accept_keyword("and")) {
            ExprPtr right = parse_not();
            left = make(BoolCombine{BoolOp::And, std::move(left), std::move(right)});
        }
        return left;
    }

    ExprPtr parse_not() {
        if (accept_keyword("not")) {
            return make(NotExpr{parse_not()});
        }
        return parse_predicate();
    }

    ExprPtr parse_predicate() {
        ExprPtr operand = parse_additive();
        bool negated = accept_keyword("not");

        if (accept_keyword("between")) {
            ExprPtr low = parse_additive();
            expect_keyword("and");
            ExprPtr high = parse_additive();
            return make(Between{negated, std::move(operand), std::move(low), std::move(high)});
        }
        if (accept_keyword("in")) {
            expect_punct("(");
            if (at_keyword("select")) {
                QueryPtr sub = std::make_unique<Query>(parse_query());
                expect_punct(")");
                return make(InSubquery{negated, std::move(operand), std::move(sub)});
            }
            InList list{negated, std::move(operand), {}};
            if (!at_punct(")")) {
                do {
                    list.items.push_back(parse_expr());
                } while (accept_punct(","));
            }
            expect_punct(")");
            return make(std::move(list));
        }
        if (accept_keyword("like")) {
            ExprPtr pattern = parse_additive();
            return make(Like{negated, std::move(operand), std::move(pattern)});
        }
        if (negated) {
            throw ParseError("expected BETWEEN, IN or LIKE after NOT", peek().position);
        }
        if (accept_keyword("is")) {
            bool is_not = accept_keyword("not");
            expect_keyword("null");
            return make(IsNull{is_not, std::move(operand)});
        }
        for (auto [text, op] : {std::pair{"=", CompareOp::Eq}, {"==", CompareOp::Eq},
                                {"!=", CompareOp::Ne}, {"<>", CompareOp::Ne},
                                {"<=", CompareOp::Le}, {">=", CompareOp::Ge},
                                {"<", CompareOp::Lt}, {">", CompareOp::Gt}}) {
            if (accept_punct(text)) {
                ExprPtr right = parse_additive();
                return make(Comparison{op, std::move(operand), std::move(right)});
            }
        }
        return operand;
    }

    ExprPtr parse_additive() {
        ExprPtr left = parse_multiplicative();
        while (true) {
            if (accept_punct("+")) {
                left = make(Arithmetic{ArithOp::Add, std::move(left), parse_multiplicative()});
            } else if (accept_punct("-")) {
                left = make(Arithmetic{ArithOp::Sub, std::move(left), parse_multiplicative()});
            } else {
                return left;
            }
        }
    }

    ExprPtr parse_multiplicative() {
        ExprPtr left = parse_unary();
        while (true) {
            if (accept_punct("*")) {
                left = make(Arithmetic{ArithOp::Mul, std::move(left), parse_unary()});
            } else if (accept_punct("/")) {
                left = make(Arithmetic{ArithOp::Div, std::move(left), parse_unary()});
            } else if (accept_punct("%")) {
                left = make(Arithmetic{ArithOp::Mod, std::move(left), parse_unary()});
            } else {
                return left;
            }
        }
    }

    ExprPtr parse_unary() {
        if (accept_punct("-")) return make(UnaryMinus{parse_unary()});
        accept_punct("+");
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& tok = peek();
        if (tok.kind == TokenKind::Number) {
            return make(NumberLit{advance().text});
        }
        if (tok.kind == TokenKind::String) {
            return make(StringLit{advance().text});
        }
        if (accept_keyword("null")) {
            return make(NullLit{});
        }
        if (accept_keyword("case")) {
            return parse_case();
        }
        if (accept_punct("(")) {
            if (at_keyword("select")) {
                QueryPtr sub = std::make_unique<Query>(parse_query());
                expect_punct(")");
                return make(ScalarSubquery{std::move(sub)});
            }
            ExprPtr inner = parse_expr();
            expect_punct(")");
            return inner;
        }
        if (accept_punct("*")) {
            return make(Star{});
        }
        if (tok.kind == TokenKind::Ident && kKeywords.count(tok.text) == 0) {
            std::string first = advance().text;
            if (accept_punct("(")) {
                return parse_function_call(first);
            }
            if (accept_punct(".")) {
                if (accept_punct("*")) {
                    return make(Star{first});
                }
                std::string column = expect_identifier("column name");
                return make(ColumnRef{first, column});
            }
            return make(ColumnRef{"", first});
        }
        throw ParseError("unexpected token '" + tok.text + "' in expression", tok.position);
    }

    ExprPtr parse_function_call(std::string name) {
        FunctionCall call;
        call.name = std::move(name);
        call.distinct = accept_keyword("distinct");
        if (accept_punct("*")) {
            call.star_argument = true;
        } else if (!at_punct(")")) {
            do {
                call.args.push_back(parse_expr());
            } while (accept_punct(","));
        }
        expect_punct(")");
        return make(std::move(call));
    }

    ExprPtr parse_case() {
        CaseExpr node;
        if (!at_keyword("when")) node.operand = parse_expr();
        while (accept_keyword("when")) {
            ExprPtr condition = parse_expr();
            expect_keyword("then");
            ExprPtr result = parse_expr();
            node.whens.emplace_back(std::move(condition), std::move(result));
        }
        if (node.whens.empty()) {
            throw ParseError("CASE without WHEN branch", peek().position);
        }
        if (accept_keyword("else")) node.else_expr = parse_expr();
        expect_keyword("end");
        return make(std::move(node));
    }

    template <typename Node>
    static ExprPtr make(Node&& node) {
        auto expr = std::make_unique<Expr>();
        expr->node = std::forward<Node>(node);
        return expr;
    }

    Lexer lexer_;
    std::size_t pos_ = 0;
};

// Structural qualifier check: every column qualifier and every `t.*` must
// name an alias or FROM source visible from its query, walking outward
// through enclosing scopes for correlated references.

struct ScopeNames {
    std::set<std::string> names;
    const ScopeNames* parent = nullptr;

    bool contains(const std::string& name) const {
        for (const ScopeNames* s = this; s != nullptr; s = s->parent) {
            if (s->names.count(name) > 0) return true;
        }
        return false;
    }
};

void check_query(const Query& query, const ScopeNames* parent);

void check_expr(const Expr& expr, const ScopeNames& scope) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, ColumnRef>) {
                if (!node.qualifier.empty() && !scope.contains(node.qualifier)) {
                    throw ResolutionError("unknown table or alias '" + node.qualifier +
                                          "' qualifying column '" + node.column + "'");
                }
            } else if constexpr (std::is_same_v<T, Star>) {
                if (!node.qualifier.empty() && !scope.contains(node.qualifier)) {
                    throw ResolutionError("unknown table or alias '" + node.qualifier +
                                          "' in '" + node.qualifier + ".*'");
                }
            } else if constexpr (std::is_same_v<T, UnaryMinus>) {
                check_expr(*node.operand, scope);
            } else if constexpr (std::is_same_v<T, Arithmetic> || std::is_same_v<T, Comparison> ||
                                 std::is_same_v<T, BoolCombine>) {
                check_expr(*node.left, scope);
                check_expr(*node.right, scope);
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                check_expr(*node.operand, scope);
            } else if constexpr (std::is_same_v<T, Between>) {
                check_expr(*node.operand, scope);
                check_expr(*node.low, scope);
                check_expr(*node.high, scope);
            } else if constexpr (std::is_same_v<T, InList>) {
                check_expr(*node.operand, scope);
                for (const auto& item : node.items) check_expr(*item, scope);
            } else if constexpr (std::is_same_v<T, InSubquery>) {
                check_expr(*node.operand, scope);
                check_query(*node.subquery, &scope);
            } else if constexpr (std::is_same_v<T, Like>) {
                check_expr(*node.operand, scope);
                check_expr(*node.pattern, scope);
            } else if constexpr (std::is_same_v<T, IsNull>) {
                check_expr(*node.operand, scope);
            } else if constexpr (std::is_same_v<T, FunctionCall>) {
                for (const auto& arg : node.args) check_expr(*arg, scope);
            } else if constexpr (std::is_same_v<T, CaseExpr>) {
                if (node.operand) check_expr(*node.operand, scope);
                for (const auto& [cond, result] : node.whens) {
                    check_expr(*cond, scope);
                    check_expr(*result, scope);
                }
                if (node.else_expr) check_expr(*node.else_expr, scope);
            } else if constexpr (std::is_same_v<T, ScalarSubquery>) {
                check_query(*node.query, &scope);
            }
        },
        expr.node);
}

void check_core(const SelectCore& core, const ScopeNames* parent) {
    ScopeNames scope;
    scope.parent = parent;
    auto add_source = [&](const TableRef& ref) {
        if (!ref.alias.empty()) scope.names.insert(ref.alias);
        if (!ref.table.empty()) scope.names.insert(ref.table);
        if (ref.subquery) check_query(*ref.subquery, parent);
    };
    for (const TableRef& ref : core.from) add_source(ref);
    for (const JoinClause& join : core.joins) add_source(join.table);

    for (const SelectItem& item : core.select_list) check_expr(*item.expr, scope);
    for (const JoinClause& join : core.joins) {
        if (join.on) check_expr(*join.on, scope);
    }
    if (core.where) check_expr(*core.where, scope);
    for (const auto& g : core.group_by) check_expr(*g, scope);
    if (core.having) check_expr(*core.having, scope);
    for (const OrderItem& item : core.order_by) check_expr(*item.expr, scope);
}

void check_query(const Query& query, const ScopeNames* parent) {
    for (const SelectCore& core : query.cores) check_core(core, parent);
}

}  // namespace

Query parse_sql(const std::string& sql) {
    Parser parser(sql);
    Query query = parser.parse_statement();
    check_query(query, nullptr);
    return query;
}

}  // namespace schemalink::sql
