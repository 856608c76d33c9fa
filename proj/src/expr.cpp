#include "cuspflow/expr.hpp"

#include <cctype>
#include <cstdlib>

namespace cuspflow {
namespace {

ExprPtr mk(Expr::Kind k, ExprPtr a = nullptr, ExprPtr b = nullptr) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

ExprPtr mk_number(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Number;
    e->number = v;
    return e;
}

struct Parser {
    const std::string& s;
    size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw config_error("expression parse error at position " + std::to_string(pos) +
                           ": " + msg + " in \"" + s + "\"");
    }

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    ExprPtr expression() {
        ExprPtr lhs = term();
        for (;;) {
            if (eat('+')) lhs = mk(Expr::Add, lhs, term());
            else if (eat('-')) lhs = mk(Expr::Sub, lhs, term());
            else return lhs;
        }
    }

    ExprPtr term() {
        ExprPtr lhs = unary();
        for (;;) {
            if (eat('*')) lhs = mk(Expr::Mul, lhs, unary());
            else if (eat('/')) lhs = mk(Expr::Div, lhs, unary());
            else return lhs;
        }
    }

    ExprPtr unary() {
        if (eat('-')) return mk(Expr::Neg, unary());
        if (eat('+')) return unary();
        return power();
    }

    ExprPtr power() {
        ExprPtr base = primary();
        if (eat('^')) return mk(Expr::Pow, base, unary());
        return base;
    }

    ExprPtr primary() {
        char c = peek();
        if (c == '(') {
            ++pos;
            ExprPtr inner = expression();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (c == '\0') fail("unexpected end of expression");
        fail(std::string("unexpected character '") + c + "'");
    }

    ExprPtr number() {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos += static_cast<size_t>(end - begin);
        return mk_number(v);
    }

    ExprPtr identifier() {
        size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        std::string name = s.substr(start, pos - start);
        if (name == "x1") return mk(Expr::X1);
        if (name == "x2") return mk(Expr::X2);
        if (name == "sin" || name == "cos" || name == "exp") {
            if (!eat('(')) fail("expected '(' after " + name);
            ExprPtr arg = expression();
            if (!eat(')')) fail("expected ')' closing " + name);
            if (name == "sin") return mk(Expr::Sin, arg);
            if (name == "cos") return mk(Expr::Cos, arg);
            return mk(Expr::Exp, arg);
        }
        pos = start;
        fail("unknown identifier '" + name + "'");
    }
};

} // namespace

ExprPtr parse_expression(const std::string& text) {
    Parser p(text);
    p.skip_ws();
    if (p.pos == text.size()) p.fail("empty expression");
    ExprPtr e = p.expression();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected trailing characters");
    return e;
}

} // namespace cuspflow
