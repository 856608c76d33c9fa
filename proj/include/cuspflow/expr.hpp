#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <type_traits>

#include "cuspflow/errors.hpp"

namespace cuspflow {

// Expression tree over the plane coordinates x1, x2 with + - * / ^, sin, cos,
// exp and numeric literals. Evaluation is generic over the scalar type, so a
// single tree produces both point values (double) and truncated Taylor jets
// (Series1/Series2 seeded with the coordinate variables).
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum Kind { Number, X1, X2, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };
    Kind kind;
    double number = 0.0;
    ExprPtr a, b;
};

// Recursive-descent parse; '^' is right-associative and binds tighter than
// unary minus. Throws config_error with the offending position.
ExprPtr parse_expression(const std::string& text);

template <class T>
T eval(const Expr& e, const T& x1, const T& x2) {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    switch (e.kind) {
    case Expr::Number: return x1 * 0.0 + e.number;
    case Expr::X1: return x1;
    case Expr::X2: return x2;
    case Expr::Add: return eval(*e.a, x1, x2) + eval(*e.b, x1, x2);
    case Expr::Sub: return eval(*e.a, x1, x2) - eval(*e.b, x1, x2);
    case Expr::Mul: return eval(*e.a, x1, x2) * eval(*e.b, x1, x2);
    case Expr::Div: return eval(*e.a, x1, x2) / eval(*e.b, x1, x2);
    case Expr::Neg: return -eval(*e.a, x1, x2);
    case Expr::Sin: return sin(eval(*e.a, x1, x2));
    case Expr::Cos: return cos(eval(*e.a, x1, x2));
    case Expr::Exp: return exp(eval(*e.a, x1, x2));
    case Expr::Pow: {
        T base = eval(*e.a, x1, x2);
        if (e.b->kind == Expr::Number) return pow(base, e.b->number);
        if (e.b->kind == Expr::Neg && e.b->a->kind == Expr::Number)
            return pow(base, -e.b->a->number);
        if constexpr (std::is_same_v<T, double>)
            return pow(base, eval(*e.b, x1, x2));
        else
            return exp(eval(*e.b, x1, x2) * log(base));
    }
    }
    throw error("corrupt expression node");
}

} // namespace cuspflow
