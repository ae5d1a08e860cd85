#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace atm {

class ExpressionError : public std::invalid_argument {
public:
    ExpressionError(const std::string& what, std::size_t position)
        : std::invalid_argument(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Arithmetic expression in x1, x2 and t, used for coefficient, data and
/// forcing fields in experiment configs.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses, numbers,
/// the constant pi, and sin cos tan exp log sqrt abs tanh sinh cosh.
class Expression {
public:
    explicit Expression(std::string_view source);

    double operator()(double x1, double x2, double t = 0.0) const;
    const std::string& source() const noexcept { return source_; }

    struct Node;

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
};

}  // namespace atm
