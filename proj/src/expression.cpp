#include "atm/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace atm {

struct Expression::Node {
    enum class Op { constant, x1, x2, t, neg, add, sub, mul, div, pow, call };
    Op op = Op::constant;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;

    double eval(double x1, double x2, double t) const {
        switch (op) {
            case Op::constant: return value;
            case Op::x1: return x1;
            case Op::x2: return x2;
            case Op::t: return t;
            case Op::neg: return -lhs->eval(x1, x2, t);
            case Op::add: return lhs->eval(x1, x2, t) + rhs->eval(x1, x2, t);
            case Op::sub: return lhs->eval(x1, x2, t) - rhs->eval(x1, x2, t);
            case Op::mul: return lhs->eval(x1, x2, t) * rhs->eval(x1, x2, t);
            case Op::div: return lhs->eval(x1, x2, t) / rhs->eval(x1, x2, t);
            case Op::pow: return std::pow(lhs->eval(x1, x2, t), rhs->eval(x1, x2, t));
            case Op::call: return fn(lhs->eval(x1, x2, t));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr leaf(Op op, double value = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->value = value;
    return n;
}

NodePtr binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

struct Function {
    std::string_view name;
    double (*fn)(double);
};

const Function kFunctions[] = {
    {"sin", [](double x) { return std::sin(x); }},   {"cos", [](double x) { return std::cos(x); }},
    {"tan", [](double x) { return std::tan(x); }},   {"exp", [](double x) { return std::exp(x); }},
    {"log", [](double x) { return std::log(x); }},   {"sqrt", [](double x) { return std::sqrt(x); }},
    {"abs", [](double x) { return std::abs(x); }},   {"tanh", [](double x) { return std::tanh(x); }},
    {"sinh", [](double x) { return std::sinh(x); }}, {"cosh", [](double x) { return std::cosh(x); }},
};

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ExpressionError(what + " at position " + std::to_string(pos_) + " in '" + std::string(s_) + "'", pos_);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = binary(Op::add, lhs, term());
            else if (accept('-')) lhs = binary(Op::sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = binary(Op::mul, lhs, unary());
            else if (accept('/')) lhs = binary(Op::div, lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::neg;
            n->lhs = unary();
            return n;
        }
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return binary(Op::pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        if (accept('(')) {
            NodePtr e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        fail("unexpected character");
    }

    NodePtr number() {
        const std::string rest(s_.substr(pos_));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(rest, &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += used;
        return leaf(Op::constant, v);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string_view id = s_.substr(start, pos_ - start);
        if (id == "x1") return leaf(Op::x1);
        if (id == "x2") return leaf(Op::x2);
        if (id == "t") return leaf(Op::t);
        if (id == "pi") return leaf(Op::constant, std::numbers::pi);
        for (const Function& f : kFunctions) {
            if (f.name == id) {
                if (!accept('(')) fail("expected '(' after " + std::string(id));
                auto n = std::make_shared<Expression::Node>();
                n->op = Op::call;
                n->fn = f.fn;
                n->lhs = expr();
                if (!accept(')')) fail("expected ')'");
                return n;
            }
        }
        pos_ = start;
        fail("unknown identifier '" + std::string(id) + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(std::string_view source) : source_(source), root_(Parser(source).parse()) {}

double Expression::operator()(double x1, double x2, double t) const { return root_->eval(x1, x2, t); }

}  // namespace atm
