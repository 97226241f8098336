#include "quenchlab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

#include "quenchlab/errors.hpp"

namespace quenchlab {

struct Expression::Node {
    enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Abs, Exp, Min, Max } kind;
    double value = 0.0;
    std::vector<std::shared_ptr<const Node>> args;

    double eval(double x) const {
        switch (kind) {
        case Kind::Number: return value;
        case Kind::Var: return x;
        case Kind::Neg: return -args[0]->eval(x);
        case Kind::Add: return args[0]->eval(x) + args[1]->eval(x);
        case Kind::Sub: return args[0]->eval(x) - args[1]->eval(x);
        case Kind::Mul: return args[0]->eval(x) * args[1]->eval(x);
        case Kind::Div: return args[0]->eval(x) / args[1]->eval(x);
        case Kind::Abs: return std::abs(args[0]->eval(x));
        case Kind::Exp: return std::exp(args[0]->eval(x));
        case Kind::Min: return std::min(args[0]->eval(x), args[1]->eval(x));
        case Kind::Max: return std::max(args[0]->eval(x), args[1]->eval(x));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, std::vector<NodePtr> args = {}, double value = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->value = value;
    n->args = std::move(args);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression '" + s_ + "': " + what + " at position " + std::to_string(pos_));
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

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Kind::Add, {lhs, term()});
            else if (accept('-')) lhs = make(Kind::Sub, {lhs, term()});
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Kind::Mul, {lhs, unary()});
            else if (accept('/')) lhs = make(Kind::Div, {lhs, unary()});
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Kind::Neg, {unary()});
        if (accept('+')) return unary();
        return primary();
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (accept('(')) {
            NodePtr e = expr();
            expect(')');
            return e;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double v = 0.0;
            const auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
            if (ec != std::errc()) fail("bad number");
            pos_ = static_cast<std::size_t>(end - s_.data());
            return make(Kind::Number, {}, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "x") return make(Kind::Var);
            if (name == "abs" || name == "exp") {
                expect('(');
                NodePtr a = expr();
                expect(')');
                return make(name == "abs" ? Kind::Abs : Kind::Exp, {a});
            }
            if (name == "min" || name == "max") {
                expect('(');
                NodePtr a = expr();
                expect(',');
                NodePtr b = expr();
                expect(')');
                return make(name == "min" ? Kind::Min : Kind::Max, {a, b});
            }
            pos_ = start;
            fail("unknown name '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text).parse();
    return e;
}

double Expression::operator()(double x) const { return root_->eval(x); }

} // namespace quenchlab
