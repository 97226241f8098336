#pragma once

#include <memory>
#include <string>

namespace quenchlab {

/// Compiled scalar expression of one variable x.
///
/// Grammar: numbers, `x`, `+ - * /`, unary minus, parentheses and the
/// functions abs(e), exp(e), min(a, b), max(a, b). Errors throw ConfigError
/// with the offending position.
class Expression {
public:
    static Expression parse(const std::string& text);

    double operator()(double x) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

} // namespace quenchlab
