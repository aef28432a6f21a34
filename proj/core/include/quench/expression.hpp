#pragma once

#include <string>
#include <vector>

namespace quench {

/// Evaluation point for closed-form data: bulk coordinates (x, y), time t and
/// boundary arclength s.
struct EvalContext {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
    double s = 0.0;
};

/// Small closed-form grammar for initial data, targets and bounds:
/// numbers, pi, variables x/y/t/s, +, -, *, /, unary minus, parentheses and
/// cos/sin/exp. Parsed once into a postfix program.
class Expression {
public:
    static Expression parse(const std::string& text);

    double eval(const EvalContext& ctx) const;
    const std::string& text() const { return text_; }

private:
    enum class Op : int { Const, Var, Add, Sub, Mul, Div, Neg, Cos, Sin, Exp };
    struct Instr {
        Op op;
        double value = 0.0; // constant or variable index
    };
    std::vector<Instr> program_;
    std::string text_;
};

} // namespace quench
