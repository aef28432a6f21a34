#include "quench/expression.hpp"

#include "quench/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace quench {

namespace {

struct Parser {
    const std::string& text;
    std::size_t pos = 0;
    std::vector<std::pair<int, double>>& out; // (op, payload)

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression error at column " + std::to_string(pos + 1) + " in '" +
                          text + "': " + what);
    }

    bool consume(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expr() {
        term();
        for (;;) {
            skip_ws();
            if (consume('+')) {
                term();
                out.emplace_back(2, 0.0); // Add
            } else if (consume('-')) {
                term();
                out.emplace_back(3, 0.0); // Sub
            } else
                break;
        }
    }

    void term() {
        unary();
        for (;;) {
            skip_ws();
            if (consume('*')) {
                unary();
                out.emplace_back(4, 0.0); // Mul
            } else if (consume('/')) {
                unary();
                out.emplace_back(5, 0.0); // Div
            } else
                break;
        }
    }

    void unary() {
        skip_ws();
        if (consume('-')) {
            unary();
            out.emplace_back(6, 0.0); // Neg
            return;
        }
        if (consume('+')) {
            unary();
            return;
        }
        primary();
    }

    void primary() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of input");
        const char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(text.c_str() + pos, &end);
            if (end == text.c_str() + pos) fail("malformed number");
            pos = static_cast<std::size_t>(end - text.c_str());
            out.emplace_back(0, v); // Const
            return;
        }
        if (c == '(') {
            ++pos;
            expr();
            if (!consume(')')) fail("missing ')'");
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            while (pos < text.size() &&
                   std::isalnum(static_cast<unsigned char>(text[pos])))
                ++pos;
            const std::string name = text.substr(start, pos - start);
            if (name == "pi") {
                out.emplace_back(0, M_PI);
                return;
            }
            if (name == "x") { out.emplace_back(1, 0.0); return; }
            if (name == "y") { out.emplace_back(1, 1.0); return; }
            if (name == "t") { out.emplace_back(1, 2.0); return; }
            if (name == "s") { out.emplace_back(1, 3.0); return; }
            if (name == "cos" || name == "sin" || name == "exp") {
                if (!consume('(')) fail("expected '(' after " + name);
                expr();
                if (!consume(')')) fail("missing ')' after " + name + " argument");
                out.emplace_back(name == "cos" ? 7 : name == "sin" ? 8 : 9, 0.0);
                return;
            }
            fail("unknown identifier '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

} // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    std::vector<std::pair<int, double>> raw;
    Parser parser{text, 0, raw};
    parser.expr();
    parser.skip_ws();
    if (parser.pos != text.size()) parser.fail("trailing input");

    e.program_.reserve(raw.size());
    for (auto& [op, payload] : raw) e.program_.push_back({static_cast<Op>(op), payload});
    return e;
}

double Expression::eval(const EvalContext& ctx) const {
    double stack[64];
    int sp = 0;
    auto push = [&](double v) {
        if (sp >= 64) throw ConfigError("expression too deep: " + text_);
        stack[sp++] = v;
    };
    for (const Instr& ins : program_) {
        switch (ins.op) {
        case Op::Const: push(ins.value); break;
        case Op::Var: {
            const int idx = static_cast<int>(ins.value);
            push(idx == 0 ? ctx.x : idx == 1 ? ctx.y : idx == 2 ? ctx.t : ctx.s);
            break;
        }
        case Op::Add: stack[sp - 2] += stack[sp - 1]; --sp; break;
        case Op::Sub: stack[sp - 2] -= stack[sp - 1]; --sp; break;
        case Op::Mul: stack[sp - 2] *= stack[sp - 1]; --sp; break;
        case Op::Div: stack[sp - 2] /= stack[sp - 1]; --sp; break;
        case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
        case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
        case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
        case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
        }
    }
    return stack[0];
}

} // namespace quench
