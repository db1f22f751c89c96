#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "hvfif/error.hpp"
#include "hvfif/interval.hpp"

namespace hvfif {

// Parsed contractivity-factor expression. Immutable after construction,
// so instances can be shared freely across evaluators.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := number | ident | ident '(' expr ')' | '(' expr ')' | '-' factor
//   ident  in {x, y, sin, cos, abs}
//
// No division and no implicit multiplication: write 2.9*x, not 2.9x.
class FactorExpr {
public:
    enum class Kind { constant, var_x, var_y, neg, abs, sin, cos, add, sub, mul };

    struct Node {
        Kind kind;
        double value = 0.0;
        std::shared_ptr<const Node> a;
        std::shared_ptr<const Node> b;
    };
    using NodePtr = std::shared_ptr<const Node>;

    FactorExpr() : root_(make(Kind::constant, 0.0)) {}

    static FactorExpr parse(std::string_view text);

    static FactorExpr constant(double c) { return FactorExpr(make(Kind::constant, c)); }
    static FactorExpr variable_x() { return FactorExpr(make(Kind::var_x)); }
    static FactorExpr variable_y() { return FactorExpr(make(Kind::var_y)); }
    // a + b*x, used to splice interval maps and Lagrange lines into trees
    static FactorExpr affine_x(double a, double b) {
        return constant(a) + constant(b) * variable_x();
    }

    friend FactorExpr operator+(const FactorExpr& l, const FactorExpr& r) {
        return FactorExpr(make2(Kind::add, l.root_, r.root_));
    }
    friend FactorExpr operator-(const FactorExpr& l, const FactorExpr& r) {
        return FactorExpr(make2(Kind::sub, l.root_, r.root_));
    }
    friend FactorExpr operator*(const FactorExpr& l, const FactorExpr& r) {
        return FactorExpr(make2(Kind::mul, l.root_, r.root_));
    }
    FactorExpr operator-() const { return FactorExpr(make1(Kind::neg, root_)); }

    double operator()(double x) const { return eval1(root_.get(), x); }
    double operator()(double x, double y) const { return eval2(root_.get(), x, y); }

    bool uses_y() const { return uses(root_.get(), Kind::var_y); }
    bool uses_x() const { return uses(root_.get(), Kind::var_x); }

    std::string serialize() const {
        std::string out;
        print(root_.get(), 0, out);
        return out;
    }

    // Structural substitution x -> r (and y -> r for the bivariate axis).
    FactorExpr substitute_x(const FactorExpr& r) const {
        return FactorExpr(subst(root_, Kind::var_x, r.root_));
    }
    FactorExpr substitute_y(const FactorExpr& r) const {
        return FactorExpr(subst(root_, Kind::var_y, r.root_));
    }

    Interval range(Interval x) const { return ieval(root_.get(), x, Interval{0.0}); }
    Interval range(Interval x, Interval y) const { return ieval(root_.get(), x, y); }

    static Interval range_of(const Node* n, Interval x, Interval y) { return ieval(n, x, y); }

    const Node* root() const { return root_.get(); }

private:
    explicit FactorExpr(NodePtr n) : root_(std::move(n)) {}

    static NodePtr make(Kind k, double v = 0.0) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->value = v;
        return n;
    }
    static NodePtr make1(Kind k, NodePtr a) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = std::move(a);
        return n;
    }
    static NodePtr make2(Kind k, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    static double eval1(const Node* n, double x) {
        switch (n->kind) {
            case Kind::constant: return n->value;
            case Kind::var_x: return x;
            case Kind::var_y:
                throw Error("dimension mismatch: expression uses y but was evaluated at a scalar point");
            case Kind::neg: return -eval1(n->a.get(), x);
            case Kind::abs: return std::fabs(eval1(n->a.get(), x));
            case Kind::sin: return std::sin(eval1(n->a.get(), x));
            case Kind::cos: return std::cos(eval1(n->a.get(), x));
            case Kind::add: return eval1(n->a.get(), x) + eval1(n->b.get(), x);
            case Kind::sub: return eval1(n->a.get(), x) - eval1(n->b.get(), x);
            case Kind::mul: return eval1(n->a.get(), x) * eval1(n->b.get(), x);
        }
        throw Error("corrupt expression node");
    }

    static double eval2(const Node* n, double x, double y) {
        switch (n->kind) {
            case Kind::constant: return n->value;
            case Kind::var_x: return x;
            case Kind::var_y: return y;
            case Kind::neg: return -eval2(n->a.get(), x, y);
            case Kind::abs: return std::fabs(eval2(n->a.get(), x, y));
            case Kind::sin: return std::sin(eval2(n->a.get(), x, y));
            case Kind::cos: return std::cos(eval2(n->a.get(), x, y));
            case Kind::add: return eval2(n->a.get(), x, y) + eval2(n->b.get(), x, y);
            case Kind::sub: return eval2(n->a.get(), x, y) - eval2(n->b.get(), x, y);
            case Kind::mul: return eval2(n->a.get(), x, y) * eval2(n->b.get(), x, y);
        }
        throw Error("corrupt expression node");
    }

    static Interval ieval(const Node* n, Interval x, Interval y) {
        switch (n->kind) {
            case Kind::constant: return Interval{n->value};
            case Kind::var_x: return x;
            case Kind::var_y: return y;
            case Kind::neg: return -ieval(n->a.get(), x, y);
            case Kind::abs: return hvfif::abs(ieval(n->a.get(), x, y));
            case Kind::sin: return sin_range(ieval(n->a.get(), x, y));
            case Kind::cos: return cos_range(ieval(n->a.get(), x, y));
            case Kind::add: return ieval(n->a.get(), x, y) + ieval(n->b.get(), x, y);
            case Kind::sub: return ieval(n->a.get(), x, y) - ieval(n->b.get(), x, y);
            case Kind::mul: return ieval(n->a.get(), x, y) * ieval(n->b.get(), x, y);
        }
        throw Error("corrupt expression node");
    }

    static bool uses(const Node* n, Kind k) {
        if (n->kind == k) return true;
        if (n->a && uses(n->a.get(), k)) return true;
        if (n->b && uses(n->b.get(), k)) return true;
        return false;
    }

    static NodePtr subst(const NodePtr& n, Kind var, const NodePtr& repl) {
        if (n->kind == var) return repl;
        if (!n->a) return n;
        NodePtr na = subst(n->a, var, repl);
        NodePtr nb = n->b ? subst(n->b, var, repl) : nullptr;
        if (na == n->a && nb == n->b) return n;
        auto m = std::make_shared<Node>();
        m->kind = n->kind;
        m->value = n->value;
        m->a = std::move(na);
        m->b = std::move(nb);
        return m;
    }

    // precedence: add/sub 1, mul 2, neg 3, atoms/calls 4
    static int prec(Kind k) {
        switch (k) {
            case Kind::add:
            case Kind::sub: return 1;
            case Kind::mul: return 2;
            case Kind::neg: return 3;
            default: return 4;
        }
    }

    // shortest decimal form that parses back to the same double
    static void print_num(double v, std::string& out) {
        char buf[40];
        if (v == std::floor(v) && std::fabs(v) < 1e15) {
            std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
            out += buf;
            return;
        }
        for (int prec = 1; prec <= 17; ++prec) {
            std::snprintf(buf, sizeof buf, "%.*g", prec, v);
            double back = 0.0;
            std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
            if (back == v) break;
        }
        out += buf;
    }

    // Right operands of +/-/* are parenthesized when they sit at the same
    // precedence level, so the reparsed tree reproduces the original
    // floating-point grouping exactly.
    static void print(const Node* n, int parent_prec, std::string& out) {
        const int p = prec(n->kind);
        switch (n->kind) {
            case Kind::constant:
                if (n->value < 0.0 || std::signbit(n->value)) {
                    out += '(';
                    print_num(n->value, out);
                    out += ')';
                } else {
                    print_num(n->value, out);
                }
                return;
            case Kind::var_x: out += 'x'; return;
            case Kind::var_y: out += 'y'; return;
            case Kind::abs:
            case Kind::sin:
            case Kind::cos:
                out += (n->kind == Kind::abs ? "abs(" : n->kind == Kind::sin ? "sin(" : "cos(");
                print(n->a.get(), 0, out);
                out += ')';
                return;
            case Kind::neg:
                out += '-';
                print(n->a.get(), p, out);
                return;
            case Kind::add:
            case Kind::sub:
            case Kind::mul: {
                const bool wrap = p < parent_prec;
                if (wrap) out += '(';
                print(n->a.get(), p, out);
                out += (n->kind == Kind::add ? " + " : n->kind == Kind::sub ? " - " : "*");
                print(n->b.get(), p + 1, out);
                if (wrap) out += ')';
                return;
            }
        }
    }

    NodePtr root_;
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view s) : src_(s) {}

    FactorExpr::NodePtr run() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", 0);
        auto e = expr();
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError("syntax error at offset " + std::to_string(pos_) +
                                 ": unexpected '" + std::string(1, src_[pos_]) + "'",
                             pos_);
        return e;
    }

private:
    using Kind = FactorExpr::Kind;
    using NodePtr = FactorExpr::NodePtr;

    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    [[noreturn]] void fail(const std::string& why) {
        throw ParseError("syntax error at offset " + std::to_string(pos_) + ": " + why, pos_);
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            const char c = peek();
            if (c != '+' && c != '-') return lhs;
            ++pos_;
            NodePtr rhs = term();
            auto n = std::make_shared<FactorExpr::Node>();
            n->kind = (c == '+') ? Kind::add : Kind::sub;
            n->a = std::move(lhs);
            n->b = std::move(rhs);
            lhs = std::move(n);
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        while (peek() == '*') {
            ++pos_;
            NodePtr rhs = factor();
            auto n = std::make_shared<FactorExpr::Node>();
            n->kind = Kind::mul;
            n->a = std::move(lhs);
            n->b = std::move(rhs);
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr factor() {
        const char c = peek();
        if (c == '\0') fail("unexpected end of input");
        if (c == '-') {
            ++pos_;
            auto n = std::make_shared<FactorExpr::Node>();
            n->kind = Kind::neg;
            n->a = factor();
            return n;
        }
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (peek() != ')') fail("expected ')'");
            ++pos_;
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return ident();
        fail(std::string("unexpected '") + c + "'");
    }

    NodePtr number() {
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc{} || ptr == begin) fail("malformed number");
        pos_ = static_cast<std::size_t>(ptr - src_.data());
        auto n = std::make_shared<FactorExpr::Node>();
        n->kind = Kind::constant;
        n->value = v;
        return n;
    }

    NodePtr ident() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                (src_[pos_] >= 'A' && src_[pos_] <= 'Z') ||
                (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name == "x") return var(Kind::var_x);
        if (name == "y") return var(Kind::var_y);
        Kind fk;
        if (name == "sin") fk = Kind::sin;
        else if (name == "cos") fk = Kind::cos;
        else if (name == "abs") fk = Kind::abs;
        else
            throw ParseError("unknown identifier '" + std::string(name) + "' at offset " +
                                 std::to_string(start),
                             start);
        if (peek() != '(') fail("expected '(' after '" + std::string(name) + "'");
        ++pos_;
        NodePtr arg = expr();
        if (peek() != ')') fail("expected ')'");
        ++pos_;
        auto n = std::make_shared<FactorExpr::Node>();
        n->kind = fk;
        n->a = std::move(arg);
        return n;
    }

    static NodePtr var(Kind k) {
        auto n = std::make_shared<FactorExpr::Node>();
        n->kind = k;
        return n;
    }
};

} // namespace detail

inline FactorExpr FactorExpr::parse(std::string_view text) {
    return FactorExpr(detail::Parser(text).run());
}

namespace detail {

// 64 subintervals in one dimension, 8x8 cells in two: at most 64 enclosures
// per bound either way.
inline constexpr int kSplits1d = 64;
inline constexpr int kSplits2d = 8;

template <typename F>
double max_over_splits_1d(Interval dom, int splits, F&& per_cell) {
    double best = -std::numeric_limits<double>::infinity();
    const double w = dom.width() / splits;
    for (int i = 0; i < splits; ++i) {
        const double lo = (i == 0) ? dom.lo : dom.lo + i * w;
        const double hi = (i == splits - 1) ? dom.hi : dom.lo + (i + 1) * w;
        best = std::max(best, per_cell(Interval{std::min(lo, hi), std::max(lo, hi)}));
    }
    return best;
}

template <typename F>
double min_over_splits_1d(Interval dom, int splits, F&& per_cell) {
    double best = std::numeric_limits<double>::infinity();
    const double w = dom.width() / splits;
    for (int i = 0; i < splits; ++i) {
        const double lo = (i == 0) ? dom.lo : dom.lo + i * w;
        const double hi = (i == splits - 1) ? dom.hi : dom.lo + (i + 1) * w;
        best = std::min(best, per_cell(Interval{std::min(lo, hi), std::max(lo, hi)}));
    }
    return best;
}

} // namespace detail

// Upper bound on sup |expr| over dom. Interval arithmetic on 64 equal
// subintervals keeps decorrelation below ~0.05 for the factor shapes in use.
inline double sup_abs_bound(const FactorExpr& e, Interval dom) {
    return detail::max_over_splits_1d(dom, detail::kSplits1d,
                                      [&](Interval c) { return sup_abs(e.range(c)); });
}

// Lower bound on inf |expr| over dom (0 whenever an enclosure straddles 0).
inline double inf_abs_bound(const FactorExpr& e, Interval dom) {
    return detail::min_over_splits_1d(dom, detail::kSplits1d,
                                      [&](Interval c) { return inf_abs(e.range(c)); });
}

inline double sup_abs_bound(const FactorExpr& e, Rect dom) {
    return detail::max_over_splits_1d(dom.x, detail::kSplits2d, [&](Interval cx) {
        return detail::max_over_splits_1d(dom.y, detail::kSplits2d, [&](Interval cy) {
            return sup_abs(e.range(cx, cy));
        });
    });
}

inline double inf_abs_bound(const FactorExpr& e, Rect dom) {
    return detail::min_over_splits_1d(dom.x, detail::kSplits2d, [&](Interval cx) {
        return detail::min_over_splits_1d(dom.y, detail::kSplits2d, [&](Interval cy) {
            return inf_abs(e.range(cx, cy));
        });
    });
}

namespace detail {

inline double node_sup_abs(const FactorExpr::Node* n, Interval dx, Interval dy, bool split_y) {
    const int splits = split_y ? kSplits2d : kSplits1d;
    return max_over_splits_1d(dx, splits, [&](Interval cx) {
        if (!split_y) return sup_abs(FactorExpr::range_of(n, cx, dy));
        return max_over_splits_1d(dy, kSplits2d, [&](Interval cy) {
            return sup_abs(FactorExpr::range_of(n, cx, cy));
        });
    });
}

inline double lip_rec(const FactorExpr::Node* n, Interval dx, Interval dy, bool split_y) {
    using Kind = FactorExpr::Kind;
    switch (n->kind) {
        case Kind::constant: return 0.0;
        case Kind::var_x:
        case Kind::var_y: return 1.0;
        case Kind::neg:
        case Kind::abs:
        case Kind::sin:
        case Kind::cos: return lip_rec(n->a.get(), dx, dy, split_y);
        case Kind::add:
        case Kind::sub:
            return lip_rec(n->a.get(), dx, dy, split_y) + lip_rec(n->b.get(), dx, dy, split_y);
        case Kind::mul:
            return node_sup_abs(n->a.get(), dx, dy, split_y) * lip_rec(n->b.get(), dx, dy, split_y) +
                   node_sup_abs(n->b.get(), dx, dy, split_y) * lip_rec(n->a.get(), dx, dy, split_y);
    }
    throw Error("corrupt expression node");
}

} // namespace detail

// Recursive Lipschitz bound: L(c)=0, L(x)=1, L(u+-v)=L(u)+L(v),
// L(u*v) <= sup|u| L(v) + sup|v| L(u), L(sin u)=L(cos u)=L(|u|)=L(u).
// The bivariate overload bounds the constant with respect to the l1 norm.
inline double lipschitz_bound(const FactorExpr& e, Interval dom) {
    return detail::lip_rec(e.root(), dom, Interval{0.0}, false);
}

inline double lipschitz_bound(const FactorExpr& e, Rect dom) {
    return detail::lip_rec(e.root(), dom.x, dom.y, true);
}

} // namespace hvfif
