#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace titerlab {

// Arithmetic expressions in one variable x.
//
// Grammar: + - * / ^ (right assoc), exp(...), log(...), numeric literals,
// parentheses, unary minus. Parsed once into an immutable AST; evaluation
// and symbolic differentiation are pure, so Expr values are freely shareable.
class Expr {
  struct Node;
  using NodeP = std::shared_ptr<const Node>;

  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Exp, Log, Neg };

  struct Node {
    Kind kind;
    double value = 0.0;  // Const only
    NodeP a, b;
  };

public:
  static Expr parse(std::string_view text) {
    Parser p{text, 0};
    NodeP root = p.parse_sum();
    p.skip_ws();
    if (p.pos != text.size())
      throw std::invalid_argument("expression: trailing input at position " +
                                  std::to_string(p.pos) + " in '" + std::string(text) + "'");
    return Expr(std::move(root), std::string(text));
  }

  static Expr constant(double v) { return Expr(make_const(v), fmt_const(v)); }
  static Expr variable() { return Expr(std::make_shared<Node>(Node{Kind::Var}), "x"); }

  double operator()(double x) const { return eval(root_.get(), x); }

  // Symbolic derivative d/dx with light constant folding.
  Expr derivative() const { return Expr(diff(root_), "d/dx(" + text_ + ")"); }

  const std::string& text() const { return text_; }

private:
  Expr(NodeP root, std::string text) : root_(std::move(root)), text_(std::move(text)) {}

  static NodeP make_const(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->value = v;
    return n;
  }

  static std::string fmt_const(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
  }

  static bool is_const(const NodeP& n, double v) {
    return n->kind == Kind::Const && n->value == v;
  }

  static NodeP make(Kind k, NodeP a, NodeP b = nullptr) {
    // Constant folding keeps derivative trees small.
    const bool ca = a && a->kind == Kind::Const;
    const bool cb = b && b->kind == Kind::Const;
    switch (k) {
      case Kind::Add:
        if (ca && cb) return make_const(a->value + b->value);
        if (ca && a->value == 0) return b;
        if (cb && b->value == 0) return a;
        break;
      case Kind::Sub:
        if (ca && cb) return make_const(a->value - b->value);
        if (cb && b->value == 0) return a;
        if (ca && a->value == 0) return make(Kind::Neg, b);
        break;
      case Kind::Mul:
        if (ca && cb) return make_const(a->value * b->value);
        if (is_const(a, 0) || is_const(b, 0)) return make_const(0);
        if (ca && a->value == 1) return b;
        if (cb && b->value == 1) return a;
        break;
      case Kind::Div:
        if (ca && cb && b->value != 0) return make_const(a->value / b->value);
        if (is_const(a, 0)) return make_const(0);
        if (cb && b->value == 1) return a;
        break;
      case Kind::Pow:
        if (ca && cb) return make_const(std::pow(a->value, b->value));
        if (cb && b->value == 1) return a;
        if (cb && b->value == 0) return make_const(1);
        break;
      case Kind::Neg:
        if (ca) return make_const(-a->value);
        break;
      case Kind::Exp:
        if (ca) return make_const(std::exp(a->value));
        break;
      case Kind::Log:
        if (ca) return make_const(std::log(a->value));
        break;
      default:
        break;
    }
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  static double eval(const Node* n, double x) {
    switch (n->kind) {
      case Kind::Const: return n->value;
      case Kind::Var: return x;
      case Kind::Add: return eval(n->a.get(), x) + eval(n->b.get(), x);
      case Kind::Sub: return eval(n->a.get(), x) - eval(n->b.get(), x);
      case Kind::Mul: return eval(n->a.get(), x) * eval(n->b.get(), x);
      case Kind::Div: return eval(n->a.get(), x) / eval(n->b.get(), x);
      case Kind::Pow: return std::pow(eval(n->a.get(), x), eval(n->b.get(), x));
      case Kind::Exp: return std::exp(eval(n->a.get(), x));
      case Kind::Log: return std::log(eval(n->a.get(), x));
      case Kind::Neg: return -eval(n->a.get(), x);
    }
    return 0.0;  // unreachable
  }

  static NodeP diff(const NodeP& n) {
    switch (n->kind) {
      case Kind::Const: return make_const(0);
      case Kind::Var: return make_const(1);
      case Kind::Add: return make(Kind::Add, diff(n->a), diff(n->b));
      case Kind::Sub: return make(Kind::Sub, diff(n->a), diff(n->b));
      case Kind::Mul:
        return make(Kind::Add, make(Kind::Mul, diff(n->a), n->b),
                    make(Kind::Mul, n->a, diff(n->b)));
      case Kind::Div:
        return make(Kind::Div,
                    make(Kind::Sub, make(Kind::Mul, diff(n->a), n->b),
                         make(Kind::Mul, n->a, diff(n->b))),
                    make(Kind::Pow, n->b, make_const(2)));
      case Kind::Pow: {
        if (n->b->kind == Kind::Const) {
          // d(u^c) = c u^(c-1) u'
          return make(Kind::Mul, make_const(n->b->value),
                      make(Kind::Mul, make(Kind::Pow, n->a, make_const(n->b->value - 1)),
                           diff(n->a)));
        }
        // d(u^v) = u^v (v' log u + v u'/u)
        NodeP uv = make(Kind::Pow, n->a, n->b);
        NodeP term1 = make(Kind::Mul, diff(n->b), make(Kind::Log, n->a));
        NodeP term2 = make(Kind::Div, make(Kind::Mul, n->b, diff(n->a)), n->a);
        return make(Kind::Mul, uv, make(Kind::Add, term1, term2));
      }
      case Kind::Exp: return make(Kind::Mul, make(Kind::Exp, n->a), diff(n->a));
      case Kind::Log: return make(Kind::Div, diff(n->a), n->a);
      case Kind::Neg: return make(Kind::Neg, diff(n->a));
    }
    return make_const(0);  // unreachable
  }

  struct Parser {
    std::string_view s;
    size_t pos;

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

    [[noreturn]] void fail(const std::string& what) {
      throw std::invalid_argument("expression: " + what + " at position " +
                                  std::to_string(pos) + " in '" + std::string(s) + "'");
    }

    NodeP parse_sum() {
      NodeP lhs = parse_product();
      for (;;) {
        if (eat('+')) lhs = make(Kind::Add, lhs, parse_product());
        else if (eat('-')) lhs = make(Kind::Sub, lhs, parse_product());
        else return lhs;
      }
    }

    NodeP parse_product() {
      NodeP lhs = parse_unary();
      for (;;) {
        if (eat('*')) lhs = make(Kind::Mul, lhs, parse_unary());
        else if (eat('/')) lhs = make(Kind::Div, lhs, parse_unary());
        else return lhs;
      }
    }

    NodeP parse_unary() {
      if (eat('-')) return make(Kind::Neg, parse_unary());
      if (eat('+')) return parse_unary();
      return parse_power();
    }

    NodeP parse_power() {
      NodeP base = parse_atom();
      if (eat('^')) return make(Kind::Pow, base, parse_unary());  // right assoc
      return base;
    }

    NodeP parse_atom() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end of input");
      char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
      if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
      if (eat('(')) {
        NodeP inner = parse_sum();
        if (!eat(')')) fail("missing ')'");
        return inner;
      }
      fail(std::string("unexpected character '") + c + "'");
    }

    NodeP parse_number() {
      size_t start = pos;
      while (pos < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
              s[pos] == 'e' || s[pos] == 'E' ||
              ((s[pos] == '+' || s[pos] == '-') && pos > start &&
               (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
        ++pos;
      try {
        size_t used = 0;
        double v = std::stod(std::string(s.substr(start, pos - start)), &used);
        if (used != pos - start) fail("bad numeric literal");
        return make_const(v);
      } catch (const std::exception&) {
        fail("bad numeric literal");
      }
    }

    NodeP parse_ident() {
      size_t start = pos;
      while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
      std::string_view name = s.substr(start, pos - start);
      if (name == "x") return std::make_shared<Node>(Node{Kind::Var});
      if (name == "exp" || name == "log") {
        if (!eat('(')) fail("expected '(' after function name");
        NodeP arg = parse_sum();
        if (!eat(')')) fail("missing ')'");
        return make(name == "exp" ? Kind::Exp : Kind::Log, arg);
      }
      fail("unknown identifier '" + std::string(name) + "'");
    }
  };

  NodeP root_;
  std::string text_;
};

}  // namespace titerlab
