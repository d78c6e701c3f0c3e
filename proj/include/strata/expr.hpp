#pragma once

// Small smooth-expression language: variables, rational constants, +, -, *, /,
// integer powers and the unary functions exp, sin, cos, atan. Differentiation
// is symbolic on the AST; gradients and Hessians are exact up to rounding,
// which matters at points where finite differences are ill-conditioned.

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace strata {

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class eval_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExprOp { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos, Atan };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op;
  double value = 0.0;  // Constant
  int var = -1;        // Variable index
  int exponent = 0;    // Pow
  ExprPtr a, b;
};

// --- smart constructors (light normalization: constant folding, 0/1 rules) ---

inline ExprPtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Constant;
  n->value = v;
  return n;
}

inline ExprPtr make_var(int i) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Variable;
  n->var = i;
  return n;
}

inline bool is_const(const ExprPtr& e, double v) {
  return e->op == ExprOp::Constant && e->value == v;
}

inline ExprPtr make_node(ExprOp op, ExprPtr a, ExprPtr b = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline ExprPtr make_add(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  if (a->op == ExprOp::Constant && b->op == ExprOp::Constant)
    return make_const(a->value + b->value);
  return make_node(ExprOp::Add, std::move(a), std::move(b));
}

inline ExprPtr make_sub(ExprPtr a, ExprPtr b) {
  if (is_const(b, 0)) return a;
  if (a->op == ExprOp::Constant && b->op == ExprOp::Constant)
    return make_const(a->value - b->value);
  return make_node(ExprOp::Sub, std::move(a), std::move(b));
}

inline ExprPtr make_neg(ExprPtr a) {
  if (a->op == ExprOp::Constant) return make_const(-a->value);
  return make_node(ExprOp::Neg, std::move(a));
}

inline ExprPtr make_mul(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0) || is_const(b, 0)) return make_const(0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  if (a->op == ExprOp::Constant && b->op == ExprOp::Constant)
    return make_const(a->value * b->value);
  return make_node(ExprOp::Mul, std::move(a), std::move(b));
}

inline ExprPtr make_div(ExprPtr a, ExprPtr b) {
  if (is_const(b, 1)) return a;
  if (is_const(a, 0) && !is_const(b, 0)) return make_const(0);
  if (a->op == ExprOp::Constant && b->op == ExprOp::Constant && b->value != 0)
    return make_const(a->value / b->value);
  return make_node(ExprOp::Div, std::move(a), std::move(b));
}

inline ExprPtr make_pow(ExprPtr a, int k) {
  if (k == 0) return make_const(1);
  if (k == 1) return a;
  if (a->op == ExprOp::Constant && (a->value != 0 || k > 0))
    return make_const(std::pow(a->value, k));
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Pow;
  n->a = std::move(a);
  n->exponent = k;
  return n;
}

inline ExprPtr make_func(ExprOp op, ExprPtr a) { return make_node(op, std::move(a)); }

// replace every variable i by repl[i]
inline ExprPtr substitute(const ExprPtr& e, const std::vector<ExprPtr>& repl) {
  switch (e->op) {
    case ExprOp::Constant: return e;
    case ExprOp::Variable: return repl.at(static_cast<std::size_t>(e->var));
    case ExprOp::Add: return make_add(substitute(e->a, repl), substitute(e->b, repl));
    case ExprOp::Sub: return make_sub(substitute(e->a, repl), substitute(e->b, repl));
    case ExprOp::Mul: return make_mul(substitute(e->a, repl), substitute(e->b, repl));
    case ExprOp::Div: return make_div(substitute(e->a, repl), substitute(e->b, repl));
    case ExprOp::Pow: return make_pow(substitute(e->a, repl), e->exponent);
    case ExprOp::Neg: return make_neg(substitute(e->a, repl));
    default: return make_func(e->op, substitute(e->a, repl));
  }
}

// --- evaluation ---

inline double eval_node(const ExprNode& n, const Eigen::VectorXd& x) {
  switch (n.op) {
    case ExprOp::Constant:
      return n.value;
    case ExprOp::Variable:
      return x(n.var);
    case ExprOp::Add:
      return eval_node(*n.a, x) + eval_node(*n.b, x);
    case ExprOp::Sub:
      return eval_node(*n.a, x) - eval_node(*n.b, x);
    case ExprOp::Mul:
      return eval_node(*n.a, x) * eval_node(*n.b, x);
    case ExprOp::Div: {
      double num = eval_node(*n.a, x);
      double den = eval_node(*n.b, x);
      if (den == 0.0) throw eval_error("division by zero");
      return num / den;
    }
    case ExprOp::Pow: {
      double base = eval_node(*n.a, x);
      if (base == 0.0 && n.exponent < 0) throw eval_error("zero raised to a negative power");
      return std::pow(base, n.exponent);
    }
    case ExprOp::Neg:
      return -eval_node(*n.a, x);
    case ExprOp::Exp:
      return std::exp(eval_node(*n.a, x));
    case ExprOp::Sin:
      return std::sin(eval_node(*n.a, x));
    case ExprOp::Cos:
      return std::cos(eval_node(*n.a, x));
    case ExprOp::Atan:
      return std::atan(eval_node(*n.a, x));
  }
  throw eval_error("corrupt expression node");
}

// --- symbolic differentiation ---

inline ExprPtr diff_node(const ExprPtr& n, int i) {
  switch (n->op) {
    case ExprOp::Constant:
      return make_const(0);
    case ExprOp::Variable:
      return make_const(n->var == i ? 1 : 0);
    case ExprOp::Add:
      return make_add(diff_node(n->a, i), diff_node(n->b, i));
    case ExprOp::Sub:
      return make_sub(diff_node(n->a, i), diff_node(n->b, i));
    case ExprOp::Mul:
      return make_add(make_mul(diff_node(n->a, i), n->b), make_mul(n->a, diff_node(n->b, i)));
    case ExprOp::Div:
      return make_div(
          make_sub(make_mul(diff_node(n->a, i), n->b), make_mul(n->a, diff_node(n->b, i))),
          make_pow(n->b, 2));
    case ExprOp::Pow:
      return make_mul(make_const(n->exponent),
                      make_mul(make_pow(n->a, n->exponent - 1), diff_node(n->a, i)));
    case ExprOp::Neg:
      return make_neg(diff_node(n->a, i));
    case ExprOp::Exp:
      return make_mul(make_func(ExprOp::Exp, n->a), diff_node(n->a, i));
    case ExprOp::Sin:
      return make_mul(make_func(ExprOp::Cos, n->a), diff_node(n->a, i));
    case ExprOp::Cos:
      return make_neg(make_mul(make_func(ExprOp::Sin, n->a), diff_node(n->a, i)));
    case ExprOp::Atan:
      return make_div(diff_node(n->a, i), make_add(make_const(1), make_pow(n->a, 2)));
  }
  throw eval_error("corrupt expression node");
}

// --- structural equality ---

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->op != b->op) return false;
  switch (a->op) {
    case ExprOp::Constant:
      return a->value == b->value;
    case ExprOp::Variable:
      return a->var == b->var;
    case ExprOp::Pow:
      return a->exponent == b->exponent && expr_equal(a->a, b->a);
    case ExprOp::Neg:
    case ExprOp::Exp:
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Atan:
      return expr_equal(a->a, b->a);
    default:
      return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
  }
}

// --- printing (normal form; reparsing the printed text recovers the AST) ---

namespace detail {

// precedence: add 1 < mul 2 < unary neg 3 < pow 4 < atom 5
inline int precedence(const ExprNode& n) {
  switch (n.op) {
    case ExprOp::Add:
    case ExprOp::Sub:
      return 1;
    case ExprOp::Mul:
    case ExprOp::Div:
      return 2;
    case ExprOp::Neg:
      return 3;
    case ExprOp::Pow:
      return 4;
    case ExprOp::Constant:
      return n.value < 0 ? 3 : 5;  // negative constants print as "-c"
    default:
      return 5;
  }
}

inline std::string print_const(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void print_node(const ExprNode& n, const std::vector<std::string>& names,
                       std::ostream& os) {
  auto child = [&](const ExprPtr& c, int min_prec) {
    if (precedence(*c) < min_prec) {
      os << '(';
      print_node(*c, names, os);
      os << ')';
    } else {
      print_node(*c, names, os);
    }
  };
  switch (n.op) {
    case ExprOp::Constant:
      os << print_const(n.value);
      break;
    case ExprOp::Variable:
      os << names.at(n.var);
      break;
    case ExprOp::Add:
      child(n.a, 1);
      os << " + ";
      child(n.b, 2);
      break;
    case ExprOp::Sub:
      child(n.a, 1);
      os << " - ";
      child(n.b, 2);
      break;
    case ExprOp::Mul:
      child(n.a, 2);
      os << "*";
      child(n.b, 3);
      break;
    case ExprOp::Div:
      child(n.a, 2);
      os << "/";
      child(n.b, 3);
      break;
    case ExprOp::Neg:
      os << "-";
      child(n.a, 3);
      break;
    case ExprOp::Pow:
      child(n.a, 5);
      os << "^" << n.exponent;
      break;
    case ExprOp::Exp:
      os << "exp(";
      print_node(*n.a, names, os);
      os << ')';
      break;
    case ExprOp::Sin:
      os << "sin(";
      print_node(*n.a, names, os);
      os << ')';
      break;
    case ExprOp::Cos:
      os << "cos(";
      print_node(*n.a, names, os);
      os << ')';
      break;
    case ExprOp::Atan:
      os << "atan(";
      print_node(*n.a, names, os);
      os << ')';
      break;
  }
}

}  // namespace detail

inline std::vector<std::string> default_var_names(int dim) {
  std::vector<std::string> names;
  if (dim <= 3) {
    const char* xyz[] = {"x", "y", "z"};
    for (int i = 0; i < dim; ++i) names.push_back(xyz[i]);
  } else {
    for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  }
  return names;
}

// --- parser ---

namespace detail {

class Parser {
 public:
  Parser(std::string text, std::vector<std::string> names)
      : text_(std::move(text)), names_(std::move(names)) {}

  ExprPtr parse() {
    skip_ws();
    if (pos_ >= text_.size()) throw parse_error("empty expression", pos_);
    ExprPtr e = parse_sum();
    skip_ws();
    if (pos_ < text_.size()) throw parse_error("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string text_;
  std::vector<std::string> names_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw parse_error(std::string("expected '") + c + "'", pos_);
  }

  ExprPtr parse_sum() {
    ExprPtr e = parse_term();
    for (;;) {
      if (accept('+'))
        e = make_add(e, parse_term());
      else if (accept('-'))
        e = make_sub(e, parse_term());
      else
        return e;
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      if (accept('*'))
        e = make_mul(e, parse_unary());
      else if (accept('/'))
        e = make_div(e, parse_unary());
      else
        return e;
    }
  }

  ExprPtr parse_unary() {
    if (accept('-')) return make_neg(parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (accept('^')) {
      int k = parse_int_exponent();
      return make_pow(base, k);
    }
    return base;
  }

  int parse_int_exponent() {
    skip_ws();
    bool negative = false;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) throw parse_error("expected integer exponent", pos_);
    int k = std::stoi(text_.substr(start, pos_ - start));
    return negative ? -k : k;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw parse_error("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw parse_error("unexpected character", pos_);
  }

  ExprPtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    // optional exponent part, required for round-tripping folded constants
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // not an exponent; leave 'e' for identifier handling
      }
    }
    if (pos_ == start) throw parse_error("malformed number", start);
    return make_const(std::stod(text_.substr(start, pos_ - start)));
  }

  ExprPtr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (name == "exp" || name == "sin" || name == "cos" || name == "atan") {
      expect('(');
      ExprPtr arg = parse_sum();
      expect(')');
      if (name == "exp") return make_func(ExprOp::Exp, arg);
      if (name == "sin") return make_func(ExprOp::Sin, arg);
      if (name == "cos") return make_func(ExprOp::Cos, arg);
      return make_func(ExprOp::Atan, arg);
    }
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return make_var(static_cast<int>(i));
    // x1..xN aliases are always accepted
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        int idx = std::stoi(name.substr(1)) - 1;
        if (idx >= 0 && idx < static_cast<int>(names_.size())) return make_var(idx);
        throw parse_error("variable index out of range: " + name, start);
      }
    }
    throw parse_error("unknown identifier: " + name, start);
  }
};

}  // namespace detail

// --- ScalarField ---

class ScalarField {
 public:
  ScalarField() = default;

  ScalarField(int ambient_dim, ExprPtr root,
              std::vector<std::string> var_names = {})
      : dim_(ambient_dim),
        root_(std::move(root)),
        names_(var_names.empty() ? default_var_names(ambient_dim) : std::move(var_names)) {
    grad_.resize(dim_);
    for (int i = 0; i < dim_; ++i) grad_[i] = diff_node(root_, i);
    hess_.resize(dim_);
    for (int i = 0; i < dim_; ++i) {
      hess_[i].resize(dim_);
      for (int j = i; j < dim_; ++j) hess_[i][j] = diff_node(grad_[i], j);
    }
  }

  int ambient_dim() const { return dim_; }
  const ExprPtr& root() const { return root_; }
  const std::vector<std::string>& var_names() const { return names_; }

  double eval(const Eigen::VectorXd& p) const {
    check_dim(p);
    return eval_node(*root_, p);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const {
    check_dim(p);
    Eigen::VectorXd g(dim_);
    for (int i = 0; i < dim_; ++i) g(i) = eval_node(*grad_[i], p);
    return g;
  }

  // symmetric by construction: only the upper triangle is differentiated
  Eigen::MatrixXd hessian(const Eigen::VectorXd& p) const {
    check_dim(p);
    Eigen::MatrixXd h(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) {
        double v = eval_node(*hess_[i][j], p);
        h(i, j) = v;
        h(j, i) = v;
      }
    return h;
  }

  ScalarField derivative(int i) const { return ScalarField(dim_, grad_.at(i), names_); }
  const ExprPtr& derivative_root(int i) const { return grad_.at(i); }

  std::string to_string() const {
    std::ostringstream os;
    detail::print_node(*root_, names_, os);
    return os.str();
  }

 private:
  void check_dim(const Eigen::VectorXd& p) const {
    if (p.size() != dim_) throw std::invalid_argument("point dimension mismatch");
  }

  int dim_ = 0;
  ExprPtr root_;
  std::vector<std::string> names_;
  std::vector<ExprPtr> grad_;
  std::vector<std::vector<ExprPtr>> hess_;
};

inline ScalarField parse_expr(const std::string& text, int ambient_dim) {
  detail::Parser p(text, default_var_names(ambient_dim));
  return ScalarField(ambient_dim, p.parse());
}

inline ScalarField parse_expr(const std::string& text, const std::vector<std::string>& names) {
  detail::Parser p(text, names);
  return ScalarField(static_cast<int>(names.size()), p.parse(), names);
}

}  // namespace strata
