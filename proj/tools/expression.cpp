#include "expression.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <vector>

#include "katolab/errors.hpp"

namespace katolab::cli {

namespace {

using Fn = std::function<double(const Vec3&)>;

struct Node {
  Fn fn;
  bool constant = false;
  bool is_point = false;  // the bare identifier x
};

Node constant_node(double v) { return {[v](const Vec3&) { return v; }, true, false}; }

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Node parse() {
    Node n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return scalar(n);
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression \"" + s_ + "\" at position " + std::to_string(pos_) + ": " + what);
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

  Node scalar(const Node& n) const {
    if (n.is_point) fail("the point x is only allowed as |x|");
    return n;
  }

  // Folds nodes whose operands are all constant.
  static Node combine(Fn fn, bool constant) {
    if (constant) return constant_node(fn(Vec3::Zero()));
    return {std::move(fn), false, false};
  }

  Node expr() {
    Node lhs = term();
    for (;;) {
      if (accept('+')) {
        Node a = scalar(lhs), b = scalar(term());
        lhs = combine([fa = a.fn, fb = b.fn](const Vec3& x) { return fa(x) + fb(x); }, a.constant && b.constant);
      } else if (accept('-')) {
        Node a = scalar(lhs), b = scalar(term());
        lhs = combine([fa = a.fn, fb = b.fn](const Vec3& x) { return fa(x) - fb(x); }, a.constant && b.constant);
      } else {
        return lhs;
      }
    }
  }

  Node term() {
    Node lhs = unary();
    for (;;) {
      if (accept('*')) {
        Node a = scalar(lhs), b = scalar(unary());
        lhs = combine([fa = a.fn, fb = b.fn](const Vec3& x) { return fa(x) * fb(x); }, a.constant && b.constant);
      } else if (accept('/')) {
        Node a = scalar(lhs), b = scalar(unary());
        lhs = combine([fa = a.fn, fb = b.fn](const Vec3& x) { return fa(x) / fb(x); }, a.constant && b.constant);
      } else {
        return lhs;
      }
    }
  }

  Node unary() {
    if (accept('-')) {
      Node a = scalar(unary());
      return combine([fa = a.fn](const Vec3& x) { return -fa(x); }, a.constant);
    }
    if (accept('+')) return scalar(unary());
    return power();
  }

  Node power() {
    Node base = primary();
    if (accept('^')) {
      Node a = scalar(base), b = scalar(unary());
      return combine([fa = a.fn, fb = b.fn](const Vec3& x) { return std::pow(fa(x), fb(x)); },
                     a.constant && b.constant);
    }
    return base;
  }

  Node primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Node n = expr();
      expect(')');
      return n;
    }
    if (c == '|') {
      ++pos_;
      Node n = expr();
      expect('|');
      if (n.is_point) return {[](const Vec3& x) { return x.norm(); }, false, false};
      return combine([fa = n.fn](const Vec3& x) { return std::abs(fa(x)); }, n.constant);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Node number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return constant_node(v);
  }

  Node identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') return call(name);
    if (name == "x") return {[](const Vec3&) { return 0.0; }, false, true};
    if (name == "x1") return {[](const Vec3& x) { return x[0]; }, false, false};
    if (name == "x2") return {[](const Vec3& x) { return x[1]; }, false, false};
    if (name == "x3") return {[](const Vec3& x) { return x[2]; }, false, false};
    if (name == "r") return {[](const Vec3& x) { return x.norm(); }, false, false};
    if (name == "pi") return constant_node(M_PI);
    if (name == "e") return constant_node(std::exp(1.0));
    pos_ = start;
    fail("unknown variable '" + name + "'");
  }

  Node call(const std::string& name) {
    static const std::map<std::string, double (*)(double)> unary_fns = {
        {"ln", [](double v) { return std::log(v); }},   {"log", [](double v) { return std::log(v); }},
        {"exp", [](double v) { return std::exp(v); }},  {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::abs(v); }},  {"sin", [](double v) { return std::sin(v); }},
        {"cos", [](double v) { return std::cos(v); }},  {"tan", [](double v) { return std::tan(v); }},
        {"atan", [](double v) { return std::atan(v); }},
    };
    static const std::map<std::string, double (*)(double, double)> binary_fns = {
        {"min", [](double a, double b) { return std::min(a, b); }},
        {"max", [](double a, double b) { return std::max(a, b); }},
        {"pow", [](double a, double b) { return std::pow(a, b); }},
    };
    expect('(');
    std::vector<Node> args;
    if (!accept(')')) {
      do {
        args.push_back(scalar(expr()));
      } while (accept(','));
      expect(')');
    }
    if (auto it = unary_fns.find(name); it != unary_fns.end()) {
      if (args.size() != 1) fail(name + " takes one argument");
      return combine([f = it->second, a = args[0].fn](const Vec3& x) { return f(a(x)); }, args[0].constant);
    }
    if (auto it = binary_fns.find(name); it != binary_fns.end()) {
      if (args.size() != 2) fail(name + " takes two arguments");
      return combine([f = it->second, a = args[0].fn, b = args[1].fn](const Vec3& x) { return f(a(x), b(x)); },
                     args[0].constant && args[1].constant);
    }
    fail("unknown function '" + name + "'");
  }
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  if (text.find_first_not_of(" \t\n") == std::string::npos) throw ConfigError("empty expression");
  Parser p(text);
  const Node n = p.parse();
  Expression e;
  e.text_ = text;
  e.eval_ = n.fn;
  e.constant_ = n.constant;
  return e;
}

}  // namespace katolab::cli
