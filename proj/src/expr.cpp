#include "hcast/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace hcast::expr {

ExprPtr variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Variable;
  n->name = std::move(name);
  return n;
}

ExprPtr number(Scalar v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Number;
  n->number = v;
  return n;
}

ExprPtr int_vector(std::vector<int> v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::IntVector;
  n->ivec = std::move(v);
  return n;
}

ExprPtr call(std::string name, std::vector<ExprPtr> args,
             std::vector<std::pair<std::string, ExprPtr>> named) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Call;
  n->name = std::move(name);
  n->args = std::move(args);
  n->named = std::move(named);
  return n;
}

ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

ParseError::ParseError(const std::string& msg, std::size_t off)
    : ConfigError(msg + " at offset " + std::to_string(off)), offset(off) {}

namespace {

struct Token {
  enum class Type { Ident, Number, LParen, RParen, Comma, Assign, Plus, Minus, Star, Slash, HMul, End };
  Type type;
  std::string text;
  Scalar number = 0;
  std::size_t offset;  // 1-based position of the first byte
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_ws();
      if (pos_ >= src_.size()) {
        out.push_back({Token::Type::End, "", 0, pos_ + 1});
        return out;
      }
      const std::size_t at = pos_ + 1;
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        std::string id;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
                src_[pos_] == '.'))
          id += src_[pos_++];
        out.push_back({Token::Type::Ident, id, 0, at});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        out.push_back(lex_number(at));
      } else {
        switch (c) {
          case '(': out.push_back({Token::Type::LParen, "(", 0, at}); ++pos_; break;
          case ')': out.push_back({Token::Type::RParen, ")", 0, at}); ++pos_; break;
          case ',': out.push_back({Token::Type::Comma, ",", 0, at}); ++pos_; break;
          case '=': out.push_back({Token::Type::Assign, "=", 0, at}); ++pos_; break;
          case '+': out.push_back({Token::Type::Plus, "+", 0, at}); ++pos_; break;
          case '-': out.push_back({Token::Type::Minus, "-", 0, at}); ++pos_; break;
          case '*': out.push_back({Token::Type::Star, "*", 0, at}); ++pos_; break;
          case '/': out.push_back({Token::Type::Slash, "/", 0, at}); ++pos_; break;
          case '%': {
            if (src_.compare(pos_, 4, "%**%") == 0) {
              out.push_back({Token::Type::HMul, "%**%", 0, at});
              pos_ += 4;
            } else {
              throw ParseError("unknown token '%'", at);
            }
            break;
          }
          default:
            throw ParseError(std::string("unknown token '") + c + "'", at);
        }
      }
    }
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  Token lex_number(std::size_t at) {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    Scalar v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", at);
    pos_ += static_cast<std::size_t>(end - begin);
    return {Token::Type::Number, std::string(begin, static_cast<const char*>(end)), v, at};
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ExprPtr run() {
    ExprPtr e = parse_mul();
    expect(Token::Type::End, "trailing input");
    return e;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_++]; }
  bool accept(Token::Type t) {
    if (peek().type == t) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(Token::Type t, const std::string& what) {
    if (!accept(t)) throw ParseError("expected " + what, peek().offset);
  }

  // mul := arith { "%**%" arith }
  ExprPtr parse_mul() {
    ExprPtr e = parse_arith();
    while (peek().type == Token::Type::HMul) {
      next();
      e = binary(BinOp::HMul, e, parse_arith());
    }
    return e;
  }

  // arith := unit { ("+"|"-"|"*"|"/") unit }   (flat precedence, left-assoc)
  ExprPtr parse_arith() {
    ExprPtr e = parse_unit();
    while (true) {
      BinOp op;
      switch (peek().type) {
        case Token::Type::Plus: op = BinOp::Add; break;
        case Token::Type::Minus: op = BinOp::Sub; break;
        case Token::Type::Star: op = BinOp::Mul; break;
        case Token::Type::Slash: op = BinOp::Div; break;
        default: return e;
      }
      next();
      e = binary(op, e, parse_unit());
    }
  }

  ExprPtr parse_unit() {
    const Token& t = peek();
    switch (t.type) {
      case Token::Type::Number:
        next();
        return number(t.number);
      case Token::Type::Minus: {
        // negative literal in unit position
        next();
        if (peek().type != Token::Type::Number)
          throw ParseError("expected number after '-'", peek().offset);
        return number(-next().number);
      }
      case Token::Type::LParen: {
        next();
        ExprPtr e = parse_mul();
        expect(Token::Type::RParen, "')'");
        return e;
      }
      case Token::Type::Ident: {
        next();
        if (t.text == "TRUE" || t.text == "true") return number(1.0);
        if (t.text == "FALSE" || t.text == "false") return number(0.0);
        if (peek().type != Token::Type::LParen) return variable(t.text);
        next();  // '('
        if (t.text == "c") return parse_cvec();
        return parse_call_args(t.text);
      }
      case Token::Type::End:
        throw ParseError("unexpected end of input", t.offset);
      default:
        throw ParseError("unexpected token '" + t.text + "'", t.offset);
    }
  }

  // after "c(" — integer-vector literal
  ExprPtr parse_cvec() {
    std::vector<int> values;
    if (!accept(Token::Type::RParen)) {
      while (true) {
        bool neg = accept(Token::Type::Minus);
        const Token& t = peek();
        if (t.type != Token::Type::Number || t.number != std::floor(t.number))
          throw ParseError("expected integer in c(...)", t.offset);
        next();
        values.push_back(static_cast<int>(neg ? -t.number : t.number));
        if (accept(Token::Type::Comma)) continue;
        expect(Token::Type::RParen, "')'");
        break;
      }
    }
    return int_vector(std::move(values));
  }

  // after "name("
  ExprPtr parse_call_args(const std::string& name) {
    std::vector<ExprPtr> args;
    std::vector<std::pair<std::string, ExprPtr>> named;
    if (!accept(Token::Type::RParen)) {
      while (true) {
        if (peek().type == Token::Type::Ident && toks_[i_ + 1].type == Token::Type::Assign) {
          const Token& id = next();
          next();  // '='
          for (const auto& [n, v] : named)
            if (n == id.text) throw ParseError("duplicate named argument '" + id.text + "'", id.offset);
          named.emplace_back(id.text, parse_mul());
        } else {
          if (!named.empty())
            throw ParseError("positional argument after named argument", peek().offset);
          args.push_back(parse_mul());
        }
        if (accept(Token::Type::Comma)) continue;
        expect(Token::Type::RParen, "')'");
        break;
      }
    }
    return call(name, std::move(args), std::move(named));
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

bool is_arith(const ExprPtr& e) {
  return e->kind == Node::Kind::Binary && e->op != BinOp::HMul;
}
bool is_hmul(const ExprPtr& e) { return e->kind == Node::Kind::Binary && e->op == BinOp::HMul; }

void print(std::ostream& os, const ExprPtr& e);

void print_child(std::ostream& os, const ExprPtr& child, bool parent_is_hmul, bool is_right) {
  bool parens;
  if (parent_is_hmul) {
    // arith binds tighter; only a right-nested %**% needs grouping
    parens = is_right && is_hmul(child);
  } else {
    // inside an arith chain: any %**% child and any right-nested arith
    parens = is_hmul(child) || (is_right && is_arith(child));
  }
  if (parens) os << "(";
  print(os, child);
  if (parens) os << ")";
}

void print(std::ostream& os, const ExprPtr& e) {
  switch (e->kind) {
    case Node::Kind::Variable:
      os << e->name;
      break;
    case Node::Kind::Number:
      os << format_shortest(e->number);
      break;
    case Node::Kind::IntVector: {
      os << "c(";
      for (std::size_t i = 0; i < e->ivec.size(); ++i) os << (i ? ", " : "") << e->ivec[i];
      os << ")";
      break;
    }
    case Node::Kind::Call: {
      os << e->name << "(";
      bool first = true;
      for (const auto& a : e->args) {
        if (!first) os << ", ";
        first = false;
        print(os, a);
      }
      for (const auto& [n, v] : e->named) {
        if (!first) os << ", ";
        first = false;
        os << n << "=";
        print(os, v);
      }
      os << ")";
      break;
    }
    case Node::Kind::Binary: {
      const bool hm = e->op == BinOp::HMul;
      print_child(os, e->lhs, hm, false);
      os << " " << to_string(e->op) << " ";
      print_child(os, e->rhs, hm, true);
      break;
    }
  }
}

}  // namespace

ExprPtr parse_expr(const std::string& source) {
  if (source.empty()) throw ParseError("empty expression", 1);
  return Parser(Lexer(source).run()).run();
}

std::string pretty_print(const ExprPtr& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Node::Kind::Variable:
      return a->name == b->name;
    case Node::Kind::Number:
      return a->number == b->number ||
             (std::isnan(a->number) && std::isnan(b->number));
    case Node::Kind::IntVector:
      return a->ivec == b->ivec;
    case Node::Kind::Call: {
      if (a->name != b->name || a->args.size() != b->args.size() ||
          a->named.size() != b->named.size())
        return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!equal(a->args[i], b->args[i])) return false;
      for (std::size_t i = 0; i < a->named.size(); ++i)
        if (a->named[i].first != b->named[i].first || !equal(a->named[i].second, b->named[i].second))
          return false;
      return true;
    }
    case Node::Kind::Binary:
      return a->op == b->op && equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
  }
  return false;
}

ExprPtr bind_named(const ExprPtr& e, const std::string& arg_name, Scalar value, int* replaced) {
  switch (e->kind) {
    case Node::Kind::Variable:
    case Node::Kind::Number:
    case Node::Kind::IntVector:
      return e;
    case Node::Kind::Call: {
      std::vector<ExprPtr> args;
      args.reserve(e->args.size());
      for (const auto& a : e->args) args.push_back(bind_named(a, arg_name, value, replaced));
      std::vector<std::pair<std::string, ExprPtr>> named;
      named.reserve(e->named.size());
      for (const auto& [n, v] : e->named) {
        if (n == arg_name) {
          if (replaced) ++*replaced;
          named.emplace_back(n, number(value));
        } else {
          named.emplace_back(n, bind_named(v, arg_name, value, replaced));
        }
      }
      return call(e->name, std::move(args), std::move(named));
    }
    case Node::Kind::Binary:
      return binary(e->op, bind_named(e->lhs, arg_name, value, replaced),
                    bind_named(e->rhs, arg_name, value, replaced));
  }
  return e;
}

namespace {
void collect_vars(const ExprPtr& e, std::vector<std::string>& out) {
  switch (e->kind) {
    case Node::Kind::Variable:
      out.push_back(e->name);
      break;
    case Node::Kind::Call:
      for (const auto& a : e->args) collect_vars(a, out);
      for (const auto& [n, v] : e->named) collect_vars(v, out);
      break;
    case Node::Kind::Binary:
      collect_vars(e->lhs, out);
      collect_vars(e->rhs, out);
      break;
    default:
      break;
  }
}
}  // namespace

std::vector<std::string> variables(const ExprPtr& e) {
  std::vector<std::string> out;
  collect_vars(e, out);
  return out;
}

const char* to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::HMul: return "%**%";
  }
  return "?";
}

}  // namespace hcast::expr
