// Rule text grammar:
//   rule    := [literal ("," literal)*] "->" atom
//   literal := atom | term "!=" term
//   atom    := IDENT "(" term ["," term] ")"
//   term    := IDENT starting with a lower-case letter (a variable)
//
// Anything else in term position is a constant and is rejected.

#include <cctype>

#include "monolink/datalog.hpp"
#include "monolink/errors.hpp"

namespace monolink {
namespace {

enum class Tok { kIdent, kLParen, kRParen, kComma, kArrow, kNeq, kEnd, kOther };

struct Token {
  Tok kind;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == s_.size()) return {Tok::kEnd, ""};
    const char c = s_[pos_];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '"' || c == '\'') {
      const std::size_t start = pos_;
      if (c == '"' || c == '\'') {
        // Quoted constants are lexed so the error message can name them.
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != c) ++pos_;
        if (pos_ < s_.size()) ++pos_;
        return {Tok::kOther, std::string(s_.substr(start, pos_ - start))};
      }
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      return {Tok::kIdent, std::string(s_.substr(start, pos_ - start))};
    }
    ++pos_;
    switch (c) {
      case '(':
        return {Tok::kLParen, "("};
      case ')':
        return {Tok::kRParen, ")"};
      case ',':
        return {Tok::kComma, ","};
      case '-':
        if (pos_ < s_.size() && s_[pos_] == '>') {
          ++pos_;
          return {Tok::kArrow, "->"};
        }
        break;
      case '!':
        if (pos_ < s_.size() && s_[pos_] == '=') {
          ++pos_;
          return {Tok::kNeq, "!="};
        }
        break;
      default:
        break;
    }
    return {Tok::kOther, std::string(1, c)};
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  // With `extend`, unknown predicates are added to it; it must alias `sig`.
  Parser(std::string_view text, const Signature& sig, Signature* extend = nullptr)
      : lex_(text), sig_(sig), extend_(extend) {
    advance();
  }

  Rule parse() {
    Rule rule;
    if (cur_.kind != Tok::kArrow) {
      rule.body.push_back(literal());
      while (cur_.kind == Tok::kComma) {
        advance();
        rule.body.push_back(literal());
      }
    }
    expect(Tok::kArrow, "'->'");
    rule.head = atom(name());
    if (cur_.kind != Tok::kEnd) fail("trailing input '" + cur_.text + "'");
    validate_rule(rule);
    return rule;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

  void advance() { cur_ = lex_.next(); }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) {
      fail(std::string("expected ") + what + ", found '" + cur_.text + "'");
    }
    advance();
  }

  std::string name() {
    if (cur_.kind != Tok::kIdent) fail("expected identifier, found '" + cur_.text + "'");
    std::string s = cur_.text;
    advance();
    return s;
  }

  std::string term() {
    if (cur_.kind != Tok::kIdent || !std::islower(static_cast<unsigned char>(cur_.text[0]))) {
      fail("constants are not allowed in rules: '" + cur_.text + "'");
    }
    return name();
  }

  Literal literal() {
    if (cur_.kind != Tok::kIdent) fail("expected literal, found '" + cur_.text + "'");
    std::string first = name();
    if (cur_.kind == Tok::kNeq) {
      if (!std::islower(static_cast<unsigned char>(first[0]))) {
        fail("constants are not allowed in rules: '" + first + "'");
      }
      advance();
      std::string second = term();
      if (first == second) {
        fail("inequality '" + first + " != " + second + "' mentions the same term twice");
      }
      return Inequality{std::move(first), std::move(second)};
    }
    return atom(first);
  }

  Atom atom(const std::string& pred_name) {
    auto pred = sig_.find(pred_name);
    if (!pred && !extend_) fail("unknown predicate '" + pred_name + "'");
    expect(Tok::kLParen, "'('");
    Atom a;
    a.first = term();
    std::size_t arity = 1;
    if (cur_.kind == Tok::kComma) {
      advance();
      a.second = term();
      arity = 2;
    }
    expect(Tok::kRParen, "')'");
    if (!pred) pred = arity == 1 ? extend_->add_unary(pred_name) : extend_->add_binary(pred_name);
    a.predicate = *pred;
    if (arity != a.arity()) {
      fail("predicate '" + pred_name + "' has arity " + std::to_string(a.arity()) + ", got " +
           std::to_string(arity) + " terms");
    }
    return a;
  }

  Lexer lex_;
  const Signature& sig_;
  Signature* extend_;
  Token cur_{Tok::kEnd, ""};
};

std::string atom_text(const Atom& a, const Signature& sig) {
  std::string s = sig.name(a.predicate) + "(" + a.first;
  if (!a.second.empty()) s += "," + a.second;
  return s + ")";
}

}  // namespace

Rule parse_rule(std::string_view text, const Signature& sig) {
  try {
    return Parser(text, sig).parse();
  } catch (const DataError& e) {
    throw ParseError(e.what());
  }
}

Rule parse_rule_extending(std::string_view text, Signature& sig) {
  try {
    return Parser(text, sig, &sig).parse();
  } catch (const DataError& e) {
    throw ParseError(e.what());
  }
}

std::string to_string(const Rule& rule, const Signature& sig) {
  std::string s;
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i > 0) s += ", ";
    if (const auto* a = std::get_if<Atom>(&rule.body[i])) {
      s += atom_text(*a, sig);
    } else {
      const auto& ineq = std::get<Inequality>(rule.body[i]);
      s += ineq.lhs + " != " + ineq.rhs;
    }
  }
  s += rule.body.empty() ? "-> " : " -> ";
  return s + atom_text(rule.head, sig);
}

namespace {

template <typename Sig, typename ParseLine>
Program parse_lines(std::string_view text, Sig& sig, ParseLine parse_line) {
  Program program;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) {
      if (end == text.size()) break;
      continue;
    }
    try {
      program.push_back(parse_line(line, sig));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (end == text.size()) break;
  }
  return program;
}

}  // namespace

Program parse_program(std::string_view text, const Signature& sig) {
  return parse_lines(text, sig, [](std::string_view line, const Signature& s) { return parse_rule(line, s); });
}

Program parse_program_extending(std::string_view text, Signature& sig) {
  return parse_lines(text, sig, [](std::string_view line, Signature& s) { return parse_rule_extending(line, s); });
}

std::string to_string(const Program& program, const Signature& sig) {
  std::string s;
  for (const auto& r : program) s += to_string(r, sig) + "\n";
  return s;
}

}  // namespace monolink
