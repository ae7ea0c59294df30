// Copyright 2026 The Cloudlet ITS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cits/policy_parser.h"
#include "cits/error.h"
#include <cctype>
#include <cstdlib>
#include <optional>
#include <set>

namespace cits::policy {
namespace {

enum class Tok {
  kIdent,
  kKeyword,
  kString,
  kNumber,
  kLParen,
  kRParen,
  kLBrace,
  kRBrace,
  kComma,
  kDot,
  kColon,
  kDefine,  // :=
  kSemicolon,
  kEnd,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0;
  int line = 1;
  int column = 1;
};

std::set<std::string> const& Keywords() {
  static auto const* k = new std::set<std::string>{
      "auth",     "and",       "or",        "not",   "exists",   "forall",
      "in",       "notin",     "subset",    "subseteq", "nsubseteq",
      "intersect", "union",    "eff",       "att",   "true",     "false",
      "system"};
  return *k;
}

std::string Describe(Token const& t) {
  switch (t.kind) {
    case Tok::kEnd: return "end of input";
    case Tok::kString: return "string \"" + t.text + "\"";
    case Tok::kNumber: return "number " + t.text;
    default: return "'" + t.text + "'";
  }
}

[[noreturn]] void Throw(ErrorCode code, Token const& at, std::string const& msg) {
  throw PositionedError(code,
                        std::to_string(at.line) + ":" + std::to_string(at.column) +
                            ": " + msg,
                        at.line, at.column);
}

std::vector<Token> Lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t{Tok::kEnd, "", 0, line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      t.text = std::string(src.substr(i, j - i));
      t.kind = Keywords().contains(t.text) ? Tok::kKeyword : Tok::kIdent;
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      t.kind = Tok::kNumber;
      t.text = std::string(src.substr(i, j - i));
      t.number = std::strtod(t.text.c_str(), nullptr);
      advance(j - i);
    } else if (c == '"') {
      advance(1);
      std::string value;
      bool closed = false;
      while (i < src.size()) {
        char d = src[i];
        if (d == '"') {
          advance(1);
          closed = true;
          break;
        }
        if (d == '\n') break;
        if (d == '\\' && i + 1 < src.size()) {
          advance(1);
          d = src[i];
        }
        value.push_back(d);
        advance(1);
      }
      if (!closed) Throw(ErrorCode::kSyntaxError, t, "unterminated string literal");
      t.kind = Tok::kString;
      t.text = std::move(value);
    } else if (c == ':' && i + 1 < src.size() && src[i + 1] == '=') {
      t.kind = Tok::kDefine;
      t.text = ":=";
      advance(2);
    } else {
      switch (c) {
        case '(': t.kind = Tok::kLParen; break;
        case ')': t.kind = Tok::kRParen; break;
        case '{': t.kind = Tok::kLBrace; break;
        case '}': t.kind = Tok::kRBrace; break;
        case ',': t.kind = Tok::kComma; break;
        case '.': t.kind = Tok::kDot; break;
        case ':': t.kind = Tok::kColon; break;
        case ';': t.kind = Tok::kSemicolon; break;
        default:
          t.text = std::string(1, c);
          Throw(ErrorCode::kSyntaxError, t, "unexpected character '" + t.text + "'");
      }
      t.text = std::string(1, c);
      advance(1);
    }
    out.push_back(std::move(t));
  }
  out.push_back(Token{Tok::kEnd, "", 0, line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  std::vector<AuthFunction> Program() {
    std::vector<AuthFunction> out;
    std::set<std::string> ops;
    while (Peek().kind != Tok::kEnd) {
      auto const& start = Peek();
      auto fn = Declaration();
      if (!ops.insert(fn.op).second) {
        Throw(ErrorCode::kSyntaxError, start,
              "duplicate declaration of operation '" + fn.op + "'");
      }
      out.push_back(std::move(fn));
    }
    return out;
  }

  AuthFunction Declaration() {
    AuthFunction fn;
    fn.line = Peek().line;
    ExpectKeyword("auth");
    fn.op = Expect(Tok::kIdent, "operation name").text;
    Expect(Tok::kLParen, "'('");
    formals_.clear();
    if (Peek().kind != Tok::kRParen) {
      do {
        auto const& name_tok = Expect(Tok::kIdent, "formal parameter name");
        Formal formal{name_tok.text, FormalKind::kAny};
        if (Peek().kind == Tok::kColon) {
          Next();
          formal.kind = FormalKindOf(Expect(Tok::kIdent, "parameter kind"));
        }
        if (formals_.contains(formal.name)) {
          Throw(ErrorCode::kSyntaxError, name_tok,
                "duplicate formal parameter '" + formal.name + "'");
        }
        formals_.insert(formal.name);
        fn.formals.push_back(std::move(formal));
      } while (Accept(Tok::kComma));
    }
    Expect(Tok::kRParen, "')'");
    Expect(Tok::kDefine, "':='");
    fn.body = ParseFormulaBody();
    Accept(Tok::kSemicolon);
    if (Peek().kind != Tok::kEnd && !IsKeyword(Peek(), "auth")) {
      Throw(ErrorCode::kSyntaxError, Peek(),
            "expected end of declaration, found " + Describe(Peek()));
    }
    return fn;
  }

  Formula Standalone(std::vector<std::string> const& formals) {
    formals_ = {formals.begin(), formals.end()};
    auto f = ParseFormulaBody();
    if (Peek().kind != Tok::kEnd) {
      Throw(ErrorCode::kSyntaxError, Peek(),
            "expected end of input, found " + Describe(Peek()));
    }
    return f;
  }

 private:
  Token const& Peek() const { return tokens_[pos_]; }
  Token const& Next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  static bool IsKeyword(Token const& t, std::string_view kw) {
    return t.kind == Tok::kKeyword && t.text == kw;
  }

  bool Accept(Tok kind) {
    if (Peek().kind != kind) return false;
    Next();
    return true;
  }

  bool AcceptKeyword(std::string_view kw) {
    if (!IsKeyword(Peek(), kw)) return false;
    Next();
    return true;
  }

  Token const& Expect(Tok kind, std::string const& what) {
    if (Peek().kind != kind) {
      Throw(ErrorCode::kSyntaxError, Peek(),
            "expected " + what + ", found " + Describe(Peek()));
    }
    return Next();
  }

  void ExpectKeyword(std::string_view kw) {
    if (!IsKeyword(Peek(), kw)) {
      Throw(ErrorCode::kSyntaxError, Peek(),
            "expected '" + std::string(kw) + "', found " + Describe(Peek()));
    }
    Next();
  }

  static FormalKind FormalKindOf(Token const& t) {
    auto const& k = t.text;
    if (k == "Source" || k == "S") return FormalKind::kSource;
    if (k == "TC" || k == "Cloudlet") return FormalKind::kCloudlet;
    if (k == "TargetVehicle" || k == "VT" || k == "Vehicle") {
      return FormalKind::kTargetVehicle;
    }
    Throw(ErrorCode::kSyntaxError, t,
          "unknown parameter kind '" + k + "' (expected Source, TC or TargetVehicle)");
  }

  Formula ParseFormulaBody() { return Or(); }

  Formula Or() {
    auto lhs = And();
    while (AcceptKeyword("or")) lhs = Formula::Or(std::move(lhs), And());
    return lhs;
  }

  Formula And() {
    auto lhs = Unary();
    while (AcceptKeyword("and")) lhs = Formula::And(std::move(lhs), Unary());
    return lhs;
  }

  Formula Unary() {
    if (AcceptKeyword("not")) return Formula::Not(Unary());
    if (IsKeyword(Peek(), "exists") || IsKeyword(Peek(), "forall")) {
      bool exists = Next().text == "exists";
      auto const& var = Expect(Tok::kIdent, "variable name");
      if (formals_.contains(var.text)) {
        Throw(ErrorCode::kSyntaxError, var,
              "variable '" + var.text + "' shadows a formal parameter");
      }
      ExpectKeyword("in");
      auto domain = SetExpr();
      Expect(Tok::kDot, "'.'");
      bound_.push_back(var.text);
      auto body = ParseFormulaBody();
      bound_.pop_back();
      return exists ? Formula::Exists(var.text, std::move(domain), std::move(body))
                    : Formula::Forall(var.text, std::move(domain), std::move(body));
    }
    return Primary();
  }

  static bool ContinuesSetExpr(Token const& t) {
    if (t.kind != Tok::kKeyword) return false;
    static auto const* k = new std::set<std::string>{
        "in", "notin", "subset", "subseteq", "nsubseteq", "intersect", "union"};
    return k->contains(t.text);
  }

  Formula Primary() {
    if (AcceptKeyword("true")) return Formula::True();
    if (AcceptKeyword("false")) return Formula::False();
    if (Peek().kind != Tok::kLParen) return Comparison();

    // '(' opens either a grouped formula or a grouped set operand. Try the
    // formula reading first; fall back when a set operator follows.
    auto const save = pos_;
    auto const scope = bound_.size();
    std::optional<PositionedError> first;
    try {
      Next();
      auto inner = ParseFormulaBody();
      Expect(Tok::kRParen, "')'");
      if (!ContinuesSetExpr(Peek())) return Formula::Paren(std::move(inner));
    } catch (PositionedError const& e) {
      first = e;
    }
    pos_ = save;
    bound_.resize(scope);
    try {
      return Comparison();
    } catch (PositionedError const& e) {
      if (first && (first->line() > e.line() ||
                    (first->line() == e.line() && first->column() >= e.column()))) {
        throw *first;
      }
      throw;
    }
  }

  Formula Comparison() {
    auto lhs = SetExpr();
    auto const& t = Peek();
    if (IsKeyword(t, "in") || IsKeyword(t, "notin")) {
      bool in = Next().text == "in";
      auto rhs = SetExpr();
      return in ? Formula::In(std::move(lhs), std::move(rhs))
                : Formula::NotIn(std::move(lhs), std::move(rhs));
    }
    if (IsKeyword(t, "subset") || IsKeyword(t, "subseteq") ||
        IsKeyword(t, "nsubseteq")) {
      auto op = Next().text;
      auto rel = op == "subset"     ? SetRelation::kSubset
                 : op == "subseteq" ? SetRelation::kSubsetEq
                                    : SetRelation::kNotSubsetEq;
      return Formula::SetRel(std::move(lhs), rel, SetExpr());
    }
    if (lhs.is_binary()) {
      auto rel = lhs.kind == Term::Kind::kIntersect ? SetRelation::kIntersect
                                                    : SetRelation::kUnion;
      return Formula::SetRel(std::move(lhs.operands[0]), rel,
                             std::move(lhs.operands[1]));
    }
    Throw(ErrorCode::kSyntaxError, t,
          "expected a relation (in, notin, subset, subseteq, nsubseteq, "
          "intersect, union), found " +
              Describe(t));
  }

  Term SetExpr() {
    auto lhs = Operand();
    while (true) {
      if (AcceptKeyword("intersect")) {
        lhs = Term::Intersect(std::move(lhs), Operand());
      } else if (AcceptKeyword("union")) {
        lhs = Term::Union(std::move(lhs), Operand());
      } else {
        return lhs;
      }
    }
  }

  Term Operand() {
    auto const& t = Peek();
    Term out;
    if (IsKeyword(t, "eff") || IsKeyword(t, "att")) {
      bool eff = Next().text == "eff";
      Expect(Tok::kLParen, "'('");
      auto const& p = Peek();
      std::string param;
      if (IsKeyword(p, "system")) {
        param = "system";
        Next();
      } else {
        param = Expect(Tok::kIdent, "parameter name").text;
        if (!formals_.contains(param)) {
          Throw(ErrorCode::kUnknownFormal, p,
                "'" + param + "' is not a formal parameter");
        }
      }
      Expect(Tok::kComma, "','");
      auto att = Expect(Tok::kString, "attribute name string").text;
      Expect(Tok::kRParen, "')'");
      out = eff ? Term::Effective(param, att) : Term::Direct(param, att);
    } else if (t.kind == Tok::kString) {
      out = Term::Literal(Atom(Next().text));
    } else if (t.kind == Tok::kNumber) {
      out = Term::Literal(Atom(Next().number));
    } else if (t.kind == Tok::kLBrace) {
      Next();
      AtomSet values;
      if (Peek().kind != Tok::kRBrace) {
        do {
          auto const& v = Peek();
          if (v.kind == Tok::kString) {
            values.insert(Atom(Next().text));
          } else if (v.kind == Tok::kNumber) {
            values.insert(Atom(Next().number));
          } else {
            Throw(ErrorCode::kSyntaxError, v,
                  "expected a literal in set, found " + Describe(v));
          }
        } while (Accept(Tok::kComma));
      }
      Expect(Tok::kRBrace, "'}'");
      out = Term::LiteralSet(std::move(values));
    } else if (t.kind == Tok::kIdent) {
      auto const& name = Next();
      bool bound = false;
      for (auto const& b : bound_) bound = bound || b == name.text;
      if (!bound) {
        Throw(ErrorCode::kUnboundVariable, name,
              "variable '" + name.text + "' is not bound by exists/forall");
      }
      out = Term::Variable(name.text);
    } else if (t.kind == Tok::kLParen) {
      Next();
      out = SetExpr();
      Expect(Tok::kRParen, "')'");
      return out;
    } else {
      Throw(ErrorCode::kSyntaxError, t, "expected an operand, found " + Describe(t));
    }
    out.line = t.line;
    out.column = t.column;
    return out;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::set<std::string> formals_;
  std::vector<std::string> bound_;
};

}  // namespace

std::vector<AuthFunction> ParsePolicies(std::string_view text) {
  return Parser(Lex(text)).Program();
}

AuthFunction ParseAuthFunction(std::string_view text) {
  auto fns = ParsePolicies(text);
  if (fns.size() != 1) {
    throw PositionedError(ErrorCode::kSyntaxError,
                          "expected exactly one declaration, found " +
                              std::to_string(fns.size()),
                          1, 1);
  }
  return std::move(fns.front());
}

Formula ParseFormula(std::string_view text, std::vector<std::string> const& formals) {
  return Parser(Lex(text)).Standalone(formals);
}

}  // namespace cits::policy
