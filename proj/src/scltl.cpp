#include "hyreach/scltl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace hyreach::scltl {

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("alphabet: empty observation name");
    if (!seen.insert(n).second)
      throw ValidationError("alphabet: duplicate observation name '" + n + "'");
  }
}

int Alphabet::index_of(std::string_view name) const {
  for (int i = 0; i < size(); ++i)
    if (names_[i] == name) return i;
  return -1;
}

namespace {

FormulaPtr node(NodeKind kind, int obs, FormulaPtr l = nullptr,
                FormulaPtr r = nullptr) {
  auto f = std::make_shared<Formula>();
  f->kind = kind;
  f->obs = obs;
  f->left = std::move(l);
  f->right = std::move(r);
  return f;
}

}  // namespace

FormulaPtr Formula::make_true() { return node(NodeKind::True, -1); }
FormulaPtr Formula::make_obs(int obs) { return node(NodeKind::Obs, obs); }
FormulaPtr Formula::make_neg_obs(int obs) { return node(NodeKind::NegObs, obs); }
FormulaPtr Formula::make_and(FormulaPtr l, FormulaPtr r) {
  return node(NodeKind::And, -1, std::move(l), std::move(r));
}
FormulaPtr Formula::make_or(FormulaPtr l, FormulaPtr r) {
  return node(NodeKind::Or, -1, std::move(l), std::move(r));
}
FormulaPtr Formula::make_next(FormulaPtr f) {
  return node(NodeKind::Next, -1, std::move(f));
}
FormulaPtr Formula::make_until(FormulaPtr l, FormulaPtr r) {
  return node(NodeKind::Until, -1, std::move(l), std::move(r));
}
FormulaPtr Formula::make_eventually(FormulaPtr f) {
  return node(NodeKind::Eventually, -1, std::move(f));
}

bool structurally_equal(const Formula& a, const Formula& b) {
  if (a.kind != b.kind || a.obs != b.obs) return false;
  if ((a.left == nullptr) != (b.left == nullptr)) return false;
  if ((a.right == nullptr) != (b.right == nullptr)) return false;
  if (a.left && !structurally_equal(*a.left, *b.left)) return false;
  if (a.right && !structurally_equal(*a.right, *b.right)) return false;
  return true;
}

namespace {

enum class Tok { True, Not, And, Or, Next, Finally, Until, LParen, RParen, Name, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(') {
      out.push_back({Tok::LParen, "(", i++});
    } else if (c == ')') {
      out.push_back({Tok::RParen, ")", i++});
    } else if (c == '&') {
      out.push_back({Tok::And, "&", i++});
    } else if (c == '|') {
      out.push_back({Tok::Or, "|", i++});
    } else if (c == '!') {
      out.push_back({Tok::Not, "!", i++});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
        ++i;
      std::string word = text.substr(start, i - start);
      if (word == "T")
        out.push_back({Tok::True, word, start});
      else if (word == "X")
        out.push_back({Tok::Next, word, start});
      else if (word == "F")
        out.push_back({Tok::Finally, word, start});
      else if (word == "U")
        out.push_back({Tok::Until, word, start});
      else
        out.push_back({Tok::Name, word, start});
    } else {
      throw SyntaxError(std::string("unexpected character '") + c + "'", i);
    }
  }
  out.push_back({Tok::End, "", text.size()});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const Alphabet& alphabet)
      : toks_(std::move(tokens)), alphabet_(alphabet) {}

  FormulaPtr parse() {
    FormulaPtr f = until_expr();
    if (peek().kind != Tok::End)
      throw SyntaxError("unexpected token '" + peek().text + "', expected end of input",
                        peek().pos);
    return f;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  Token take() { return toks_[i_++]; }

  FormulaPtr until_expr() {
    FormulaPtr lhs = or_expr();
    if (peek().kind == Tok::Until) {
      take();
      return Formula::make_until(std::move(lhs), until_expr());  // right assoc
    }
    return lhs;
  }

  FormulaPtr or_expr() {
    FormulaPtr lhs = and_expr();
    while (peek().kind == Tok::Or) {
      take();
      lhs = Formula::make_or(std::move(lhs), and_expr());
    }
    return lhs;
  }

  FormulaPtr and_expr() {
    FormulaPtr lhs = unary();
    while (peek().kind == Tok::And) {
      take();
      lhs = Formula::make_and(std::move(lhs), unary());
    }
    return lhs;
  }

  FormulaPtr unary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::True:
        take();
        return Formula::make_true();
      case Tok::Next:
        take();
        return Formula::make_next(unary());
      case Tok::Finally:
        take();
        return Formula::make_eventually(unary());
      case Tok::Not: {
        Token bang = take();
        if (peek().kind != Tok::Name)
          throw NegationOfNonObservation(
              "negation is only allowed directly on an observation (at position " +
              std::to_string(bang.pos) + ")");
        return Formula::make_neg_obs(obs_index(take()));
      }
      case Tok::Name:
        return Formula::make_obs(obs_index(take()));
      case Tok::LParen: {
        take();
        FormulaPtr f = until_expr();
        if (peek().kind != Tok::RParen)
          throw SyntaxError("expected ')'", peek().pos);
        take();
        return f;
      }
      default:
        throw SyntaxError("unexpected token '" + t.text +
                              "', expected T, !, X, F, observation or '('",
                          t.pos);
    }
  }

  int obs_index(const Token& t) const {
    int idx = alphabet_.index_of(t.text);
    if (idx < 0)
      throw UnknownObservation("unknown observation '" + t.text + "' (at position " +
                               std::to_string(t.pos) + ")");
    return idx;
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  const Alphabet& alphabet_;
};

// Precedence levels for printing: higher binds tighter.
int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Until:
      return 0;
    case NodeKind::Or:
      return 1;
    case NodeKind::And:
      return 2;
    default:
      return 3;  // unary and atoms
  }
}

void print(const Formula& f, const Alphabet& a, int parent_prec, std::ostream& os) {
  int prec = precedence(f.kind);
  bool parens = prec < parent_prec;
  if (parens) os << '(';
  switch (f.kind) {
    case NodeKind::True:
      os << 'T';
      break;
    case NodeKind::Obs:
      os << a.name(f.obs);
      break;
    case NodeKind::NegObs:
      os << '!' << a.name(f.obs);
      break;
    case NodeKind::And:
      print(*f.left, a, 2, os);
      os << " & ";
      print(*f.right, a, 2, os);
      break;
    case NodeKind::Or:
      print(*f.left, a, 1, os);
      os << " | ";
      print(*f.right, a, 1, os);
      break;
    case NodeKind::Next:
      os << "X ";
      print(*f.left, a, 3, os);
      break;
    case NodeKind::Eventually:
      os << "F ";
      print(*f.left, a, 3, os);
      break;
    case NodeKind::Until:
      // Right-associative: the left operand needs parens if it is an Until.
      print(*f.left, a, 1, os);
      os << " U ";
      print(*f.right, a, 0, os);
      break;
  }
  if (parens) os << ')';
}

bool sat(std::span<const int> w, std::size_t i, const Formula& f) {
  switch (f.kind) {
    case NodeKind::True:
      return true;
    case NodeKind::Obs:
      return w[i] == f.obs;
    case NodeKind::NegObs:
      return w[i] != f.obs;
    case NodeKind::And:
      return sat(w, i, *f.left) && sat(w, i, *f.right);
    case NodeKind::Or:
      return sat(w, i, *f.left) || sat(w, i, *f.right);
    case NodeKind::Next:
      return i + 1 < w.size() && sat(w, i + 1, *f.left);
    case NodeKind::Until:
      for (std::size_t k = i; k < w.size(); ++k) {
        if (sat(w, k, *f.right)) return true;
        if (!sat(w, k, *f.left)) return false;
      }
      return false;
    case NodeKind::Eventually:
      for (std::size_t k = i; k < w.size(); ++k)
        if (sat(w, k, *f.left)) return true;
      return false;
  }
  return false;
}

}  // namespace

FormulaPtr parse_formula(const std::string& text, const Alphabet& alphabet) {
  return Parser(tokenize(text), alphabet).parse();
}

std::string to_string(const Formula& f, const Alphabet& alphabet) {
  std::ostringstream os;
  print(f, alphabet, 0, os);
  return os.str();
}

bool satisfies_finite(std::span<const int> word, const Formula& f) {
  if (word.empty()) throw EmptyWord("satisfies_finite: empty word");
  return sat(word, 0, f);
}

bool good_prefix(std::span<const int> word, const Formula& f) {
  if (word.empty()) throw EmptyWord("good_prefix: empty word");
  for (std::size_t len = 1; len <= word.size(); ++len)
    if (sat(word.first(len), 0, f)) return true;
  return false;
}

}  // namespace hyreach::scltl
