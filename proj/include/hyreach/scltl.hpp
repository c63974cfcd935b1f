#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hyreach/errors.hpp"

namespace hyreach::scltl {

/// Finite observation alphabet. Observations are referred to by index;
/// names are unique tokens such as "o1".
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  /// Index of `name`, or -1 if the alphabet does not contain it.
  int index_of(std::string_view name) const;

 private:
  std::vector<std::string> names_;
};

enum class NodeKind { True, Obs, NegObs, And, Or, Next, Until, Eventually };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Co-safe LTL syntax tree. Negation appears only directly on observations.
/// Eventually(f) is kept as its own node but is semantically Until(True, f).
struct Formula {
  NodeKind kind = NodeKind::True;
  int obs = -1;             // Obs / NegObs
  FormulaPtr left, right;   // And/Or/Until use both; Next/Eventually use left

  static FormulaPtr make_true();
  static FormulaPtr make_obs(int obs);
  static FormulaPtr make_neg_obs(int obs);
  static FormulaPtr make_and(FormulaPtr l, FormulaPtr r);
  static FormulaPtr make_or(FormulaPtr l, FormulaPtr r);
  static FormulaPtr make_next(FormulaPtr f);
  static FormulaPtr make_until(FormulaPtr l, FormulaPtr r);
  static FormulaPtr make_eventually(FormulaPtr f);
};

bool structurally_equal(const Formula& a, const Formula& b);

/// A finite word over the alphabet, as observation indices.
using Word = std::vector<int>;

/// Parses formula text over the operators `T ! & | X U F`, parentheses and
/// alphabet names. Precedence: unary > & > | > U, with U right-associative.
/// Throws SyntaxError, UnknownObservation or NegationOfNonObservation.
FormulaPtr parse_formula(const std::string& text, const Alphabet& alphabet);

/// Renders the formula with minimal parentheses; parsing the result yields
/// a structurally identical tree.
std::string to_string(const Formula& f, const Alphabet& alphabet);

/// Finite-word satisfaction: w |= o iff w(1)=o; w |= X f iff |w|>1 and the
/// tail satisfies f; w |= f1 U f2 iff f2 holds at some suffix with f1 at all
/// earlier suffixes. Throws EmptyWord for the empty word.
bool satisfies_finite(std::span<const int> word, const Formula& f);

/// True iff some non-empty prefix of `word` satisfies `f`. This defines
/// membership of `word` in the language used by the automaton compiler.
bool good_prefix(std::span<const int> word, const Formula& f);

}  // namespace hyreach::scltl
