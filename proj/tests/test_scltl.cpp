#include <doctest.h>

#include "hyreach/scltl.hpp"

using namespace hyreach;
using namespace hyreach::scltl;

namespace {

Alphabet abc3() { return Alphabet({"o1", "o2", "o3"}); }
Alphabet abc5() { return Alphabet({"o1", "o2", "o3", "o4", "o5"}); }

Word word(std::initializer_list<int> w) { return Word(w); }

// The text of the benchmark specification: visit o1 then o2 (or o2 then o1),
// then o3, never touching o4 or o5 beforehand.
const char* kBenchmarkFormula =
    "((!o4 & !o5) U (o1 & ((!o4 & !o5) U (o2 & ((!o4 & !o5) U o3))))) | "
    "((!o4 & !o5) U (o2 & ((!o4 & !o5) U (o1 & ((!o4 & !o5) U o3)))))";

}  // namespace

TEST_SUITE("scltl") {

TEST_CASE("parse single eventually") {
  Alphabet a({"o1"});
  auto f = parse_formula("F o1", a);
  REQUIRE(f->kind == NodeKind::Eventually);
  REQUIRE(f->left->kind == NodeKind::Obs);
  CHECK(f->left->obs == 0);
}

TEST_CASE("parse precedence: unary > & > | > U") {
  Alphabet a = abc5();
  auto f = parse_formula("F(F(o1 & F o2) | F(o2 & F o1) & o3) & ((!o4 & !o5) U o3)", a);
  // Top level is a conjunction whose right operand is an until.
  REQUIRE(f->kind == NodeKind::And);
  CHECK(f->right->kind == NodeKind::Until);
  // Inside the left eventually, & binds tighter than |.
  const Formula& inner = *f->left->left;
  REQUIRE(inner.kind == NodeKind::Or);
  CHECK(inner.left->kind == NodeKind::Eventually);
  REQUIRE(inner.right->kind == NodeKind::And);
  CHECK(inner.right->left->kind == NodeKind::Eventually);
  CHECK(inner.right->right->kind == NodeKind::Obs);
}

TEST_CASE("parse right-associative until") {
  Alphabet a = abc3();
  auto f = parse_formula("o1 U o2 U o3", a);
  REQUIRE(f->kind == NodeKind::Until);
  CHECK(f->left->kind == NodeKind::Obs);
  CHECK(f->right->kind == NodeKind::Until);
}

TEST_CASE("parse errors") {
  Alphabet a = abc3();
  CHECK_THROWS_AS(parse_formula("U o1", a), SyntaxError);
  CHECK_THROWS_AS(parse_formula("F o1 &", a), SyntaxError);
  CHECK_THROWS_AS(parse_formula("(F o1", a), SyntaxError);
  CHECK_THROWS_AS(parse_formula("F o9", a), UnknownObservation);
  CHECK_THROWS_AS(parse_formula("!(o1 & o2)", a), NegationOfNonObservation);
  CHECK_THROWS_AS(parse_formula("!F o1", a), NegationOfNonObservation);
}

TEST_CASE("round trip parse -> print -> parse") {
  Alphabet a = abc5();
  const char* texts[] = {
      "F o1",
      "o1 U o2 U o3",
      "(o1 U o2) U o3",
      "X X o2 | F o3",
      "F(o1 & X(!o2 U o3))",
      "(!o4 & !o5) U o3",
      "F(F(o1 & F o2) | F(o2 & F o1) & o3) & ((!o4 & !o5) U o3)",
      kBenchmarkFormula,
  };
  for (const char* text : texts) {
    CAPTURE(text);
    auto f1 = parse_formula(text, a);
    std::string printed = to_string(*f1, a);
    auto f2 = parse_formula(printed, a);
    CHECK(structurally_equal(*f1, *f2));
    CHECK(to_string(*f2, a) == printed);
  }
}

TEST_CASE("satisfies_finite basics") {
  Alphabet a = abc3();
  auto obs3 = parse_formula("o3", a);
  CHECK(satisfies_finite(word({2}), *obs3));
  CHECK_FALSE(satisfies_finite(word({0}), *obs3));
  CHECK_THROWS_AS(satisfies_finite(Word{}, *obs3), EmptyWord);

  auto next = parse_formula("X o1", a);
  CHECK_FALSE(satisfies_finite(word({0}), *next));  // needs a second symbol
  CHECK(satisfies_finite(word({1, 0}), *next));

  auto until = parse_formula("o1 U o2", a);
  CHECK(satisfies_finite(word({0, 0, 1}), *until));
  CHECK_FALSE(satisfies_finite(word({0, 2, 1}), *until));
  CHECK(satisfies_finite(word({1}), *until));
}

TEST_CASE("benchmark formula accepting words") {
  Alphabet a = abc5();
  auto f = parse_formula(kBenchmarkFormula, a);
  CHECK(satisfies_finite(word({0, 1, 2}), *f));     // o1 o2 o3
  CHECK(satisfies_finite(word({1, 0, 2}), *f));     // o2 o1 o3
  CHECK_FALSE(satisfies_finite(word({3, 0, 1, 2}), *f));  // o4 first
  CHECK_FALSE(satisfies_finite(word({0, 1}), *f));        // no o3
  CHECK_FALSE(satisfies_finite(word({2, 0, 1}), *f));     // o3 before the pair
  CHECK(satisfies_finite(word({2, 0, 2, 1, 2}), *f));     // o3 interleaved
}

TEST_CASE("good_prefix") {
  Alphabet a = abc5();
  auto f = parse_formula(kBenchmarkFormula, a);
  CHECK(good_prefix(word({0, 1, 2, 3}), *f));  // prefix o1 o2 o3 accepts
  CHECK_FALSE(good_prefix(word({0, 1}), *f));
  auto t = parse_formula("T", a);
  CHECK(good_prefix(word({4}), *t));
  CHECK_THROWS_AS(good_prefix(Word{}, *f), EmptyWord);
}

TEST_CASE("eventually equals until-true, exhaustive to length 6") {
  Alphabet a = abc3();
  auto ev = parse_formula("F (o1 & X o2)", a);
  auto un = parse_formula("T U (o1 & X o2)", a);
  // Enumerate all words over 3 observations up to length 6.
  for (int len = 1; len <= 6; ++len) {
    Word w(len, 0);
    long total = 1;
    for (int i = 0; i < len; ++i) total *= 3;
    for (long code = 0; code < total; ++code) {
      long c = code;
      for (int i = 0; i < len; ++i) {
        w[i] = static_cast<int>(c % 3);
        c /= 3;
      }
      if (satisfies_finite(w, *ev) != satisfies_finite(w, *un)) {
        CAPTURE(code);
        REQUIRE(false);
      }
    }
  }
  CHECK(true);
}

TEST_CASE("good_prefix is monotone under extension") {
  Alphabet a = abc5();
  auto f = parse_formula(kBenchmarkFormula, a);
  // Every extension of a good prefix stays good.
  Word base = {0, 1, 2};  // accepting
  REQUIRE(good_prefix(base, *f));
  for (int o = 0; o < 5; ++o) {
    Word w = base;
    w.push_back(o);
    CHECK(good_prefix(w, *f));
    for (int o2 = 0; o2 < 5; ++o2) {
      Word w2 = w;
      w2.push_back(o2);
      CHECK(good_prefix(w2, *f));
    }
  }
}

}  // TEST_SUITE
