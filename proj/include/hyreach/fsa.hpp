#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyreach/scltl.hpp"

namespace hyreach::fsa {

/// Deterministic finite automaton over an observation alphabet with a
/// partial transition function. Transitions that cannot reach an accepting
/// state are pruned at construction; accepting states are absorbing.
struct Fsa {
  scltl::Alphabet alphabet;
  int initial = 0;
  std::vector<std::vector<int>> next;  // next[s][o] = successor, -1 undefined
  std::vector<bool> accepting;

  int num_states() const { return static_cast<int>(next.size()); }
  bool is_accepting(int s) const { return accepting.at(s); }

  /// Successor of (s, o), or -1 when undefined.
  int step(int s, int o) const { return next.at(s).at(o); }

  /// True iff the partial run exists and visits an accepting state at or
  /// before the last symbol. The empty word is never accepted.
  bool accepts(std::span<const int> word) const;

  /// Admissible observations at s: those with a defined transition.
  std::vector<int> admissible(int s) const;

  /// Observations whose occurrence at s makes acceptance impossible.
  std::vector<int> forbidden(int s) const;
};

/// Compiles a formula to the minimal deterministic automaton accepting
/// exactly the words with a good prefix. Throws EmptyLanguage when no
/// accepting state is reachable from the initial state.
Fsa compile(const scltl::Formula& f, const scltl::Alphabet& alphabet);

/// Per-state distance to acceptance: minimum number of transitions to reach
/// an accepting state (0 on accepting states).
struct DtaTable {
  std::vector<int> distance;
  int at(int s) const { return distance.at(s); }
};

/// Reverse breadth-first search from the accepting states, counting edges.
DtaTable compute_dta(const Fsa& fsa);

/// GraphViz digraph text with deterministic node ordering; accepting states
/// drawn with a double circle.
std::string export_dot(const Fsa& fsa);

enum class Tiebreak { Lexicographic, NearestRoi, FixedWord };

/// Context for breaking ties among distance-decreasing observations.
struct PolicyContext {
  // NearestRoi: distance from the current plant state to the ROI of an
  // observation index.
  std::function<double(int)> roi_distance;
  // FixedWord: prescribed observation sequence and the next position in it.
  const std::vector<int>* word = nullptr;
  int word_pos = 0;
};

/// Selects the next target observation after consuming o at s: an element v
/// of the admissible set at s' = p(s,o) whose successor strictly decreases
/// the distance to acceptance. Returns nullopt when s' is accepting.
/// Throws EmptyPolicySet if no such v exists.
std::optional<int> next_observation(const Fsa& fsa, const DtaTable& dta, int s,
                                    int o, Tiebreak tiebreak,
                                    const PolicyContext& ctx = {});

/// Same selection rule applied at the initial state, used to pick the first
/// target observation. Returns nullopt when the initial state is accepting.
std::optional<int> initial_observation(const Fsa& fsa, const DtaTable& dta,
                                       Tiebreak tiebreak,
                                       const PolicyContext& ctx = {});

}  // namespace hyreach::fsa
