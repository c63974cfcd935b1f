#include "hyreach/fsa.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace hyreach::fsa {

using scltl::Formula;
using scltl::FormulaPtr;
using scltl::NodeKind;

bool Fsa::accepts(std::span<const int> word) const {
  int s = initial;
  bool seen_accepting = false;
  for (int o : word) {
    s = next[s][o];
    if (s < 0) return false;
    if (accepting[s]) seen_accepting = true;
  }
  return seen_accepting && !word.empty();
}

std::vector<int> Fsa::admissible(int s) const {
  std::vector<int> out;
  for (int o = 0; o < alphabet.size(); ++o)
    if (next.at(s)[o] >= 0) out.push_back(o);
  return out;
}

std::vector<int> Fsa::forbidden(int s) const {
  std::vector<int> out;
  for (int o = 0; o < alphabet.size(); ++o)
    if (next.at(s)[o] < 0) out.push_back(o);
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Compilation by formula expansion.
//
// Obligations are the observation literals and temporal subformulas of the
// input. A compiler state is a set of obligation sets in disjunctive normal
// form: each term (bitmask over obligations) must hold of the remaining
// word, and the state holds if some term does. Consuming a symbol rewrites
// each obligation into a DNF over obligations, which is exactly a subset
// construction over the nondeterministic expansion tableau. A state
// containing the empty term has discharged every obligation, so the word
// read so far is a good prefix; all such states collapse into one absorbing
// accepting state.
// ---------------------------------------------------------------------------

using Term = std::uint64_t;          // bitmask of obligation ids
using Dnf = std::vector<Term>;       // sorted, subsumption-free; empty = false

constexpr int kMaxObligations = 64;

// term a subsumes term b when a's obligations are a subset of b's.
void normalize(Dnf& d) {
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  Dnf out;
  for (Term t : d) {
    bool subsumed = false;
    for (Term kept : out) {
      if ((kept & t) == kept) {
        subsumed = true;
        break;
      }
    }
    if (!subsumed) out.push_back(t);
  }
  d = std::move(out);
}

Dnf dnf_false() { return {}; }
Dnf dnf_true() { return {Term{0}}; }

Dnf dnf_or(const Dnf& a, const Dnf& b) {
  Dnf out = a;
  out.insert(out.end(), b.begin(), b.end());
  normalize(out);
  return out;
}

Dnf dnf_and(const Dnf& a, const Dnf& b) {
  Dnf out;
  out.reserve(a.size() * b.size());
  for (Term ta : a)
    for (Term tb : b) out.push_back(ta | tb);
  normalize(out);
  return out;
}

class Compiler {
 public:
  Compiler(const Formula& f, const scltl::Alphabet& alphabet)
      : alphabet_(alphabet), root_(&f) {}

  Fsa run();

 private:
  int obligation_id(const Formula* f) {
    auto it = obligation_ids_.find(f);
    if (it != obligation_ids_.end()) return it->second;
    // Structural sharing may be absent in the tree; fall back to a scan so
    // that equal subformulas get one id.
    for (std::size_t i = 0; i < obligations_.size(); ++i) {
      if (scltl::structurally_equal(*obligations_[i], *f)) {
        obligation_ids_[f] = static_cast<int>(i);
        return static_cast<int>(i);
      }
    }
    if (obligations_.size() >= kMaxObligations)
      throw ValidationError("formula too large: more than 64 temporal obligations");
    obligations_.push_back(f);
    int id = static_cast<int>(obligations_.size() - 1);
    obligation_ids_[f] = id;
    return id;
  }

  // DNF of a formula as an obligation on the remaining word (no symbol
  // consumed). True has no obligation; And/Or distribute.
  Dnf to_dnf(const Formula* f) {
    switch (f->kind) {
      case NodeKind::True:
        return dnf_true();
      case NodeKind::And:
        return dnf_and(to_dnf(f->left.get()), to_dnf(f->right.get()));
      case NodeKind::Or:
        return dnf_or(to_dnf(f->left.get()), to_dnf(f->right.get()));
      default:
        return {Term{1} << obligation_id(f)};
    }
  }

  // DNF of what must hold of the rest of the word after consuming `o` in a
  // position where `f` must hold.
  Dnf progress(const Formula* f, int o) {
    switch (f->kind) {
      case NodeKind::True:
        return dnf_true();
      case NodeKind::Obs:
        return f->obs == o ? dnf_true() : dnf_false();
      case NodeKind::NegObs:
        return f->obs != o ? dnf_true() : dnf_false();
      case NodeKind::And:
        return dnf_and(progress(f->left.get(), o), progress(f->right.get(), o));
      case NodeKind::Or:
        return dnf_or(progress(f->left.get(), o), progress(f->right.get(), o));
      case NodeKind::Next:
        return to_dnf(f->left.get());
      case NodeKind::Until: {
        Dnf keep = dnf_and(progress(f->left.get(), o),
                           Dnf{Term{1} << obligation_id(f)});
        return dnf_or(progress(f->right.get(), o), keep);
      }
      case NodeKind::Eventually: {
        Dnf keep{Term{1} << obligation_id(f)};
        return dnf_or(progress(f->left.get(), o), keep);
      }
    }
    return dnf_false();
  }

  Dnf progress_term(Term t, int o) {
    Dnf acc = dnf_true();
    for (int bit = 0; bit < static_cast<int>(obligations_.size()); ++bit) {
      if (!(t & (Term{1} << bit))) continue;
      acc = dnf_and(acc, progress(obligations_[bit], o));
      if (acc.empty()) return acc;
    }
    return acc;
  }

  Dnf progress_state(const Dnf& state, int o) {
    Dnf out;
    for (Term t : state) {
      Dnf d = progress_term(t, o);
      out.insert(out.end(), d.begin(), d.end());
    }
    normalize(out);
    return out;
  }

  static bool is_accepting_state(const Dnf& d) {
    return !d.empty() && d.front() == Term{0};  // empty term, sorted first
  }

  const scltl::Alphabet& alphabet_;
  const Formula* root_;
  std::vector<const Formula*> obligations_;
  std::unordered_map<const Formula*, int> obligation_ids_;
};

struct RawAutomaton {
  int initial = 0;
  std::vector<std::vector<int>> next;
  std::vector<bool> accepting;
};

// Drops states from which no accepting state is reachable; returns the
// surviving automaton or nullopt when the initial state dies.
std::optional<RawAutomaton> prune_dead(const RawAutomaton& a, int n_obs) {
  int n = static_cast<int>(a.next.size());
  std::vector<std::vector<int>> rev(n);
  for (int s = 0; s < n; ++s)
    for (int o = 0; o < n_obs; ++o)
      if (a.next[s][o] >= 0) rev[a.next[s][o]].push_back(s);

  std::vector<bool> alive(n, false);
  std::deque<int> queue;
  for (int s = 0; s < n; ++s)
    if (a.accepting[s]) {
      alive[s] = true;
      queue.push_back(s);
    }
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int p : rev[s])
      if (!alive[p]) {
        alive[p] = true;
        queue.push_back(p);
      }
  }
  if (!alive[a.initial]) return std::nullopt;

  std::vector<int> remap(n, -1);
  int m = 0;
  for (int s = 0; s < n; ++s)
    if (alive[s]) remap[s] = m++;
  RawAutomaton out;
  out.initial = remap[a.initial];
  out.next.assign(m, std::vector<int>(n_obs, -1));
  out.accepting.assign(m, false);
  for (int s = 0; s < n; ++s) {
    if (!alive[s]) continue;
    out.accepting[remap[s]] = a.accepting[s];
    for (int o = 0; o < n_obs; ++o) {
      int t = a.next[s][o];
      if (t >= 0 && alive[t]) out.next[remap[s]][o] = remap[t];
    }
  }
  return out;
}

// Partition-refinement minimization over the completed automaton (undefined
// transitions go to an implicit dead sink). Live states are never merged
// with the sink because every live state reaches acceptance.
RawAutomaton minimize(const RawAutomaton& a, int n_obs) {
  int n = static_cast<int>(a.next.size());
  int sink = n;
  auto target = [&](int s, int o) {
    if (s == sink) return sink;
    int t = a.next[s][o];
    return t < 0 ? sink : t;
  };

  std::vector<int> cls(n + 1);
  for (int s = 0; s < n; ++s) cls[s] = a.accepting[s] ? 1 : 0;
  cls[sink] = 0;
  std::size_t n_classes = 2;

  // Refine until stable: split classes by the classes of their successors.
  // Refinement only ever splits, so the class count is strictly increasing
  // until a fixed point.
  for (;;) {
    std::map<std::vector<int>, int> sig_to_class;
    std::vector<int> next_cls(n + 1);
    for (int s = 0; s <= n; ++s) {
      std::vector<int> sig;
      sig.reserve(n_obs + 1);
      sig.push_back(cls[s]);
      for (int o = 0; o < n_obs; ++o) sig.push_back(cls[target(s, o)]);
      auto [it, inserted] =
          sig_to_class.emplace(std::move(sig), static_cast<int>(sig_to_class.size()));
      next_cls[s] = it->second;
    }
    cls = next_cls;
    if (sig_to_class.size() == n_classes) break;
    n_classes = sig_to_class.size();
  }

  // Rebuild over classes, dropping the sink's class.
  int sink_cls = cls[sink];
  std::map<int, int> class_remap;
  for (int s = 0; s < n; ++s)
    if (cls[s] != sink_cls && !class_remap.count(cls[s])) {
      int id = static_cast<int>(class_remap.size());
      class_remap[cls[s]] = id;
    }
  RawAutomaton out;
  out.next.assign(class_remap.size(), std::vector<int>(n_obs, -1));
  out.accepting.assign(class_remap.size(), false);
  out.initial = class_remap.at(cls[a.initial]);
  for (int s = 0; s < n; ++s) {
    int c = class_remap.at(cls[s]);
    if (a.accepting[s]) out.accepting[c] = true;
    for (int o = 0; o < n_obs; ++o) {
      int t = a.next[s][o];
      if (t >= 0 && cls[t] != sink_cls) out.next[c][o] = class_remap.at(cls[t]);
    }
  }
  return out;
}

// Relabels states in breadth-first order from the initial state, exploring
// observations in alphabet order, so compilation output is deterministic.
RawAutomaton reindex_bfs(const RawAutomaton& a, int n_obs) {
  int n = static_cast<int>(a.next.size());
  std::vector<int> remap(n, -1);
  std::deque<int> queue{a.initial};
  remap[a.initial] = 0;
  int m = 1;
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int o = 0; o < n_obs; ++o) {
      int t = a.next[s][o];
      if (t >= 0 && remap[t] < 0) {
        remap[t] = m++;
        queue.push_back(t);
      }
    }
  }
  RawAutomaton out;
  out.initial = 0;
  out.next.assign(m, std::vector<int>(n_obs, -1));
  out.accepting.assign(m, false);
  for (int s = 0; s < n; ++s) {
    if (remap[s] < 0) continue;  // unreachable
    out.accepting[remap[s]] = a.accepting[s];
    for (int o = 0; o < n_obs; ++o) {
      int t = a.next[s][o];
      if (t >= 0) out.next[remap[s]][o] = remap[t];
    }
  }
  return out;
}

Fsa Compiler::run() {
  int n_obs = alphabet_.size();
  std::map<Dnf, int> state_ids;
  std::vector<Dnf> states;
  RawAutomaton raw;

  Dnf init = to_dnf(root_);
  if (is_accepting_state(init)) init = dnf_true();
  state_ids[init] = 0;
  states.push_back(init);
  raw.next.emplace_back(n_obs, -1);
  raw.accepting.push_back(is_accepting_state(init));
  raw.initial = 0;

  std::deque<int> queue{0};
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    if (raw.accepting[s]) {
      for (int o = 0; o < n_obs; ++o) raw.next[s][o] = s;  // absorbing
      continue;
    }
    for (int o = 0; o < n_obs; ++o) {
      Dnf d = progress_state(states[s], o);
      if (d.empty()) continue;  // no continuation can accept
      if (is_accepting_state(d)) d = dnf_true();
      auto it = state_ids.find(d);
      int t;
      if (it == state_ids.end()) {
        t = static_cast<int>(states.size());
        state_ids[d] = t;
        states.push_back(d);
        raw.next.emplace_back(n_obs, -1);
        raw.accepting.push_back(is_accepting_state(d));
        queue.push_back(t);
      } else {
        t = it->second;
      }
      raw.next[s][o] = t;
    }
  }

  auto pruned = prune_dead(raw, n_obs);
  if (!pruned)
    throw EmptyLanguage("formula is infeasible: no accepting state is reachable");
  RawAutomaton minimized = reindex_bfs(minimize(*pruned, n_obs), n_obs);

  Fsa out;
  out.alphabet = alphabet_;
  out.initial = minimized.initial;
  out.next = std::move(minimized.next);
  out.accepting = std::move(minimized.accepting);
  return out;
}

std::optional<int> select_target(const Fsa& fsa, const DtaTable& dta, int from,
                                 Tiebreak tiebreak, const PolicyContext& ctx) {
  if (fsa.is_accepting(from)) return std::nullopt;
  std::vector<int> candidates;
  for (int v = 0; v < fsa.alphabet.size(); ++v) {
    int t = fsa.step(from, v);
    if (t >= 0 && dta.at(t) < dta.at(from)) candidates.push_back(v);
  }
  if (candidates.empty())
    throw EmptyPolicySet("no admissible observation decreases the distance "
                         "to acceptance at state " +
                         std::to_string(from));
  switch (tiebreak) {
    case Tiebreak::Lexicographic:
      return candidates.front();  // alphabet order
    case Tiebreak::NearestRoi: {
      if (!ctx.roi_distance)
        throw ValidationError("nearest-roi tiebreak requires a distance function");
      int best = candidates.front();
      double best_d = ctx.roi_distance(best);
      for (int v : candidates) {
        double d = ctx.roi_distance(v);
        if (d < best_d) {
          best = v;
          best_d = d;
        }
      }
      return best;
    }
    case Tiebreak::FixedWord: {
      if (!ctx.word || ctx.word_pos >= static_cast<int>(ctx.word->size()))
        throw EmptyPolicySet("fixed-word tiebreak: word exhausted");
      int v = (*ctx.word)[ctx.word_pos];
      if (std::find(candidates.begin(), candidates.end(), v) == candidates.end())
        throw EmptyPolicySet(
            "fixed-word tiebreak: '" + fsa.alphabet.name(v) +
            "' does not decrease the distance to acceptance at state " +
            std::to_string(from));
      return v;
    }
  }
  return std::nullopt;
}

}  // namespace

Fsa compile(const Formula& f, const scltl::Alphabet& alphabet) {
  return Compiler(f, alphabet).run();
}

DtaTable compute_dta(const Fsa& fsa) {
  int n = fsa.num_states();
  int n_obs = fsa.alphabet.size();
  std::vector<std::vector<int>> rev(n);
  for (int s = 0; s < n; ++s)
    for (int o = 0; o < n_obs; ++o) {
      int t = fsa.step(s, o);
      if (t >= 0 && t != s) rev[t].push_back(s);
    }

  DtaTable dta;
  dta.distance.assign(n, std::numeric_limits<int>::max());
  std::deque<int> queue;
  for (int s = 0; s < n; ++s)
    if (fsa.is_accepting(s)) {
      dta.distance[s] = 0;
      queue.push_back(s);
    }
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int p : rev[s])
      if (dta.distance[p] > dta.distance[s] + 1) {
        dta.distance[p] = dta.distance[s] + 1;
        queue.push_back(p);
      }
  }
  return dta;
}

std::string export_dot(const Fsa& fsa) {
  std::ostringstream os;
  os << "digraph fsa {\n";
  os << "  rankdir=LR;\n";
  os << "  node [shape=circle];\n";
  os << "  __start [shape=point];\n";
  for (int s = 0; s < fsa.num_states(); ++s) {
    os << "  s" << s;
    if (fsa.is_accepting(s)) os << " [shape=doublecircle]";
    os << ";\n";
  }
  os << "  __start -> s" << fsa.initial << ";\n";
  for (int s = 0; s < fsa.num_states(); ++s) {
    // Group parallel edges into one label.
    std::map<int, std::vector<int>> by_target;
    for (int o = 0; o < fsa.alphabet.size(); ++o) {
      int t = fsa.step(s, o);
      if (t >= 0) by_target[t].push_back(o);
    }
    for (const auto& [t, obs] : by_target) {
      os << "  s" << s << " -> s" << t << " [label=\"";
      for (std::size_t i = 0; i < obs.size(); ++i) {
        if (i) os << ",";
        os << fsa.alphabet.name(obs[i]);
      }
      os << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::optional<int> next_observation(const Fsa& fsa, const DtaTable& dta, int s,
                                    int o, Tiebreak tiebreak,
                                    const PolicyContext& ctx) {
  int target = fsa.step(s, o);
  if (target < 0)
    throw ValidationError("next_observation: transition undefined for (" +
                          std::to_string(s) + ", " + fsa.alphabet.name(o) + ")");
  return select_target(fsa, dta, target, tiebreak, ctx);
}

std::optional<int> initial_observation(const Fsa& fsa, const DtaTable& dta,
                                       Tiebreak tiebreak,
                                       const PolicyContext& ctx) {
  return select_target(fsa, dta, fsa.initial, tiebreak, ctx);
}

}  // namespace hyreach::fsa
