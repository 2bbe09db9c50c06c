#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccss/semantics.hpp"

namespace ccss {

inline constexpr std::size_t kDefaultStateCap = 200000;

// A simple probabilistic automaton obtained by bounded unfolding. States are
// canonical term (or complete-process) strings; `flags` records why a state
// is a leaf.
struct ProbAutomaton {
    enum Flag : int {
        None = 0,
        Truncated = 1,       // cut by the depth bound while still able to move
        StuckProcess = 2,    // no scheduler can move the process
        StuckScheduler = 4,  // the process can move, this scheduler selects nothing
    };

    struct Transition {
        int src;
        Action action;
        std::vector<std::pair<int, Rational>> support;  // (state, probability)
    };

    std::vector<std::string> states;
    std::vector<int> flags;
    int initial = 0;
    std::vector<Transition> transitions;
    std::vector<std::vector<int>> outgoing;  // transition indices per state

    std::set<std::string> actions() const;
    std::vector<int> truncated_states() const;
    bool is_acyclic() const;
};

ProbAutomaton unfold_process(const TermPtr& p, int depth, std::size_t cap = kDefaultStateCap);
ProbAutomaton unfold_complete(const CompleteState& cs, int depth,
                              std::size_t cap = kDefaultStateCap);

// At most one transition per state.
bool is_fully_probabilistic(const ProbAutomaton& m);

// ---------------------------------------------------------------------------
// Semantic schedulers over a finite acyclic automaton

struct Execution {
    std::vector<int> states;       // s0 .. sn
    std::vector<int> transitions;  // indices into ProbAutomaton::transitions
};

struct SemanticScheduler {
    std::vector<int> choices;  // per decision execution: index into outgoing(lstate)
};

class SemanticSchedulers {
  public:
    explicit SemanticSchedulers(const ProbAutomaton& m);  // rejects cyclic automata

    const std::vector<Execution>& executions() const { return execs_; }
    const std::vector<std::size_t>& decision_execs() const { return decisions_; }

    // Number of total maps from decision executions to enabled transitions.
    unsigned long long count() const;

    bool first(SemanticScheduler& z) const;
    bool next(SemanticScheduler& z) const;  // odometer order; false when done

    // Execution tree of m under z: a fully probabilistic automaton whose
    // states are executions.
    ProbAutomaton etree(const SemanticScheduler& z) const;

  private:
    const ProbAutomaton& m_;
    std::vector<Execution> execs_;
    std::vector<std::size_t> decisions_;       // indices into execs_ with >=1 outgoing
    std::vector<std::size_t> decision_index_;  // execs_ index -> decision slot (or npos)
};

// Probabilistic bisimilarity for finite fully probabilistic automata
// (partition refinement). Rejects inputs that are not fully probabilistic.
bool prob_bisim(const ProbAutomaton& m1, const ProbAutomaton& m2);

// ---------------------------------------------------------------------------
// Export

std::string to_dot(const ProbAutomaton& m);
nlohmann::ordered_json to_json(const ProbAutomaton& m);
void validate_automaton_json(const nlohmann::ordered_json& j);  // throws Error

}  // namespace ccss
