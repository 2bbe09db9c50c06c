#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ccss/dist.hpp"
#include "ccss/sched.hpp"
#include "ccss/term.hpp"

namespace ccss {

// ---------------------------------------------------------------------------
// Plain CCS_p transitions (labels, if present, are ignored)

using TermDist = Dist<TermPtr, TermPtrHash, TermPtrEq>;

struct CcspTransition {
    Action action;
    TermDist target;
};

// All transitions derivable by ACT/RES/SUM/PAR/COM/PROB/BANG1/BANG2,
// as a set (identical transitions collapse). Empty result = terminal.
std::vector<CcspTransition> ccsp_step(const TermPtr& p);

// ---------------------------------------------------------------------------
// Complete processes: P || S (optionally with an independent scheduler T)

struct CompleteState {
    TermPtr process;
    SchedPtr sched;
    SchedPtr indep;  // null unless the process uses protected blocks

    bool operator==(const CompleteState& o) const {
        return term_eq(process, o.process) && sched_eq(sched, o.sched) && sched_eq(indep, o.indep);
    }
    std::string str() const;
};

struct CompleteStateHash {
    std::size_t operator()(const CompleteState& s) const {
        std::size_t h = s.process ? s.process->hash : 0;
        h = h * 1000003u ^ (s.sched ? s.sched->hash : 0);
        h = h * 1000003u ^ (s.indep ? s.indep->hash : 0);
        return h;
    }
};
struct CompleteStateEq {
    bool operator()(const CompleteState& a, const CompleteState& b) const { return a == b; }
};

using StateDist = Dist<CompleteState, CompleteStateHash, CompleteStateEq>;

struct StepResult {
    enum class Kind { Step, StuckProcess, StuckScheduler } kind;
    Action action;    // Step only
    StateDist dist;   // Step only

    bool stepped() const { return kind == Kind::Step; }
};

// One scheduler-driven step. Throws AmbiguityError when the fired move has
// more than one derivation (the labeling is not deterministic there).
StepResult step(const CompleteState& cs);

// ---------------------------------------------------------------------------
// Derivations (used by step, the determinism checker and the enumerators)

// How a derivation left the process and the independent scheduler.
struct DerivTarget {
    TermPtr process;
    SchedPtr indep;  // passed through unchanged except by INDEP

    bool operator==(const DerivTarget& o) const {
        return term_eq(process, o.process) && sched_eq(indep, o.indep);
    }
};
struct DerivTargetHash {
    std::size_t operator()(const DerivTarget& t) const {
        return (t.process ? t.process->hash : 0) * 1000003u ^ (t.indep ? t.indep->hash : 0);
    }
};
struct DerivTargetEq {
    bool operator()(const DerivTarget& a, const DerivTarget& b) const { return a == b; }
};
using DerivDist = Dist<DerivTarget, DerivTargetHash, DerivTargetEq>;

struct Derivation {
    Action action;
    DerivDist targets;
    std::string trace;  // rule path, for ambiguity reports
};

// What to do when sigma(l) meets a protected block l:{P}.
enum class ProtectPolicy {
    UseIndep,  // INDEP rule: resolve through the given T (throws if T is null)
    Skip,      // no derivation (the determinism checker expands delegates itself)
};

std::vector<Derivation> derive(const TermPtr& p, const Move& m, const SchedPtr& indep,
                               ProtectPolicy policy = ProtectPolicy::UseIndep);

// Derivations of sigma(outer) when the independent scheduler picks `inner`
// inside the protected block(s) labeled `outer`. Used by the determinism
// checker to quantify over both schedulers.
std::vector<Derivation> derive_delegate(const TermPtr& p, const Label& outer, const Move& inner);

// Bodies of protect nodes carrying the given label.
std::vector<TermPtr> protect_bodies(const TermPtr& p, const Label& l);

// Unguarded scheduling heads of a term.
struct Head {
    Label label;
    Action action;   // psum heads report tau; protect heads report tau
    bool is_psum = false;
    bool is_protect = false;
};
std::vector<Head> heads_of(const TermPtr& p);

// Candidate scheduler moves: every head label as a single move, plus every
// (input-head, output-head) label pair on a common channel. Protect heads
// appear as single moves.
std::vector<Move> candidate_moves(const TermPtr& p);

// Moves that actually fire, in candidate order. For protect heads the single
// move is reported enabled iff some inner move has a derivation.
std::vector<Move> enabled_moves(const TermPtr& p);

// True iff some scheduler (and independent scheduler) can move the process.
bool process_can_move(const TermPtr& p);

// ---------------------------------------------------------------------------
// Measure lifting (the mu | Q, (nu a)mu, rho_k(mu), mu || S operators)

TermDist lift_par_with(const TermDist& mu, const TermPtr& q);
TermDist lift_restrict(const TermDist& mu, const std::string& channel);
TermDist lift_relabel(const TermDist& mu, const std::string& bits);
StateDist lift_pair_with_scheduler(const TermDist& mu, const SchedPtr& s);

}  // namespace ccss
