#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccss/automata.hpp"
#include "ccss/semantics.hpp"

namespace ccss {

// ---------------------------------------------------------------------------
// Deterministic-labeling verification (explores all states x scheduler moves)

struct DetResult {
    enum class Verdict { Deterministic, Ambiguous, BoundReached } verdict;
    // populated on Ambiguous
    std::string state;
    std::string move;
    std::string first;
    std::string second;

    bool ok() const { return verdict != Verdict::Ambiguous; }
};

DetResult check_deterministic(const TermPtr& p, int depth, std::size_t cap = kDefaultStateCap);

// ---------------------------------------------------------------------------
// Syntactic scheduler enumeration

struct EnumOptions {
    bool nonblocking = true;
    bool dedup_by_tree = true;
    std::size_t max_schedulers = 200000;
    std::size_t max_states = kDefaultStateCap;
};

// All scheduler terms (one canonical representative per induced execution
// tree) that drive p for `depth` steps. With nonblocking set, every emitted
// scheduler schedules something whenever the process can move, up to the
// depth cut. Requires a deterministic labeling; protect-free terms only.
std::vector<SchedPtr> enumerate_syntactic_schedulers(const TermPtr& p, int depth,
                                                     const EnumOptions& opts = {});

// ---------------------------------------------------------------------------
// Testing: p_omega and the preorders

struct PomegaResult {
    Rational success;    // mass of executions containing an omega action
    Rational failure;    // mass of executions that end without omega
    Rational truncated;  // mass cut by the depth bound before omega

    bool complete() const { return truncated == 0; }
    std::string str() const {
        return "success " + rat_str(success) + ", failure " + rat_str(failure) +
               ", truncated " + rat_str(truncated);
    }
};

// Probability that (nu)(P | O) || S performs the success action omega.
// O must have a fresh labeling with respect to P.
PomegaResult p_omega(const TermPtr& p, const SchedPtr& s, const TermPtr& test, int depth);

// Tests are expected not to perform internal actions of their own; returns
// human-readable warnings when they do (advisory only).
std::vector<std::string> test_lint_warnings(const TermPtr& test);

struct BestScheduler {
    SchedPtr sched;
    PomegaResult value;
};
// Maximum success probability over the enumerated nonblocking schedulers.
BestScheduler max_p_omega(const TermPtr& p, const TermPtr& test, int depth,
                          const EnumOptions& opts = {});

enum class PreorderMode { May, Must };

struct PreorderVerdict {
    enum class Status { Holds, Fails, Indeterminate } status;

    struct Witness {
        TermPtr test;
        SchedPtr scheduler;    // uncovered scheduler (S_P for may, S_Q for must)
        PomegaResult value;    // its p_omega
        SchedPtr best_other;   // best the other side can do
        PomegaResult best_value;
    };
    std::optional<Witness> witness;  // present iff Fails
    std::vector<std::string> notes;  // suite size, depth, lint and truncation info

    bool holds() const { return status == Status::Holds; }
    nlohmann::ordered_json to_json() const;
};

// Verdict is relative to the supplied suite and depth (recorded in notes).
PreorderVerdict testing_preorder(const TermPtr& p, const TermPtr& q,
                                 const std::vector<TermPtr>& tests, PreorderMode mode, int depth,
                                 const EnumOptions& opts = {});

// ---------------------------------------------------------------------------
// Distributivity of contexts over probabilistic choice

struct DistributivityReport {
    TermPtr r1;  // l:( C[l0:tau.P] +_p C[l0:tau.Q] )
    TermPtr r2;  // C[ l:(P +_p Q) ]

    struct PerTest {
        TermPtr test;
        std::vector<Rational> values1;  // distinct achievable success values
        std::vector<Rational> values2;
        bool equal;                     // set equality (per-scheduler matching)
        bool indeterminate;             // truncation prevented a verdict
    };
    std::vector<PerTest> per_test;

    bool may_equivalent;
    bool must_equivalent;
    bool value_sets_equal;
    bool identities_hold;   // probabilistic-sum and prefix decompositions of p_omega
    std::size_t identity_checks;
    std::vector<std::string> notes;

    bool equivalent() const { return value_sets_equal && may_equivalent && must_equivalent; }
    nlohmann::ordered_json to_json() const;
};

DistributivityReport check_distributivity(const TermPtr& context, const TermPtr& p,
                                          const TermPtr& q, const Rational& prob,
                                          const std::vector<TermPtr>& tests, int depth,
                                          const EnumOptions& opts = {});

// ---------------------------------------------------------------------------
// Small helpers shared by the CLI and the test suites

std::set<std::string> label_atoms(const std::vector<TermPtr>& terms);
std::string fresh_atom(const std::string& base, const std::set<std::string>& used);

}  // namespace ccss
