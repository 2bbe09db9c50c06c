#include <random>

#include "doctest.h"

#include "ccss/diag.hpp"
#include "ccss/parser.hpp"
#include "ccss/semantics.hpp"

using namespace ccss;

namespace {

CompleteState cs(const std::string& p, const std::string& s) {
    return {parse_process(p), parse_scheduler(s), nullptr};
}

bool has_transition(const std::vector<CcspTransition>& ts, const Action& a,
                    const TermPtr& target) {
    for (const auto& t : ts)
        if (t.action == a && t.target.size() == 1 && t.target.mass_of(target) == 1) return true;
    return false;
}

}  // namespace

TEST_CASE("ccsp: ACT") {
    auto ts = ccsp_step(parse_process("a . 0"));
    REQUIRE(ts.size() == 1);
    CHECK(has_transition(ts, Action::input("a"), nil()));
}

TEST_CASE("ccsp: PROB emits one tau to the convex sum") {
    auto ts = ccsp_step(parse_process("a.b +_1/3 c.d"));
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].action == Action::tau());
    CHECK(ts[0].target.size() == 2);
    CHECK(ts[0].target.mass_of(parse_process("a.b")) == rat(1, 3));
    CHECK(ts[0].target.mass_of(parse_process("c.d")) == rat(2, 3));
}

TEST_CASE("ccsp: a.0 | !a.0 has exactly the three expected transitions") {
    auto ts = ccsp_step(parse_process("a . 0 | !a . 0"));
    REQUIRE(ts.size() == 3);
    CHECK(has_transition(ts, Action::input("a"), parse_process("0 | !a . 0")));
    CHECK(has_transition(ts, Action::output("a"), parse_process("a . 0 | 0")));
    CHECK(has_transition(ts, Action::tau(), parse_process("0 | 0")));
}

TEST_CASE("ccsp: restriction blocks the restricted channel") {
    auto ts = ccsp_step(parse_process("new a . (a . 0 | !a . 0)"));
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].action == Action::tau());
}

TEST_CASE("ccsp: bang") {
    auto ts = ccsp_step(parse_process("!(a . 0)"));
    REQUIRE(ts.size() == 1);
    CHECK(has_transition(ts, Action::input("a"), parse_process("0 | !(a . 0)")));

    // BANG2: !(a.0 + !a.0) can synchronize with itself
    auto t2 = ccsp_step(parse_process("!(a . 0 + !a . 0)"));
    bool found_tau = false;
    for (const auto& t : t2) found_tau |= t.action.is_tau();
    CHECK(found_tau);
}

TEST_CASE("ccsp: identical sum branches collapse as a set") {
    auto ts = ccsp_step(parse_process("a . 0 + a . 0"));
    REQUIRE(ts.size() == 1);
}

TEST_CASE("step: ACT needs the scheduler to select the label") {
    auto r = step(cs("l:a . l2:b", "sigma(l).sigma(l2)"));
    REQUIRE(r.stepped());
    CHECK(r.action == Action::input("a"));
    REQUIRE(r.dist.size() == 1);
    const auto& [next, p] = r.dist.entries()[0];
    CHECK(p == 1);
    CHECK(term_eq(next.process, parse_process("l2:b")));
    CHECK(sched_eq(next.sched, parse_scheduler("sigma(l2)")));

    auto wrong = step(cs("l:a . l2:b", "sigma(l2)"));
    CHECK(wrong.kind == StepResult::Kind::StuckScheduler);
}

TEST_CASE("step: bang relabels the spawned copy (paper derivation)") {
    auto r = step(cs("!(l1:a . l2:b)", "sigma(l1).sigma(l2^0)"));
    REQUIRE(r.stepped());
    CHECK(r.action == Action::input("a"));
    const auto& next = r.dist.entries()[0].first;
    CHECK(format_process(next.process) == "l2^0:b | !(l1^1:a . l2^1:b)");

    // scheduling the relabeled copy afterwards works
    auto r2 = step(r.dist.entries()[0].first);
    REQUIRE(r2.stepped());
    CHECK(r2.action == Action::input("b"));
}

TEST_CASE("step: identical probabilistic branches merge to a Dirac") {
    auto r = step(cs("l:( l1:!a +_1/2 l1:!a )", "sigma(l).sigma(l1)"));
    REQUIRE(r.stepped());
    CHECK(r.action == Action::tau());
    REQUIRE(r.dist.size() == 1);
    CHECK(r.dist.entries()[0].second == 1);
    CHECK(format_process(r.dist.entries()[0].first.process) == "l1:!a");
}

TEST_CASE("step: COM via a synchronization scheduler, both operand orders") {
    auto r = step(cs("l1:a . 0 | l2:!a . 0", "sigma(l1,l2)"));
    REQUIRE(r.stepped());
    CHECK(r.action == Action::tau());
    CHECK(format_process(r.dist.entries()[0].first.process) == "0 | 0");

    // the output can sit on the left; sigma(l1,l2) still means l1=input side
    auto r2 = step(cs("l2:!a . 0 | l1:a . 0", "sigma(l1,l2)"));
    REQUIRE(r2.stepped());
    CHECK(r2.action == Action::tau());

    // polarity order matters: l2 names the input here, so nothing fires
    auto r3 = step(cs("l1:a . 0 | l2:!a . 0", "sigma(l2,l1)"));
    CHECK(r3.kind == StepResult::Kind::StuckScheduler);
}

TEST_CASE("step: TEST rule takes the first summand that fires") {
    // after the choice, only one branch is present, so the matching summand runs
    auto r = step(cs("l:( l1:a +_1/2 l2:b )", "sigma(l).(sigma(l1) + sigma(l2))"));
    REQUIRE(r.stepped());
    for (const auto& [state, p] : r.dist.entries()) {
        auto r2 = step(state);
        REQUIRE(r2.stepped());
    }

    // preference goes to the first summand when both fire
    auto both = step(cs("l1:a . 0 | l2:b . 0", "sigma(l2) + sigma(l1)"));
    REQUIRE(both.stepped());
    CHECK(both.action == Action::input("b"));
}

TEST_CASE("step: ambiguity is an error, never a silent pick") {
    CHECK_THROWS_AS(step(cs("l1:a . 0 | l1:b . 0", "sigma(l1)")), AmbiguityError);
    try {
        step(cs("l1:a . 0 | l1:b . 0", "sigma(l1)"));
    } catch (const AmbiguityError& e) {
        CHECK(e.first != e.second);  // the two conflicting derivations are reported
    }
}

TEST_CASE("step: deterministic non-linear labelings do not trip ambiguity") {
    // (new a)(new b)(l1:a.P + l1:b.Q | l2:!a): only the synchronization on a fires
    auto state = cs("new a . new b . ((l1:a . l3:c + l1:b . l4:d) | l2:!a)", "sigma(l1,l2).sigma(l3)");
    auto r = step(state);
    REQUIRE(r.stepped());
    CHECK(r.action == Action::tau());
    auto r2 = step(r.dist.entries()[0].first);
    REQUIRE(r2.stepped());
    CHECK(r2.action == Action::input("c"));
}

TEST_CASE("step: stuck classification") {
    CHECK(step(cs("0", "sigma(l)")).kind == StepResult::Kind::StuckProcess);
    CHECK(step(cs("l:a . 0", "0")).kind == StepResult::Kind::StuckScheduler);
    CHECK(step(cs("new a . l:a . 0", "sigma(l)")).kind == StepResult::Kind::StuckProcess);
    CHECK(step(cs("l:a . 0", "sigma(k)")).kind == StepResult::Kind::StuckScheduler);
}

TEST_CASE("step: INDEP delegates protected blocks to the independent scheduler") {
    CompleteState state{parse_process("l:{ l1:tau . la:a . 0 + l2:tau . lb:b . 0 }"),
                        parse_scheduler("sigma(l).sigma(lb)"),
                        parse_scheduler("sigma(l2)")};
    auto r = step(state);
    REQUIRE(r.stepped());
    CHECK(r.action == Action::tau());
    const auto& next = r.dist.entries()[0].first;
    CHECK(format_process(next.process) == "lb:b");
    CHECK(sched_eq(next.sched, parse_scheduler("sigma(lb)")));
    CHECK(next.indep->kind == SchedKind::Nil);  // T consumed its only move

    auto r2 = step(next);
    REQUIRE(r2.stepped());
    CHECK(r2.action == Action::input("b"));

    // T empty: the protected block cannot move under this pair of schedulers
    CompleteState stuck{state.process, state.sched, sched_nil()};
    CHECK(step(stuck).kind == StepResult::Kind::StuckScheduler);
}

TEST_CASE("erasure: scheduled steps project to CCS_p transitions") {
    std::mt19937 rng(7);
    auto probes = {
        cs("l1:a . l2:b | l3:!a", "sigma(l1,l3).sigma(l2)"),
        cs("l:( l1:a +_1/4 l2:b )", "sigma(l).(sigma(l1) + sigma(l2))"),
        cs("new a . (l1:a . l2:c + l3:b | l4:!a)", "sigma(l1,l4).sigma(l2)"),
        cs("!(l1:a . l2:b)", "sigma(l1).sigma(l2^0)"),
    };
    for (auto state : probes) {
        for (int steps = 0; steps < 6; ++steps) {
            auto r = step(state);
            if (!r.stepped()) break;
            auto plain = ccsp_step(erase_labels(state.process));
            TermDist erased;
            for (const auto& [target, p] : r.dist.entries())
                erased.add(erase_labels(target.process), p);
            bool matched = false;
            for (const auto& t : plain) matched |= t.action == r.action && t.target == erased;
            CHECK(matched);
            // follow a random branch
            const auto& es = r.dist.entries();
            state = es[std::uniform_int_distribution<std::size_t>(0, es.size() - 1)(rng)].first;
        }
    }
}

TEST_CASE("lift operators") {
    TermDist mu;
    mu.add(parse_process("l1:a"), rat(1, 2));
    mu.add(parse_process("l2:b"), rat(1, 2));

    auto q = parse_process("l3:c");
    auto lifted = lift_par_with(mu, q);
    CHECK(lifted.mass_of(parse_process("l1:a | l3:c")) == rat(1, 2));

    auto restricted = lift_restrict(mu, "a");
    CHECK(restricted.mass_of(parse_process("new a . l1:a")) == rat(1, 2));

    auto relabeled = lift_relabel(mu, "0");
    CHECK(relabeled.mass_of(parse_process("l1^0:a")) == rat(1, 2));

    auto paired = lift_pair_with_scheduler(mu, parse_scheduler("sigma(l1)"));
    CHECK(paired.mass_of({parse_process("l1:a"), parse_scheduler("sigma(l1)"), nullptr}) ==
          rat(1, 2));

    // merging: equal states accumulate to a single point of mass 1
    TermDist dup;
    dup.add(parse_process("l1:a"), rat(1, 2));
    dup.add(parse_process("l2:b"), rat(1, 2));
    auto merged = dup.map([](const TermPtr&) { return nil(); });
    CHECK(merged.size() == 1);
    CHECK(merged.mass_of(nil()) == 1);
}

TEST_CASE("every distribution produced by step has total mass 1") {
    auto probes = {
        cs("l:( l1:a +_1/3 l2:b )", "sigma(l)"),
        cs("l:psum{ 1/6: l1:a, 1/3: l2:b, 1/2: l3:c }", "sigma(l)"),
        cs("l1:a | l2:!a", "sigma(l1,l2)"),
    };
    for (const auto& state : probes) {
        auto r = step(state);
        REQUIRE(r.stepped());
        CHECK(r.dist.is_probability());
    }
}

TEST_CASE("enabled moves and process_can_move") {
    auto p = parse_process("l1:a . 0 | l2:!a . 0");
    auto moves = enabled_moves(p);
    CHECK(moves.size() == 3);  // sigma(l1), sigma(l2), sigma(l1,l2)
    CHECK(process_can_move(p));
    CHECK(!process_can_move(parse_process("0")));
    CHECK(!process_can_move(parse_process("new a . l1:a")));

    // protect heads are movable iff the body is
    CHECK(process_can_move(parse_process("l:{ l1:tau . 0 }")));
    CHECK(!process_can_move(parse_process("l:{ new a . l1:a }")));
}
