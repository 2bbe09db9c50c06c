#include "doctest.h"

#include "ccss/automata.hpp"
#include "ccss/diag.hpp"
#include "ccss/parser.hpp"

using namespace ccss;

namespace {

CompleteState cs(const std::string& p, const std::string& s) {
    return {parse_process(p), parse_scheduler(s), nullptr};
}

// Independent strategy count: every execution whose last state has outgoing
// transitions is a decision point, whatever earlier choices were.
unsigned long long brute_count(const ProbAutomaton& m, int state) {
    if (m.outgoing[state].empty()) return 1;
    unsigned long long total = m.outgoing[state].size();
    for (int ti : m.outgoing[state])
        for (const auto& [q, p] : m.transitions[ti].support) total *= brute_count(m, q);
    return total;
}

}  // namespace

TEST_CASE("unfold_process basics") {
    auto m = unfold_process(parse_process("a . 0"), 1);
    CHECK(m.states.size() == 2);
    CHECK(m.transitions.size() == 1);
    CHECK(m.truncated_states().empty());

    auto m2 = unfold_process(parse_process("a . 0 | !a . 0"), 2);
    CHECK(m2.states.size() == 4);
    CHECK(m2.outgoing[m2.initial].size() == 3);
    CHECK(m2.actions() == std::set<std::string>{"a", "!a", "tau"});

    for (int d = 0; d <= 3; ++d) {
        auto mb = unfold_process(parse_process("!(a . 0)"), d);
        CHECK(!mb.truncated_states().empty());
    }
}

TEST_CASE("unfold_process respects the state cap") {
    CHECK_THROWS_AS(unfold_process(parse_process("!(a . 0)"), 50, 10), StateCapError);
}

TEST_CASE("unfold_complete chains and stuck marking") {
    auto m = unfold_complete(cs("l:a . 0", "sigma(l)"), 5);
    CHECK(m.states.size() == 2);
    CHECK(m.transitions.size() == 1);
    CHECK(is_fully_probabilistic(m));

    // blocking scheduler: one branch does a, the other is stuck-scheduler
    auto mb = unfold_complete(cs("l:( l1:a +_1/2 l2:b )", "sigma(l).sigma(l1)"), 5);
    int stuck_sched = 0, stuck_proc = 0;
    for (int f : mb.flags) {
        if (f & ProbAutomaton::StuckScheduler) ++stuck_sched;
        if (f & ProbAutomaton::StuckProcess) ++stuck_proc;
    }
    CHECK(stuck_sched == 1);
    CHECK(stuck_proc >= 1);

    // scheduler choice removes the stuck leaf
    auto mc = unfold_complete(cs("l:( l1:a +_1/2 l2:b )", "sigma(l).(sigma(l1) + sigma(l2))"), 5);
    for (int f : mc.flags) CHECK(!(f & ProbAutomaton::StuckScheduler));
    CHECK(is_fully_probabilistic(mc));
}

TEST_CASE("semantic scheduler enumeration") {
    SUBCASE("deterministic chain has exactly one scheduler") {
        auto m = unfold_process(parse_process("a . b . 0"), 4);
        SemanticSchedulers en(m);
        CHECK(en.count() == 1);
    }

    SUBCASE("two enabled root transitions, both terminal") {
        auto m = unfold_process(parse_process("a . 0 + b . 0"), 4);
        SemanticSchedulers en(m);
        CHECK(en.count() == 2);
    }

    SUBCASE("count matches the brute-force strategy count") {
        for (const char* text : {"a . 0 | !a . 0", "a . (b . 0 + c . 0)", "a . 0 | b . 0"}) {
            auto m = unfold_process(parse_process(text), 2);
            SemanticSchedulers en(m);
            CHECK(en.count() == brute_count(m, m.initial));
        }
    }

    SUBCASE("iteration visits count() schedulers") {
        auto m = unfold_process(parse_process("a . 0 | !a . 0"), 2);
        SemanticSchedulers en(m);
        SemanticScheduler z;
        unsigned long long seen = 0;
        for (bool ok = en.first(z); ok; ok = en.next(z)) ++seen;
        CHECK(seen == en.count());
    }
}

TEST_CASE("etree") {
    auto m = unfold_process(parse_process("a . 0 | !a . 0"), 2);
    SemanticSchedulers en(m);

    SemanticScheduler z;
    std::vector<ProbAutomaton> trees;
    for (bool ok = en.first(z); ok; ok = en.next(z)) trees.push_back(en.etree(z));

    for (const auto& t : trees) CHECK(is_fully_probabilistic(t));
    for (const auto& t : trees) {
        for (const auto& tr : t.transitions) {
            Rational total = 0;
            for (const auto& [q, p] : tr.support) total += p;
            CHECK(total == 1);
        }
    }

    // one of the schedulers picks tau at the root: a single-edge tree
    bool found_single_tau = false;
    for (const auto& t : trees)
        found_single_tau |= t.transitions.size() == 1 && t.transitions[0].action.is_tau();
    CHECK(found_single_tau);

    // etree of a fully probabilistic automaton under its unique scheduler
    auto chain = unfold_process(parse_process("a . b . 0"), 4);
    SemanticSchedulers cen(chain);
    SemanticScheduler cz;
    cen.first(cz);
    CHECK(prob_bisim(cen.etree(cz), chain));
}

TEST_CASE("prob_bisim") {
    auto m = unfold_complete(cs("l:a . l2:b", "sigma(l).sigma(l2)"), 4);
    CHECK(prob_bisim(m, m));

    // same chain, different state names
    auto m2 = unfold_complete(cs("k:a . k2:b", "sigma(k).sigma(k2)"), 4);
    CHECK(prob_bisim(m, m2));

    auto m3 = unfold_complete(cs("l:a . l2:c", "sigma(l).sigma(l2)"), 4);
    CHECK(!prob_bisim(m, m3));

    // probabilities matter
    auto p1 = unfold_complete(cs("l:( l1:a +_1/2 l2:b )", "sigma(l).(sigma(l1)+sigma(l2))"), 4);
    auto p2 = unfold_complete(cs("l:( l1:a +_1/3 l2:b )", "sigma(l).(sigma(l1)+sigma(l2))"), 4);
    CHECK(prob_bisim(p1, p1));
    CHECK(!prob_bisim(p1, p2));

    auto nondet = unfold_process(parse_process("a . 0 | !a . 0"), 2);
    CHECK_THROWS_AS(prob_bisim(nondet, nondet), Error);
}

TEST_CASE("Prop 4 instance: semantic vs syntactic scheduler") {
    // P = a.0 | b.0, zeta schedules a first <-> S = sigma(la).sigma(lb)
    auto m = unfold_process(parse_process("a . 0 | b . 0"), 4);
    SemanticSchedulers en(m);
    auto complete = unfold_complete(cs("la:a . 0 | lb:b . 0", "sigma(la).sigma(lb)"), 4);

    SemanticScheduler z;
    bool matched = false;
    for (bool ok = en.first(z); ok; ok = en.next(z))
        matched |= prob_bisim(en.etree(z), complete);
    CHECK(matched);
}

TEST_CASE("export: dot and json") {
    auto m = unfold_complete(cs("l:a . 0", "sigma(l)"), 3);
    auto dot = to_dot(m);
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("a [1]") != std::string::npos);

    auto j = to_json(m);
    CHECK_NOTHROW(validate_automaton_json(j));
    CHECK(j["states"].size() == 2);

    // probabilistic fan-out survives the schema check
    auto mp = unfold_complete(cs("l:( l1:a +_1/2 l2:b )", "sigma(l).(sigma(l1)+sigma(l2))"), 4);
    CHECK_NOTHROW(validate_automaton_json(to_json(mp)));

    // byte stability
    CHECK(to_dot(mp) == to_dot(unfold_complete(cs("l:( l1:a +_1/2 l2:b )",
                                                  "sigma(l).(sigma(l1)+sigma(l2))"), 4)));

    auto bad = to_json(mp);
    bad["transitions"][0]["support"][0]["prob"] = "1/3";
    CHECK_THROWS_AS(validate_automaton_json(bad), Error);
}

TEST_CASE("truncated complete unfolding") {
    // depth 0: the initial state is cut
    auto m = unfold_complete(cs("l:a . 0", "sigma(l)"), 0);
    CHECK((m.flags[m.initial] & ProbAutomaton::Truncated) != 0);
}
