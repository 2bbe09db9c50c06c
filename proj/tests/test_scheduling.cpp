#include "doctest.h"

#include "common/generators.hpp"

#include "ccss/analysis.hpp"
#include "ccss/diag.hpp"
#include "ccss/parser.hpp"

using namespace ccss;

namespace {

SchedPtr S(const std::string& text) { return parse_scheduler(text); }

bool same_tree(const TermPtr& p, const SchedPtr& a, const SchedPtr& b, int depth) {
    return to_json(unfold_complete({p, a, nullptr}, depth)) ==
           to_json(unfold_complete({p, b, nullptr}, depth));
}

bool has_stuck_scheduler_leaf(const TermPtr& p, const SchedPtr& s, int depth) {
    auto m = unfold_complete({p, s, nullptr}, depth);
    for (int f : m.flags)
        if (f & ProbAutomaton::StuckScheduler) return true;
    return false;
}

}  // namespace

TEST_CASE("check_deterministic verdicts") {
    CHECK(check_deterministic(parse_process("l1:a . l2:b | l3:!a"), 6).verdict ==
          DetResult::Verdict::Deterministic);

    // Prop 5 (1): shared labels across probabilistic branches
    CHECK(check_deterministic(parse_process("l:( l1:a . l2:b +_1/2 l1:a . l2:c )"), 6).verdict ==
          DetResult::Verdict::Deterministic);

    // Prop 5 (3): shared guard labels under restriction
    CHECK(check_deterministic(
              parse_process("new a . new b . ((l1:a . l3:c + l1:b . l4:d) | l2:!a)"), 6)
              .verdict == DetResult::Verdict::Deterministic);

    auto amb = check_deterministic(parse_process("l1:a . 0 | l1:b . 0"), 6);
    REQUIRE(amb.verdict == DetResult::Verdict::Ambiguous);
    CHECK(amb.move.find("l1") != std::string::npos);
    CHECK(amb.first != amb.second);

    // ambiguity beyond the root is found too
    CHECK(check_deterministic(parse_process("l0:tau . (l1:a . 0 | l1:b . 0)"), 6).verdict ==
          DetResult::Verdict::Ambiguous);

    // bang with a linear labeling: no ambiguity, bound reported
    CHECK(check_deterministic(parse_process("!(l1:a . 0)"), 4).verdict ==
          DetResult::Verdict::BoundReached);

    // protected blocks: combined (S,T) moves are examined
    CHECK(check_deterministic(parse_process("l:{ l1:tau . 0 + l2:tau . 0 }"), 4).verdict ==
          DetResult::Verdict::Deterministic);
    CHECK(check_deterministic(parse_process("l:{ l1:tau . 0 + l1:tau . la:a }"), 4).verdict ==
          DetResult::Verdict::Ambiguous);
}

TEST_CASE("Prop 2 as a property: linear labelings are deterministic") {
    testgen::TermGen gen(42);
    for (int i = 0; i < 120; ++i) {
        auto t = gen.labeled(1 + gen.pick(4));
        REQUIRE(check_linear(t));
        auto det = check_deterministic(t, 8);
        CAPTURE(format_process(t));
        CHECK(det.verdict != DetResult::Verdict::Ambiguous);
    }
}

TEST_CASE("scheduler enumeration: single-action process") {
    auto scheds = enumerate_syntactic_schedulers(parse_process("l:a . 0"), 4);
    REQUIRE(scheds.size() == 1);
    CHECK(sched_eq(scheds[0], S("sigma(l)")));
}

TEST_CASE("scheduler enumeration: the blocking example needs scheduler choice") {
    auto p = parse_process("l:( l1:a +_1/2 l2:b )");

    auto scheds = enumerate_syntactic_schedulers(p, 4);
    REQUIRE(scheds.size() == 1);
    // the class representative is observationally the choice scheduler, both orders
    CHECK(same_tree(p, scheds[0], S("sigma(l).(sigma(l1) + sigma(l2))"), 4));
    CHECK(same_tree(p, scheds[0], S("sigma(l).(sigma(l2) + sigma(l1))"), 4));

    // no choice-free scheduler is nonblocking
    for (const char* first : {"l", "l1", "l2"}) {
        for (const char* second : {"l", "l1", "l2"}) {
            auto chain = sched_act(Move::single(Label(first)),
                                   sched_act(Move::single(Label(second)), sched_nil()));
            CHECK(has_stuck_scheduler_leaf(p, chain, 4));
        }
    }
    CHECK(!has_stuck_scheduler_leaf(p, S("sigma(l).(sigma(l1) + sigma(l2))"), 4));
}

TEST_CASE("scheduler enumeration: shared-label outputs hide the outcome") {
    // l:(l1:!ok +_1/2 l1:!ok) | l2:ok.P | l3:ok.Q
    auto p = parse_process("l:( l1:!ok +_1/2 l1:!ok ) | l2:ok . ps:!s | l3:ok . pt:!t");
    auto scheds = enumerate_syntactic_schedulers(p, 6);
    REQUIRE(!scheds.empty());

    bool saw_p_sync = false, saw_q_sync = false;
    std::function<bool(const SchedPtr&)> has_sum = [&](const SchedPtr& s) {
        if (s->kind == SchedKind::Sum) return true;
        if (s->kind == SchedKind::Act) return has_sum(s->cont);
        return false;
    };
    std::function<bool(const SchedPtr&, const Move&)> uses = [&](const SchedPtr& s,
                                                                 const Move& m) {
        if (s->kind == SchedKind::Act)
            return s->move == m || uses(s->cont, m);
        if (s->kind == SchedKind::Sum) {
            for (const auto& it : s->sum)
                if (uses(it, m)) return true;
        }
        return false;
    };
    for (const auto& s : scheds) {
        // the scheduler cannot branch on the outcome: no TEST sums appear
        CHECK(!has_sum(s));
        saw_p_sync |= uses(s, Move::pair(Label("l2"), Label("l1")));
        saw_q_sync |= uses(s, Move::pair(Label("l3"), Label("l1")));
    }
    CHECK(saw_p_sync);
    CHECK(saw_q_sync);
}

TEST_CASE("enumeration requires a deterministic labeling") {
    CHECK_THROWS_AS(enumerate_syntactic_schedulers(parse_process("l1:a . 0 | l1:b . 0"), 4),
                    AmbiguityError);
}

TEST_CASE("p_omega basics") {
    // P = l:a.0, S = sigma(l,k1).sigma(k2), O = k1:!a.k2:omega
    auto p = parse_process("l:a . 0");
    auto test = parse_process("k1:!a . k2:omega");
    auto r = p_omega(p, S("sigma(l,k1).sigma(k2)"), test, 8);
    CHECK(r.success == 1);
    CHECK(r.failure == 0);
    CHECK(r.truncated == 0);

    auto r0 = p_omega(p, S("sigma(l,k1).sigma(k2)"), test, 0);
    CHECK(r0.truncated == 1);

    // a blocking scheduler fails rather than succeeding
    auto rb = p_omega(p, S("sigma(l,k1)"), test, 8);
    CHECK(rb.success == 0);
    CHECK(rb.failure == 1);

    CHECK_THROWS_AS(p_omega(parse_process("k1:a . 0"), S("sigma(k1)"), test, 8), FreshnessError);
}

TEST_CASE("p_omega components always sum to one") {
    testgen::TermGen gen(77);
    for (int i = 0; i < 40; ++i) {
        auto p = gen.labeled(1 + gen.pick(3));
        auto test = gen.test_term(2, channels_of(p));
        if (!check_fresh(test, {p})) continue;
        for (const auto& s :
             enumerate_syntactic_schedulers(restrict_all(par(p, test)), 5, {})) {
            auto r = p_omega(p, s, test, 5);
            CHECK(r.success + r.failure + r.truncated == 1);
        }
    }
}

TEST_CASE("p_omega is monotone in depth") {
    auto p = parse_process("!(l1:a . 0)");
    auto test = parse_process("t1:!a . t2:!a . t3:omega");
    auto s = S("sigma(l1,t1).sigma(l1^1,t2).sigma(t3)");
    Rational prev_success = 0, prev_trunc = 1;
    for (int d = 0; d <= 6; ++d) {
        auto r = p_omega(p, s, test, d);
        CHECK(r.success >= prev_success);
        CHECK(r.truncated <= prev_trunc);
        prev_success = r.success;
        prev_trunc = r.truncated;
    }
    CHECK(prev_success == 1);
}

TEST_CASE("test lint warnings") {
    CHECK(test_lint_warnings(parse_process("t1:!a . t2:omega")).empty());
    CHECK(!test_lint_warnings(parse_process("t1:tau . t2:omega")).empty());
    CHECK(!test_lint_warnings(parse_process("t0:( t1:omega +_1/2 0 )")).empty());
}

TEST_CASE("intro example: private choice caps at 1/2, visible choice reaches 1") {
    auto A = parse_process(
        "la1:a0 . lp1:( lq1:!ok +_1/2 0 ) + la2:a1 . lp2:( 0 +_1/2 lq2:!ok )");
    auto B = parse_process(
        "lB:( (lb1:a0 . lr1:!ok + lb2:a1 . 0) +_1/2 (lb3:a0 . 0 + lb4:a1 . lr2:!ok) )");
    auto C = parse_process("lc0:!a0 | lc1:!a1");
    auto O = parse_process("lo:ok . lw:omega");

    CHECK(max_p_omega(par(A, C), O, 10).value.success == rat(1, 2));
    CHECK(max_p_omega(par(B, C), O, 10).value.success == 1);
}

TEST_CASE("preorder: reflexivity and the fresh-relabeling equivalence") {
    auto p = parse_process("l1:a . l2:( l3:b +_1/3 0 )");
    auto suite = std::vector<TermPtr>{parse_process("t1:!a . t2:!b . t3:omega")};
    CHECK(testing_preorder(p, p, suite, PreorderMode::May, 8).holds());
    CHECK(testing_preorder(p, p, suite, PreorderMode::Must, 8).holds());

    auto q = parse_process("k1:a . k2:( k3:b +_1/3 0 )");
    CHECK(testing_preorder(p, q, suite, PreorderMode::May, 8).holds());
    CHECK(testing_preorder(q, p, suite, PreorderMode::May, 8).holds());
}

TEST_CASE("preorder: section-5 counterexample without freshness") {
    auto O = parse_process("m1:!a . m2:!b . m3:omega | m4:!a . m5:!c . m6:omega");
    for (const char* ps : {"1/10", "1/2", "9/10"}) {
        Rational p = rat_parse(ps);
        Rational expected = std::max(p, Rational(Rational(1) - p));
        auto cp = psum2(Label("l"), p, parse_process("l1:a . l2:c"),
                        parse_process("l1:a . l2:b"));
        auto cq = psum2(Label("l"), p, parse_process("l1:a . l2:c"),
                        parse_process("l3:a . l4:b"));
        CHECK(max_p_omega(cp, O, 10).value.success == expected);
        CHECK(max_p_omega(cq, O, 10).value.success == 1);

        auto verdict = testing_preorder(cq, cp, {O}, PreorderMode::May, 10);
        CHECK(!verdict.holds());
        REQUIRE(verdict.witness.has_value());
        CHECK(verdict.witness->value.success == 1);
        CHECK(verdict.witness->best_value.success == expected);
    }
}

TEST_CASE("preorder: truncated mass yields an indeterminate verdict") {
    auto p = parse_process("!(l1:a . 0)");
    auto q = parse_process("k1:a . 0");
    auto suite = std::vector<TermPtr>{parse_process("t1:!a . t2:omega")};
    auto v = testing_preorder(p, q, suite, PreorderMode::May, 3);
    CHECK(v.status == PreorderVerdict::Status::Indeterminate);
    CHECK(!v.witness.has_value());
}

TEST_CASE("tau-guard examples") {
    auto R1 = parse_process(
        "l0:( (l1:( l2:a +_1/2 0 ) + l3:a) +_1/10 (l1:( l2:a +_1/2 0 ) + 0) )");
    auto R1p = parse_process(
        "l0:( (l1:( l2:a +_1/2 0 ) + lt:tau . l3:a) +_1/10 (l1:( l2:a +_1/2 0 ) + lt:tau . 0) )");
    auto R2 = parse_process("l1:( l2:a +_1/2 0 ) + l0:( l3:a +_1/10 0 )");
    auto O = std::vector<TermPtr>{parse_process("t1:!a . t2:omega")};

    // unguarded: separated (a scheduler resolves R+a to a and R+0 to R)
    auto v = testing_preorder(R1, R2, O, PreorderMode::May, 10);
    CHECK(!v.holds());
    REQUIRE(v.witness.has_value());
    CHECK(v.witness->value.success == rat(11, 20));
    CHECK(v.witness->best_value.success == rat(1, 2));

    // tau-guarded: equivalent in both senses
    CHECK(testing_preorder(R1p, R2, O, PreorderMode::May, 10).holds());
    CHECK(testing_preorder(R2, R1p, O, PreorderMode::May, 10).holds());
    CHECK(testing_preorder(R1p, R2, O, PreorderMode::Must, 10).holds());
    CHECK(testing_preorder(R2, R1p, O, PreorderMode::Must, 10).holds());
}

TEST_CASE("distributivity: the trivial context") {
    auto rep = check_distributivity(
        parse_context("hole"), parse_process("pa:a"), parse_process("pb:b"), rat(1, 3),
        {parse_process("u1:!a . u2:omega"), parse_process("u3:!b . u4:omega")}, 10);
    CHECK(rep.equivalent());
    CHECK(rep.identities_hold);
    CHECK(rep.identity_checks > 0);
}

TEST_CASE("distributivity: parallel and restricted contexts") {
    auto rep = check_distributivity(
        parse_context("c1:c . hole | c2:!c"), parse_process("pa:a"), parse_process("pb:b"),
        rat(1, 2), {parse_process("u1:!a . u2:omega")}, 12);
    CHECK(rep.equivalent());
    CHECK(rep.identities_hold);

    auto rep2 = check_distributivity(
        parse_context("new d . (c1:d . hole | c2:!d)"), parse_process("pa:a . pc:b"),
        parse_process("pb:b"), rat(2, 5),
        {parse_process("u1:!a . u3:!b . u2:omega"), parse_process("u4:!b . u5:omega")}, 12);
    CHECK(rep2.equivalent());
    CHECK(rep2.identities_hold);
}

TEST_CASE("distributivity: precondition violations are reported") {
    auto P = parse_process("pa:a");
    auto Q = parse_process("pb:b");
    CHECK_THROWS_AS(check_distributivity(parse_context("!(c1:c . hole)"), P, Q, rat(1, 2),
                                         {parse_process("u1:!a . u2:omega")}, 8),
                    Error);
    // context label collides with P
    CHECK_THROWS_AS(check_distributivity(parse_context("pa:c . hole"), P, Q, rat(1, 2),
                                         {parse_process("u1:!a . u2:omega")}, 8),
                    FreshnessError);
}

TEST_CASE("precongruence spot-check: plus-free fresh contexts preserve may") {
    testgen::TermGen gen(2024);
    int checked = 0;
    for (int i = 0; i < 30 && checked < 4; ++i) {
        auto p = gen.labeled(2);
        auto q = gen.labeled(2);
        auto suite = std::vector<TermPtr>{gen.test_term(2, channels_of(p)),
                                          gen.test_term(2, channels_of(q))};
        bool fresh_ok = true;
        for (const auto& t : suite) fresh_ok &= check_fresh(t, {p, q});
        if (!fresh_ok) continue;
        PreorderVerdict base = testing_preorder(p, q, suite, PreorderMode::May, 7);
        if (base.status != PreorderVerdict::Status::Holds) continue;

        // a plus-free fresh context: prefix/parallel composition
        gen.label_base = "cx";
        auto ctx = par(prefix(gen.fresh(), Action::input("z"), hole()),
                       prefix(gen.fresh(), Action::output("z"), nil()));
        gen.label_base = "g";
        if (!check_fresh(ctx, {p, q}) || !check_fresh(suite[0], {subst_hole(ctx, p)})) continue;

        auto cv = testing_preorder(subst_hole(ctx, p), subst_hole(ctx, q), suite,
                                   PreorderMode::May, 9);
        CHECK(cv.status != PreorderVerdict::Status::Fails);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("preorder report serializes") {
    auto p = parse_process("l1:a");
    auto v = testing_preorder(p, p, {parse_process("t1:!a . t2:omega")}, PreorderMode::May, 6);
    auto j = v.to_json();
    CHECK(j["status"] == "holds");
}
