#include "doctest.h"

#include "ccss/diag.hpp"
#include "ccss/parser.hpp"
#include "ccss/term.hpp"

using namespace ccss;

namespace {

Label L(const std::string& atom, const std::string& idx = "") { return Label(atom, idx); }

}  // namespace

TEST_CASE("labels_of walks prefixes, psums and protects") {
    // l1:a.l2:b.0
    auto t = prefix(L("l1"), Action::input("a"), prefix(L("l2"), Action::input("b"), nil()));
    CHECK(labels_of(t) == std::set<Label>{L("l1"), L("l2")});

    // l:(l1:!a +_1/2 l1:!a) -- both branches share l1
    auto br = prefix(L("l1"), Action::output("a"), nil());
    auto ps = psum2(L("l"), rat(1, 2), br, br);
    CHECK(labels_of(ps) == std::set<Label>{L("l"), L("l1")});

    CHECK(labels_of(nil()).empty());

    auto prot = protect(L("l"), prefix(L("l9"), Action::tau(), nil()));
    CHECK(labels_of(prot) == std::set<Label>{L("l"), L("l9")});
}

TEST_CASE("relabel appends one bit everywhere") {
    auto t = prefix(L("l1"), Action::input("a"), prefix(L("l2"), Action::input("b"), nil()));
    auto r = relabel(t, "0");
    CHECK(labels_of(r) == std::set<Label>{L("l1", "0"), L("l2", "0")});

    auto b = bang(prefix(L("l1", "1"), Action::input("a"), nil()));
    auto rb = relabel(b, "1");
    CHECK(labels_of(rb) == std::set<Label>{L("l1", "11")});
}

TEST_CASE("relabel composition appends strings; 0/1 relabelings are disjoint") {
    auto t = parse_process("l1:a . (l2:b | l3:!c) + l4:tau");
    auto r = relabel(relabel(t, "0"), "1");
    CHECK(term_eq(r, relabel(t, "01")));

    auto zero = labels_of(relabel(t, "0"));
    auto one = labels_of(relabel(t, "1"));
    for (const auto& l : zero) CHECK(!one.count(l));
}

TEST_CASE("check_linear") {
    CHECK(check_linear(parse_process("l1:a . l2:b")));

    auto br = prefix(L("l1"), Action::output("a"), nil());
    CHECK(!check_linear(psum2(L("l"), rat(1, 2), br, br)));

    // (new a)(new b)(l1:a.P' + l1:b.Q' | l2:!a) -- deterministic but not linear
    auto t = parse_process("new a . new b . ((l1:a . l3:c + l1:b . l4:d) | l2:!a)");
    CHECK(!check_linear(t));

    SUBCASE("linearity is hereditary") {
        auto p = parse_process("l1:a . (l2:b | l3:!c)");
        REQUIRE(check_linear(p));
        CHECK(check_linear(p->left));
    }
}

TEST_CASE("check_fresh") {
    auto c1 = parse_context("l5:a . hole");
    CHECK(check_fresh(c1, {parse_process("l1:a")}));

    auto c2 = parse_context("l:( l1:a . l2:c +_1/2 hole )");
    CHECK(!check_fresh(c2, {parse_process("l1:a . l2:b")}));

    CHECK(check_fresh(hole(), {parse_process("l1:a . l2:b"), parse_process("l9:tau")}));
}

TEST_CASE("contexts and substitution") {
    auto c = parse_context("l:( l1:a . l2:c +_1/2 hole )");
    auto p = parse_process("l1:a . l2:b");
    auto cp = subst_hole(c, p);
    CHECK(hole_count(cp) == 0);

    std::set<Label> expect = labels_of(c);
    for (const auto& l : labels_of(p)) expect.insert(l);
    CHECK(labels_of(cp) == expect);

    CHECK_THROWS_AS(parse_process("hole"), Error);
    CHECK_THROWS_AS(parse_context("l1:a"), Error);
    CHECK_THROWS_AS(parse_context("hole | hole"), Error);
}

TEST_CASE("psum validation") {
    CHECK_THROWS_AS(psum(L("l"), {{rat(1, 2), nil()}, {rat(1, 3), nil()}}), Error);
    CHECK_THROWS_AS(psum(L("l"), {{rat(3, 2), nil()}, {rat(-1, 2), nil()}}), Error);
    CHECK_NOTHROW(psum(L("l"), {{rat(1, 3), nil()}, {rat(2, 3), nil()}}));
}

TEST_CASE("value passing desugars to fused channels with shared labels") {
    std::vector<ValueSpec> specs{{"c", {"0", "1"}}};

    SUBCASE("input becomes a sum over the domain, same label") {
        auto t = parse_process("l:c(x) . lo:!out<x>");
        std::vector<ValueSpec> both{{"c", {"0", "1"}}, {"out", {"0", "1"}}};
        auto d = desugar_value_passing(t, both);
        CHECK(!has_sugar(d));
        REQUIRE(d->kind == TermKind::NondetSum);
        auto ms = label_multiset(d);
        CHECK(ms.count(L("l")) == 2);  // one repeated label per domain value
        CHECK(ms.count(L("lo")) == 2);
        // branch 0 outputs out%0, branch 1 outputs out%1
        CHECK(format_process(d) == "l:c%0 . lo:!out%0 + l:c%1 . lo:!out%1");
    }

    SUBCASE("output with a literal value") {
        auto t = parse_process("l:!c<1>");
        auto d = desugar_value_passing(t, specs);
        CHECK(format_process(d) == "l:!c%1");
    }

    SUBCASE("restriction widens over the domain") {
        auto t = parse_process("new c . l:!c<0>");
        auto d = desugar_value_passing(t, specs);
        CHECK(format_process(d) == "new c%0 . new c%1 . l:!c%0");
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(desugar_value_passing(parse_process("l:!c<7>"), specs), DesugarError);
        CHECK_THROWS_AS(desugar_value_passing(parse_process("l:d(x) . 0"), specs), DesugarError);
        CHECK_THROWS_AS(desugar_value_passing(parse_process("l:c . 0"), specs), DesugarError);
    }

    SUBCASE("inner binders shadow outer ones") {
        std::vector<ValueSpec> both{{"c", {"0", "1"}}, {"d", {"0", "1"}}, {"out", {"0", "1"}}};
        auto t = parse_process("l1:c(x) . l2:d(x) . l3:!out<x>");
        auto d = desugar_value_passing(t, both);
        // every out value must come from d, not c
        auto s = format_process(d);
        CHECK(s.find("l2:d%0 . l3:!out%0") != std::string::npos);
        CHECK(s.find("l2:d%1 . l3:!out%1") != std::string::npos);
    }
}

TEST_CASE("erase_labels and rename_label_atoms") {
    auto t = parse_process("l:( l1:!a +_1/2 l2:b )");
    auto e = erase_labels(t);
    CHECK(labels_of(e).size() == 1);  // only the empty label remains
    CHECK(labels_of(e).count(Label{}));

    auto r = rename_label_atoms(t, {{"l1", "k1"}});
    CHECK(labels_of(r) == std::set<Label>{L("l"), L("k1"), L("l2")});
}

TEST_CASE("restricting omega is rejected") {
    CHECK_THROWS_AS(restrict_ch("omega", nil()), Error);
    CHECK_THROWS_AS(parse_process("new omega . l:a"), ParseError);
}
