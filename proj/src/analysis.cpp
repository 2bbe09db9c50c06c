#include "ccss/analysis.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "ccss/diag.hpp"
#include "ccss/parser.hpp"

namespace ccss {

// ---------------------------------------------------------------------------
// check_deterministic

namespace {

// All (move, derivation-list) pairs relevant at one state, quantifying over
// the independent scheduler for protected blocks.
struct MoveDerivs {
    std::string move_desc;
    std::vector<Derivation> derivs;
};

std::vector<MoveDerivs> state_move_derivs(const TermPtr& p) {
    std::vector<MoveDerivs> out;
    auto heads = heads_of(p);
    for (const Move& m : candidate_moves(p)) {
        auto base = derive(p, m, nullptr, ProtectPolicy::Skip);
        bool is_protect_label = false;
        if (m.kind == Move::Kind::Single) {
            for (const auto& h : heads)
                is_protect_label |= h.is_protect && h.label == m.first;
        }
        if (!is_protect_label) {
            if (!base.empty()) out.push_back({m.str(), std::move(base)});
            continue;
        }
        // sigma(l) on a protected label: one combined move per inner choice of T
        std::set<Move> inner_moves;
        for (const auto& body : protect_bodies(p, m.first))
            for (const Move& im : candidate_moves(body)) inner_moves.insert(im);
        if (inner_moves.empty()) {
            if (!base.empty()) out.push_back({m.str(), std::move(base)});
            continue;
        }
        for (const Move& im : inner_moves) {
            auto combined = base;
            auto del = derive_delegate(p, m.first, im);
            combined.insert(combined.end(), del.begin(), del.end());
            if (!combined.empty())
                out.push_back({m.str() + " with T:" + im.str(), std::move(combined)});
        }
    }
    return out;
}

}  // namespace

DetResult check_deterministic(const TermPtr& p, int depth, std::size_t cap) {
    std::unordered_set<std::string> seen;
    std::deque<std::pair<TermPtr, int>> frontier;
    frontier.push_back({p, 0});
    seen.insert(format_process(p));
    bool bound_hit = false;

    while (!frontier.empty()) {
        auto [state, d] = frontier.front();
        frontier.pop_front();

        auto moves = state_move_derivs(state);
        for (const auto& md : moves) {
            if (md.derivs.size() > 1) {
                return {DetResult::Verdict::Ambiguous, format_process(state), md.move_desc,
                        md.derivs[0].trace, md.derivs[1].trace};
            }
        }
        if (d >= depth) {
            if (!moves.empty()) bound_hit = true;
            continue;
        }
        for (const auto& md : moves) {
            for (const auto& deriv : md.derivs) {
                for (const auto& [target, prob] : deriv.targets.entries()) {
                    std::string key = format_process(target.process);
                    if (seen.count(key)) continue;
                    if (seen.size() >= cap) throw StateCapError(cap);
                    seen.insert(key);
                    frontier.push_back({target.process, d + 1});
                }
            }
        }
    }
    if (bound_hit) return {DetResult::Verdict::BoundReached, "", "", "", ""};
    return {DetResult::Verdict::Deterministic, "", "", "", ""};
}

// ---------------------------------------------------------------------------
// Syntactic scheduler enumeration

namespace {

struct Enumerator {
    int full_depth;
    EnumOptions opts;
    std::size_t emitted = 0;
    std::map<std::pair<std::string, int>, std::vector<SchedPtr>> memo;

    struct ActiveState {
        TermPtr term;
        std::vector<Move> enabled;
    };

    std::string frontier_key(const std::vector<TermPtr>& frontier) {
        std::vector<std::string> keys;
        keys.reserve(frontier.size());
        for (const auto& t : frontier) keys.push_back(format_process(t));
        std::sort(keys.begin(), keys.end());
        std::string out;
        for (auto& k : keys) out += k + "\xe2\x96\xa1";
        return out;
    }

    // Dirac-or-distribution successor states of `state` under `m`.
    std::vector<TermPtr> successors(const TermPtr& state, const Move& m) {
        auto ds = derive(state, m, nullptr, ProtectPolicy::Skip);
        if (ds.empty()) return {};
        if (ds.size() > 1)
            throw AmbiguityError(format_process(state), m.str(), ds[0].trace, ds[1].trace);
        std::vector<TermPtr> out;
        for (const auto& [target, prob] : ds[0].targets.entries()) out.push_back(target.process);
        return out;
    }

    std::vector<SchedPtr> run(const std::vector<TermPtr>& frontier, int depth) {
        auto key = std::make_pair(frontier_key(frontier), depth);
        if (auto it = memo.find(key); it != memo.end()) return it->second;

        std::vector<ActiveState> active;
        for (const auto& t : frontier) {
            auto en = enabled_moves(t);
            if (!en.empty()) active.push_back({t, std::move(en)});
        }

        std::vector<SchedPtr> result;
        if (depth == 0 || active.empty()) {
            result.push_back(sched_nil());
            memo.emplace(key, result);
            return result;
        }

        // Choice functions: each active state picks an enabled move (or blocks,
        // when blocking schedulers are requested too).
        std::vector<std::size_t> choice(active.size(), 0);
        auto options = [&](std::size_t i) {
            return active[i].enabled.size() + (opts.nonblocking ? 0 : 1);
        };
        bool more = true;
        while (more) {
            realize_choice(active, choice, depth, result);
            // odometer
            more = false;
            for (std::size_t i = 0; i < choice.size(); ++i) {
                if (++choice[i] < options(i)) {
                    more = true;
                    break;
                }
                choice[i] = 0;
            }
        }
        if (!opts.nonblocking) result.push_back(sched_nil());
        memo.emplace(key, result);
        return result;
    }

    void realize_choice(const std::vector<ActiveState>& active,
                        const std::vector<std::size_t>& choice, int depth,
                        std::vector<SchedPtr>& result) {
        // Chosen distinct moves; blocked states chose index == enabled.size().
        std::vector<Move> chosen;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (choice[i] >= active[i].enabled.size()) continue;  // blocked
            const Move& m = active[i].enabled[choice[i]];
            if (std::find(chosen.begin(), chosen.end(), m) == chosen.end()) chosen.push_back(m);
        }
        if (chosen.empty()) return;  // all blocked: covered by the bare nil scheduler

        // Precedence constraints make each state fire its chosen move first;
        // blocked states must not enable any chosen move at all.
        std::map<Move, std::set<Move>> after;  // m -> moves that must come later
        for (std::size_t i = 0; i < active.size(); ++i) {
            bool blocked = choice[i] >= active[i].enabled.size();
            if (blocked) {
                for (const Move& m : chosen)
                    if (std::find(active[i].enabled.begin(), active[i].enabled.end(), m) !=
                        active[i].enabled.end())
                        return;  // unrealizable
                continue;
            }
            const Move& mine = active[i].enabled[choice[i]];
            for (const Move& other : chosen) {
                if (other == mine) continue;
                if (std::find(active[i].enabled.begin(), active[i].enabled.end(), other) !=
                    active[i].enabled.end())
                    after[mine].insert(other);
            }
        }

        // Kahn toposort, smallest move first for a canonical entry order.
        std::map<Move, int> indeg;
        for (const Move& m : chosen) indeg[m];
        for (const auto& [m, succs] : after)
            for (const Move& s : succs) ++indeg[s];
        std::vector<Move> order;
        std::set<Move> ready;
        for (const auto& [m, d] : indeg)
            if (d == 0) ready.insert(m);
        auto indeg_left = indeg;
        while (!ready.empty()) {
            Move m = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(m);
            auto it = after.find(m);
            if (it == after.end()) continue;
            for (const Move& s : it->second)
                if (--indeg_left[s] == 0) ready.insert(s);
        }
        if (order.size() != chosen.size()) return;  // cyclic: unrealizable

        // Firing sets and successor frontiers per entry.
        std::vector<std::vector<TermPtr>> next(order.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (choice[i] >= active[i].enabled.size()) continue;
            const Move& mine = active[i].enabled[choice[i]];
            auto pos = std::find(order.begin(), order.end(), mine) - order.begin();
            for (const auto& succ : successors(active[i].term, mine)) {
                auto& bucket = next[pos];
                bool dup = false;
                for (const auto& existing : bucket) dup |= term_eq(existing, succ);
                if (!dup) bucket.push_back(succ);
            }
        }

        // Continuations per entry, then their cartesian product.
        std::vector<std::vector<SchedPtr>> conts(order.size());
        for (std::size_t e = 0; e < order.size(); ++e) conts[e] = run(next[e], depth - 1);

        std::vector<std::size_t> pick(order.size(), 0);
        bool more = true;
        while (more) {
            std::vector<SchedPtr> entries;
            entries.reserve(order.size());
            for (std::size_t e = 0; e < order.size(); ++e)
                entries.push_back(sched_act(order[e], conts[e][pick[e]]));
            result.push_back(entries.size() == 1 ? entries[0] : sched_sum(std::move(entries)));
            if (++emitted > opts.max_schedulers)
                throw Error("scheduler enumeration exceeded " +
                            std::to_string(opts.max_schedulers) + " candidates");
            more = false;
            for (std::size_t e = 0; e < order.size(); ++e) {
                if (++pick[e] < conts[e].size()) {
                    more = true;
                    break;
                }
                pick[e] = 0;
            }
        }
    }
};

std::string tree_fingerprint(const TermPtr& p, const SchedPtr& s, int depth,
                             std::size_t max_states) {
    auto m = unfold_complete({p, s, nullptr}, depth, max_states);
    return to_json(m).dump();
}

}  // namespace

std::vector<SchedPtr> enumerate_syntactic_schedulers(const TermPtr& p, int depth,
                                                     const EnumOptions& opts) {
    if (has_protect(p))
        throw Error("scheduler enumeration does not cover protected blocks; "
                    "use the anonymity checkers for those");
    auto det = check_deterministic(p, depth, opts.max_states);
    if (det.verdict == DetResult::Verdict::Ambiguous)
        throw AmbiguityError(det.state, det.move, det.first, det.second);

    Enumerator en{depth, opts};
    auto all = en.run({p}, depth);

    if (!opts.dedup_by_tree) return all;
    std::vector<SchedPtr> out;
    std::unordered_set<std::string> seen;
    for (const auto& s : all) {
        auto fp = tree_fingerprint(p, s, depth, opts.max_states);
        if (seen.insert(fp).second) out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// p_omega

std::vector<std::string> test_lint_warnings(const TermPtr& test) {
    std::vector<std::string> out;
    std::deque<TermPtr> queue{test};
    while (!queue.empty()) {
        TermPtr t = queue.front();
        queue.pop_front();
        if (t->kind == TermKind::Prefix && t->action.is_tau())
            out.push_back("test performs an internal tau action at " + t->label.str());
        if (t->kind == TermKind::ProbSum)
            out.push_back("test performs an internal probabilistic choice at " + t->label.str());
        if (t->left) queue.push_back(t->left);
        if (t->right) queue.push_back(t->right);
        for (const auto& br : t->branches) queue.push_back(br.body);
    }
    return out;
}

namespace {

bool is_omega(const Action& a) { return !a.is_tau() && a.channel == kOmegaChannel; }

struct PomegaEngine {
    struct Key {
        std::string state;
        int depth;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            return std::hash<std::string>{}(k.state) * 31 + k.depth;
        }
    };
    std::unordered_map<Key, PomegaResult, KeyHash> memo;

    PomegaResult run(const CompleteState& cs, int depth) {
        Key key{cs.str(), depth};
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        PomegaResult r{0, 0, 0};
        if (depth == 0) {
            r = {0, 0, 1};
        } else {
            auto sr = step(cs);
            if (!sr.stepped()) {
                r = {0, 1, 0};
            } else if (is_omega(sr.action)) {
                r = {1, 0, 0};
            } else {
                for (const auto& [next, p] : sr.dist.entries()) {
                    PomegaResult sub = run(next, depth - 1);
                    r.success += p * sub.success;
                    r.failure += p * sub.failure;
                    r.truncated += p * sub.truncated;
                }
            }
        }
        memo.emplace(key, r);
        return r;
    }
};

}  // namespace

PomegaResult p_omega(const TermPtr& p, const SchedPtr& s, const TermPtr& test, int depth) {
    if (!check_fresh(test, {p}))
        throw FreshnessError("the test labeling is not fresh for the tested process");
    CompleteState root{restrict_all(par(p, test)), s, nullptr};
    PomegaEngine engine;
    return engine.run(root, depth);
}

BestScheduler max_p_omega(const TermPtr& p, const TermPtr& test, int depth,
                          const EnumOptions& opts) {
    TermPtr closed = restrict_all(par(p, test));
    BestScheduler best{nullptr, {0, 1, 0}};
    for (const auto& s : enumerate_syntactic_schedulers(closed, depth, opts)) {
        auto r = p_omega(p, s, test, depth);
        if (!best.sched || r.success > best.value.success) best = {s, r};
    }
    return best;
}

// ---------------------------------------------------------------------------
// Testing preorders

namespace {

struct SideValues {
    std::vector<SchedPtr> scheds;
    std::vector<PomegaResult> values;
    bool truncated = false;

    std::size_t argmax() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i].success > values[best].success) best = i;
        return best;
    }
    std::size_t argmin() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i].success < values[best].success) best = i;
        return best;
    }
};

SideValues side_values(const TermPtr& p, const TermPtr& test, int depth, const EnumOptions& opts) {
    SideValues out;
    out.scheds = enumerate_syntactic_schedulers(restrict_all(par(p, test)), depth, opts);
    for (const auto& s : out.scheds) {
        auto r = p_omega(p, s, test, depth);
        out.truncated |= r.truncated > 0;
        out.values.push_back(r);
    }
    return out;
}

}  // namespace

nlohmann::ordered_json PreorderVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["status"] = status == Status::Holds     ? "holds"
                  : status == Status::Fails   ? "fails"
                                              : "indeterminate";
    if (witness) {
        nlohmann::ordered_json w;
        w["test"] = format_process(witness->test);
        w["scheduler"] = format_scheduler(witness->scheduler);
        w["p_omega"] = rat_str(witness->value.success);
        w["best_other_scheduler"] =
            witness->best_other ? format_scheduler(witness->best_other) : "";
        w["best_other_p_omega"] = rat_str(witness->best_value.success);
        j["witness"] = w;
    }
    j["notes"] = notes;
    return j;
}

PreorderVerdict testing_preorder(const TermPtr& p, const TermPtr& q,
                                 const std::vector<TermPtr>& tests, PreorderMode mode, int depth,
                                 const EnumOptions& opts) {
    PreorderVerdict verdict;
    verdict.status = PreorderVerdict::Status::Holds;
    verdict.notes.push_back("suite of " + std::to_string(tests.size()) + " tests at depth " +
                            std::to_string(depth) + "; verdict is relative to this suite");

    for (const auto& test : tests) {
        if (!check_fresh(test, {p, q}))
            throw FreshnessError("test labeling not fresh for the compared processes");
        for (const auto& w : test_lint_warnings(test)) verdict.notes.push_back(w);

        auto vp = side_values(p, test, depth, opts);
        auto vq = side_values(q, test, depth, opts);
        if (vp.truncated || vq.truncated) {
            verdict.notes.push_back("test " + format_process(test) +
                                    ": truncated mass > 0, no verdict at this depth");
            if (verdict.status == PreorderVerdict::Status::Holds)
                verdict.status = PreorderVerdict::Status::Indeterminate;
            continue;
        }

        if (mode == PreorderMode::May) {
            // forall S_P exists S_Q : p(P,S_P) <= p(Q,S_Q)
            std::size_t ip = vp.argmax(), iq = vq.argmax();
            if (vp.values[ip].success > vq.values[iq].success) {
                verdict.status = PreorderVerdict::Status::Fails;
                verdict.witness = {test, vp.scheds[ip], vp.values[ip], vq.scheds[iq],
                                   vq.values[iq]};
                return verdict;
            }
        } else {
            // forall S_Q exists S_P : p(P,S_P) <= p(Q,S_Q)
            std::size_t iq = vq.argmin(), ip = vp.argmin();
            if (vp.values[ip].success > vq.values[iq].success) {
                verdict.status = PreorderVerdict::Status::Fails;
                verdict.witness = {test, vq.scheds[iq], vq.values[iq], vp.scheds[ip],
                                   vp.values[ip]};
                return verdict;
            }
        }
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// Distributivity checker

std::set<std::string> label_atoms(const std::vector<TermPtr>& terms) {
    std::set<std::string> out;
    for (const auto& t : terms)
        for (const auto& l : labels_of(t)) out.insert(l.atom);
    return out;
}

std::string fresh_atom(const std::string& base, const std::set<std::string>& used) {
    if (!used.count(base)) return base;
    for (int i = 1;; ++i) {
        std::string cand = base + "_" + std::to_string(i);
        if (!used.count(cand)) return cand;
    }
}

namespace {

std::vector<Rational> distinct_successes(const SideValues& side) {
    std::vector<Rational> vals;
    for (const auto& r : side.values) vals.push_back(r.success);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

}  // namespace

nlohmann::ordered_json DistributivityReport::to_json() const {
    nlohmann::ordered_json j;
    j["r1"] = format_process(r1);
    j["r2"] = format_process(r2);
    j["equivalent"] = equivalent();
    j["may_equivalent"] = may_equivalent;
    j["must_equivalent"] = must_equivalent;
    j["value_sets_equal"] = value_sets_equal;
    j["identities_hold"] = identities_hold;
    j["identity_checks"] = identity_checks;
    j["tests"] = nlohmann::ordered_json::array();
    for (const auto& pt : per_test) {
        nlohmann::ordered_json t;
        t["test"] = format_process(pt.test);
        auto vals = [](const std::vector<Rational>& vs) {
            nlohmann::ordered_json a = nlohmann::ordered_json::array();
            for (const auto& v : vs) a.push_back(rat_str(v));
            return a;
        };
        t["p_omega_values_r1"] = vals(pt.values1);
        t["p_omega_values_r2"] = vals(pt.values2);
        t["equal"] = pt.equal;
        t["indeterminate"] = pt.indeterminate;
        j["tests"].push_back(t);
    }
    j["notes"] = notes;
    return j;
}

DistributivityReport check_distributivity(const TermPtr& context, const TermPtr& p,
                                          const TermPtr& q, const Rational& prob,
                                          const std::vector<TermPtr>& tests, int depth,
                                          const EnumOptions& opts) {
    if (!is_context(context)) throw Error("distributivity needs a one-hole context");
    if (has_bang(context)) throw Error("the distributivity theorem excludes bang contexts");
    std::vector<TermPtr> others{p, q};
    others.insert(others.end(), tests.begin(), tests.end());
    if (!check_fresh(context, others))
        throw FreshnessError("context labeling must be fresh for P, Q and the tests");

    auto used = label_atoms(others);
    for (const auto& a : label_atoms({context})) used.insert(a);
    Label l_sum(fresh_atom("l", used));
    used.insert(l_sum.atom);
    Label l_tau(fresh_atom("l0", used));
    used.insert(l_tau.atom);

    DistributivityReport rep;
    rep.r1 = psum2(l_sum, prob,
                   subst_hole(context, prefix(l_tau, Action::tau(), p)),
                   subst_hole(context, prefix(l_tau, Action::tau(), q)));
    rep.r2 = subst_hole(context, psum2(l_sum, prob, p, q));
    rep.may_equivalent = true;
    rep.must_equivalent = true;
    rep.value_sets_equal = true;
    rep.identities_hold = true;
    rep.identity_checks = 0;

    TermPtr ctau_p = subst_hole(context, prefix(l_tau, Action::tau(), p));
    TermPtr ctau_q = subst_hole(context, prefix(l_tau, Action::tau(), q));
    Rational pbar = Rational(1) - prob;

    for (const auto& test : tests) {
        if (!check_fresh(test, {rep.r1, rep.r2}))
            throw FreshnessError("test labeling not fresh for the constructed instances");

        auto v1 = side_values(rep.r1, test, depth, opts);
        auto v2 = side_values(rep.r2, test, depth, opts);

        DistributivityReport::PerTest pt;
        pt.test = test;
        pt.values1 = distinct_successes(v1);
        pt.values2 = distinct_successes(v2);
        pt.indeterminate = v1.truncated || v2.truncated;
        pt.equal = !pt.indeterminate && pt.values1 == pt.values2;
        if (pt.indeterminate) {
            rep.notes.push_back("test " + format_process(test) + ": truncated, no verdict");
            rep.value_sets_equal = false;
        } else {
            rep.value_sets_equal &= pt.equal;
            bool may_lr = pt.values1.back() <= pt.values2.back();
            bool may_rl = pt.values2.back() <= pt.values1.back();
            bool must_lr = pt.values1.front() <= pt.values2.front();
            bool must_rl = pt.values2.front() <= pt.values1.front();
            rep.may_equivalent &= may_lr && may_rl;
            rep.must_equivalent &= must_lr && must_rl;
        }

        // Appendix identity: p_omega over a probabilistic sum decomposes.
        for (const auto& s : v1.scheds) {
            if (s->kind != SchedKind::Act || !(s->move == Move::single(l_sum))) continue;
            Rational lhs = p_omega(rep.r1, s, test, depth).success;
            Rational rhs = prob * p_omega(ctau_p, s->cont, test, depth).success +
                           pbar * p_omega(ctau_q, s->cont, test, depth).success;
            ++rep.identity_checks;
            if (lhs != rhs) {
                rep.identities_hold = false;
                rep.notes.push_back("psum identity failed for scheduler " + format_scheduler(s));
            }
        }

        // Appendix identity: a prefix step against the test decomposes.
        {
            std::set<std::string> chans = channels_of(rep.r2);
            for (const auto& c : channels_of(test)) chans.insert(c);
            std::string chan = "d0";
            for (int i = 1; chans.count(chan); ++i) chan = "d" + std::to_string(i);
            auto used2 = used;
            for (const auto& a : label_atoms({test})) used2.insert(a);
            Label la(fresh_atom("lpre", used2));
            used2.insert(la.atom);
            Label lb(fresh_atom("lout", used2));
            TermPtr lhs_proc = prefix(la, Action::input(chan), rep.r2);
            TermPtr lhs_test = prefix(lb, Action::output(chan), test);
            for (const auto& s : v2.scheds) {
                SchedPtr wrapped = sched_act(Move::pair(la, lb), s);
                Rational lhs = p_omega(lhs_proc, wrapped, lhs_test, depth + 1).success;
                Rational rhs = p_omega(rep.r2, s, test, depth).success;
                ++rep.identity_checks;
                if (lhs != rhs) {
                    rep.identities_hold = false;
                    rep.notes.push_back("prefix identity failed for scheduler " +
                                        format_scheduler(s));
                }
            }
        }

        rep.per_test.push_back(std::move(pt));
    }
    return rep;
}

}  // namespace ccss
