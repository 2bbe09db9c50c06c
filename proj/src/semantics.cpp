#include "ccss/semantics.hpp"

#include <algorithm>

#include "ccss/diag.hpp"
#include "ccss/parser.hpp"

namespace ccss {

namespace {

[[noreturn]] void sugar_error() {
    throw Error("value-passing sugar must be desugared before stepping");
}

bool blocked_by(const Action& a, const std::string& channel) {
    return !a.is_tau() && a.channel == channel;
}

bool blocked_by_restrict_all(const Action& a) {
    return !a.is_tau() && a.channel != kOmegaChannel;
}

}  // namespace

// ---------------------------------------------------------------------------
// CCS_p semantics (Figure-1 style rules, labels ignored)

std::vector<CcspTransition> ccsp_step(const TermPtr& p) {
    std::vector<CcspTransition> out;
    auto push = [&](Action a, TermDist d) {
        for (const auto& t : out)
            if (t.action == a && t.target == d) return;  // set semantics
        out.push_back({std::move(a), std::move(d)});
    };

    switch (p->kind) {
        case TermKind::Nil:
        case TermKind::Hole:
            break;
        case TermKind::Prefix:
            if (p->action.is_sugar()) sugar_error();
            push(p->action, TermDist::dirac(p->left));
            break;
        case TermKind::ProbSum: {
            TermDist d;
            for (const auto& br : p->branches) d.add(br.body, br.weight);
            push(Action::tau(), std::move(d));
            break;
        }
        case TermKind::Protect:
            return ccsp_step(p->left);
        case TermKind::NondetSum: {
            for (auto& t : ccsp_step(p->left)) push(t.action, t.target);
            for (auto& t : ccsp_step(p->right)) push(t.action, t.target);
            break;
        }
        case TermKind::Par: {
            auto ls = ccsp_step(p->left);
            auto rs = ccsp_step(p->right);
            for (const auto& t : ls)
                push(t.action, t.target.map([&](const TermPtr& x) { return par(x, p->right); }));
            for (const auto& t : rs)
                push(t.action, t.target.map([&](const TermPtr& x) { return par(p->left, x); }));
            for (const auto& li : ls) {
                for (const auto& ri : rs) {
                    const CcspTransition* in = nullptr;
                    const CcspTransition* outp = nullptr;
                    if (li.action.is_input() && ri.action.is_output()) { in = &li; outp = &ri; }
                    else if (li.action.is_output() && ri.action.is_input()) { in = &ri; outp = &li; }
                    else continue;
                    if (in->action.channel != outp->action.channel) continue;
                    if (li.target.size() != 1 || ri.target.size() != 1)
                        throw Error("internal: COM premise is not Dirac");
                    push(Action::tau(),
                         TermDist::dirac(par(li.target.entries()[0].first,
                                             ri.target.entries()[0].first)));
                }
            }
            break;
        }
        case TermKind::Restrict: {
            for (auto& t : ccsp_step(p->left)) {
                if (blocked_by(t.action, p->channel)) continue;
                push(t.action,
                     t.target.map([&](const TermPtr& x) { return restrict_ch(p->channel, x); }));
            }
            break;
        }
        case TermKind::RestrictAll: {
            for (auto& t : ccsp_step(p->left)) {
                if (blocked_by_restrict_all(t.action)) continue;
                push(t.action, t.target.map([&](const TermPtr& x) { return restrict_all(x); }));
            }
            break;
        }
        case TermKind::Bang: {
            auto ts = ccsp_step(p->left);
            for (const auto& t : ts)
                push(t.action, t.target.map([&](const TermPtr& x) { return par(x, p); }));
            for (const auto& ti : ts) {
                for (const auto& to : ts) {
                    if (!(ti.action.is_input() && to.action.is_output())) continue;
                    if (ti.action.channel != to.action.channel) continue;
                    if (ti.target.size() != 1 || to.target.size() != 1)
                        throw Error("internal: BANG2 premise is not Dirac");
                    push(Action::tau(),
                         TermDist::dirac(par(ti.target.entries()[0].first,
                                             par(to.target.entries()[0].first, p))));
                }
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heads and candidate moves

namespace {

void collect_heads(const TermPtr& p, std::vector<Head>& out) {
    switch (p->kind) {
        case TermKind::Nil:
        case TermKind::Hole:
            return;
        case TermKind::Prefix:
            if (p->action.is_sugar()) sugar_error();
            out.push_back({p->label, p->action, false, false});
            return;
        case TermKind::ProbSum:
            out.push_back({p->label, Action::tau(), true, false});
            return;
        case TermKind::Protect:
            out.push_back({p->label, Action::tau(), false, true});
            return;
        case TermKind::Par:
        case TermKind::NondetSum:
            collect_heads(p->left, out);
            collect_heads(p->right, out);
            return;
        case TermKind::Restrict:
        case TermKind::RestrictAll:
        case TermKind::Bang:
            collect_heads(p->left, out);
            return;
    }
}

}  // namespace

std::vector<Head> heads_of(const TermPtr& p) {
    std::vector<Head> out;
    collect_heads(p, out);
    return out;
}

std::vector<Move> candidate_moves(const TermPtr& p) {
    auto heads = heads_of(p);
    std::vector<Move> out;
    auto push = [&](Move m) {
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(std::move(m));
    };
    for (const auto& h : heads) push(Move::single(h.label));
    for (const auto& hi : heads) {
        if (!hi.action.is_input()) continue;
        for (const auto& ho : heads) {
            if (!ho.action.is_output()) continue;
            if (hi.action.channel != ho.action.channel) continue;
            push(Move::pair(hi.label, ho.label));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Derivations

namespace {

enum class QuantifyMode { Off, On };

std::vector<Derivation> derive_impl(const TermPtr& p, const Move& m, const SchedPtr& indep,
                                    ProtectPolicy policy, QuantifyMode quantify);

// INDEP: resolve the protected body through the given T candidate list.
std::vector<Derivation> derive_protect(const TermPtr& p, const SchedPtr& indep,
                                       ProtectPolicy policy, QuantifyMode quantify) {
    if (quantify == QuantifyMode::On) {
        // Existence check: is the body movable under some independent scheduler?
        for (const Move& im : candidate_moves(p->left)) {
            auto inner = derive_impl(p->left, im, nullptr, ProtectPolicy::Skip, QuantifyMode::On);
            if (!inner.empty()) {
                Derivation d = inner.front();
                d.trace = "INDEP?[" + im.str() + ">" + d.trace + "]";
                return {d};
            }
        }
        return {};
    }
    if (!indep)
        throw Error("protected block " + p->label.str() +
                    ":{...} needs an independent scheduler (nested protection is not supported)");
    for (const auto& [tmove, tcont] : sched_candidates(indep)) {
        auto inner = derive_impl(p->left, tmove, nullptr, policy, quantify);
        if (inner.empty()) continue;
        std::vector<Derivation> out;
        for (auto& d : inner) {
            DerivDist retargeted;
            for (const auto& [target, prob] : d.targets.entries())
                retargeted.add({target.process, tcont}, prob);
            out.push_back({d.action, std::move(retargeted),
                           "INDEP[" + tmove.str() + ">" + d.trace + "]"});
        }
        return out;  // TEST inside T: only the first firing summand counts
    }
    return {};
}

std::vector<Derivation> lift_all(std::vector<Derivation> ds, const std::string& rule,
                                 const std::function<TermPtr(const TermPtr&)>& f) {
    std::vector<Derivation> out;
    out.reserve(ds.size());
    for (auto& d : ds) {
        DerivDist lifted;
        for (const auto& [target, prob] : d.targets.entries())
            lifted.add({f(target.process), target.indep}, prob);
        out.push_back({d.action, std::move(lifted), rule + ">" + d.trace});
    }
    return out;
}

// Combines the T components of two premises; at most one may consume T.
SchedPtr combine_indep(const SchedPtr& base, const SchedPtr& a, const SchedPtr& b) {
    bool a_changed = a.get() != base.get();
    bool b_changed = b.get() != base.get();
    if (a_changed && b_changed)
        throw Error("both synchronization premises consumed the independent scheduler");
    return a_changed ? a : (b_changed ? b : base);
}

struct DiracPremise {
    Action action;
    TermPtr process;
    SchedPtr indep;
    std::string trace;
};

std::vector<DiracPremise> premises(const TermPtr& p, const Label& l, bool want_input,
                                   const SchedPtr& indep, ProtectPolicy policy,
                                   QuantifyMode quantify) {
    std::vector<DiracPremise> out;
    for (auto& d : derive_impl(p, Move::single(l), indep, policy, quantify)) {
        if (want_input ? !d.action.is_input() : !d.action.is_output()) continue;
        if (d.targets.size() != 1 || d.targets.entries()[0].second != 1)
            throw Error("internal: synchronization premise is not Dirac");
        out.push_back({d.action, d.targets.entries()[0].first.process,
                       d.targets.entries()[0].first.indep, d.trace});
    }
    return out;
}

std::vector<Derivation> derive_impl(const TermPtr& p, const Move& m, const SchedPtr& indep,
                                    ProtectPolicy policy, QuantifyMode quantify) {
    std::vector<Derivation> out;
    switch (p->kind) {
        case TermKind::Nil:
        case TermKind::Hole:
            break;

        case TermKind::Prefix: {
            if (p->action.is_sugar()) sugar_error();
            if (m.kind == Move::Kind::Single && p->label == m.first)
                out.push_back({p->action, DerivDist::dirac({p->left, indep}),
                               "ACT(" + p->label.str() + ":" + p->action.str() + ")"});
            break;
        }

        case TermKind::ProbSum: {
            if (m.kind == Move::Kind::Single && p->label == m.first) {
                DerivDist d;
                for (const auto& br : p->branches) d.add({br.body, indep}, br.weight);
                out.push_back({Action::tau(), std::move(d), "PROB(" + p->label.str() + ")"});
            }
            break;
        }

        case TermKind::Protect: {
            if (m.kind == Move::Kind::Single && p->label == m.first) {
                if (policy == ProtectPolicy::Skip) break;
                return derive_protect(p, indep, policy, quantify);
            }
            break;
        }

        case TermKind::NondetSum: {
            for (auto& d : derive_impl(p->left, m, indep, policy, quantify))
                out.push_back({d.action, std::move(d.targets), "SUM1>" + d.trace});
            for (auto& d : derive_impl(p->right, m, indep, policy, quantify))
                out.push_back({d.action, std::move(d.targets), "SUM2>" + d.trace});
            break;
        }

        case TermKind::Par: {
            auto l1 = lift_all(derive_impl(p->left, m, indep, policy, quantify), "PAR1",
                               [&](const TermPtr& x) { return par(x, p->right); });
            auto l2 = lift_all(derive_impl(p->right, m, indep, policy, quantify), "PAR2",
                               [&](const TermPtr& x) { return par(p->left, x); });
            out.insert(out.end(), l1.begin(), l1.end());
            out.insert(out.end(), l2.begin(), l2.end());
            if (m.kind == Move::Kind::Pair) {
                // COM: first label justifies the input premise, second the output;
                // both operand orders are tried.
                for (int input_on_left = 1; input_on_left >= 0; --input_on_left) {
                    const TermPtr& pin = input_on_left ? p->left : p->right;
                    const TermPtr& pout = input_on_left ? p->right : p->left;
                    for (const auto& di : premises(pin, m.first, true, indep, policy, quantify)) {
                        for (const auto& du : premises(pout, m.second, false, indep, policy, quantify)) {
                            if (di.action.channel != du.action.channel) continue;
                            SchedPtr t2 = combine_indep(indep, di.indep, du.indep);
                            TermPtr next = input_on_left ? par(di.process, du.process)
                                                         : par(du.process, di.process);
                            out.push_back({Action::tau(), DerivDist::dirac({next, t2}),
                                           "COM[in:" + di.trace + "; out:" + du.trace + "]"});
                        }
                    }
                }
            }
            break;
        }

        case TermKind::Restrict: {
            for (auto& d : derive_impl(p->left, m, indep, policy, quantify)) {
                if (blocked_by(d.action, p->channel)) continue;
                DerivDist lifted;
                for (const auto& [target, prob] : d.targets.entries())
                    lifted.add({restrict_ch(p->channel, target.process), target.indep}, prob);
                out.push_back({d.action, std::move(lifted), "RES(" + p->channel + ")>" + d.trace});
            }
            break;
        }

        case TermKind::RestrictAll: {
            for (auto& d : derive_impl(p->left, m, indep, policy, quantify)) {
                if (blocked_by_restrict_all(d.action)) continue;
                DerivDist lifted;
                for (const auto& [target, prob] : d.targets.entries())
                    lifted.add({restrict_all(target.process), target.indep}, prob);
                out.push_back({d.action, std::move(lifted), "RES(*)>" + d.trace});
            }
            break;
        }

        case TermKind::Bang: {
            TermPtr replica = bang(relabel(p->left, "1"));
            auto l1 = lift_all(derive_impl(p->left, m, indep, policy, quantify), "BANG1",
                               [&](const TermPtr& x) { return par(relabel(x, "0"), replica); });
            out.insert(out.end(), l1.begin(), l1.end());
            if (m.kind == Move::Kind::Pair) {
                TermPtr replica2 = bang(relabel(p->left, "11"));
                for (const auto& di : premises(p->left, m.first, true, indep, policy, quantify)) {
                    for (const auto& du : premises(p->left, m.second, false, indep, policy, quantify)) {
                        if (di.action.channel != du.action.channel) continue;
                        SchedPtr t2 = combine_indep(indep, di.indep, du.indep);
                        TermPtr next = par(relabel(di.process, "0"),
                                           par(relabel(du.process, "10"), replica2));
                        out.push_back({Action::tau(), DerivDist::dirac({next, t2}),
                                       "BANG2[in:" + di.trace + "; out:" + du.trace + "]"});
                    }
                }
            }
            break;
        }
    }
    return out;
}

}  // namespace

std::vector<Derivation> derive(const TermPtr& p, const Move& m, const SchedPtr& indep,
                               ProtectPolicy policy) {
    return derive_impl(p, m, indep, policy, QuantifyMode::Off);
}

std::vector<Derivation> derive_delegate(const TermPtr& p, const Label& outer, const Move& inner) {
    // sigma(outer) with T committed to `inner`: equivalent to stepping with
    // T = sigma(inner).0 and keeping only the INDEP-rooted derivations.
    SchedPtr t = sched_act(inner, sched_nil());
    std::vector<Derivation> out;
    for (auto& d : derive_impl(p, Move::single(outer), t, ProtectPolicy::UseIndep,
                               QuantifyMode::Off)) {
        if (d.trace.find("INDEP[") != std::string::npos) out.push_back(std::move(d));
    }
    return out;
}

std::vector<TermPtr> protect_bodies(const TermPtr& p, const Label& l) {
    std::vector<TermPtr> out;
    switch (p->kind) {
        case TermKind::Protect:
            if (p->label == l) out.push_back(p->left);
            break;
        case TermKind::Par:
        case TermKind::NondetSum: {
            auto a = protect_bodies(p->left, l);
            auto b = protect_bodies(p->right, l);
            out.insert(out.end(), a.begin(), a.end());
            out.insert(out.end(), b.begin(), b.end());
            break;
        }
        case TermKind::Restrict:
        case TermKind::RestrictAll:
        case TermKind::Bang:
            return protect_bodies(p->left, l);
        default:
            break;
    }
    return out;
}

std::vector<Move> enabled_moves(const TermPtr& p) {
    std::vector<Move> out;
    for (const Move& m : candidate_moves(p)) {
        if (!derive_impl(p, m, nullptr, ProtectPolicy::UseIndep, QuantifyMode::On).empty())
            out.push_back(m);
    }
    return out;
}

bool process_can_move(const TermPtr& p) {
    for (const Move& m : candidate_moves(p))
        if (!derive_impl(p, m, nullptr, ProtectPolicy::UseIndep, QuantifyMode::On).empty())
            return true;
    return false;
}

// ---------------------------------------------------------------------------
// Complete-process stepping

std::string CompleteState::str() const {
    std::string s = format_process(process) + " || " + format_scheduler(sched);
    if (indep) s += ", " + format_scheduler(indep);
    return s;
}

StepResult step(const CompleteState& cs) {
    for (const auto& [move, cont] : sched_candidates(cs.sched)) {
        auto derivs = derive(cs.process, move, cs.indep, ProtectPolicy::UseIndep);
        if (derivs.empty()) continue;
        if (derivs.size() > 1)
            throw AmbiguityError(cs.str(), move.str(), derivs[0].trace, derivs[1].trace);
        StateDist dist;
        for (const auto& [target, prob] : derivs[0].targets.entries())
            dist.add({target.process, cont, target.indep}, prob);
        return {StepResult::Kind::Step, derivs[0].action, std::move(dist)};
    }
    return {process_can_move(cs.process) ? StepResult::Kind::StuckScheduler
                                         : StepResult::Kind::StuckProcess,
            Action::tau(), {}};
}

// ---------------------------------------------------------------------------
// Measure lifting

TermDist lift_par_with(const TermDist& mu, const TermPtr& q) {
    return mu.map([&](const TermPtr& x) { return par(x, q); });
}

TermDist lift_restrict(const TermDist& mu, const std::string& channel) {
    return mu.map([&](const TermPtr& x) { return restrict_ch(channel, x); });
}

TermDist lift_relabel(const TermDist& mu, const std::string& bits) {
    return mu.map([&](const TermPtr& x) { return relabel(x, bits); });
}

StateDist lift_pair_with_scheduler(const TermDist& mu, const SchedPtr& s) {
    StateDist out;
    for (const auto& [x, p] : mu.entries()) out.add({x, s, nullptr}, p);
    return out;
}

}  // namespace ccss
