#include "ccss/term.hpp"

#include <algorithm>

#include "ccss/diag.hpp"

namespace ccss {

std::string Action::str() const {
    switch (kind) {
        case ActKind::Input: return channel;
        case ActKind::Output: return "!" + channel;
        case ActKind::Tau: return "tau";
        case ActKind::InputBind: return channel + "(" + payload + ")";
        case ActKind::OutputVal: return "!" + channel + "<" + payload + ">";
    }
    return "?";
}

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
    return h * 1000003u ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

std::size_t str_hash(const std::string& s) { return std::hash<std::string>{}(s); }

std::size_t action_hash(const Action& a) {
    return mix(mix(static_cast<std::size_t>(a.kind), str_hash(a.channel)), str_hash(a.payload));
}

std::size_t label_hash(const Label& l) { return LabelHash{}(l); }

TermPtr finish(Term t) {
    std::size_t h = static_cast<std::size_t>(t.kind) + 0x51ed270b;
    h = mix(h, label_hash(t.label));
    h = mix(h, action_hash(t.action));
    h = mix(h, str_hash(t.channel));
    if (t.left) h = mix(h, t.left->hash);
    if (t.right) h = mix(h, t.right->hash);
    for (const auto& br : t.branches) {
        h = mix(h, rat_hash(br.weight));
        h = mix(h, br.body->hash);
    }
    t.hash = h;
    return std::make_shared<const Term>(std::move(t));
}

}  // namespace

TermPtr nil() {
    static const TermPtr n = finish(Term{});
    return n;
}

TermPtr hole() {
    Term t;
    t.kind = TermKind::Hole;
    return finish(std::move(t));
}

TermPtr prefix(Label l, Action a, TermPtr cont) {
    Term t;
    t.kind = TermKind::Prefix;
    t.label = std::move(l);
    t.action = std::move(a);
    t.left = cont ? std::move(cont) : nil();
    return finish(std::move(t));
}

TermPtr par(TermPtr a, TermPtr b) {
    Term t;
    t.kind = TermKind::Par;
    t.left = std::move(a);
    t.right = std::move(b);
    return finish(std::move(t));
}

TermPtr nsum(TermPtr a, TermPtr b) {
    Term t;
    t.kind = TermKind::NondetSum;
    t.left = std::move(a);
    t.right = std::move(b);
    return finish(std::move(t));
}

TermPtr psum(Label l, std::vector<ProbBranch> branches) {
    if (branches.empty()) throw Error("probabilistic sum needs at least one branch");
    Rational total = 0;
    for (const auto& br : branches) {
        if (br.weight <= 0 || br.weight > 1)
            throw Error("probabilistic weight " + rat_str(br.weight) + " outside (0,1]");
        total += br.weight;
    }
    if (total != 1) throw Error("probabilistic weights sum to " + rat_str(total) + ", expected 1");
    Term t;
    t.kind = TermKind::ProbSum;
    t.label = std::move(l);
    t.branches = std::move(branches);
    return finish(std::move(t));
}

TermPtr psum2(Label l, const Rational& p, TermPtr a, TermPtr b) {
    return psum(std::move(l), {{p, std::move(a)}, {Rational(1) - p, std::move(b)}});
}

TermPtr restrict_ch(std::string channel, TermPtr body) {
    if (channel == kOmegaChannel)
        throw Error("the reserved channel 'omega' cannot be restricted");
    Term t;
    t.kind = TermKind::Restrict;
    t.channel = std::move(channel);
    t.left = std::move(body);
    return finish(std::move(t));
}

TermPtr restrict_all(TermPtr body) {
    Term t;
    t.kind = TermKind::RestrictAll;
    t.left = std::move(body);
    return finish(std::move(t));
}

TermPtr bang(TermPtr body) {
    Term t;
    t.kind = TermKind::Bang;
    t.left = std::move(body);
    return finish(std::move(t));
}

TermPtr protect(Label l, TermPtr body) {
    Term t;
    t.kind = TermKind::Protect;
    t.label = std::move(l);
    t.left = std::move(body);
    return finish(std::move(t));
}

bool term_eq(const TermPtr& a, const TermPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->hash != b->hash || a->kind != b->kind) return false;
    if (a->label != b->label || a->action != b->action || a->channel != b->channel) return false;
    if (a->branches.size() != b->branches.size()) return false;
    for (std::size_t i = 0; i < a->branches.size(); ++i) {
        if (a->branches[i].weight != b->branches[i].weight) return false;
        if (!term_eq(a->branches[i].body, b->branches[i].body)) return false;
    }
    return term_eq(a->left, b->left) && term_eq(a->right, b->right);
}

namespace {

template <class F>
void walk(const TermPtr& t, F&& f) {
    if (!t) return;
    f(*t);
    if (t->left) walk(t->left, f);
    if (t->right) walk(t->right, f);
    for (const auto& br : t->branches) walk(br.body, f);
}

}  // namespace

std::set<Label> labels_of(const TermPtr& t) {
    std::set<Label> out;
    walk(t, [&](const Term& n) {
        if (n.kind == TermKind::Prefix || n.kind == TermKind::ProbSum ||
            n.kind == TermKind::Protect)
            out.insert(n.label);
    });
    return out;
}

std::multiset<Label> label_multiset(const TermPtr& t) {
    std::multiset<Label> out;
    walk(t, [&](const Term& n) {
        if (n.kind == TermKind::Prefix || n.kind == TermKind::ProbSum ||
            n.kind == TermKind::Protect)
            out.insert(n.label);
    });
    return out;
}

TermPtr relabel(const TermPtr& t, const std::string& bits) {
    if (!t) return t;
    switch (t->kind) {
        case TermKind::Nil:
        case TermKind::Hole:
            return t;
        case TermKind::Prefix:
            return prefix(t->label.with_appended(bits), t->action, relabel(t->left, bits));
        case TermKind::Par:
            return par(relabel(t->left, bits), relabel(t->right, bits));
        case TermKind::NondetSum:
            return nsum(relabel(t->left, bits), relabel(t->right, bits));
        case TermKind::ProbSum: {
            std::vector<ProbBranch> brs;
            brs.reserve(t->branches.size());
            for (const auto& br : t->branches) brs.push_back({br.weight, relabel(br.body, bits)});
            return psum(t->label.with_appended(bits), std::move(brs));
        }
        case TermKind::Restrict:
            return restrict_ch(t->channel, relabel(t->left, bits));
        case TermKind::RestrictAll:
            return restrict_all(relabel(t->left, bits));
        case TermKind::Bang:
            return bang(relabel(t->left, bits));
        case TermKind::Protect:
            return protect(t->label.with_appended(bits), relabel(t->left, bits));
    }
    return t;
}

bool check_linear(const TermPtr& t) {
    auto ms = label_multiset(t);
    for (auto it = ms.begin(); it != ms.end(); it = ms.upper_bound(*it))
        if (ms.count(*it) > 1) return false;
    return true;
}

bool check_fresh(const TermPtr& t, const std::vector<TermPtr>& others) {
    if (!check_linear(t)) return false;
    auto mine = labels_of(t);
    for (const auto& other : others) {
        for (const auto& l : labels_of(other))
            if (mine.count(l)) return false;
    }
    return true;
}

TermPtr erase_labels(const TermPtr& t) {
    if (!t) return t;
    switch (t->kind) {
        case TermKind::Nil:
        case TermKind::Hole:
            return t;
        case TermKind::Prefix:
            return prefix(Label{}, t->action, erase_labels(t->left));
        case TermKind::Par:
            return par(erase_labels(t->left), erase_labels(t->right));
        case TermKind::NondetSum:
            return nsum(erase_labels(t->left), erase_labels(t->right));
        case TermKind::ProbSum: {
            std::vector<ProbBranch> brs;
            for (const auto& br : t->branches) brs.push_back({br.weight, erase_labels(br.body)});
            return psum(Label{}, std::move(brs));
        }
        case TermKind::Restrict:
            return restrict_ch(t->channel, erase_labels(t->left));
        case TermKind::RestrictAll:
            return restrict_all(erase_labels(t->left));
        case TermKind::Bang:
            return bang(erase_labels(t->left));
        case TermKind::Protect:
            return erase_labels(t->left);
    }
    return t;
}

TermPtr rename_label_atoms(const TermPtr& t, const std::map<std::string, std::string>& ren) {
    if (!t) return t;
    auto rn = [&](const Label& l) {
        auto it = ren.find(l.atom);
        return it == ren.end() ? l : Label(it->second, l.index);
    };
    switch (t->kind) {
        case TermKind::Nil:
        case TermKind::Hole:
            return t;
        case TermKind::Prefix:
            return prefix(rn(t->label), t->action, rename_label_atoms(t->left, ren));
        case TermKind::Par:
            return par(rename_label_atoms(t->left, ren), rename_label_atoms(t->right, ren));
        case TermKind::NondetSum:
            return nsum(rename_label_atoms(t->left, ren), rename_label_atoms(t->right, ren));
        case TermKind::ProbSum: {
            std::vector<ProbBranch> brs;
            for (const auto& br : t->branches)
                brs.push_back({br.weight, rename_label_atoms(br.body, ren)});
            return psum(rn(t->label), std::move(brs));
        }
        case TermKind::Restrict:
            return restrict_ch(t->channel, rename_label_atoms(t->left, ren));
        case TermKind::RestrictAll:
            return restrict_all(rename_label_atoms(t->left, ren));
        case TermKind::Bang:
            return bang(rename_label_atoms(t->left, ren));
        case TermKind::Protect:
            return protect(rn(t->label), rename_label_atoms(t->left, ren));
    }
    return t;
}

std::size_t hole_count(const TermPtr& t) {
    std::size_t n = 0;
    walk(t, [&](const Term& node) {
        if (node.kind == TermKind::Hole) ++n;
    });
    return n;
}

TermPtr subst_hole(const TermPtr& context, const TermPtr& p) {
    if (!context) return context;
    switch (context->kind) {
        case TermKind::Hole:
            return p;
        case TermKind::Nil:
            return context;
        case TermKind::Prefix:
            return prefix(context->label, context->action, subst_hole(context->left, p));
        case TermKind::Par:
            return par(subst_hole(context->left, p), subst_hole(context->right, p));
        case TermKind::NondetSum:
            return nsum(subst_hole(context->left, p), subst_hole(context->right, p));
        case TermKind::ProbSum: {
            std::vector<ProbBranch> brs;
            for (const auto& br : context->branches)
                brs.push_back({br.weight, subst_hole(br.body, p)});
            return psum(context->label, std::move(brs));
        }
        case TermKind::Restrict:
            return restrict_ch(context->channel, subst_hole(context->left, p));
        case TermKind::RestrictAll:
            return restrict_all(subst_hole(context->left, p));
        case TermKind::Bang:
            return bang(subst_hole(context->left, p));
        case TermKind::Protect:
            return protect(context->label, subst_hole(context->left, p));
    }
    return context;
}

std::set<std::string> channels_of(const TermPtr& t) {
    std::set<std::string> out;
    walk(t, [&](const Term& n) {
        if (n.kind == TermKind::Prefix && !n.action.is_tau()) out.insert(n.action.channel);
        if (n.kind == TermKind::Restrict) out.insert(n.channel);
    });
    return out;
}

bool has_protect(const TermPtr& t) {
    bool found = false;
    walk(t, [&](const Term& n) { found |= n.kind == TermKind::Protect; });
    return found;
}

bool has_bang(const TermPtr& t) {
    bool found = false;
    walk(t, [&](const Term& n) { found |= n.kind == TermKind::Bang; });
    return found;
}

bool has_sugar(const TermPtr& t) {
    bool found = false;
    walk(t, [&](const Term& n) { found |= n.kind == TermKind::Prefix && n.action.is_sugar(); });
    return found;
}

std::size_t term_size(const TermPtr& t) {
    std::size_t n = 0;
    walk(t, [&](const Term&) { ++n; });
    return n;
}

// ---------------------------------------------------------------------------
// Value passing

namespace {

struct Desugarer {
    std::map<std::string, const ValueSpec*> specs;

    const ValueSpec* spec_for(const std::string& channel) const {
        auto it = specs.find(channel);
        return it == specs.end() ? nullptr : it->second;
    }

    // env maps bound variables to concrete values.
    TermPtr run(const TermPtr& t, std::map<std::string, std::string> env) const {
        if (!t) return t;
        switch (t->kind) {
            case TermKind::Nil:
            case TermKind::Hole:
                return t;
            case TermKind::Prefix:
                return prefix_case(t, std::move(env));
            case TermKind::Par:
                return par(run(t->left, env), run(t->right, env));
            case TermKind::NondetSum:
                return nsum(run(t->left, env), run(t->right, env));
            case TermKind::ProbSum: {
                std::vector<ProbBranch> brs;
                for (const auto& br : t->branches) brs.push_back({br.weight, run(br.body, env)});
                return psum(t->label, std::move(brs));
            }
            case TermKind::Restrict: {
                if (const ValueSpec* vs = spec_for(t->channel)) {
                    TermPtr body = run(t->left, std::move(env));
                    for (auto it = vs->domain.rbegin(); it != vs->domain.rend(); ++it)
                        body = restrict_ch(fused_name(vs->channel, *it), body);
                    return body;
                }
                return restrict_ch(t->channel, run(t->left, std::move(env)));
            }
            case TermKind::RestrictAll:
                return restrict_all(run(t->left, std::move(env)));
            case TermKind::Bang:
                return bang(run(t->left, std::move(env)));
            case TermKind::Protect:
                return protect(t->label, run(t->left, std::move(env)));
        }
        return t;
    }

    TermPtr prefix_case(const TermPtr& t, std::map<std::string, std::string> env) const {
        const Action& a = t->action;
        switch (a.kind) {
            case ActKind::Tau:
                return prefix(t->label, a, run(t->left, std::move(env)));
            case ActKind::Input:
            case ActKind::Output:
                if (spec_for(a.channel))
                    throw DesugarError("channel '" + a.channel +
                                       "' carries a value domain; use " + a.channel +
                                       "(x) / !" + a.channel + "<v>");
                return prefix(t->label, a, run(t->left, std::move(env)));
            case ActKind::InputBind: {
                const ValueSpec* vs = spec_for(a.channel);
                if (!vs) throw DesugarError("no value domain declared for channel '" + a.channel + "'");
                TermPtr out;
                for (const auto& v : vs->domain) {
                    auto env2 = env;
                    env2[a.payload] = v;  // inner binders shadow outer ones
                    TermPtr branch = prefix(t->label, Action::input(fused_name(a.channel, v)),
                                            run(t->left, std::move(env2)));
                    out = out ? nsum(out, branch) : branch;
                }
                return out;
            }
            case ActKind::OutputVal: {
                const ValueSpec* vs = spec_for(a.channel);
                if (!vs) throw DesugarError("no value domain declared for channel '" + a.channel + "'");
                std::string value = a.payload;
                if (auto it = env.find(value); it != env.end()) value = it->second;
                if (std::find(vs->domain.begin(), vs->domain.end(), value) == vs->domain.end())
                    throw DesugarError("value '" + value + "' outside domain of channel '" +
                                       a.channel + "'");
                return prefix(t->label, Action::output(fused_name(a.channel, value)),
                              run(t->left, std::move(env)));
            }
        }
        return t;
    }
};

}  // namespace

TermPtr desugar_value_passing(const TermPtr& t, const std::vector<ValueSpec>& specs) {
    Desugarer d;
    for (const auto& vs : specs) {
        if (vs.domain.empty()) throw DesugarError("empty value domain for channel '" + vs.channel + "'");
        std::set<std::string> seen(vs.domain.begin(), vs.domain.end());
        if (seen.size() != vs.domain.size())
            throw DesugarError("duplicate values in domain of channel '" + vs.channel + "'");
        if (d.specs.count(vs.channel))
            throw DesugarError("duplicate value domain for channel '" + vs.channel + "'");
        d.specs.emplace(vs.channel, &vs);
    }
    return d.run(t, {});
}

}  // namespace ccss
