#include "ccss/anonymity.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "ccss/diag.hpp"
#include "ccss/parser.hpp"

namespace ccss {

// ---------------------------------------------------------------------------
// Builders (Figure-5 shape, ring size parametric)

namespace {

std::string idx(const std::string& base, int i) { return base + std::to_string(i); }

TermPtr par_all(const std::vector<TermPtr>& ts) {
    TermPtr out;
    for (const auto& t : ts) out = out ? par(out, t) : t;
    return out ? out : nil();
}

TermPtr nsum_all(const std::vector<TermPtr>& ts) {
    TermPtr out;
    for (const auto& t : ts) out = out ? nsum(out, t) : t;
    return out ? out : nil();
}

// c_{i,j}: the channel on which cryptographer i reads coin j.
std::string coin_chan(int i, int j) { return "c" + std::to_string(i) + std::to_string(j); }

}  // namespace

DcpModel build_dcp(const DcpConfig& cfg) {
    int n = cfg.parties;
    if (n < 3) throw Error("the dining-cryptographers ring needs at least 3 parties");
    if (static_cast<int>(cfg.master_weights.size()) != n)
        throw Error("master weights must have one entry per party");
    Rational total = 0;
    for (const auto& w : cfg.master_weights) {
        if (w <= 0) throw Error("master weights must be positive");
        total += w;
    }
    if (total != 1) throw Error("master weights must sum to 1");
    if (cfg.coin_bias <= 0 || cfg.coin_bias >= 1) throw Error("coin bias must lie in (0,1)");

    auto bit = [](int v) { return std::to_string(v); };

    // Master branch i: announce the payer via m_j<j==i>, all three in parallel.
    // With sabotage on, the output labels differ per branch (the leak).
    auto master_branch = [&](int i) {
        std::vector<TermPtr> outs;
        for (int j = 0; j < n; ++j) {
            std::string atom = "l" + std::to_string(2 + j);
            if (cfg.sabotage) atom += "b" + std::to_string(i);
            outs.push_back(prefix(Label(atom), Action::output(fused_name(idx("m", j), bit(j == i))),
                                  nil()));
        }
        return par_all(outs);
    };

    TermPtr master;
    std::vector<Label> culprit_taus;
    if (cfg.nondeterministic) {
        std::vector<TermPtr> summands;
        for (int i = 0; i < n; ++i) {
            Label lt(idx("l12_", i));
            culprit_taus.push_back(lt);
            summands.push_back(prefix(lt, Action::tau(), master_branch(i)));
        }
        master = protect(Label("l1"), nsum_all(summands));
    } else {
        std::vector<ProbBranch> branches;
        for (int i = 0; i < n; ++i) branches.push_back({cfg.master_weights[i], master_branch(i)});
        master = psum(Label("l1"), std::move(branches));
    }

    // Crypt_i reads its payer bit and two adjacent coins, then announces the xor.
    auto crypt = [&](int i) {
        std::vector<TermPtr> pay_branches;
        for (int pay = 0; pay <= 1; ++pay) {
            std::vector<TermPtr> first_reads;
            for (int x1 = 0; x1 <= 1; ++x1) {
                std::vector<TermPtr> second_reads;
                for (int x2 = 0; x2 <= 1; ++x2) {
                    TermPtr announce =
                        prefix(Label(idx("l8_", i)),
                               Action::output(fused_name(idx("out", i), bit(pay ^ x1 ^ x2))),
                               nil());
                    second_reads.push_back(
                        prefix(Label(idx("l7_", i)),
                               Action::input(fused_name(coin_chan(i, (i + 1) % n), bit(x2))),
                               announce));
                }
                first_reads.push_back(prefix(Label(idx("l6_", i)),
                                             Action::input(fused_name(coin_chan(i, i), bit(x1))),
                                             nsum_all(second_reads)));
            }
            pay_branches.push_back(prefix(Label(idx("l5_", i)),
                                          Action::input(fused_name(idx("m", i), bit(pay))),
                                          nsum_all(first_reads)));
        }
        return nsum_all(pay_branches);
    };

    // Coin_i feeds cryptographers i and i-1; both outputs carry the same face.
    auto coin = [&](int i) {
        auto face = [&](int v) {
            return par(prefix(Label(idx("l10_", i)),
                              Action::output(fused_name(coin_chan(i, i), bit(v))), nil()),
                       prefix(Label(idx("l11_", i)),
                              Action::output(fused_name(coin_chan((i + n - 1) % n, i), bit(v))),
                              nil()));
        };
        return psum2(Label(idx("l9_", i)), cfg.coin_bias, face(0), face(1));
    };

    std::vector<TermPtr> crypts, coins;
    for (int i = 0; i < n; ++i) crypts.push_back(crypt(i));
    for (int i = 0; i < n; ++i) coins.push_back(coin(i));

    TermPtr inner = par(par_all(crypts), par_all(coins));
    for (int i = n - 1; i >= 0; --i)
        for (int v = 1; v >= 0; --v)
            inner = restrict_ch(fused_name(coin_chan(i, (i + 1) % n), bit(v)),
                                restrict_ch(fused_name(coin_chan(i, i), bit(v)), inner));

    TermPtr prot = par(master, inner);
    for (int i = n - 1; i >= 0; --i)
        for (int v = 1; v >= 0; --v)
            prot = restrict_ch(fused_name(idx("m", i), bit(v)), prot);

    DcpModel model;
    model.protocol = prot;
    model.config = cfg;
    model.master_label = Label("l1");
    for (int i = 0; i < n; ++i) model.out_channels.push_back(idx("out", i));
    return model;
}

DcpModel build_dcp_nondet(bool sabotage) {
    DcpConfig cfg;
    cfg.nondeterministic = true;
    cfg.sabotage = sabotage;
    return build_dcp(cfg);
}

// ---------------------------------------------------------------------------
// Conditioning

TermPtr condition_choice(const TermPtr& t, const Label& master, std::size_t index) {
    if (!t) return t;
    switch (t->kind) {
        case TermKind::ProbSum:
            if (t->label == master) {
                if (index >= t->branches.size()) throw Error("condition index out of range");
                return psum(t->label, {{Rational(1), t->branches[index].body}});
            }
            break;
        case TermKind::Protect:
            if (t->label == master) {
                // flatten the protected sum and keep the chosen tau summand
                std::vector<TermPtr> summands;
                std::function<void(const TermPtr&)> flatten = [&](const TermPtr& s) {
                    if (s->kind == TermKind::NondetSum) {
                        flatten(s->left);
                        flatten(s->right);
                    } else {
                        summands.push_back(s);
                    }
                };
                flatten(t->left);
                if (index >= summands.size()) throw Error("condition index out of range");
                const TermPtr& chosen = summands[index];
                if (chosen->kind != TermKind::Prefix || !chosen->action.is_tau())
                    throw Error("protected master branches must be tau-guarded");
                return prefix(t->label, Action::tau(), chosen->left);
            }
            break;
        default:
            break;
    }
    // structural recursion
    switch (t->kind) {
        case TermKind::Prefix:
            return prefix(t->label, t->action, condition_choice(t->left, master, index));
        case TermKind::Par:
            return par(condition_choice(t->left, master, index),
                       condition_choice(t->right, master, index));
        case TermKind::NondetSum:
            return nsum(condition_choice(t->left, master, index),
                        condition_choice(t->right, master, index));
        case TermKind::ProbSum: {
            std::vector<ProbBranch> brs;
            for (const auto& br : t->branches)
                brs.push_back({br.weight, condition_choice(br.body, master, index)});
            return psum(t->label, std::move(brs));
        }
        case TermKind::Restrict:
            return restrict_ch(t->channel, condition_choice(t->left, master, index));
        case TermKind::RestrictAll:
            return restrict_all(condition_choice(t->left, master, index));
        case TermKind::Bang:
            return bang(condition_choice(t->left, master, index));
        case TermKind::Protect:
            return protect(t->label, condition_choice(t->left, master, index));
        default:
            return t;
    }
}

TermPtr conditioned_protocol(const DcpModel& model, int culprit) {
    return condition_choice(model.protocol, model.master_label, culprit);
}

TermPtr rename_channels(const TermPtr& t, const std::function<std::string(std::string)>& rename) {
    if (!t) return t;
    switch (t->kind) {
        case TermKind::Nil:
        case TermKind::Hole:
            return t;
        case TermKind::Prefix: {
            Action a = t->action;
            if (!a.is_tau()) a.channel = rename(a.channel);
            return prefix(t->label, a, rename_channels(t->left, rename));
        }
        case TermKind::Par:
            return par(rename_channels(t->left, rename), rename_channels(t->right, rename));
        case TermKind::NondetSum:
            return nsum(rename_channels(t->left, rename), rename_channels(t->right, rename));
        case TermKind::ProbSum: {
            std::vector<ProbBranch> brs;
            for (const auto& br : t->branches)
                brs.push_back({br.weight, rename_channels(br.body, rename)});
            return psum(t->label, std::move(brs));
        }
        case TermKind::Restrict:
            return restrict_ch(rename(t->channel), rename_channels(t->left, rename));
        case TermKind::RestrictAll:
            return restrict_all(rename_channels(t->left, rename));
        case TermKind::Bang:
            return bang(rename_channels(t->left, rename));
        case TermKind::Protect:
            return protect(t->label, rename_channels(t->left, rename));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Observables

std::string observable_str(const Observable& o) {
    if (o.empty()) return "<empty>";
    std::string s;
    for (const auto& a : o) {
        if (!s.empty()) s += " ";
        s += a.str();
    }
    return s;
}

namespace {

struct ObsEngine {
    int max_depth;
    std::size_t cap;
    std::unordered_map<std::string, ObservableDist> memo;  // state key -> suffix dist

    ObservableDist run(const CompleteState& cs, int depth) {
        std::string key = cs.str();
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        if (memo.size() >= cap) throw StateCapError(cap);

        ObservableDist out;
        auto r = step(cs);
        if (!r.stepped()) {
            out[{}] = 1;
        } else if (depth == 0) {
            throw Error("observable exploration truncated; raise the depth bound");
        } else {
            bool visible = !r.action.is_tau();
            for (const auto& [next, p] : r.dist.entries()) {
                for (const auto& [suffix, q] : run(next, depth - 1)) {
                    Observable o = suffix;
                    if (visible) o.insert(o.begin(), r.action);
                    out[o] += p * q;
                }
            }
        }
        memo.emplace(std::move(key), out);
        return out;
    }
};

}  // namespace

ObservableDist observable_dist(const TermPtr& process, const SchedPtr& s, int depth,
                               std::size_t cap) {
    ObsEngine engine{depth, cap, {}};
    return engine.run({process, s, nullptr}, depth);
}

ObservableDist conditional_observable_dist(const DcpModel& model, const SchedPtr& s, int culprit,
                                           int depth) {
    if (culprit < 0 || culprit >= model.config.parties)
        throw Error("condition index out of range");
    return observable_dist(conditioned_protocol(model, culprit), s, depth);
}

std::vector<std::pair<int, int>> dcp_announcements(const DcpModel& model, const Observable& o) {
    std::vector<std::pair<int, int>> out;
    for (const auto& a : o) {
        for (std::size_t i = 0; i < model.out_channels.size(); ++i) {
            const std::string& base = model.out_channels[i];
            if (a.channel.rfind(base + "%", 0) == 0) {
                out.push_back({static_cast<int>(i), std::stoi(a.channel.substr(base.size() + 1))});
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lockstep configurations

namespace {

using Config = TermDist;  // one variant's conditional state distribution, mass 1

std::string config_key(const Config& c) {
    std::vector<std::string> parts;
    for (const auto& [t, p] : c.entries()) parts.push_back(format_process(t) + "@" + rat_str(p));
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (auto& s : parts) out += s + "\xc2\xb6";
    return out;
}

// Enabled moves, required to be identical for every state in the support.
std::vector<Move> common_enabled(const Config& c) {
    std::vector<Move> moves;
    bool have = false;
    for (const auto& [t, p] : c.entries()) {
        auto en = enabled_moves(t);
        std::sort(en.begin(), en.end());
        if (!have) {
            moves = en;
            have = true;
        } else if (moves != en) {
            throw Error("states in one conditional branch enable different moves; "
                        "this protocol shape is outside the lockstep checker");
        }
    }
    return moves;
}

struct Split {
    std::map<Action, Config> by_action;  // masses not renormalized
};

Split step_config(const Config& c, const Move& m) {
    Split out;
    for (const auto& [t, mass] : c.entries()) {
        auto ds = derive(t, m, nullptr, ProtectPolicy::Skip);
        if (ds.empty()) throw Error("internal: move not enabled in configuration");
        if (ds.size() > 1)
            throw AmbiguityError(format_process(t), m.str(), ds[0].trace, ds[1].trace);
        for (const auto& [target, p] : ds[0].targets.entries())
            out.by_action[ds[0].action.is_tau() ? Action::tau() : ds[0].action].add(
                target.process, mass * p);
    }
    return out;
}

Config normalize(const Config& c, const Rational& total) {
    Config out;
    for (const auto& [t, p] : c.entries()) out.add(t, p / total);
    return out;
}

Config merge_all(const Split& split) {
    Config out;
    for (const auto& [a, cfg] : split.by_action)
        for (const auto& [t, p] : cfg.entries()) out.add(t, p);
    return out;
}

// Deterministic completion policy: exhaust internal moves first (rotated by
// tau_rotate), then visible ones (rotated by visible_rotate).
struct Policy {
    std::size_t tau_rotate = 0;
    std::size_t visible_rotate = 0;
};

bool move_is_visible(const Config& c, const Move& m) {
    const auto& [t, p] = c.entries().front();
    auto ds = derive(t, m, nullptr, ProtectPolicy::Skip);
    if (ds.empty()) throw Error("internal: move not enabled while probing visibility");
    return !ds[0].action.is_tau();
}

std::vector<Move> completion_chain(Config c, const Policy& policy, int max_steps) {
    std::vector<Move> moves;
    for (int i = 0; i < max_steps; ++i) {
        auto enabled = common_enabled(c);
        if (enabled.empty()) return moves;
        std::vector<Move> taus, visibles;
        for (const auto& m : enabled)
            (move_is_visible(c, m) ? visibles : taus).push_back(m);
        Move pick = !taus.empty() ? taus[policy.tau_rotate % taus.size()]
                                  : visibles[policy.visible_rotate % visibles.size()];
        moves.push_back(pick);
        c = normalize(merge_all(step_config(c, pick)), Rational(1));
    }
    throw Error("completion did not terminate within the step bound");
}

SchedPtr chain_then(const std::vector<Move>& prefix_moves, SchedPtr tail) {
    SchedPtr s = std::move(tail);
    for (auto it = prefix_moves.rbegin(); it != prefix_moves.rend(); ++it)
        s = sched_act(*it, s);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// compare_observables

namespace {

struct CompareCore {
    int depth;
    std::size_t cap;
    std::unordered_set<std::string> verified;

    struct Violation {
        enum class Kind { Mass, Decouple } kind;
        std::vector<Move> path;
        std::vector<Config> configs;
    };
    std::optional<Violation> violation;

    std::string joint_key(const std::vector<Config>& cfgs) {
        std::string k;
        for (const auto& c : cfgs) k += config_key(c) + "\xc2\xa7";
        return k;
    }

    // Returns false when a violation was recorded.
    bool verify(const std::vector<Config>& cfgs, std::vector<Move>& path, int left) {
        std::string key = joint_key(cfgs);
        if (verified.count(key)) return true;
        if (verified.size() >= cap)
            throw Error("anonymity exploration exceeded the configuration cap (" +
                        std::to_string(cap) + ")");

        std::vector<std::vector<Move>> enabled;
        for (const auto& c : cfgs) enabled.push_back(common_enabled(c));
        bool all_equal = true;
        for (std::size_t i = 1; i < enabled.size(); ++i) all_equal &= enabled[i] == enabled[0];
        if (!all_equal) {
            violation = {Violation::Kind::Decouple, path, cfgs};
            return false;
        }
        if (enabled[0].empty()) {
            verified.insert(key);
            return true;
        }
        if (left == 0) throw Error("anonymity exploration hit the depth bound; raise it");

        for (const Move& m : enabled[0]) {
            std::vector<Split> splits;
            for (const auto& c : cfgs) splits.push_back(step_config(c, m));
            // equal action sets with equal masses across variants
            bool mismatch = false;
            for (std::size_t i = 1; i < splits.size() && !mismatch; ++i) {
                if (splits[i].by_action.size() != splits[0].by_action.size()) mismatch = true;
                for (const auto& [a, cfg] : splits[0].by_action) {
                    auto it = splits[i].by_action.find(a);
                    if (it == splits[i].by_action.end() ||
                        it->second.total() != cfg.total()) {
                        mismatch = true;
                        break;
                    }
                }
            }
            path.push_back(m);
            if (mismatch) {
                violation = {Violation::Kind::Mass, path, cfgs};
                path.pop_back();
                return false;
            }
            for (const auto& [a, cfg0] : splits[0].by_action) {
                std::vector<Config> next;
                Rational total = cfg0.total();
                for (const auto& split : splits)
                    next.push_back(normalize(split.by_action.at(a), total));
                if (!verify(next, path, left - 1)) {
                    path.pop_back();
                    return false;
                }
            }
            path.pop_back();
        }
        verified.insert(key);
        return true;
    }
};

int sched_max_len(const SchedPtr& s) {
    if (!s) return 0;
    switch (s->kind) {
        case SchedKind::Nil:
            return 0;
        case SchedKind::Act:
            return 1 + sched_max_len(s->cont);
        case SchedKind::Sum: {
            int best = 0;
            for (const auto& item : s->sum) best = std::max(best, sched_max_len(item));
            return best;
        }
    }
    return 0;
}

// Builds and evaluates candidate witness schedulers until one provably
// separates the variants' observable distributions.
std::optional<AnonymityVerdict::Witness> search_witness(
    const std::vector<TermPtr>& variants, const CompareCore::Violation& v, int depth) {
    std::size_t n = variants.size();

    auto evaluate = [&](const SchedPtr& cand) -> std::optional<AnonymityVerdict::Witness> {
        int bound = sched_max_len(cand) + 2;
        std::vector<ObservableDist> dists;
        for (const auto& variant : variants)
            dists.push_back(observable_dist(variant, cand, bound));
        std::set<Observable> keys;
        for (const auto& d : dists)
            for (const auto& [o, p] : d) keys.insert(o);
        for (const auto& o : keys) {
            std::vector<Rational> per;
            bool differ = false;
            for (const auto& d : dists) {
                auto it = d.find(o);
                per.push_back(it == d.end() ? Rational(0) : it->second);
                differ |= per.back() != per.front();
            }
            if (differ) return AnonymityVerdict::Witness{cand, o, per};
        }
        return std::nullopt;
    };

    int max_steps = 4 * depth + 8;
    std::vector<Policy> policies;
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t vr = 0; vr < n; ++vr) policies.push_back({t, vr});

    if (v.kind == CompareCore::Violation::Kind::Mass) {
        // v.path ends with the violating move; complete from the state after it.
        Config base = normalize(merge_all(step_config(v.configs[0], v.path.back())), Rational(1));
        for (const auto& pol : policies) {
            auto completion = completion_chain(base, pol, max_steps);
            std::vector<Move> all = v.path;
            all.insert(all.end(), completion.begin(), completion.end());
            if (auto w = evaluate(sched_chain(all))) return w;
        }
        return std::nullopt;
    }

    // Decoupled enabled sets: dispatch each variant to its own entry, then
    // complete each side under varied policies.
    std::vector<std::vector<Move>> enabled;
    for (const auto& c : v.configs) enabled.push_back(common_enabled(c));
    std::vector<Move> entry(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool found = false;
        for (const Move& m : enabled[i]) {
            bool exclusive = true;
            for (std::size_t j = 0; j < n && exclusive; ++j)
                if (j != i)
                    exclusive &= std::find(enabled[j].begin(), enabled[j].end(), m) ==
                                 enabled[j].end();
            if (exclusive) {
                entry[i] = m;
                found = true;
                break;
            }
        }
        if (!found) entry[i] = enabled[i].front();
    }

    std::vector<Config> after(n);
    for (std::size_t i = 0; i < n; ++i)
        after[i] = normalize(merge_all(step_config(v.configs[i], entry[i])), Rational(1));

    // Policy combinations per variant; the diagonal-style rotations come first.
    std::vector<std::vector<Policy>> combos;
    for (std::size_t shift = 0; shift < n; ++shift) {
        std::vector<Policy> combo;
        for (std::size_t i = 0; i < n; ++i) combo.push_back({(i + shift) % 3, (i + shift) % n});
        combos.push_back(combo);
    }
    for (std::size_t t0 = 0; t0 < 2; ++t0)
        for (std::size_t v0 = 0; v0 < n; ++v0)
            for (std::size_t t1 = 0; t1 < 2; ++t1)
                for (std::size_t v1 = 0; v1 < n; ++v1) {
                    std::vector<Policy> combo;
                    for (std::size_t i = 0; i < n; ++i)
                        combo.push_back(i % 2 == 0 ? Policy{t0, v0} : Policy{t1, v1});
                    combos.push_back(combo);
                }

    for (const auto& combo : combos) {
        std::vector<SchedPtr> entries;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            try {
                auto completion = completion_chain(after[i], combo[i], max_steps);
                entries.push_back(sched_act(entry[i], sched_chain(completion)));
            } catch (const Error&) {
                ok = false;
            }
        }
        if (!ok) continue;
        SchedPtr tail = entries.size() == 1 ? entries[0] : sched_sum(entries);
        if (auto w = evaluate(chain_then(v.path, tail))) return w;
    }
    return std::nullopt;
}

}  // namespace

AnonymityVerdict compare_observables(const std::vector<TermPtr>& variants, int depth,
                                     std::size_t config_cap) {
    if (variants.size() < 2) throw Error("need at least two conditioned variants to compare");
    for (const auto& v : variants)
        if (has_protect(v))
            throw Error("conditioned variants must be protect-free (condition the choice first)");

    CompareCore core{depth, config_cap, {}, {}};
    std::vector<Config> init;
    for (const auto& v : variants) init.push_back(Config::dirac(v));
    std::vector<Move> path;
    bool ok = core.verify(init, path, depth);

    AnonymityVerdict verdict;
    verdict.configurations = core.verified.size();
    verdict.classes = 0;
    if (ok) {
        verdict.holds = true;
        verdict.complete = true;
        return verdict;
    }
    auto witness = search_witness(variants, *core.violation, depth);
    if (!witness)
        throw Error("observable distributions diverge structurally but no distinguishing "
                    "scheduler could be constructed; coverage incomplete");
    verdict.holds = false;
    verdict.complete = true;
    verdict.witness = std::move(witness);
    verdict.notes.push_back(
        core.violation->kind == CompareCore::Violation::Kind::Decouple
            ? "enabled scheduler moves reveal the conditioned branch"
            : "a visible step carries condition-dependent probability mass");
    return verdict;
}

// ---------------------------------------------------------------------------
// Scheduler class counting and sampling (lockstep chains)

namespace {

struct ClassCounter {
    std::size_t cap;
    std::unordered_map<std::string, unsigned long long> memo;

    std::string key_of(const std::vector<TermPtr>& states) {
        std::vector<std::string> keys;
        for (const auto& t : states) keys.push_back(format_process(t));
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        std::string out;
        for (auto& k : keys) out += k + "\xc2\xb6";
        return out;
    }

    std::vector<TermPtr> dedup(const std::vector<TermPtr>& states) {
        std::vector<TermPtr> out;
        for (const auto& t : states) {
            bool seen = false;
            for (const auto& u : out) seen |= term_eq(u, t);
            if (!seen) out.push_back(t);
        }
        return out;
    }

    std::vector<Move> enabled_of(const std::vector<TermPtr>& states) {
        std::vector<Move> moves;
        bool have = false;
        for (const auto& t : states) {
            auto en = enabled_moves(t);
            std::sort(en.begin(), en.end());
            if (!have) {
                moves = en;
                have = true;
            } else if (en != moves) {
                throw Error("class counting needs lockstep labelings");
            }
        }
        return moves;
    }

    std::vector<TermPtr> successors(const std::vector<TermPtr>& states, const Move& m) {
        std::vector<TermPtr> out;
        for (const auto& t : states) {
            auto ds = derive(t, m, nullptr, ProtectPolicy::Skip);
            if (ds.size() != 1)
                throw Error("class counting needs deterministic lockstep steps");
            for (const auto& [target, p] : ds[0].targets.entries()) out.push_back(target.process);
        }
        return dedup(out);
    }

    unsigned long long count(const std::vector<TermPtr>& states, int left) {
        std::string key = key_of(states);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        if (memo.size() >= cap) throw Error("class counting exceeded the configuration cap");
        auto enabled = enabled_of(states);
        unsigned long long total = 1;
        if (!enabled.empty()) {
            if (left == 0) throw Error("class counting hit the depth bound");
            total = 0;
            for (const Move& m : enabled) {
                unsigned long long sub = count(successors(states, m), left - 1);
                if (total > ~0ull - sub) throw Error("class count overflow");
                total += sub;
            }
        }
        memo.emplace(std::move(key), total);
        return total;
    }
};

}  // namespace

unsigned long long count_scheduler_classes(const TermPtr& process, int depth,
                                           std::size_t config_cap) {
    ClassCounter counter{config_cap, {}};
    return counter.count({process}, depth);
}

std::vector<SchedPtr> first_scheduler_chains(const TermPtr& process, int depth,
                                             std::size_t limit) {
    std::vector<SchedPtr> out;
    ClassCounter helper{kDefaultStateCap, {}};
    std::vector<Move> chain;
    std::function<void(const std::vector<TermPtr>&, int)> dfs = [&](const std::vector<TermPtr>& states,
                                                                    int left) {
        if (out.size() >= limit) return;
        auto enabled = helper.enabled_of(states);
        if (enabled.empty()) {
            out.push_back(sched_chain(chain));
            return;
        }
        if (left == 0) throw Error("chain sampling hit the depth bound");
        for (const Move& m : enabled) {
            if (out.size() >= limit) return;
            chain.push_back(m);
            dfs(helper.successors(states, m), left - 1);
            chain.pop_back();
        }
    };
    dfs({process}, depth);
    return out;
}

// ---------------------------------------------------------------------------
// DCP checks

AnonymityVerdict check_strong_anonymity(const DcpModel& model, int depth,
                                        std::size_t config_cap) {
    std::vector<TermPtr> variants;
    for (int i = 0; i < model.config.parties; ++i) variants.push_back(conditioned_protocol(model, i));
    auto verdict = compare_observables(variants, depth, config_cap);
    if (verdict.holds) {
        verdict.classes = count_scheduler_classes(variants[0], depth, config_cap);
        verdict.notes.push_back("scheduler classes covered: " + std::to_string(verdict.classes));
    }
    return verdict;
}

AnonymityVerdict check_anonymity_nondet(const DcpModel& model, int depth,
                                        std::size_t config_cap) {
    if (!model.config.nondeterministic)
        throw Error("check_anonymity_nondet expects a nondeterministic-master instance");
    auto verdict = check_strong_anonymity(model, depth, config_cap);
    verdict.notes.push_back(
        "conditions range over independent schedulers T selecting different culprits");
    return verdict;
}

nlohmann::ordered_json AnonymityVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["holds"] = holds;
    j["complete"] = complete;
    j["scheduler_classes"] = classes;
    j["configurations"] = configurations;
    if (witness) {
        nlohmann::ordered_json w;
        w["scheduler"] = format_scheduler(witness->scheduler);
        w["observable"] = observable_str(witness->observable);
        nlohmann::ordered_json per = nlohmann::ordered_json::array();
        for (const auto& p : witness->per_condition) per.push_back(rat_str(p));
        w["per_condition"] = per;
        j["witness"] = w;
    }
    j["notes"] = notes;
    return j;
}

// ---------------------------------------------------------------------------
// Stepwise uniformity of the DCP conditionals

namespace {

struct UniformityCore {
    std::size_t cap;
    std::unordered_set<std::string> verified;
    bool uniform = true;
    bool odd_parity = true;
    std::string note;

    void explore(const Config& c, int announced, int parity, int left) {
        std::string key = config_key(c) + "#" + std::to_string(announced) + ":" +
                          std::to_string(parity);
        if (verified.count(key)) return;
        if (verified.size() >= cap) throw Error("uniformity exploration exceeded the cap");
        verified.insert(key);
        if (!uniform || !odd_parity) return;

        auto enabled = common_enabled(c);
        if (enabled.empty()) {
            if (announced != 3 || parity != 1) {
                odd_parity = false;
                note = "a complete run announced " + std::to_string(announced) +
                       " bits with parity " + std::to_string(parity);
            }
            return;
        }
        if (left == 0) throw Error("uniformity exploration hit the depth bound");

        for (const Move& m : enabled) {
            auto split = step_config(c, m);
            bool visible = split.by_action.size() != 1 ||
                           !split.by_action.begin()->first.is_tau();
            if (!visible) {
                explore(normalize(split.by_action.begin()->second, Rational(1)), announced,
                        parity, left - 1);
                continue;
            }
            if (announced < 2) {
                if (split.by_action.size() != 2) {
                    uniform = false;
                    note = "announcement " + std::to_string(announced + 1) + " has " +
                           std::to_string(split.by_action.size()) + " outcomes";
                    return;
                }
                for (const auto& [a, cfg] : split.by_action) {
                    if (cfg.total() != Rational(1, 2)) {
                        uniform = false;
                        note = "announcement " + std::to_string(announced + 1) + " outcome " +
                               a.str() + " has mass " + rat_str(cfg.total());
                        return;
                    }
                }
            } else if (split.by_action.size() != 1) {
                uniform = false;
                note = "the last announcement is not determined";
                return;
            }
            for (const auto& [a, cfg] : split.by_action) {
                int bit = 0;
                auto amp = a.channel.find('%');
                if (amp != std::string::npos) bit = std::stoi(a.channel.substr(amp + 1));
                explore(normalize(cfg, cfg.total()), announced + 1, parity ^ bit, left - 1);
                if (!uniform || !odd_parity) return;
            }
        }
    }
};

}  // namespace

UniformityReport check_dcp_stepwise_uniformity(const DcpModel& model, int depth,
                                               std::size_t config_cap) {
    UniformityCore core{config_cap, {}, true, true, ""};
    for (int i = 0; i < model.config.parties && core.uniform && core.odd_parity; ++i)
        core.explore(Config::dirac(conditioned_protocol(model, i)), 0, 0, depth);
    return {core.uniform, core.odd_parity, core.verified.size(), core.note};
}

}  // namespace ccss
