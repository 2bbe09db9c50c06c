#include "ccss/sched.hpp"

#include "ccss/diag.hpp"

namespace ccss {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
    return h * 1000003u ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

std::size_t move_hash(const Move& m) {
    return mix(mix(static_cast<std::size_t>(m.kind), LabelHash{}(m.first)), LabelHash{}(m.second));
}

SchedPtr finish(Sched s) {
    std::size_t h = static_cast<std::size_t>(s.kind) + 0x7a3f91d5;
    h = mix(h, move_hash(s.move));
    if (s.cont) h = mix(h, s.cont->hash);
    for (const auto& item : s.sum) h = mix(h, item->hash);
    s.hash = h;
    return std::make_shared<const Sched>(std::move(s));
}

}  // namespace

SchedPtr sched_nil() {
    static const SchedPtr n = finish(Sched{});
    return n;
}

SchedPtr sched_act(Move m, SchedPtr cont) {
    Sched s;
    s.kind = SchedKind::Act;
    s.move = std::move(m);
    s.cont = cont ? std::move(cont) : sched_nil();
    return finish(std::move(s));
}

SchedPtr sched_sum(std::vector<SchedPtr> items) {
    std::vector<SchedPtr> flat;
    for (auto& it : items) {
        if (!it) continue;
        if (it->kind == SchedKind::Sum)
            flat.insert(flat.end(), it->sum.begin(), it->sum.end());
        else
            flat.push_back(std::move(it));
    }
    if (flat.empty()) throw Error("empty scheduler sum");
    if (flat.size() == 1) return flat.front();
    Sched s;
    s.kind = SchedKind::Sum;
    s.sum = std::move(flat);
    return finish(std::move(s));
}

bool sched_eq(const SchedPtr& a, const SchedPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->hash != b->hash || a->kind != b->kind) return false;
    if (a->move != b->move) return false;
    if (a->sum.size() != b->sum.size()) return false;
    for (std::size_t i = 0; i < a->sum.size(); ++i)
        if (!sched_eq(a->sum[i], b->sum[i])) return false;
    return sched_eq(a->cont, b->cont);
}

std::vector<std::pair<Move, SchedPtr>> sched_candidates(const SchedPtr& s) {
    std::vector<std::pair<Move, SchedPtr>> out;
    if (!s) return out;
    switch (s->kind) {
        case SchedKind::Nil:
            break;
        case SchedKind::Act:
            out.emplace_back(s->move, s->cont);
            break;
        case SchedKind::Sum:
            for (const auto& item : s->sum) {
                auto inner = sched_candidates(item);
                out.insert(out.end(), inner.begin(), inner.end());
            }
            break;
    }
    return out;
}

SchedPtr sched_chain(const std::vector<Move>& moves) {
    SchedPtr s = sched_nil();
    for (auto it = moves.rbegin(); it != moves.rend(); ++it) s = sched_act(*it, s);
    return s;
}

namespace {

void fmt(const SchedPtr& s, std::string& out, bool parenthesize_sum) {
    switch (s->kind) {
        case SchedKind::Nil:
            out += "0";
            break;
        case SchedKind::Act:
            out += s->move.str();
            if (s->cont && s->cont->kind != SchedKind::Nil) {
                out += ".";
                fmt(s->cont, out, true);
            }
            break;
        case SchedKind::Sum: {
            if (parenthesize_sum) out += "(";
            bool first = true;
            for (const auto& item : s->sum) {
                if (!first) out += " + ";
                first = false;
                fmt(item, out, true);
            }
            if (parenthesize_sum) out += ")";
            break;
        }
    }
}

}  // namespace

std::string format_scheduler(const SchedPtr& s) {
    if (!s) return "0";
    std::string out;
    fmt(s, out, false);
    return out;
}

}  // namespace ccss
