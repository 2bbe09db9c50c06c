#include "ccss/automata.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

#include "ccss/diag.hpp"
#include "ccss/parser.hpp"

namespace ccss {

std::set<std::string> ProbAutomaton::actions() const {
    std::set<std::string> out;
    for (const auto& t : transitions) out.insert(t.action.str());
    return out;
}

std::vector<int> ProbAutomaton::truncated_states() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < states.size(); ++i)
        if (flags[i] & Truncated) out.push_back(static_cast<int>(i));
    return out;
}

bool ProbAutomaton::is_acyclic() const {
    std::vector<int> color(states.size(), 0);
    std::vector<std::pair<int, std::size_t>> stack;
    for (std::size_t root = 0; root < states.size(); ++root) {
        if (color[root]) continue;
        stack.push_back({static_cast<int>(root), 0});
        color[root] = 1;
        while (!stack.empty()) {
            auto& [s, edge] = stack.back();
            std::vector<int> succ;
            for (int ti : outgoing[s])
                for (const auto& [q, p] : transitions[ti].support) succ.push_back(q);
            if (edge >= succ.size()) {
                color[s] = 2;
                stack.pop_back();
                continue;
            }
            int q = succ[edge++];
            if (color[q] == 1) return false;
            if (color[q] == 0) {
                color[q] = 1;
                stack.push_back({q, 0});
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Unfolding

namespace {

struct Registry {
    ProbAutomaton& m;
    std::unordered_map<std::string, int> index;
    std::size_t cap;

    int intern(const std::string& key) {
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        if (m.states.size() >= cap) throw StateCapError(cap);
        int id = static_cast<int>(m.states.size());
        m.states.push_back(key);
        m.flags.push_back(ProbAutomaton::None);
        m.outgoing.emplace_back();
        index.emplace(key, id);
        return id;
    }
};

}  // namespace

ProbAutomaton unfold_process(const TermPtr& p, int depth, std::size_t cap) {
    ProbAutomaton m;
    Registry reg{m, {}, cap};
    std::vector<TermPtr> terms;

    auto intern = [&](const TermPtr& t) {
        int id = reg.intern(format_process(t));
        if (id == static_cast<int>(terms.size())) terms.push_back(t);
        return id;
    };

    m.initial = intern(p);
    std::deque<std::pair<int, int>> frontier;  // (state, depth used)
    frontier.push_back({m.initial, 0});
    std::vector<bool> expanded;

    while (!frontier.empty()) {
        auto [s, d] = frontier.front();
        frontier.pop_front();
        if (expanded.size() <= static_cast<std::size_t>(s)) expanded.resize(s + 1, false);
        if (expanded[s]) continue;

        auto ts = ccsp_step(terms[s]);
        if (d >= depth) {
            if (!ts.empty()) m.flags[s] |= ProbAutomaton::Truncated;
            continue;
        }
        expanded[s] = true;
        m.flags[s] &= ~ProbAutomaton::Truncated;
        for (const auto& t : ts) {
            ProbAutomaton::Transition tr;
            tr.src = s;
            tr.action = t.action;
            for (const auto& [q, prob] : t.target.entries()) {
                int qi = intern(q);
                tr.support.push_back({qi, prob});
                frontier.push_back({qi, d + 1});
            }
            m.outgoing[s].push_back(static_cast<int>(m.transitions.size()));
            m.transitions.push_back(std::move(tr));
        }
    }
    return m;
}

ProbAutomaton unfold_complete(const CompleteState& cs, int depth, std::size_t cap) {
    ProbAutomaton m;
    Registry reg{m, {}, cap};
    std::vector<CompleteState> states;

    auto intern = [&](const CompleteState& s) {
        int id = reg.intern(s.str());
        if (id == static_cast<int>(states.size())) states.push_back(s);
        return id;
    };

    m.initial = intern(cs);
    std::deque<std::pair<int, int>> frontier;
    frontier.push_back({m.initial, 0});
    std::vector<bool> expanded;

    while (!frontier.empty()) {
        auto [s, d] = frontier.front();
        frontier.pop_front();
        if (expanded.size() <= static_cast<std::size_t>(s)) expanded.resize(s + 1, false);
        if (expanded[s]) continue;

        auto r = step(states[s]);
        switch (r.kind) {
            case StepResult::Kind::StuckProcess:
                m.flags[s] |= ProbAutomaton::StuckProcess;
                expanded[s] = true;
                continue;
            case StepResult::Kind::StuckScheduler:
                m.flags[s] |= ProbAutomaton::StuckScheduler;
                expanded[s] = true;
                continue;
            case StepResult::Kind::Step:
                break;
        }
        if (d >= depth) {
            m.flags[s] |= ProbAutomaton::Truncated;
            continue;
        }
        expanded[s] = true;
        m.flags[s] &= ~ProbAutomaton::Truncated;
        ProbAutomaton::Transition tr;
        tr.src = s;
        tr.action = r.action;
        for (const auto& [q, prob] : r.dist.entries()) {
            int qi = intern(q);
            tr.support.push_back({qi, prob});
            frontier.push_back({qi, d + 1});
        }
        m.outgoing[s].push_back(static_cast<int>(m.transitions.size()));
        m.transitions.push_back(std::move(tr));
    }
    return m;
}

bool is_fully_probabilistic(const ProbAutomaton& m) {
    for (const auto& out : m.outgoing)
        if (out.size() > 1) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Semantic schedulers

SemanticSchedulers::SemanticSchedulers(const ProbAutomaton& m) : m_(m) {
    if (!m.is_acyclic())
        throw Error("semantic scheduler enumeration needs an acyclic (bounded) automaton");
    Execution root;
    root.states = {m.initial};
    std::deque<Execution> queue{root};
    while (!queue.empty()) {
        Execution e = std::move(queue.front());
        queue.pop_front();
        std::size_t idx = execs_.size();
        execs_.push_back(e);
        decision_index_.push_back(static_cast<std::size_t>(-1));
        int last = e.states.back();
        if (!m.outgoing[last].empty()) {
            decision_index_[idx] = decisions_.size();
            decisions_.push_back(idx);
        }
        for (int ti : m.outgoing[last]) {
            for (const auto& [q, p] : m.transitions[ti].support) {
                Execution e2 = e;
                e2.states.push_back(q);
                e2.transitions.push_back(ti);
                queue.push_back(std::move(e2));
            }
        }
    }
}

unsigned long long SemanticSchedulers::count() const {
    unsigned long long total = 1;
    for (std::size_t di : decisions_) {
        std::size_t n = m_.outgoing[execs_[di].states.back()].size();
        if (n && total > (1ull << 62) / n) throw Error("semantic scheduler count overflow");
        total *= n;
    }
    return total;
}

bool SemanticSchedulers::first(SemanticScheduler& z) const {
    z.choices.assign(decisions_.size(), 0);
    return true;
}

bool SemanticSchedulers::next(SemanticScheduler& z) const {
    for (std::size_t i = 0; i < z.choices.size(); ++i) {
        std::size_t n = m_.outgoing[execs_[decisions_[i]].states.back()].size();
        if (static_cast<std::size_t>(++z.choices[i]) < n) return true;
        z.choices[i] = 0;
    }
    return false;
}

ProbAutomaton SemanticSchedulers::etree(const SemanticScheduler& z) const {
    std::map<std::pair<std::vector<int>, std::vector<int>>, std::size_t> exec_index;
    for (std::size_t i = 0; i < execs_.size(); ++i)
        exec_index[{execs_[i].states, execs_[i].transitions}] = i;

    auto key_of = [&](const Execution& e) {
        std::string key = m_.states[e.states[0]];
        for (std::size_t i = 0; i < e.transitions.size(); ++i) {
            key += " " + m_.transitions[e.transitions[i]].action.str() + " ";
            key += m_.states[e.states[i + 1]];
        }
        return key;
    };

    ProbAutomaton out;
    Execution root;
    root.states = {m_.initial};
    out.states.push_back(key_of(root));
    out.flags.push_back(m_.flags[m_.initial]);
    out.outgoing.emplace_back();
    out.initial = 0;

    struct Item {
        Execution e;
        int state_id;
    };
    std::deque<Item> queue{{root, 0}};
    while (!queue.empty()) {
        Item it = std::move(queue.front());
        queue.pop_front();
        auto idx_it = exec_index.find({it.e.states, it.e.transitions});
        if (idx_it == exec_index.end())
            throw Error("internal: execution missing from the enumeration");
        std::size_t di = decision_index_[idx_it->second];
        if (di == static_cast<std::size_t>(-1)) continue;  // terminal execution
        int last = it.e.states.back();
        int ti = m_.outgoing[last][z.choices[di]];
        const auto& tr = m_.transitions[ti];
        ProbAutomaton::Transition nt;
        nt.src = it.state_id;
        nt.action = tr.action;
        for (const auto& [q, p] : tr.support) {
            Execution e2 = it.e;
            e2.states.push_back(q);
            e2.transitions.push_back(ti);
            int id = static_cast<int>(out.states.size());
            out.states.push_back(key_of(e2));
            out.flags.push_back(m_.flags[q]);
            out.outgoing.emplace_back();
            nt.support.push_back({id, p});
            queue.push_back({std::move(e2), id});
        }
        out.outgoing[it.state_id].push_back(static_cast<int>(out.transitions.size()));
        out.transitions.push_back(std::move(nt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Probabilistic bisimilarity (fully probabilistic automata)

bool prob_bisim(const ProbAutomaton& m1, const ProbAutomaton& m2) {
    if (!is_fully_probabilistic(m1) || !is_fully_probabilistic(m2))
        throw Error("prob_bisim expects fully probabilistic automata");

    std::size_t n1 = m1.states.size();
    std::size_t n = n1 + m2.states.size();
    std::vector<int> block(n, 0);

    for (;;) {
        std::map<std::pair<int, std::string>, int> renumber;
        std::vector<int> next(n);
        for (std::size_t s = 0; s < n; ++s) {
            const ProbAutomaton& m = s < n1 ? m1 : m2;
            std::size_t ls = s < n1 ? s : s - n1;
            std::string sig;
            if (!m.outgoing[ls].empty()) {
                const auto& tr = m.transitions[m.outgoing[ls][0]];
                std::map<int, Rational> mass;
                for (const auto& [q, p] : tr.support)
                    mass[block[s < n1 ? q : q + static_cast<long>(n1)]] += p;
                sig = tr.action.str() + "|";
                for (const auto& [b, p] : mass) sig += std::to_string(b) + ":" + rat_str(p) + ",";
            }
            auto key = std::make_pair(block[s], sig);
            auto it = renumber.find(key);
            if (it == renumber.end())
                it = renumber.emplace(key, static_cast<int>(renumber.size())).first;
            next[s] = it->second;
        }
        if (next == block) break;
        block = std::move(next);
    }
    return block[m1.initial] == block[n1 + m2.initial];
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string to_dot(const ProbAutomaton& m) {
    std::string out = "digraph automaton {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n";
    for (std::size_t i = 0; i < m.states.size(); ++i) {
        std::string style;
        if (m.flags[i] & ProbAutomaton::Truncated) style = ", style=dashed, color=gray40";
        if (m.flags[i] & ProbAutomaton::StuckScheduler)
            style = ", style=filled, fillcolor=lightsalmon";
        if (m.flags[i] & ProbAutomaton::StuckProcess)
            style = ", style=filled, fillcolor=lightgray";
        out += "  s" + std::to_string(i) + " [label=\"" + dot_escape(m.states[i]) + "\"" + style +
               "];\n";
    }
    out += "  init [shape=point];\n  init -> s" + std::to_string(m.initial) + ";\n";
    int branch = 0;
    for (const auto& tr : m.transitions) {
        if (tr.support.size() == 1) {
            out += "  s" + std::to_string(tr.src) + " -> s" + std::to_string(tr.support[0].first) +
                   " [label=\"" + tr.action.str() + " [" + rat_str(tr.support[0].second) + "]\"];\n";
        } else {
            std::string mid = "p" + std::to_string(branch++);
            out += "  " + mid + " [shape=point];\n";
            out += "  s" + std::to_string(tr.src) + " -> " + mid + " [label=\"" + tr.action.str() +
                   "\"];\n";
            for (const auto& [q, p] : tr.support)
                out += "  " + mid + " -> s" + std::to_string(q) + " [label=\"[" + rat_str(p) +
                       "]\", style=dotted];\n";
        }
    }
    out += "}\n";
    return out;
}

nlohmann::ordered_json to_json(const ProbAutomaton& m) {
    nlohmann::ordered_json j;
    j["initial"] = m.initial;
    j["states"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.states.size(); ++i) {
        nlohmann::ordered_json s;
        s["id"] = i;
        s["term"] = m.states[i];
        std::vector<std::string> kinds;
        if (m.flags[i] & ProbAutomaton::Truncated) kinds.push_back("truncated");
        if (m.flags[i] & ProbAutomaton::StuckProcess) kinds.push_back("stuck_process");
        if (m.flags[i] & ProbAutomaton::StuckScheduler) kinds.push_back("stuck_scheduler");
        s["flags"] = kinds;
        j["states"].push_back(s);
    }
    j["transitions"] = nlohmann::ordered_json::array();
    for (const auto& tr : m.transitions) {
        nlohmann::ordered_json t;
        t["from"] = tr.src;
        t["action"] = tr.action.str();
        t["support"] = nlohmann::ordered_json::array();
        for (const auto& [q, p] : tr.support) {
            nlohmann::ordered_json e;
            e["to"] = q;
            e["prob"] = rat_str(p);
            t["support"].push_back(e);
        }
        j["transitions"].push_back(t);
    }
    return j;
}

void validate_automaton_json(const nlohmann::ordered_json& j) {
    if (!j.contains("initial") || !j.contains("states") || !j.contains("transitions"))
        throw Error("automaton json: missing keys");
    std::size_t n = j["states"].size();
    if (j["initial"].get<std::size_t>() >= n) throw Error("automaton json: bad initial state");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = j["states"][i];
        if (s["id"].get<std::size_t>() != i) throw Error("automaton json: ids must be dense");
        if (!s.contains("term") || !s.contains("flags")) throw Error("automaton json: bad state");
    }
    for (const auto& t : j["transitions"]) {
        if (t["from"].get<std::size_t>() >= n) throw Error("automaton json: bad source");
        Rational total = 0;
        for (const auto& e : t["support"]) {
            if (e["to"].get<std::size_t>() >= n) throw Error("automaton json: bad target");
            Rational p = rat_parse(e["prob"].get<std::string>());
            if (p <= 0 || p > 1) throw Error("automaton json: probability out of range");
            total += p;
        }
        if (total != 1) throw Error("automaton json: transition mass " + rat_str(total));
    }
}

}  // namespace ccss
