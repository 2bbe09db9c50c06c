#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ccss/label.hpp"

namespace ccss {

// A scheduler move: schedule one labeled action, or synchronize two. In a
// pair the first label justifies the input-side premise, the second the
// output side.
struct Move {
    enum class Kind { Single, Pair } kind = Kind::Single;
    Label first;
    Label second;  // Pair only

    static Move single(Label l) { return {Kind::Single, std::move(l), {}}; }
    static Move pair(Label a, Label b) { return {Kind::Pair, std::move(a), std::move(b)}; }

    bool operator==(const Move&) const = default;
    auto operator<=>(const Move&) const = default;

    std::string str() const {
        return kind == Kind::Single ? "sigma(" + first.str() + ")"
                                    : "sigma(" + first.str() + "," + second.str() + ")";
    }
};

enum class SchedKind { Nil, Act, Sum };

struct Sched;
using SchedPtr = std::shared_ptr<const Sched>;

struct Sched {
    SchedKind kind = SchedKind::Nil;
    Move move;                   // Act
    SchedPtr cont;               // Act
    std::vector<SchedPtr> sum;   // Sum; textual order is semantic (TEST rule)
    std::size_t hash = 0;
};

SchedPtr sched_nil();
SchedPtr sched_act(Move m, SchedPtr cont);
SchedPtr sched_sum(std::vector<SchedPtr> items);  // flattens nested sums, keeps order

bool sched_eq(const SchedPtr& a, const SchedPtr& b);

struct SchedPtrHash {
    std::size_t operator()(const SchedPtr& s) const { return s ? s->hash : 0; }
};
struct SchedPtrEq {
    bool operator()(const SchedPtr& a, const SchedPtr& b) const { return sched_eq(a, b); }
};

// The TEST-rule view of a scheduler: an ordered list of (move, continuation)
// candidates; the first whose move fires wins.
std::vector<std::pair<Move, SchedPtr>> sched_candidates(const SchedPtr& s);

// Builds sigma(m1)...sigma(mk).0 from a move chain.
SchedPtr sched_chain(const std::vector<Move>& moves);

std::string format_scheduler(const SchedPtr& s);

}  // namespace ccss
