#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "ccss/term.hpp"

namespace ccss::testgen {

// Random CCS_p / CCS_sigma terms with automatically assigned linear labelings.
struct TermGen {
    std::mt19937 rng;
    int next_label = 1;
    std::string label_base = "g";
    std::vector<std::string> channels = {"a", "b", "c"};
    bool allow_bang = false;

    explicit TermGen(unsigned seed) : rng(seed) {}

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
    bool chance(int percent) { return pick(100) < percent; }

    Label fresh() { return Label(label_base + std::to_string(next_label++)); }

    std::string channel() { return channels[pick(static_cast<int>(channels.size()))]; }

    Action action() {
        switch (pick(5)) {
            case 0:
            case 1: return Action::input(channel());
            case 2:
            case 3: return Action::output(channel());
            default: return Action::tau();
        }
    }

    // Linear-labeled term; every prefix and probabilistic sum gets a fresh label.
    TermPtr labeled(int depth) {
        if (depth <= 0) return chance(50) ? nil() : prefix(fresh(), action(), nil());
        switch (pick(allow_bang ? 10 : 9)) {
            case 0: return nil();
            case 1:
            case 2:
            case 3: return prefix(fresh(), action(), labeled(depth - 1));
            case 4: return par(labeled(depth - 1), labeled(depth - 1));
            case 5: return nsum(labeled(depth - 1), labeled(depth - 1));
            case 6: {
                int n = 2 + pick(2);
                std::vector<ProbBranch> brs;
                for (int i = 0; i < n; ++i) brs.push_back({rat(1, n), labeled(depth - 1)});
                return psum(fresh(), std::move(brs));
            }
            case 7:
            case 8: return restrict_ch(channel(), labeled(depth - 1));
            default: return bang(labeled(depth - 1));
        }
    }

    // Unlabeled CCS_p term (for semantic-scheduler comparisons).
    TermPtr ccsp(int depth) { return erase_labels(labeled(depth)); }

    // One-hole bang-free contexts over prefix/parallel/restriction/psum/nsum.
    TermPtr context(int depth) {
        if (depth <= 0) return hole();
        switch (pick(6)) {
            case 0: return hole();
            case 1: return prefix(fresh(), action(), context(depth - 1));
            case 2: return chance(50) ? par(context(depth - 1), side_term(depth - 1))
                                      : par(side_term(depth - 1), context(depth - 1));
            case 3: return chance(50) ? nsum(context(depth - 1), side_term(depth - 1))
                                      : nsum(side_term(depth - 1), context(depth - 1));
            case 4: {
                Rational w = rat(1, 2 + pick(2));
                return chance(50) ? psum2(fresh(), w, context(depth - 1), side_term(depth - 1))
                                  : psum2(fresh(), w, side_term(depth - 1), context(depth - 1));
            }
            default: return restrict_ch(channel(), context(depth - 1));
        }
    }

    TermPtr side_term(int depth) {
        bool bang_saved = allow_bang;
        allow_bang = false;
        TermPtr t = labeled(depth);
        allow_bang = bang_saved;
        return t;
    }

    // Tests: output/input chains over the given channels, success at the end.
    TermPtr test_term(int depth, const std::set<std::string>& interface) {
        std::vector<std::string> chans(interface.begin(), interface.end());
        if (chans.empty()) chans.push_back("a");
        auto chain = [&](auto&& self, int d) -> TermPtr {
            if (d <= 0) return prefix(fresh(), Action::input(kOmegaChannel), nil());
            const std::string& ch = chans[pick(static_cast<int>(chans.size()))];
            Action a = chance(70) ? Action::output(ch) : Action::input(ch);
            return prefix(fresh(), a, self(self, d - 1));
        };
        TermPtr t = chain(chain, 1 + pick(depth));
        if (chance(30)) t = par(t, chain(chain, 1 + pick(depth)));
        return t;
    }
};

}  // namespace ccss::testgen
