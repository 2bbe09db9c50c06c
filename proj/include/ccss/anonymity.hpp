#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccss/analysis.hpp"
#include "ccss/semantics.hpp"

namespace ccss {

// ---------------------------------------------------------------------------
// Dining cryptographers builders

struct DcpConfig {
    bool nondeterministic = false;          // protected nondeterministic master
    std::vector<Rational> master_weights = {Rational(1, 3), Rational(1, 3), Rational(1, 3)};
    Rational coin_bias = Rational(1, 2);
    bool sabotage = false;  // branch-distinct master-output labels (leaks)
    int parties = 3;
};

struct DcpModel {
    TermPtr protocol;
    DcpConfig config;
    Label master_label;                 // the choice the checks condition on
    std::vector<std::string> out_channels;
};

DcpModel build_dcp(const DcpConfig& cfg = {});
DcpModel build_dcp_nondet(bool sabotage = false);

// Replaces the probabilistic (or protected nondeterministic) choice labeled
// `master` by its branch `index`; the rest of the term is untouched.
TermPtr condition_choice(const TermPtr& t, const Label& master, std::size_t index);
TermPtr conditioned_protocol(const DcpModel& model, int culprit);

// Replaces every channel name via `rename` (used to emit fused-name terms as
// parseable source).
TermPtr rename_channels(const TermPtr& t, const std::function<std::string(std::string)>& rename);

// ---------------------------------------------------------------------------
// Observables

using Observable = std::vector<Action>;  // visible actions in execution order
std::string observable_str(const Observable& o);

using ObservableDist = std::map<Observable, Rational>;

// Distribution over visible-action sequences of `process || s`, explored to
// `depth`. Throws if the bound truncates any execution.
ObservableDist observable_dist(const TermPtr& process, const SchedPtr& s, int depth,
                               std::size_t cap = kDefaultStateCap);

// The conditional distribution p_S(o | culprit i): runs the protocol with the
// master choice fixed to branch i (exactly the conditional, renormalized).
ObservableDist conditional_observable_dist(const DcpModel& model, const SchedPtr& s, int culprit,
                                           int depth);

// (cryptographer index, announced bit) view of a DCP observable.
std::vector<std::pair<int, int>> dcp_announcements(const DcpModel& model, const Observable& o);

// ---------------------------------------------------------------------------
// Anonymity checks

struct AnonymityVerdict {
    bool holds;
    bool complete;                 // exhaustive over scheduler classes
    unsigned long long classes;    // scheduler classes covered (0 when failing fast)
    std::size_t configurations;    // distinct explored configurations
    std::vector<std::string> notes;

    struct Witness {
        SchedPtr scheduler;
        Observable observable;
        std::vector<Rational> per_condition;  // probability of `observable` per culprit
    };
    std::optional<Witness> witness;  // present iff !holds

    nlohmann::ordered_json to_json() const;
};

// Core check: for every scheduler, the observable distributions of all
// variants coincide. Variants must be protect-free with lockstep labelings
// (identical enabled-move sets along every joint execution); violations are
// reported with an evaluated witness scheduler.
AnonymityVerdict compare_observables(const std::vector<TermPtr>& variants, int depth,
                                     std::size_t config_cap = 2000000);

// Strong probabilistic anonymity of a probabilistic-master DCP instance.
AnonymityVerdict check_strong_anonymity(const DcpModel& model, int depth,
                                        std::size_t config_cap = 2000000);

// Strong anonymity for the nondeterministic master: p_{S,T1} = p_{S,T2} for
// all S and all independent schedulers T1, T2 selecting different culprits.
AnonymityVerdict check_anonymity_nondet(const DcpModel& model, int depth,
                                        std::size_t config_cap = 2000000);

// Exact number of scheduler classes (chains) of a lockstep-labeled process.
unsigned long long count_scheduler_classes(const TermPtr& process, int depth,
                                           std::size_t config_cap = 2000000);

// First `limit` scheduler chains in canonical order (for reports).
std::vector<SchedPtr> first_scheduler_chains(const TermPtr& process, int depth, std::size_t limit);

// Stepwise shape of the DCP conditionals: every announcement step splits
// 1/2 - 1/2 (the last one is determined), so each chain's conditional
// distribution is uniform over its four odd-parity observables.
struct UniformityReport {
    bool uniform;
    bool odd_parity;  // every complete run announces bits with xor 1
    std::size_t configurations;
    std::string note;
};
UniformityReport check_dcp_stepwise_uniformity(const DcpModel& model, int depth,
                                               std::size_t config_cap = 2000000);

}  // namespace ccss
