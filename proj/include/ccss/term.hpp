#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ccss/label.hpp"
#include "ccss/rational.hpp"

namespace ccss {

// ---------------------------------------------------------------------------
// Actions

enum class ActKind {
    Input,      // a
    Output,     // !a
    Tau,        // tau
    InputBind,  // a(x)   -- value-passing sugar, removed by desugaring
    OutputVal,  // !a<v>  -- value-passing sugar, removed by desugaring
};

struct Action {
    ActKind kind = ActKind::Tau;
    std::string channel;  // empty for tau
    std::string payload;  // bound variable (InputBind) or value (OutputVal)

    static Action input(std::string ch) { return {ActKind::Input, std::move(ch), ""}; }
    static Action output(std::string ch) { return {ActKind::Output, std::move(ch), ""}; }
    static Action tau() { return {ActKind::Tau, "", ""}; }
    static Action input_bind(std::string ch, std::string var) {
        return {ActKind::InputBind, std::move(ch), std::move(var)};
    }
    static Action output_val(std::string ch, std::string val) {
        return {ActKind::OutputVal, std::move(ch), std::move(val)};
    }

    bool operator==(const Action&) const = default;
    auto operator<=>(const Action&) const = default;

    bool is_tau() const { return kind == ActKind::Tau; }
    bool is_input() const { return kind == ActKind::Input; }
    bool is_output() const { return kind == ActKind::Output; }
    bool is_sugar() const { return kind == ActKind::InputBind || kind == ActKind::OutputVal; }

    std::string str() const;
};

// The reserved success channel; the restrict-all operator never blocks it.
inline const std::string kOmegaChannel = "omega";

// Fused channel name for value passing ("c%v"). Fused names cannot be written
// in source; they only arise from desugaring.
inline std::string fused_name(const std::string& channel, const std::string& value) {
    return channel + "%" + value;
}

// ---------------------------------------------------------------------------
// Process terms

enum class TermKind {
    Nil,
    Prefix,       // L:alpha.P
    Par,          // P | Q
    NondetSum,    // P + Q
    ProbSum,      // L:psum{ p1: P1, ..., pn: Pn }
    Restrict,     // new a . P
    RestrictAll,  // new * . P   (every channel except omega)
    Bang,         // !(P)
    Protect,      // L:{ P }     (scheduled by the independent scheduler)
    Hole,         // [] inside contexts
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct ProbBranch {
    Rational weight;
    TermPtr body;
};

struct Term {
    TermKind kind = TermKind::Nil;
    Label label;                      // Prefix, ProbSum, Protect
    Action action;                    // Prefix
    std::string channel;              // Restrict
    TermPtr left;                     // Par/NondetSum left; body for unary kinds
    TermPtr right;                    // Par/NondetSum right
    std::vector<ProbBranch> branches; // ProbSum
    std::size_t hash = 0;             // structural, computed at construction
};

// Factories (the only way terms are built; they validate invariants).
TermPtr nil();
TermPtr hole();
TermPtr prefix(Label l, Action a, TermPtr cont);
TermPtr par(TermPtr a, TermPtr b);
TermPtr nsum(TermPtr a, TermPtr b);
TermPtr psum(Label l, std::vector<ProbBranch> branches);  // weights in (0,1], sum == 1
TermPtr psum2(Label l, const Rational& p, TermPtr a, TermPtr b);  // a +_p b
TermPtr restrict_ch(std::string channel, TermPtr body);
TermPtr restrict_all(TermPtr body);
TermPtr bang(TermPtr body);
TermPtr protect(Label l, TermPtr body);

bool term_eq(const TermPtr& a, const TermPtr& b);

struct TermPtrHash {
    std::size_t operator()(const TermPtr& t) const { return t ? t->hash : 0; }
};
struct TermPtrEq {
    bool operator()(const TermPtr& a, const TermPtr& b) const { return term_eq(a, b); }
};

// ---------------------------------------------------------------------------
// Structural operations

// Labels of every Prefix, ProbSum and Protect node (set / multiset variants).
std::set<Label> labels_of(const TermPtr& t);
std::multiset<Label> label_multiset(const TermPtr& t);

// Appends `bits` to the index of every label in t (rho_k, homomorphic).
TermPtr relabel(const TermPtr& t, const std::string& bits);

// True iff no label occurs twice in the label multiset.
bool check_linear(const TermPtr& t);

// True iff t's labeling is linear and shares no label with any of the others.
bool check_fresh(const TermPtr& t, const std::vector<TermPtr>& others);

// Strips all labels (and dissolves Protect nodes); yields the CCS_p erasure.
TermPtr erase_labels(const TermPtr& t);

// Applies a label-atom renaming; atoms missing from the map are kept.
TermPtr rename_label_atoms(const TermPtr& t, const std::map<std::string, std::string>& ren);

std::size_t hole_count(const TermPtr& t);
inline bool is_context(const TermPtr& t) { return hole_count(t) == 1; }

// C[P]: substitutes P for the unique hole of C.
TermPtr subst_hole(const TermPtr& context, const TermPtr& p);

// All channel names occurring in actions or restrictions.
std::set<std::string> channels_of(const TermPtr& t);

bool has_protect(const TermPtr& t);
bool has_bang(const TermPtr& t);
bool has_sugar(const TermPtr& t);

std::size_t term_size(const TermPtr& t);

// ---------------------------------------------------------------------------
// Value passing

struct ValueSpec {
    std::string channel;
    std::vector<std::string> domain;  // non-empty, pairwise distinct
};

// Expands c(x)/!c<v> sugar into fused-channel prefixes (inputs become a
// nondeterministic sum over the domain sharing one label) and widens (new c)
// over all fused channels of c. Throws DesugarError on unknown channels,
// out-of-domain values, or plain actions on channels that carry a ValueSpec.
TermPtr desugar_value_passing(const TermPtr& t, const std::vector<ValueSpec>& specs);

}  // namespace ccss
