#pragma once

#include <unordered_map>
#include <vector>

#include "ccss/diag.hpp"
#include "ccss/rational.hpp"

namespace ccss {

// A finitely-supported exact-rational measure. Equal states merge by adding
// probabilities; entries keep first-insertion order so downstream output is
// deterministic.
template <class T, class Hash, class Eq>
class Dist {
  public:
    Dist() = default;

    static Dist dirac(T x) {
        Dist d;
        d.add(std::move(x), Rational(1));
        return d;
    }

    void add(T x, Rational p) {
        if (p == 0) return;
        if (p < 0) throw Error("negative probability in distribution");
        auto it = index_.find(x);
        if (it != index_.end()) {
            entries_[it->second].second += p;
            return;
        }
        index_.emplace(x, entries_.size());
        entries_.emplace_back(std::move(x), std::move(p));
    }

    Rational total() const {
        Rational t = 0;
        for (const auto& [x, p] : entries_) t += p;
        return t;
    }

    bool is_probability() const { return total() == 1; }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::vector<std::pair<T, Rational>>& entries() const { return entries_; }

    Rational mass_of(const T& x) const {
        auto it = index_.find(x);
        return it == index_.end() ? Rational(0) : entries_[it->second].second;
    }

    // Pointwise pushforward; merged states accumulate mass.
    template <class F>
    Dist map(F&& f) const {
        Dist out;
        for (const auto& [x, p] : entries_) out.add(f(x), p);
        return out;
    }

    // Adds `weight * other` into this distribution.
    void add_scaled(const Dist& other, const Rational& weight) {
        for (const auto& [x, p] : other.entries_) add(x, p * weight);
    }

    bool operator==(const Dist& other) const {
        if (entries_.size() != other.entries_.size()) return false;
        for (const auto& [x, p] : entries_)
            if (other.mass_of(x) != p) return false;
        return true;
    }

  private:
    std::vector<std::pair<T, Rational>> entries_;
    std::unordered_map<T, std::size_t, Hash, Eq> index_;
};

}  // namespace ccss
