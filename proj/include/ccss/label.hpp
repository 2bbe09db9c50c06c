#pragma once

#include <compare>
#include <functional>
#include <string>

namespace ccss {

// A prefix/sum label: atomic name plus a binary index string. The index
// grows when replication spawns copies, keeping labels distinct.
struct Label {
    std::string atom;
    std::string index;  // over {'0','1'}, possibly empty

    Label() = default;
    explicit Label(std::string atom_, std::string index_ = "")
        : atom(std::move(atom_)), index(std::move(index_)) {}

    bool operator==(const Label&) const = default;
    auto operator<=>(const Label&) const = default;

    bool empty() const { return atom.empty(); }

    // Prints "l" for an empty index, "l^0110" otherwise.
    std::string str() const { return index.empty() ? atom : atom + "^" + index; }

    Label with_appended(const std::string& bits) const { return Label(atom, index + bits); }
};

struct LabelHash {
    std::size_t operator()(const Label& l) const {
        return std::hash<std::string>{}(l.atom) * 1000003u ^ std::hash<std::string>{}(l.index);
    }
};

}  // namespace ccss
