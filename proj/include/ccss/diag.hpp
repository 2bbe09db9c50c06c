#pragma once

#include <stdexcept>
#include <string>

namespace ccss {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : Error {
    int line;
    int col;
    ParseError(int line_, int col_, const std::string& msg)
        : Error("parse error at " + std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
          line(line_), col(col_) {}
};

// Raised when a (state, scheduler move) admits more than one derivation;
// this is what operationally rules out non-deterministic labelings.
struct AmbiguityError : Error {
    std::string state;
    std::string move;
    std::string first;
    std::string second;
    AmbiguityError(std::string state_, std::string move_, std::string first_, std::string second_)
        : Error("ambiguous step: move " + move_ + " has two derivations at " + state_ +
                "\n  1) " + first_ + "\n  2) " + second_),
          state(std::move(state_)), move(std::move(move_)),
          first(std::move(first_)), second(std::move(second_)) {}
};

struct StateCapError : Error {
    explicit StateCapError(std::size_t cap)
        : Error("state cap exceeded (" + std::to_string(cap) + " states)") {}
};

struct FreshnessError : Error {
    using Error::Error;
};

struct DesugarError : Error {
    using Error::Error;
};

}  // namespace ccss
