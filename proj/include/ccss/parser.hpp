#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccss/sched.hpp"
#include "ccss/term.hpp"

namespace ccss {

// One parsed source file: named declarations plus file-level options.
struct SourceUnit {
    enum class DeclKind { Process, Context, Scheduler, Values };
    struct Decl {
        DeclKind kind;
        std::string name;
        TermPtr term;     // Process/Context (value sugar already expanded)
        SchedPtr sched;   // Scheduler
        ValueSpec values; // Values
    };

    std::vector<Decl> decls;
    std::map<std::string, std::string> options;

    const Decl* find(const std::string& name) const;
    TermPtr process(const std::string& name) const;    // throws if missing/not a process
    TermPtr context(const std::string& name) const;
    SchedPtr scheduler(const std::string& name) const;
    std::vector<ValueSpec> value_specs() const;
    int option_int(const std::string& key, int fallback) const;
};

// Standalone parsers (no declarations in scope). parse_process rejects holes,
// parse_context demands exactly one.
TermPtr parse_process(const std::string& text);
TermPtr parse_context(const std::string& text);
SchedPtr parse_scheduler(const std::string& text);

SourceUnit parse_unit(const std::string& text);
SourceUnit parse_unit_file(const std::string& path);

// Deterministic pretty-printer; parse_process(format_process(t)) == t.
std::string format_process(const TermPtr& t);

}  // namespace ccss
