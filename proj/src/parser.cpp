#include "ccss/parser.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "ccss/diag.hpp"

namespace ccss {

namespace {

enum class Tok {
    End, Ident, Number, Colon, Dot, Comma, Pipe, Plus, PlusP, Bang, LParen, RParen,
    LBrace, RBrace, LBracket, RBracket, Lt, Gt, Slash, Eq, Star,
    KwOption, KwValues, KwProcess, KwContext, KwScheduler, KwNew, KwPsum, KwTau,
    KwHole, KwSigma, KwZero,
};

struct Token {
    Tok kind;
    std::string text;
    int line;
    int col;
};

struct Lexer {
    const std::string& src;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    explicit Lexer(const std::string& s) : src(s) {}

    void advance(char c) {
        ++pos;
        if (c == '\n') { ++line; col = 1; } else { ++col; }
    }

    void skip_ws() {
        while (pos < src.size()) {
            char c = src[pos];
            if (c == '#' || (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/')) {
                while (pos < src.size() && src[pos] != '\n') advance(src[pos]);
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance(c);
            } else {
                break;
            }
        }
    }

    Token next() {
        skip_ws();
        int l = line, c = col;
        if (pos >= src.size()) return {Tok::End, "", l, c};
        char ch = src[pos];
        auto one = [&](Tok k) {
            advance(ch);
            return Token{k, std::string(1, ch), l, c};
        };
        switch (ch) {
            case ':': return one(Tok::Colon);
            case '.': return one(Tok::Dot);
            case ',': return one(Tok::Comma);
            case '|': return one(Tok::Pipe);
            case '(': return one(Tok::LParen);
            case ')': return one(Tok::RParen);
            case '{': return one(Tok::LBrace);
            case '}': return one(Tok::RBrace);
            case '[': return one(Tok::LBracket);
            case ']': return one(Tok::RBracket);
            case '<': return one(Tok::Lt);
            case '>': return one(Tok::Gt);
            case '/': return one(Tok::Slash);
            case '=': return one(Tok::Eq);
            case '*': return one(Tok::Star);
            case '!': return one(Tok::Bang);
            case '+': {
                advance(ch);
                if (pos < src.size() && src[pos] == '_') {
                    advance('_');
                    return {Tok::PlusP, "+_", l, c};
                }
                return {Tok::Plus, "+", l, c};
            }
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::string num;
            while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
                num += src[pos];
                advance(src[pos]);
            }
            return {Tok::Number, num, l, c};
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::string id;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
                id += src[pos];
                advance(src[pos]);
            }
            // A label may carry a binary index: l^0110
            if (pos < src.size() && src[pos] == '^') {
                id += '^';
                advance('^');
                if (pos >= src.size() || (src[pos] != '0' && src[pos] != '1'))
                    throw ParseError(line, col, "label index must be a 0/1 string");
                while (pos < src.size() && (src[pos] == '0' || src[pos] == '1')) {
                    id += src[pos];
                    advance(src[pos]);
                }
            }
            static const std::map<std::string, Tok> kw = {
                {"option", Tok::KwOption},   {"values", Tok::KwValues},
                {"process", Tok::KwProcess}, {"context", Tok::KwContext},
                {"scheduler", Tok::KwScheduler}, {"new", Tok::KwNew},
                {"psum", Tok::KwPsum},       {"tau", Tok::KwTau},
                {"hole", Tok::KwHole},       {"sigma", Tok::KwSigma},
            };
            auto it = kw.find(id);
            return {it == kw.end() ? Tok::Ident : it->second, id, l, c};
        }
        throw ParseError(l, c, std::string("unexpected character '") + ch + "'");
    }
};

struct Parser {
    std::vector<Token> toks;
    std::size_t at = 0;
    const SourceUnit* unit = nullptr;  // resolves declared names during unit parsing

    explicit Parser(const std::string& text) {
        Lexer lx(text);
        for (;;) {
            Token t = lx.next();
            toks.push_back(t);
            if (t.kind == Tok::End) break;
        }
    }

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = at + ahead;
        return i < toks.size() ? toks[i] : toks.back();
    }
    Token take() { return toks[at < toks.size() - 1 ? at++ : at]; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        throw ParseError(t.line, t.col, msg + " (found '" + (t.kind == Tok::End ? "<eof>" : t.text) + "')");
    }

    Token expect(Tok k, const std::string& what) {
        if (peek().kind != k) fail("expected " + what);
        return take();
    }

    bool accept(Tok k) {
        if (peek().kind == k) { take(); return true; }
        return false;
    }

    // ---- shared pieces ----------------------------------------------------

    Label parse_label_text(const std::string& text) const {
        auto caret = text.find('^');
        if (caret == std::string::npos) return Label(text);
        return Label(text.substr(0, caret), text.substr(caret + 1));
    }

    std::string parse_channel() {
        Token t = expect(Tok::Ident, "a channel name");
        if (t.text.find('^') != std::string::npos)
            throw ParseError(t.line, t.col, "'^' is not allowed in channel names");
        return t.text;
    }

    std::string parse_value_name() {
        if (peek().kind == Tok::Number) return take().text;
        Token t = expect(Tok::Ident, "a value name");
        if (t.text.find('^') != std::string::npos)
            throw ParseError(t.line, t.col, "'^' is not allowed in value names");
        return t.text;
    }

    Rational parse_weight() {
        Token num = expect(Tok::Number, "a rational weight");
        std::string text = num.text;
        if (accept(Tok::Slash)) {
            Token den = expect(Tok::Number, "a denominator");
            text += "/" + den.text;
        }
        return rat_parse(text);
    }

    // ---- processes ---------------------------------------------------------

    TermPtr parse_proc() { return parse_sum(); }

    TermPtr parse_sum() {
        TermPtr left = parse_par();
        if (peek().kind == Tok::PlusP) {
            take();
            Rational p = parse_weight();
            TermPtr right = parse_par();
            if (peek().kind == Tok::Plus || peek().kind == Tok::PlusP)
                fail("mixing + and +_p needs parentheses");
            return psum2(Label{}, p, left, right);
        }
        while (accept(Tok::Plus)) {
            TermPtr right = parse_par();
            left = nsum(left, right);
            if (peek().kind == Tok::PlusP) fail("mixing + and +_p needs parentheses");
        }
        return left;
    }

    TermPtr parse_par() {
        TermPtr left = parse_unary();
        while (accept(Tok::Pipe)) left = par(left, parse_unary());
        return left;
    }

    TermPtr parse_unary() {
        if (peek().kind == Tok::KwNew) {
            take();
            if (accept(Tok::Star)) {
                expect(Tok::Dot, "'.' after new *");
                return restrict_all(parse_unary());
            }
            Token ch = expect(Tok::Ident, "a channel after new");
            if (ch.text == kOmegaChannel)
                throw ParseError(ch.line, ch.col, "the success channel 'omega' cannot be restricted");
            expect(Tok::Dot, "'.' after restriction");
            return restrict_ch(ch.text, parse_unary());
        }
        return parse_atom();
    }

    TermPtr parse_atom() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Number:
                if (t.text == "0") { take(); return nil(); }
                fail("unexpected number");
            case Tok::KwHole:
                take();
                return hole();
            case Tok::KwPsum:
                return parse_psum(Label{});
            case Tok::KwTau:
                return parse_prefix_tail(Label{});
            case Tok::LParen: {
                take();
                TermPtr inner = parse_proc();
                expect(Tok::RParen, "')'");
                return inner;
            }
            case Tok::Bang:
                if (peek(1).kind == Tok::LParen) {
                    take();
                    take();
                    TermPtr body = parse_proc();
                    expect(Tok::RParen, "')' closing bang");
                    return bang(body);
                }
                return parse_prefix_tail(Label{});  // output prefix !a ...
            case Tok::Ident: {
                if (peek(1).kind == Tok::Colon) {
                    Label l = parse_label_text(take().text);
                    take();  // ':'
                    return parse_labeled(l);
                }
                if (peek(1).kind == Tok::LBracket && unit && unit->find(t.text)) {
                    Token name = take();
                    take();  // '['
                    TermPtr arg = parse_proc();
                    expect(Tok::RBracket, "']'");
                    TermPtr ctx = unit->context(name.text);
                    return subst_hole(ctx, arg);
                }
                if (peek(1).kind != Tok::LParen && unit) {
                    if (const auto* d = unit->find(t.text)) {
                        if (d->kind != SourceUnit::DeclKind::Process &&
                            d->kind != SourceUnit::DeclKind::Context)
                            fail("'" + t.text + "' does not name a process");
                        take();
                        return d->term;
                    }
                }
                return parse_prefix_tail(Label{});
            }
            default:
                fail("expected a process");
        }
    }

    TermPtr parse_labeled(const Label& l) {
        switch (peek().kind) {
            case Tok::KwPsum:
                return parse_psum(l);
            case Tok::LBrace: {  // protect: l:{ P }
                take();
                TermPtr body = parse_proc();
                expect(Tok::RBrace, "'}' closing protected block");
                return protect(l, body);
            }
            case Tok::LParen: {  // l:(A +_p B) -- label attaches to the sum
                take();
                TermPtr inner = parse_proc();
                expect(Tok::RParen, "')'");
                if (inner->kind != TermKind::ProbSum || !inner->label.empty())
                    fail("a label on a parenthesized group must guard a probabilistic sum");
                return psum(l, inner->branches);
            }
            default:
                return parse_prefix_tail(l);
        }
    }

    TermPtr parse_psum(const Label& l) {
        expect(Tok::KwPsum, "psum");
        expect(Tok::LBrace, "'{'");
        std::vector<ProbBranch> branches;
        do {
            Rational w = parse_weight();
            expect(Tok::Colon, "':' after weight");
            branches.push_back({w, parse_proc()});
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        try {
            return psum(l, std::move(branches));
        } catch (const Error& e) {
            fail(e.what());
        }
    }

    TermPtr parse_prefix_tail(const Label& l) {
        Action a = parse_action();
        TermPtr cont = nil();
        if (accept(Tok::Dot)) cont = parse_unary();
        return prefix(l, a, cont);
    }

    Action parse_action() {
        if (accept(Tok::KwTau)) return Action::tau();
        if (accept(Tok::Bang)) {
            std::string ch = parse_channel();
            if (accept(Tok::Lt)) {
                std::string v = parse_value_name();
                expect(Tok::Gt, "'>'");
                return Action::output_val(ch, v);
            }
            return Action::output(ch);
        }
        std::string ch = parse_channel();
        if (accept(Tok::LParen)) {
            Token var = expect(Tok::Ident, "a variable name");
            expect(Tok::RParen, "')'");
            return Action::input_bind(ch, var.text);
        }
        return Action::input(ch);
    }

    // ---- schedulers ---------------------------------------------------------

    SchedPtr parse_sched() {
        std::vector<SchedPtr> items;
        items.push_back(parse_sched_atom());
        while (accept(Tok::Plus)) items.push_back(parse_sched_atom());
        return items.size() == 1 ? items.front() : sched_sum(std::move(items));
    }

    SchedPtr parse_sched_atom() {
        if (peek().kind == Tok::Number && peek().text == "0") {
            take();
            return sched_nil();
        }
        if (accept(Tok::LParen)) {
            SchedPtr s = parse_sched();
            expect(Tok::RParen, "')'");
            return s;
        }
        expect(Tok::KwSigma, "sigma");
        expect(Tok::LParen, "'('");
        Label l1 = parse_label_text(expect(Tok::Ident, "a label").text);
        Move m = Move::single(l1);
        if (accept(Tok::Comma)) {
            Label l2 = parse_label_text(expect(Tok::Ident, "a label").text);
            m = Move::pair(l1, l2);
        }
        expect(Tok::RParen, "')'");
        SchedPtr cont = sched_nil();
        if (accept(Tok::Dot)) cont = parse_sched_atom();
        return sched_act(m, cont);
    }

    // ---- units ---------------------------------------------------------------

    SourceUnit parse_unit_body() {
        SourceUnit u;
        unit = &u;
        while (peek().kind != Tok::End) {
            switch (peek().kind) {
                case Tok::KwOption: {
                    take();
                    Token key = expect(Tok::Ident, "an option name");
                    expect(Tok::Eq, "'='");
                    Token val = peek().kind == Tok::Number ? take()
                                                           : expect(Tok::Ident, "an option value");
                    u.options[key.text] = val.text;
                    break;
                }
                case Tok::KwValues: {
                    take();
                    std::string ch = parse_channel();
                    expect(Tok::Eq, "'='");
                    expect(Tok::LBrace, "'{'");
                    ValueSpec vs{ch, {}};
                    do vs.domain.push_back(parse_value_name());
                    while (accept(Tok::Comma));
                    expect(Tok::RBrace, "'}'");
                    add_decl(u, {SourceUnit::DeclKind::Values, ch, nullptr, nullptr, vs});
                    break;
                }
                case Tok::KwProcess:
                case Tok::KwContext: {
                    bool is_ctx = take().kind == Tok::KwContext;
                    Token name = expect(Tok::Ident, "a declaration name");
                    expect(Tok::Eq, "'='");
                    TermPtr t = parse_proc();
                    std::size_t holes = hole_count(t);
                    if (is_ctx && holes != 1)
                        throw ParseError(name.line, name.col,
                                         "context '" + name.text + "' must have exactly one hole");
                    if (!is_ctx && holes != 0)
                        throw ParseError(name.line, name.col,
                                         "process '" + name.text + "' must not contain holes");
                    add_decl(u, {is_ctx ? SourceUnit::DeclKind::Context : SourceUnit::DeclKind::Process,
                                 name.text, t, nullptr, {}});
                    break;
                }
                case Tok::KwScheduler: {
                    take();
                    Token name = expect(Tok::Ident, "a declaration name");
                    expect(Tok::Eq, "'='");
                    SchedPtr s = parse_sched();
                    add_decl(u, {SourceUnit::DeclKind::Scheduler, name.text, nullptr, s, {}});
                    break;
                }
                default:
                    fail("expected a declaration (option/values/process/context/scheduler)");
            }
        }
        // Expand value sugar once the whole unit is known.
        auto specs = u.value_specs();
        for (auto& d : u.decls) {
            if (d.kind == SourceUnit::DeclKind::Process || d.kind == SourceUnit::DeclKind::Context)
                d.term = desugar_value_passing(d.term, specs);
        }
        return u;
    }

    void add_decl(SourceUnit& u, SourceUnit::Decl d) {
        if (u.find(d.name)) fail("duplicate declaration '" + d.name + "'");
        u.decls.push_back(std::move(d));
    }

    void expect_end() {
        if (peek().kind != Tok::End) fail("trailing input");
    }
};

}  // namespace

const SourceUnit::Decl* SourceUnit::find(const std::string& name) const {
    for (const auto& d : decls)
        if (d.name == name) return &d;
    return nullptr;
}

TermPtr SourceUnit::process(const std::string& name) const {
    const Decl* d = find(name);
    if (!d || d->kind != DeclKind::Process) throw Error("no process named '" + name + "'");
    return d->term;
}

TermPtr SourceUnit::context(const std::string& name) const {
    const Decl* d = find(name);
    if (!d || d->kind != DeclKind::Context) throw Error("no context named '" + name + "'");
    return d->term;
}

SchedPtr SourceUnit::scheduler(const std::string& name) const {
    const Decl* d = find(name);
    if (!d || d->kind != DeclKind::Scheduler) throw Error("no scheduler named '" + name + "'");
    return d->sched;
}

std::vector<ValueSpec> SourceUnit::value_specs() const {
    std::vector<ValueSpec> out;
    for (const auto& d : decls)
        if (d.kind == DeclKind::Values) out.push_back(d.values);
    return out;
}

int SourceUnit::option_int(const std::string& key, int fallback) const {
    auto it = options.find(key);
    if (it == options.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (...) {
        throw Error("option '" + key + "' is not an integer: " + it->second);
    }
}

TermPtr parse_process(const std::string& text) {
    Parser p(text);
    TermPtr t = p.parse_proc();
    p.expect_end();
    if (hole_count(t) != 0) throw Error("process text contains a hole; use parse_context");
    return t;
}

TermPtr parse_context(const std::string& text) {
    Parser p(text);
    TermPtr t = p.parse_proc();
    p.expect_end();
    if (hole_count(t) != 1) throw Error("a context must contain exactly one hole");
    return t;
}

SchedPtr parse_scheduler(const std::string& text) {
    Parser p(text);
    SchedPtr s = p.parse_sched();
    p.expect_end();
    return s;
}

SourceUnit parse_unit(const std::string& text) {
    Parser p(text);
    return p.parse_unit_body();
}

SourceUnit parse_unit_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_unit(ss.str());
}

// ---------------------------------------------------------------------------
// Printer

namespace {

// Precedence levels, loosest first.
enum Level { LSum = 0, LPar = 1, LUnary = 2 };

void fmt(const TermPtr& t, std::string& out, Level ctx);

// Parenthesizes `t` when its own level is looser than the position requires.
void fmt_wrapped(const TermPtr& t, std::string& out, Level required, Level mine) {
    if (mine < required) {
        out += "(";
        fmt(t, out, LSum);
        out += ")";
    } else {
        fmt(t, out, required);
    }
}

Level level_of(const Term& t) {
    switch (t.kind) {
        case TermKind::NondetSum: return LSum;
        case TermKind::Par: return LPar;
        default: return LUnary;
    }
}

void fmt(const TermPtr& t, std::string& out, Level) {
    switch (t->kind) {
        case TermKind::Nil:
            out += "0";
            return;
        case TermKind::Hole:
            out += "hole";
            return;
        case TermKind::Prefix: {
            if (!t->label.empty()) out += t->label.str() + ":";
            out += t->action.str();
            if (t->left && t->left->kind != TermKind::Nil) {
                out += " . ";
                fmt_wrapped(t->left, out, LUnary, level_of(*t->left));
            }
            return;
        }
        case TermKind::Par: {
            // Left-associative; a right operand that is itself a Par keeps parens.
            fmt_wrapped(t->left, out, LPar, level_of(*t->left));
            out += " | ";
            if (t->right->kind == TermKind::Par) {
                out += "(";
                fmt(t->right, out, LSum);
                out += ")";
            } else {
                fmt_wrapped(t->right, out, LUnary, level_of(*t->right));
            }
            return;
        }
        case TermKind::NondetSum: {
            fmt_wrapped(t->left, out, LSum, level_of(*t->left));
            out += " + ";
            Level rl = level_of(*t->right);
            if (t->right->kind == TermKind::NondetSum) {
                out += "(";
                fmt(t->right, out, LSum);
                out += ")";
            } else {
                fmt_wrapped(t->right, out, LPar, rl);
            }
            return;
        }
        case TermKind::ProbSum: {
            if (!t->label.empty()) out += t->label.str() + ":";
            out += "psum{ ";
            bool first = true;
            for (const auto& br : t->branches) {
                if (!first) out += ", ";
                first = false;
                out += rat_str(br.weight) + ": ";
                fmt(br.body, out, LSum);
            }
            out += " }";
            return;
        }
        case TermKind::Restrict:
        case TermKind::RestrictAll: {
            out += "new ";
            out += t->kind == TermKind::Restrict ? t->channel : "*";
            out += " . ";
            fmt_wrapped(t->left, out, LUnary, level_of(*t->left));
            return;
        }
        case TermKind::Bang:
            out += "!(";
            fmt(t->left, out, LSum);
            out += ")";
            return;
        case TermKind::Protect:
            out += t->label.str() + ":{ ";
            fmt(t->left, out, LSum);
            out += " }";
            return;
    }
}

}  // namespace

std::string format_process(const TermPtr& t) {
    std::string out;
    fmt(t, out, LSum);
    return out;
}

}  // namespace ccss
