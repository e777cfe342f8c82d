#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vnoether/errors.hpp"
#include "vnoether/gauge.hpp"
#include "vnoether/poly.hpp"
#include "vnoether/variational.hpp"

// Model definition language (.vln):
//
//   dim 2
//   metric euclidean                      # or: metric minkowski +-
//   field A[mu] even
//   ghost c odd for gauss
//   let F[mu,nu] = d[mu](A[nu]) - d[nu](A[mu])
//   lagrangian -(1/4)*F[mu,nu]*F[mu,nu]
//   identity gauss: d[nu](EL(A[nu]))
//   symmetry gauge: A[mu] <- d[mu](c)
//
// Repeated index letters in a term are summed over 0..dim-1 with the diagonal
// metric; slots of EL(...) count as upper indices, all others as lower ones.

namespace vnoether
{
    namespace model
    {
        struct Position
        {
            int line = 1;
            int column = 1;
        };

        [[noreturn]] inline void fail(const Position& at, const std::string& message)
        {
            throw ParseError(message, at.line, at.column);
        }

        // ---- lexer ---------------------------------------------------------

        enum class TokenKind
        {
            name,
            integer,
            punct,
            arrow,
            newline,
            end
        };

        struct Token
        {
            TokenKind kind = TokenKind::end;
            std::string text;
            Position at;

            bool is(const char* p) const { return (kind == TokenKind::punct || kind == TokenKind::arrow) && text == p; }
            bool is_name(const char* n) const { return kind == TokenKind::name && text == n; }
        };

        inline std::vector<Token> tokenize(const std::string& text)
        {
            std::vector<Token> out;
            int depth = 0;
            Position at;
            std::size_t i = 0;
            auto advance = [&](std::size_t n) {
                for (std::size_t k = 0; k < n; ++k) {
                    if (text[i] == '\n') {
                        ++at.line;
                        at.column = 1;
                    }
                    else if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
                        ++at.column;
                    }
                    ++i;
                }
            };
            auto continues = [&]() {
                if (out.empty()) return true;
                const Token& t = out.back();
                if (t.kind == TokenKind::newline || t.kind == TokenKind::arrow) return true;
                if (t.kind != TokenKind::punct) return false;
                if (t.text == ")" || t.text == "]") return false;
                // a minkowski signature ends its statement
                std::size_t k = out.size();
                while (k > 0 && (out[k - 1].is("+") || out[k - 1].is("-"))) --k;
                return !(k < out.size() && k > 0 && out[k - 1].is_name("minkowski"));
            };
            while (i < text.size()) {
                char ch = text[i];
                if (ch == '#') {
                    while (i < text.size() && text[i] != '\n') advance(1);
                    continue;
                }
                if (ch == '\n' || ch == ';') {
                    if (depth == 0 && !continues()) out.push_back({TokenKind::newline, "\n", at});
                    advance(1);
                    continue;
                }
                if (std::isspace(static_cast<unsigned char>(ch))) {
                    advance(1);
                    continue;
                }
                Position start = at;
                if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
                    std::size_t j = i;
                    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
                    out.push_back({TokenKind::name, text.substr(i, j - i), start});
                    advance(j - i);
                    continue;
                }
                if (std::isdigit(static_cast<unsigned char>(ch))) {
                    std::size_t j = i;
                    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                    out.push_back({TokenKind::integer, text.substr(i, j - i), start});
                    advance(j - i);
                    continue;
                }
                // U+2212 minus sign
                if (text.compare(i, 3, "\xE2\x88\x92") == 0) {
                    out.push_back({TokenKind::punct, "-", start});
                    advance(3);
                    continue;
                }
                if (ch == '<' && i + 1 < text.size() && text[i + 1] == '-') {
                    out.push_back({TokenKind::arrow, "<-", start});
                    advance(2);
                    continue;
                }
                static const std::string single = "[](),+-*/^=:";
                if (single.find(ch) == std::string::npos) fail(start, std::string("unexpected character '") + ch + "'");
                if (ch == '(' || ch == '[') ++depth;
                if (ch == ')' || ch == ']') {
                    if (depth == 0) fail(start, std::string("unbalanced '") + ch + "'");
                    --depth;
                }
                out.push_back({TokenKind::punct, std::string(1, ch), start});
                advance(1);
            }
            if (depth != 0) fail(at, "unbalanced brackets at end of input");
            out.push_back({TokenKind::end, "", at});
            return out;
        }

        // ---- syntax tree ---------------------------------------------------

        // An index slot: a letter (summed or free) or a concrete direction.
        struct IndexRef
        {
            std::string letter;
            int value = -1;
            std::string spelling;
            Position at;

            bool concrete() const noexcept { return letter.empty(); }
        };

        enum class NodeKind
        {
            number,
            name,
            derivative,
            euler_lagrange,
            add,
            sub,
            mul,
            div,
            neg,
            pow
        };

        struct Contraction
        {
            std::string letter;
            bool metric = true;
        };

        struct Node;
        using NodePtr = std::shared_ptr<Node>;

        struct Node
        {
            NodeKind kind = NodeKind::number;
            Position at;
            std::string text;
            std::vector<IndexRef> slots;
            std::vector<NodePtr> children;
            int exponent = 1;
            // letters summed at this node, filled in by the index check
            std::vector<Contraction> summed;
        };

        struct FieldDecl
        {
            std::string name;
            std::vector<std::string> slots;
            Parity parity = 0;
            Position at;
        };

        struct GhostDecl
        {
            std::string name;
            std::vector<std::string> slots;
            Parity parity = 0;
            std::string identity;
            Position at;
        };

        struct LetDecl
        {
            std::string name;
            std::vector<std::string> params;
            NodePtr body;
            Position at;
            // variance of each parameter, 1 for upper
            std::vector<int> variance;
        };

        struct IdentityDecl
        {
            std::string name;
            NodePtr body;
            Position at;
            std::vector<std::string> family;
        };

        struct SymmetryComponent
        {
            std::string target;
            std::vector<std::string> slots;
            NodePtr value;
            Position at;
        };

        struct SymmetryDecl
        {
            std::string name;
            std::vector<SymmetryComponent> components;
            Position at;
        };

        enum class MetricKind
        {
            euclidean,
            minkowski
        };
    }

    struct ModelSource
    {
        int dim = 0;
        model::MetricKind metric = model::MetricKind::euclidean;
        // diagonal entries, +1 or -1
        std::vector<int> signature;
        bool explicit_signature = false;
        std::vector<model::FieldDecl> fields;
        std::vector<model::GhostDecl> ghosts;
        std::vector<model::LetDecl> lets;
        model::NodePtr lagrangian;
        std::vector<model::IdentityDecl> identities;
        std::vector<model::SymmetryDecl> symmetries;

        std::vector<std::string> coordinate_names() const { return default_coordinate_names(dim); }
    };

    namespace model
    {
        inline const std::set<std::string>& keywords()
        {
            static const std::set<std::string> k{"dim", "metric", "field", "ghost", "let", "lagrangian", "identity",
                                                 "symmetry", "for", "even", "odd", "euclidean", "minkowski", "d", "EL"};
            return k;
        }

        // ---- parser --------------------------------------------------------

        class Parser
        {
            public:
                explicit Parser(const std::string& text)
                    : tokens_(tokenize(text))
                {
                }

                ModelSource parse()
                {
                    skip_newlines();
                    while (!peek().kind_is(TokenKind::end)) {
                        statement();
                        if (!peek().kind_is(TokenKind::end)) expect_newline();
                        skip_newlines();
                    }
                    // an empty model is a model on a line with nothing declared
                    if (src_.dim == 0) {
                        src_.dim = 1;
                        src_.signature = {1};
                    }
                    return std::move(src_);
                }

            private:
                struct Cursor
                {
                    const Token* t;
                    bool kind_is(TokenKind k) const { return t->kind == k; }
                };

                std::vector<Token> tokens_;
                std::size_t pos_ = 0;
                ModelSource src_;
                std::set<std::string> names_;

                Cursor peek(std::size_t ahead = 0) const
                {
                    return {&tokens_[std::min(pos_ + ahead, tokens_.size() - 1)]};
                }

                const Token& next()
                {
                    const Token& t = tokens_[pos_];
                    if (pos_ + 1 < tokens_.size()) ++pos_;
                    return t;
                }

                void skip_newlines()
                {
                    while (peek().kind_is(TokenKind::newline)) next();
                }

                void expect_newline()
                {
                    if (!peek().kind_is(TokenKind::newline)) fail(peek().t->at, "expected end of statement, found '" + peek().t->text + "'");
                    next();
                }

                const Token& expect(const char* p)
                {
                    if (!peek().t->is(p)) fail(peek().t->at, std::string("expected '") + p + "', found '" + describe(*peek().t) + "'");
                    return next();
                }

                static std::string describe(const Token& t)
                {
                    if (t.kind == TokenKind::end) return "end of input";
                    if (t.kind == TokenKind::newline) return "end of line";
                    return t.text;
                }

                const Token& expect_name()
                {
                    if (!peek().kind_is(TokenKind::name)) fail(peek().t->at, "expected a name, found '" + describe(*peek().t) + "'");
                    return next();
                }

                void expect_keyword(const char* k)
                {
                    if (!peek().t->is_name(k)) fail(peek().t->at, std::string("expected '") + k + "', found '" + describe(*peek().t) + "'");
                    next();
                }

                void require_dim(const Position& at)
                {
                    if (src_.dim == 0) fail(at, "'dim' must be declared before other statements");
                }

                std::string declare(const Token& t)
                {
                    if (keywords().count(t.text)) fail(t.at, "'" + t.text + "' is a reserved word");
                    for (const auto& c : src_.coordinate_names()) {
                        if (c == t.text) fail(t.at, "'" + t.text + "' is a coordinate name");
                    }
                    if (!names_.insert(t.text).second) fail(t.at, "duplicate declaration of '" + t.text + "'");
                    return t.text;
                }

                Parity parity()
                {
                    const Token& t = expect_name();
                    if (t.text == "even") return 0;
                    if (t.text == "odd") return 1;
                    fail(t.at, "expected 'even' or 'odd', found '" + t.text + "'");
                }

                std::vector<std::string> letter_slots()
                {
                    std::vector<std::string> out;
                    if (!peek().t->is("[")) return out;
                    next();
                    while (true) {
                        const Token& t = expect_name();
                        if (std::find(out.begin(), out.end(), t.text) != out.end()) fail(t.at, "slot letter '" + t.text + "' repeated");
                        out.push_back(t.text);
                        if (peek().t->is(",")) {
                            next();
                            continue;
                        }
                        expect("]");
                        return out;
                    }
                }

                IndexRef index_ref()
                {
                    const Token& t = next();
                    IndexRef r;
                    r.at = t.at;
                    r.spelling = t.text;
                    if (t.kind == TokenKind::integer) {
                        r.value = std::stoi(t.text);
                        if (r.value >= src_.dim) fail(t.at, "index " + t.text + " out of range for dim " + std::to_string(src_.dim));
                        return r;
                    }
                    if (t.kind != TokenKind::name) fail(t.at, "expected an index, found '" + describe(t) + "'");
                    auto names = src_.coordinate_names();
                    for (int k = 0; k < src_.dim; ++k) {
                        if (names[static_cast<std::size_t>(k)] == t.text) {
                            r.value = k;
                            return r;
                        }
                    }
                    r.letter = t.text;
                    return r;
                }

                std::vector<IndexRef> index_list()
                {
                    std::vector<IndexRef> out;
                    expect("[");
                    while (true) {
                        out.push_back(index_ref());
                        if (peek().t->is(",")) {
                            next();
                            continue;
                        }
                        expect("]");
                        return out;
                    }
                }

                void statement()
                {
                    const Token& kw = expect_name();
                    if (kw.text == "dim") {
                        if (src_.dim != 0) fail(kw.at, "duplicate 'dim' declaration");
                        const Token& n = next();
                        if (n.kind != TokenKind::integer || std::stoi(n.text) < 1) fail(n.at, "dim must be a positive integer");
                        src_.dim = std::stoi(n.text);
                        src_.signature.assign(static_cast<std::size_t>(src_.dim), 1);
                        return;
                    }
                    require_dim(kw.at);
                    if (kw.text == "metric") return metric();
                    if (kw.text == "field") {
                        FieldDecl f;
                        f.at = peek().t->at;
                        f.name = declare(expect_name());
                        f.slots = letter_slots();
                        f.parity = parity();
                        src_.fields.push_back(std::move(f));
                        return;
                    }
                    if (kw.text == "ghost") {
                        GhostDecl g;
                        g.at = peek().t->at;
                        g.name = declare(expect_name());
                        g.slots = letter_slots();
                        g.parity = parity();
                        expect_keyword("for");
                        g.identity = expect_name().text;
                        src_.ghosts.push_back(std::move(g));
                        return;
                    }
                    if (kw.text == "let") {
                        LetDecl l;
                        l.at = peek().t->at;
                        l.name = declare(expect_name());
                        l.params = letter_slots();
                        expect("=");
                        l.body = expression();
                        src_.lets.push_back(std::move(l));
                        return;
                    }
                    if (kw.text == "lagrangian") {
                        if (src_.lagrangian) fail(kw.at, "duplicate 'lagrangian' declaration");
                        src_.lagrangian = expression();
                        return;
                    }
                    if (kw.text == "identity") {
                        IdentityDecl d;
                        d.at = peek().t->at;
                        d.name = declare(expect_name());
                        expect(":");
                        d.body = expression();
                        src_.identities.push_back(std::move(d));
                        return;
                    }
                    if (kw.text == "symmetry") {
                        SymmetryDecl s;
                        s.at = peek().t->at;
                        s.name = declare(expect_name());
                        expect(":");
                        do {
                            SymmetryComponent c;
                            c.at = peek().t->at;
                            c.target = expect_name().text;
                            c.slots = letter_slots();
                            expect("<-");
                            c.value = expression();
                            s.components.push_back(std::move(c));
                            if (peek().t->is(",")) next();
                        } while (peek().kind_is(TokenKind::name));
                        src_.symmetries.push_back(std::move(s));
                        return;
                    }
                    fail(kw.at, "unknown statement '" + kw.text + "'");
                }

                void metric()
                {
                    const Token& kind = expect_name();
                    if (kind.text == "euclidean") {
                        src_.metric = MetricKind::euclidean;
                        src_.signature.assign(static_cast<std::size_t>(src_.dim), 1);
                        src_.explicit_signature = false;
                        return;
                    }
                    if (kind.text != "minkowski") fail(kind.at, "expected 'euclidean' or 'minkowski', found '" + kind.text + "'");
                    src_.metric = MetricKind::minkowski;
                    std::vector<int> sig;
                    Position at = peek().t->at;
                    while (peek().t->is("+") || peek().t->is("-")) sig.push_back(next().text == "+" ? 1 : -1);
                    if (sig.empty()) {
                        sig.assign(static_cast<std::size_t>(src_.dim), -1);
                        sig[0] = 1;
                        src_.explicit_signature = false;
                    }
                    else {
                        if (static_cast<int>(sig.size()) != src_.dim) fail(at, "signature length differs from dim");
                        src_.explicit_signature = true;
                    }
                    src_.signature = std::move(sig);
                }

                NodePtr make(NodeKind k, Position at, std::vector<NodePtr> children = {})
                {
                    auto n = std::make_shared<Node>();
                    n->kind = k;
                    n->at = at;
                    n->children = std::move(children);
                    return n;
                }

                NodePtr expression()
                {
                    NodePtr left = term();
                    while (peek().t->is("+") || peek().t->is("-")) {
                        const Token& op = next();
                        left = make(op.text == "+" ? NodeKind::add : NodeKind::sub, op.at, {left, term()});
                    }
                    return left;
                }

                NodePtr term()
                {
                    NodePtr left = unary();
                    while (peek().t->is("*") || peek().t->is("/")) {
                        const Token& op = next();
                        left = make(op.text == "*" ? NodeKind::mul : NodeKind::div, op.at, {left, unary()});
                    }
                    return left;
                }

                NodePtr unary()
                {
                    if (peek().t->is("-")) {
                        const Token& op = next();
                        return make(NodeKind::neg, op.at, {unary()});
                    }
                    return power();
                }

                NodePtr power()
                {
                    NodePtr base = atom();
                    if (!peek().t->is("^")) return base;
                    const Token& op = next();
                    const Token& e = next();
                    if (e.kind != TokenKind::integer) fail(e.at, "exponent must be a non-negative integer");
                    auto n = make(NodeKind::pow, op.at, {base});
                    n->exponent = std::stoi(e.text);
                    return n;
                }

                NodePtr atom()
                {
                    const Token& t = next();
                    if (t.kind == TokenKind::integer) {
                        auto n = make(NodeKind::number, t.at);
                        n->text = t.text;
                        return n;
                    }
                    if (t.is("(")) {
                        NodePtr inner = expression();
                        expect(")");
                        return inner;
                    }
                    if (t.is_name("d") && peek().t->is("[")) {
                        auto n = make(NodeKind::derivative, t.at);
                        n->slots = index_list();
                        expect("(");
                        n->children.push_back(expression());
                        expect(")");
                        return n;
                    }
                    if (t.is_name("EL")) {
                        auto n = make(NodeKind::euler_lagrange, t.at);
                        expect("(");
                        const Token& f = expect_name();
                        n->text = f.text;
                        if (peek().t->is("[")) n->slots = index_list();
                        expect(")");
                        return n;
                    }
                    if (t.kind == TokenKind::name) {
                        if (keywords().count(t.text)) fail(t.at, "unexpected keyword '" + t.text + "' in expression");
                        auto n = make(NodeKind::name, t.at);
                        n->text = t.text;
                        if (peek().t->is("[")) n->slots = index_list();
                        return n;
                    }
                    fail(t.at, "expected an expression, found '" + describe(t) + "'");
                }
        };

        // ---- index check ---------------------------------------------------

        struct Occurrence
        {
            int count = 0;
            int variance = 0;
            Position at;
        };

        struct IndexInfo
        {
            std::map<std::string, Occurrence> free;
            std::set<std::string> bound;
        };

        class Checker
        {
            public:
                explicit Checker(ModelSource& src)
                    : src_(src)
                {
                }

                void run()
                {
                    for (const auto& f : src_.fields) {
                        symbols_[f.name] = Entry{Entry::field, f.slots.size(), {}};
                    }
                    for (const auto& g : src_.ghosts) {
                        symbols_[g.name] = Entry{Entry::ghost, g.slots.size(), {}};
                    }
                    for (auto& l : src_.lets) {
                        IndexInfo info = check(*l.body, false);
                        require_free(info, l.params, l.at, "let " + l.name);
                        for (const auto& p : l.params) l.variance.push_back(info.free.at(p).variance);
                        symbols_[l.name] = Entry{Entry::let, l.params.size(), l.variance};
                    }
                    if (src_.lagrangian) {
                        IndexInfo info = check(*src_.lagrangian, false);
                        require_free(info, {}, src_.lagrangian->at, "lagrangian");
                    }
                    std::set<std::string> identity_names;
                    for (auto& d : src_.identities) {
                        IndexInfo info = check(*d.body, true);
                        d.family.clear();
                        for (const auto& [letter, occ] : info.free) d.family.push_back(letter);
                        identity_names.insert(d.name);
                    }
                    for (const auto& g : src_.ghosts) {
                        auto it = std::find_if(src_.identities.begin(), src_.identities.end(),
                                               [&](const IdentityDecl& d) { return d.name == g.identity; });
                        if (it == src_.identities.end()) fail(g.at, "ghost '" + g.name + "' refers to undeclared identity '" + g.identity + "'");
                        if (it->family.size() != g.slots.size()) {
                            fail(g.at, "ghost '" + g.name + "' has " + std::to_string(g.slots.size()) + " slots but identity '" +
                                           g.identity + "' has " + std::to_string(it->family.size()) + " free indices");
                        }
                    }
                    std::set<std::string> bound_identities;
                    for (const auto& g : src_.ghosts) {
                        if (!bound_identities.insert(g.identity).second) fail(g.at, "identity '" + g.identity + "' already has a ghost");
                    }
                    for (auto& s : src_.symmetries) {
                        std::set<std::string> targets;
                        for (auto& c : s.components) {
                            auto it = std::find_if(src_.fields.begin(), src_.fields.end(), [&](const FieldDecl& f) { return f.name == c.target; });
                            if (it == src_.fields.end()) fail(c.at, "symmetry component targets undeclared field '" + c.target + "'");
                            if (it->slots.size() != c.slots.size()) fail(c.at, "arity mismatch for field '" + c.target + "'");
                            if (!targets.insert(c.target).second) fail(c.at, "duplicate component for field '" + c.target + "'");
                            IndexInfo info = check(*c.value, false);
                            require_free(info, c.slots, c.at, "symmetry component " + c.target);
                        }
                    }
                }

            private:
                struct Entry
                {
                    enum Kind
                    {
                        field,
                        ghost,
                        let
                    } kind;
                    std::size_t arity;
                    std::vector<int> variance;
                };

                ModelSource& src_;
                std::map<std::string, Entry> symbols_;

                static void require_free(const IndexInfo& info, const std::vector<std::string>& expected, const Position& at,
                                         const std::string& what)
                {
                    std::set<std::string> want(expected.begin(), expected.end());
                    for (const auto& [letter, occ] : info.free) {
                        if (!want.count(letter)) fail(occ.at, "unbound index '" + letter + "' in " + what);
                    }
                    for (const auto& letter : want) {
                        if (!info.free.count(letter)) fail(at, "index '" + letter + "' does not occur in " + what);
                    }
                }

                // Adds one occurrence; a second one at the same node contracts.
                static void occur(IndexInfo& info, const std::string& letter, int variance, const Position& at)
                {
                    if (info.bound.count(letter)) fail(at, "index '" + letter + "' appears more than twice in a term");
                    auto& o = info.free[letter];
                    if (o.count == 0) {
                        o.at = at;
                        o.variance = variance;
                    }
                    ++o.count;
                    if (o.count > 2) fail(at, "index '" + letter + "' appears more than twice in a term");
                }

                static void contract(Node& node, IndexInfo& info, const std::map<std::string, int>& second_variance)
                {
                    for (auto it = info.free.begin(); it != info.free.end();) {
                        if (it->second.count == 2) {
                            int v2 = second_variance.at(it->first);
                            node.summed.push_back(Contraction{it->first, it->second.variance == v2});
                            info.bound.insert(it->first);
                            it = info.free.erase(it);
                        }
                        else {
                            ++it;
                        }
                    }
                }

                // Merges the occurrences of `parts` (slot lists or children) into one term.
                static IndexInfo merge(Node& node, const std::vector<std::pair<std::string, std::pair<int, Position>>>& slots,
                                       const std::vector<IndexInfo>& children)
                {
                    IndexInfo out;
                    std::map<std::string, int> second;
                    auto add = [&](const std::string& letter, int variance, const Position& at) {
                        occur(out, letter, variance, at);
                        if (out.free[letter].count == 2) second[letter] = variance;
                    };
                    for (const auto& [letter, vp] : slots) add(letter, vp.first, vp.second);
                    for (const auto& child : children) {
                        for (const auto& b : child.bound) {
                            if (out.free.count(b) || out.bound.count(b)) fail(node.at, "index '" + b + "' appears more than twice in a term");
                        }
                    }
                    for (const auto& child : children) {
                        for (const auto& [letter, occ] : child.free) {
                            for (const auto& other : children) {
                                if (&other != &child && other.bound.count(letter)) {
                                    fail(occ.at, "index '" + letter + "' appears more than twice in a term");
                                }
                            }
                            for (int k = 0; k < occ.count; ++k) add(letter, occ.variance, occ.at);
                        }
                        out.bound.insert(child.bound.begin(), child.bound.end());
                    }
                    contract(node, out, second);
                    return out;
                }

                std::vector<std::pair<std::string, std::pair<int, Position>>> slot_letters(const Node& n, const std::vector<int>& variance)
                {
                    std::vector<std::pair<std::string, std::pair<int, Position>>> out;
                    for (std::size_t k = 0; k < n.slots.size(); ++k) {
                        const auto& s = n.slots[k];
                        if (!s.concrete()) out.push_back({s.letter, {variance.empty() ? 0 : variance[k], s.at}});
                    }
                    return out;
                }

                static bool is_constant(const Node& n)
                {
                    switch (n.kind) {
                        case NodeKind::number: return true;
                        case NodeKind::name:
                        case NodeKind::derivative:
                        case NodeKind::euler_lagrange: return false;
                        default: break;
                    }
                    for (const auto& c : n.children) {
                        if (!is_constant(*c)) return false;
                    }
                    return true;
                }

                IndexInfo check(Node& n, bool allow_el)
                {
                    n.summed.clear();
                    switch (n.kind) {
                        case NodeKind::number: return {};
                        case NodeKind::name: {
                            auto names = src_.coordinate_names();
                            if (std::find(names.begin(), names.end(), n.text) != names.end()) {
                                if (!n.slots.empty()) fail(n.at, "coordinate '" + n.text + "' takes no indices");
                                return {};
                            }
                            auto it = symbols_.find(n.text);
                            if (it == symbols_.end()) fail(n.at, "undeclared symbol '" + n.text + "'");
                            if (it->second.arity != n.slots.size()) {
                                fail(n.at, "arity mismatch: '" + n.text + "' takes " + std::to_string(it->second.arity) + " indices, got " +
                                               std::to_string(n.slots.size()));
                            }
                            return merge(n, slot_letters(n, it->second.variance), {});
                        }
                        case NodeKind::euler_lagrange: {
                            if (!allow_el) fail(n.at, "EL(...) is only allowed in identity declarations");
                            auto it = symbols_.find(n.text);
                            if (it == symbols_.end() || it->second.kind != Entry::field) fail(n.at, "EL(...) needs a declared field, got '" + n.text + "'");
                            if (it->second.arity != n.slots.size()) fail(n.at, "arity mismatch for field '" + n.text + "'");
                            return merge(n, slot_letters(n, std::vector<int>(n.slots.size(), 1)), {});
                        }
                        case NodeKind::derivative: {
                            IndexInfo inner = check(*n.children[0], allow_el);
                            return merge(n, slot_letters(n, {}), {inner});
                        }
                        case NodeKind::add:
                        case NodeKind::sub: {
                            IndexInfo a = check(*n.children[0], allow_el);
                            IndexInfo b = check(*n.children[1], allow_el);
                            bool same = a.free.size() == b.free.size();
                            for (const auto& [letter, occ] : a.free) {
                                auto it = b.free.find(letter);
                                if (it == b.free.end() || it->second.variance != occ.variance) same = false;
                            }
                            if (!same) fail(n.at, "terms of a sum have different free indices");
                            a.bound.insert(b.bound.begin(), b.bound.end());
                            return a;
                        }
                        case NodeKind::mul: {
                            IndexInfo a = check(*n.children[0], allow_el);
                            IndexInfo b = check(*n.children[1], allow_el);
                            return merge(n, {}, {a, b});
                        }
                        case NodeKind::div: {
                            IndexInfo a = check(*n.children[0], allow_el);
                            if (!is_constant(*n.children[1])) fail(n.children[1]->at, "division only by constants");
                            return a;
                        }
                        case NodeKind::neg: return check(*n.children[0], allow_el);
                        case NodeKind::pow: {
                            IndexInfo a = check(*n.children[0], allow_el);
                            if (!a.free.empty()) fail(n.at, "power of an expression with free index '" + a.free.begin()->first + "'");
                            return a;
                        }
                    }
                    return {};
                }
        };
    }

    inline ModelSource parse_model(const std::string& text)
    {
        ModelSource src = model::Parser(text).parse();
        model::Checker(src).run();
        return src;
    }

    // ---- canonical printer -------------------------------------------------

    namespace model
    {
        inline int precedence(const Node& n)
        {
            switch (n.kind) {
                case NodeKind::add:
                case NodeKind::sub: return 1;
                case NodeKind::mul:
                case NodeKind::div: return 2;
                case NodeKind::neg: return 3;
                case NodeKind::pow: return 4;
                default: return 5;
            }
        }

        inline std::string print_slots(const std::vector<IndexRef>& slots)
        {
            if (slots.empty()) return "";
            std::string out = "[";
            for (std::size_t i = 0; i < slots.size(); ++i) {
                if (i) out += ",";
                out += slots[i].spelling;
            }
            return out + "]";
        }

        inline std::string print_letters(const std::vector<std::string>& slots)
        {
            if (slots.empty()) return "";
            std::string out = "[";
            for (std::size_t i = 0; i < slots.size(); ++i) {
                if (i) out += ",";
                out += slots[i];
            }
            return out + "]";
        }

        inline std::string print(const Node& n)
        {
            auto wrap = [](const Node& c, int min) {
                std::string s = print(c);
                return precedence(c) < min ? "(" + s + ")" : s;
            };
            switch (n.kind) {
                case NodeKind::number: return n.text;
                case NodeKind::name: return n.text + print_slots(n.slots);
                case NodeKind::derivative: return "d" + print_slots(n.slots) + "(" + print(*n.children[0]) + ")";
                case NodeKind::euler_lagrange: return "EL(" + n.text + print_slots(n.slots) + ")";
                case NodeKind::add: return wrap(*n.children[0], 1) + " + " + wrap(*n.children[1], 2);
                case NodeKind::sub: return wrap(*n.children[0], 1) + " - " + wrap(*n.children[1], 2);
                case NodeKind::mul: return wrap(*n.children[0], 2) + "*" + wrap(*n.children[1], 3);
                case NodeKind::div: return wrap(*n.children[0], 2) + "/" + wrap(*n.children[1], 3);
                case NodeKind::neg: return "-" + wrap(*n.children[0], 3);
                case NodeKind::pow: return wrap(*n.children[0], 5) + "^" + std::to_string(n.exponent);
            }
            return {};
        }
    }

    inline std::string print_model(const ModelSource& src)
    {
        using namespace model;
        std::ostringstream out;
        out << "dim " << src.dim << "\n";
        if (src.metric == MetricKind::euclidean) {
            out << "metric euclidean\n";
        }
        else {
            out << "metric minkowski";
            if (src.explicit_signature) {
                out << " ";
                for (int s : src.signature) out << (s > 0 ? '+' : '-');
            }
            out << "\n";
        }
        auto parity = [](Parity p) { return p ? "odd" : "even"; };
        for (const auto& f : src.fields) out << "field " << f.name << print_letters(f.slots) << " " << parity(f.parity) << "\n";
        for (const auto& g : src.ghosts) {
            out << "ghost " << g.name << print_letters(g.slots) << " " << parity(g.parity) << " for " << g.identity << "\n";
        }
        for (const auto& l : src.lets) out << "let " << l.name << print_letters(l.params) << " = " << print(*l.body) << "\n";
        if (src.lagrangian) out << "lagrangian " << print(*src.lagrangian) << "\n";
        for (const auto& d : src.identities) out << "identity " << d.name << ": " << print(*d.body) << "\n";
        for (const auto& s : src.symmetries) {
            out << "symmetry " << s.name << ":";
            for (std::size_t i = 0; i < s.components.size(); ++i) {
                const auto& c = s.components[i];
                out << (i ? ", " : " ") << c.target << print_letters(c.slots) << " <- " << print(*c.value);
            }
            out << "\n";
        }
        return out.str();
    }

    // ---- elaboration -------------------------------------------------------

    struct ModelIdentity
    {
        std::string name;
        // the declaring statement; differs from `name` for index families
        std::string declaration;
        NoetherOperator delta;
        // null when no ghost is declared for the identity
        Symbol ghost;
    };

    struct ModelSymmetry
    {
        std::string name;
        GeneralizedVectorField u;
    };

    struct ElaboratedModel
    {
        ModelSource source;
        Chart chart;
        std::vector<Symbol> fields;
        std::vector<Symbol> ghosts;
        Lagrangian lagrangian;
        std::vector<ModelIdentity> identities;
        std::vector<ModelSymmetry> symmetries;

        const ModelIdentity* identity(const std::string& name) const
        {
            for (const auto& d : identities) {
                if (d.name == name) return &d;
            }
            return nullptr;
        }

        const ModelSymmetry* symmetry(const std::string& name) const
        {
            for (const auto& s : symmetries) {
                if (s.name == name) return &s;
            }
            return nullptr;
        }
    };

    namespace model
    {
        // Name of one component of an indexed family: A[1] -> A1, A[0,1] -> A01.
        inline std::string component_name(const std::string& base, const std::vector<int>& values, int dim)
        {
            std::string out = base;
            for (int v : values) out += (dim > 10 ? "_" : "") + std::to_string(v);
            return out;
        }

        // Every assignment of `letters` to 0..dim-1, first letter slowest.
        inline std::vector<std::vector<int>> assignments(std::size_t letters, int dim)
        {
            std::vector<std::vector<int>> out;
            std::vector<int> cur(letters, 0);
            while (true) {
                out.push_back(cur);
                std::size_t i = letters;
                while (i > 0) {
                    --i;
                    if (++cur[i] < dim) break;
                    cur[i] = 0;
                    if (i == 0) return out;
                }
                if (letters == 0) return out;
            }
        }

        class Elaborator
        {
            public:
                Elaborator(const ModelSource& src, int jet_cap)
                    : src_(src), chart_{src.dim, jet_cap}, coordinates_(default_coordinates(src.dim))
                {
                }

                ElaboratedModel run()
                {
                    ElaboratedModel m;
                    m.source = src_;
                    m.chart = chart_;
                    for (const auto& f : src_.fields) {
                        for (const auto& values : assignments(f.slots.size(), src_.dim)) {
                            Symbol s = make_field(component_name(f.name, values, src_.dim), f.parity);
                            fields_[s->name] = s;
                            m.fields.push_back(s);
                        }
                    }
                    for (const auto& g : src_.ghosts) {
                        for (const auto& values : assignments(g.slots.size(), src_.dim)) {
                            Symbol s = make_ghost(component_name(g.name, values, src_.dim), g.parity);
                            ghosts_[s->name] = s;
                            m.ghosts.push_back(s);
                        }
                    }
                    for (const auto& l : src_.lets) lets_[l.name] = &l;

                    Poly density = src_.lagrangian ? eval(*src_.lagrangian, {}) : Poly();
                    m.lagrangian = Lagrangian{density, chart_, m.fields};

                    for (const auto& d : src_.identities) {
                        const GhostDecl* ghost = nullptr;
                        for (const auto& g : src_.ghosts) {
                            if (g.identity == d.name) ghost = &g;
                        }
                        for (const auto& values : assignments(d.family.size(), src_.dim)) {
                            Env env;
                            for (std::size_t k = 0; k < values.size(); ++k) env[d.family[k]] = values[k];
                            ModelIdentity id;
                            id.name = d.family.empty() ? d.name : component_name(d.name, values, src_.dim);
                            id.declaration = d.name;
                            Poly phi = eval(*d.body, env);
                            try {
                                id.delta = noether_operator_from_density(phi, m.fields, id.name);
                            }
                            catch (const UnsupportedError&) {
                                fail(d.at, "identity '" + id.name + "' is not linear in EL(...)");
                            }
                            if (ghost) {
                                id.ghost = ghosts_.at(component_name(ghost->name, values, src_.dim));
                                try {
                                    check_ghost_parity(id.delta, id.ghost);
                                }
                                catch (const DeclarationError& e) {
                                    fail(ghost->at, e.what());
                                }
                            }
                            m.identities.push_back(std::move(id));
                        }
                    }

                    for (const auto& s : src_.symmetries) {
                        ModelSymmetry sym;
                        sym.name = s.name;
                        for (const auto& c : s.components) {
                            for (const auto& values : assignments(c.slots.size(), src_.dim)) {
                                Env env;
                                for (std::size_t k = 0; k < values.size(); ++k) env[c.slots[k]] = values[k];
                                sym.u.set_vertical(fields_.at(component_name(c.target, values, src_.dim)), eval(*c.value, env));
                            }
                        }
                        m.symmetries.push_back(std::move(sym));
                    }
                    return m;
                }

            private:
                using Env = std::map<std::string, int>;

                const ModelSource& src_;
                Chart chart_;
                std::vector<Symbol> coordinates_;
                std::map<std::string, Symbol> fields_;
                std::map<std::string, Symbol> ghosts_;
                std::map<std::string, const LetDecl*> lets_;

                int resolve(const IndexRef& r, const Env& env) const
                {
                    if (r.concrete()) return r.value;
                    auto it = env.find(r.letter);
                    if (it == env.end()) fail(r.at, "unbound index '" + r.letter + "'");
                    return it->second;
                }

                std::vector<int> resolve(const std::vector<IndexRef>& slots, const Env& env) const
                {
                    std::vector<int> out;
                    for (const auto& s : slots) out.push_back(resolve(s, env));
                    return out;
                }

                Poly eval(const Node& n, const Env& env)
                {
                    if (n.summed.empty()) return eval_here(n, env);
                    Poly out;
                    for (const auto& values : assignments(n.summed.size(), src_.dim)) {
                        Env inner = env;
                        Rational factor = 1;
                        for (std::size_t k = 0; k < values.size(); ++k) {
                            inner[n.summed[k].letter] = values[k];
                            if (n.summed[k].metric) factor *= src_.signature[static_cast<std::size_t>(values[k])];
                        }
                        out += factor * eval_here(n, inner);
                    }
                    return out;
                }

                Poly eval_here(const Node& n, const Env& env)
                {
                    switch (n.kind) {
                        case NodeKind::number: return Poly(Rational(n.text));
                        case NodeKind::name: {
                            for (int k = 0; k < src_.dim; ++k) {
                                if (coordinates_[static_cast<std::size_t>(k)]->name == n.text) {
                                    return Poly::variable(jet(coordinates_[static_cast<std::size_t>(k)]));
                                }
                            }
                            auto values = resolve(n.slots, env);
                            if (auto it = lets_.find(n.text); it != lets_.end()) {
                                Env inner;
                                for (std::size_t k = 0; k < values.size(); ++k) inner[it->second->params[k]] = values[k];
                                return eval(*it->second->body, inner);
                            }
                            std::string flat = component_name(n.text, values, src_.dim);
                            if (auto it = fields_.find(flat); it != fields_.end()) return Poly::variable(jet(it->second));
                            return Poly::variable(jet(ghosts_.at(flat)));
                        }
                        case NodeKind::euler_lagrange: {
                            auto values = resolve(n.slots, env);
                            return Poly::variable(jet(make_antifield(fields_.at(component_name(n.text, values, src_.dim)))));
                        }
                        case NodeKind::derivative: {
                            auto values = resolve(n.slots, env);
                            std::vector<std::uint8_t> entries(values.begin(), values.end());
                            return total_derivative(eval(*n.children[0], env), MultiIndex(entries), chart_);
                        }
                        case NodeKind::add: return eval(*n.children[0], env) + eval(*n.children[1], env);
                        case NodeKind::sub: return eval(*n.children[0], env) - eval(*n.children[1], env);
                        case NodeKind::mul: return eval(*n.children[0], env) * eval(*n.children[1], env);
                        case NodeKind::div: {
                            Poly d = eval(*n.children[1], env);
                            if (d.is_zero()) fail(n.children[1]->at, "division by zero");
                            return eval(*n.children[0], env) * (Rational(1) / d.terms().begin()->second);
                        }
                        case NodeKind::neg: return -eval(*n.children[0], env);
                        case NodeKind::pow: return pow(eval(*n.children[0], env), n.exponent);
                    }
                    return {};
                }
        };
    }

    inline ElaboratedModel elaborate(const ModelSource& src, int jet_cap = 6)
    {
        return model::Elaborator(src, jet_cap).run();
    }

    inline ElaboratedModel load_model(const std::string& text, int jet_cap = 6)
    {
        return elaborate(parse_model(text), jet_cap);
    }
}
