#pragma once

#include <string>
#include <vector>

namespace csd {

// Hierarchical label: a path of tokens, printed with ";" separators
// ("A1;00;^").  Tokens themselves never contain ";".  Components of joined
// or nested structures get fresh prefix tokens.
struct Label {
    std::vector<std::string> toks;

    Label() = default;
    explicit Label(std::vector<std::string> t) : toks(std::move(t)) {}
    // "A;B" parses into two tokens; a lone token stays whole.
    Label(const char* s) { *this = parse(s); }
    Label(const std::string& s) { *this = parse(s); }

    static Label parse(const std::string& s) {
        Label l;
        if (s.empty()) return l;
        size_t start = 0;
        while (true) {
            size_t sep = s.find(';', start);
            if (sep == std::string::npos) {
                l.toks.push_back(s.substr(start));
                break;
            }
            l.toks.push_back(s.substr(start, sep - start));
            start = sep + 1;
        }
        return l;
    }

    std::string str() const {
        std::string s;
        for (size_t i = 0; i < toks.size(); ++i) {
            if (i) s += ';';
            s += toks[i];
        }
        return s;
    }

    bool empty() const { return toks.empty(); }
    size_t size() const { return toks.size(); }

    Label prefixed(const std::string& tok) const {
        Label l;
        l.toks.reserve(toks.size() + 1);
        l.toks.push_back(tok);
        l.toks.insert(l.toks.end(), toks.begin(), toks.end());
        return l;
    }
    bool has_prefix(const std::string& tok) const { return !toks.empty() && toks[0] == tok; }
    Label without_prefix() const {
        Label l;
        l.toks.assign(toks.begin() + 1, toks.end());
        return l;
    }
    Label appended(const Label& tail) const {
        Label l = *this;
        l.toks.insert(l.toks.end(), tail.toks.begin(), tail.toks.end());
        return l;
    }

    // Single token encoding this whole path, for use inside another label
    // ("L;2" -> "@L,2").  Used to anchor stashed copies at a leaf.
    std::string as_anchor_token() const {
        std::string s = "@";
        for (size_t i = 0; i < toks.size(); ++i) {
            if (i) s += ',';
            s += toks[i];
        }
        return s;
    }

    bool operator==(const Label& o) const { return toks == o.toks; }
    bool operator!=(const Label& o) const { return toks != o.toks; }
    bool operator<(const Label& o) const { return toks < o.toks; }
};

} // namespace csd
