#ifndef PRIVCHECK_REGDOC_HPP
#define PRIVCHECK_REGDOC_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace privcheck {

// ---------------------------------------------------------------------------
// Regulation identifiers
// ---------------------------------------------------------------------------

/// CFR-style identifier such as `164.502(a)(1)(i)`. Segments are stored
/// lowercased; each is either all digits or all letters.
struct RegulationId {
    std::uint32_t part = 0;
    std::uint32_t section = 0;
    std::vector<std::string> segments;

    std::string str() const {
        std::string out = std::to_string(part) + "." + std::to_string(section);
        for (const auto& seg : segments) {
            out += '(';
            out += seg;
            out += ')';
        }
        return out;
    }

    std::size_t depth() const { return segments.size(); }

    /// Identifier with the last segment removed. Only meaningful when depth() > 0.
    RegulationId parent() const {
        RegulationId p = *this;
        if (!p.segments.empty()) p.segments.pop_back();
        return p;
    }

    bool extends(const RegulationId& ancestor) const {
        if (part != ancestor.part || section != ancestor.section) return false;
        if (ancestor.segments.size() > segments.size()) return false;
        for (std::size_t i = 0; i < ancestor.segments.size(); ++i) {
            if (segments[i] != ancestor.segments[i]) return false;
        }
        return true;
    }

    bool operator==(const RegulationId&) const = default;

    /// Numeric segments sort numerically and before alphabetic ones.
    std::strong_ordering operator<=>(const RegulationId& other) const {
        if (auto c = part <=> other.part; c != 0) return c;
        if (auto c = section <=> other.section; c != 0) return c;
        const auto n = std::min(segments.size(), other.segments.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (auto c = compare_segment(segments[i], other.segments[i]); c != 0) return c;
        }
        return segments.size() <=> other.segments.size();
    }

private:
    static std::strong_ordering compare_segment(const std::string& a, const std::string& b) {
        const bool da = !a.empty() && text::is_digit(a[0]);
        const bool db = !b.empty() && text::is_digit(b[0]);
        if (da != db) return da ? std::strong_ordering::less : std::strong_ordering::greater;
        if (da) {
            auto strip = [](const std::string& s) {
                auto p = s.find_first_not_of('0');
                return p == std::string::npos ? std::string_view{} : std::string_view(s).substr(p);
            };
            auto sa = strip(a);
            auto sb = strip(b);
            if (auto c = sa.size() <=> sb.size(); c != 0) return c;
            if (auto c = sa.compare(sb); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
        }
        auto c = a.compare(b);
        if (c == 0) return std::strong_ordering::equal;
        return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    }
};

namespace detail {

inline bool valid_segment(std::string_view seg) {
    if (seg.empty()) return false;
    bool all_digits = true;
    bool all_alpha = true;
    for (char c : seg) {
        all_digits = all_digits && text::is_digit(c);
        all_alpha = all_alpha && text::is_alpha(c);
    }
    return all_digits || all_alpha;
}

inline std::optional<std::uint32_t> parse_positive(std::string_view digits) {
    if (digits.empty() || digits.size() > 9) return std::nullopt;
    std::uint32_t v = 0;
    for (char c : digits) v = v * 10 + static_cast<std::uint32_t>(c - '0');
    if (v == 0) return std::nullopt;
    return v;
}

struct IdMatch {
    RegulationId id;
    std::size_t length = 0;
};

/// Longest identifier starting exactly at `pos`, if any.
inline std::optional<IdMatch> match_id_at(std::string_view s, std::size_t pos) {
    std::size_t i = pos;
    const std::size_t n = s.size();
    auto digit_run = [&](std::size_t from) {
        std::size_t j = from;
        while (j < n && text::is_digit(s[j])) ++j;
        return j;
    };
    std::size_t part_end = digit_run(i);
    if (part_end == i || part_end >= n || s[part_end] != '.') return std::nullopt;
    std::size_t sec_end = digit_run(part_end + 1);
    if (sec_end == part_end + 1) return std::nullopt;
    auto part = parse_positive(s.substr(i, part_end - i));
    auto section = parse_positive(s.substr(part_end + 1, sec_end - part_end - 1));
    if (!part || !section) return std::nullopt;

    IdMatch m;
    m.id.part = *part;
    m.id.section = *section;
    i = sec_end;
    while (i < n && s[i] == '(') {
        auto close = s.find(')', i + 1);
        if (close == std::string_view::npos) break;
        auto seg = s.substr(i + 1, close - i - 1);
        if (!valid_segment(seg)) break;
        m.id.segments.push_back(text::to_lower(seg));
        i = close + 1;
    }
    m.length = i - pos;
    return m;
}

inline std::string_view strip_section_sign(std::string_view s) {
    constexpr std::string_view sign = "\xC2\xA7";
    s = text::trim(s);
    while (s.substr(0, sign.size()) == sign) s = text::trim(s.substr(sign.size()));
    return s;
}

}  // namespace detail

/// Parse an identifier; surrounding whitespace and leading section signs are ignored.
inline RegulationId parse_regulation_id(std::string_view raw) {
    auto s = detail::strip_section_sign(raw);
    if (s.empty()) throw Error(Errc::MalformedId, "empty identifier");
    auto m = detail::match_id_at(s, 0);
    if (m && m->length == s.size()) return std::move(m->id);

    std::string why;
    const auto open = std::count(s.begin(), s.end(), '(');
    const auto close = std::count(s.begin(), s.end(), ')');
    if (s.find('.') == std::string_view::npos) {
        why = "no dot";
    } else if (open != close) {
        why = "unbalanced parentheses";
    } else if (s.find("()") != std::string_view::npos) {
        why = "empty segment";
    } else {
        why = "does not match <part>.<section>(<segment>)*";
    }
    throw Error(Errc::MalformedId, "'" + std::string(raw) + "': " + why);
}

inline std::optional<RegulationId> try_parse_regulation_id(std::string_view raw) {
    auto s = detail::strip_section_sign(raw);
    if (s.empty()) return std::nullopt;
    auto m = detail::match_id_at(s, 0);
    if (m && m->length == s.size()) return std::move(m->id);
    return std::nullopt;
}

/// Every maximal identifier in `text`, left to right. Duplicates are kept.
inline std::vector<RegulationId> extract_references(std::string_view input) {
    std::vector<RegulationId> out;
    std::size_t i = 0;
    while (i < input.size()) {
        if (!text::is_digit(input[i]) || (i > 0 && text::is_digit(input[i - 1]))) {
            ++i;
            continue;
        }
        if (auto m = detail::match_id_at(input, i)) {
            out.push_back(std::move(m->id));
            i += m->length;
        } else {
            ++i;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Document tree
// ---------------------------------------------------------------------------

struct RegulationNode {
    std::string key;                    // canonical id, or the root label
    std::optional<RegulationId> id;     // absent only for the root
    std::string text;
    std::vector<std::string> children;  // document order
    std::vector<RegulationId> references;
    std::optional<std::string> parent;

    bool is_leaf() const { return children.empty(); }
    bool operator==(const RegulationNode&) const = default;
};

struct TreeStats {
    std::size_t internal_count = 0;
    std::size_t leaf_count = 0;
    std::size_t edge_count = 0;
    std::size_t cross_reference_count = 0;

    bool operator==(const TreeStats&) const = default;
};

struct DocumentTree {
    std::string root;
    std::map<std::string, RegulationNode, std::less<>> nodes;
    TreeStats stats;

    const RegulationNode* find(std::string_view key) const {
        auto it = nodes.find(key);
        return it == nodes.end() ? nullptr : &it->second;
    }

    const RegulationNode& node(std::string_view key) const {
        if (const auto* n = find(key)) return *n;
        throw Error(Errc::UnknownNode, std::string(key));
    }

    bool contains(std::string_view key) const { return nodes.find(key) != nodes.end(); }

    /// Node keys in depth-first document order, root first.
    std::vector<std::string> preorder() const {
        std::vector<std::string> order;
        if (!contains(root)) return order;
        std::vector<const RegulationNode*> stack{&node(root)};
        while (!stack.empty()) {
            const auto* n = stack.back();
            stack.pop_back();
            order.push_back(n->key);
            for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&node(*it));
        }
        return order;
    }

    /// Regulation leaves in document order. The root is never reported.
    std::vector<std::string> leaves() const {
        std::vector<std::string> out;
        for (auto& key : preorder()) {
            if (key != root && node(key).is_leaf()) out.push_back(std::move(key));
        }
        return out;
    }

    bool operator==(const DocumentTree&) const = default;
};

/// Counts over every node, root included, so internal + leaf == edges + 1.
inline TreeStats tree_stats(const DocumentTree& tree) {
    TreeStats s;
    for (const auto& [key, n] : tree.nodes) {
        if (n.children.empty()) {
            ++s.leaf_count;
        } else {
            ++s.internal_count;
        }
        s.edge_count += n.children.size();
        s.cross_reference_count += n.references.size();
    }
    return s;
}

/// Throws CorruptPayload on broken parent/child links or id containment.
inline void validate_tree(const DocumentTree& tree) {
    auto fail = [](const std::string& why) { throw Error(Errc::CorruptPayload, "document tree: " + why); };
    const auto* root = tree.find(tree.root);
    if (!root) fail("missing root '" + tree.root + "'");
    if (root->parent || root->id) fail("root has a parent or an id");
    for (const auto& [key, n] : tree.nodes) {
        if (n.key != key) fail("key mismatch at '" + key + "'");
        if (key == tree.root) continue;
        if (!n.id || n.id->str() != key) fail("node '" + key + "' has no matching canonical id");
        if (!n.parent) fail("node '" + key + "' has no parent");
        const auto* p = tree.find(*n.parent);
        if (!p) fail("node '" + key + "' has unknown parent");
        if (std::count(p->children.begin(), p->children.end(), key) != 1) fail("parent of '" + key + "' does not list it once");
        if (p->id) {
            if (n.id->depth() != p->id->depth() + 1 || !n.id->extends(*p->id)) fail("'" + key + "' does not extend its parent");
        } else if (n.id->depth() != 0) {
            fail("'" + key + "' attached to root but has segments");
        }
    }
    for (const auto& [key, n] : tree.nodes) {
        for (const auto& c : n.children) {
            const auto* child = tree.find(c);
            if (!child || child->parent != key) fail("child '" + c + "' of '" + key + "' does not point back");
        }
    }
    if (tree.preorder().size() != tree.nodes.size()) fail("unreachable nodes");
}

namespace detail {

inline RegulationNode& ensure_node(DocumentTree& tree, const RegulationId& id) {
    auto key = id.str();
    if (auto it = tree.nodes.find(key); it != tree.nodes.end()) return it->second;
    std::string parent_key = id.depth() == 0 ? tree.root : ensure_node(tree, id.parent()).key;
    RegulationNode n;
    n.key = key;
    n.id = id;
    n.parent = parent_key;
    tree.nodes.at(parent_key).children.push_back(key);
    return tree.nodes.emplace(key, std::move(n)).first->second;
}

/// Identifier that opens a clause line, with the offset where its text starts.
inline std::optional<std::pair<RegulationId, std::size_t>> clause_head(std::string_view line) {
    auto body = strip_section_sign(line);
    if (body.empty() || !text::is_digit(body[0])) return std::nullopt;
    auto m = match_id_at(body, 0);
    if (!m) return std::nullopt;
    if (m->length < body.size()) {
        char next = body[m->length];
        if (!text::is_space(next) && next != ':') return std::nullopt;
    }
    const auto offset = static_cast<std::size_t>(body.data() - line.data()) + m->length;
    return std::pair{std::move(m->id), offset};
}

}  // namespace detail

/// Build the document tree from a plain-text export with one clause per line,
/// each line opening with its full identifier. Lines without a leading
/// identifier continue the previous clause. Missing ancestors are created
/// with empty text.
inline DocumentTree parse_document(std::string_view input, std::string root_label = "HIPAA") {
    if (try_parse_regulation_id(root_label)) throw Error(Errc::InvalidArgument, "root label must not be an identifier");
    DocumentTree tree;
    tree.root = root_label;
    RegulationNode root_node;
    root_node.key = root_label;
    tree.nodes.emplace(root_label, std::move(root_node));

    std::map<std::string, bool, std::less<>> explicit_ids;
    RegulationNode* current = nullptr;
    for (auto line : text::split_lines(input)) {
        auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (auto head = detail::clause_head(trimmed)) {
            auto key = head->first.str();
            if (explicit_ids.contains(key)) throw Error(Errc::DuplicateIdentifier, key);
            explicit_ids.emplace(key, true);
            current = &detail::ensure_node(tree, head->first);
            auto rest = text::trim(trimmed.substr(head->second));
            if (!rest.empty() && rest.front() == ':') rest = text::trim(rest.substr(1));
            current->text = std::string(rest);
        } else if (current) {
            if (!current->text.empty()) current->text += ' ';
            current->text += trimmed;
        }
    }
    if (explicit_ids.empty()) throw Error(Errc::NoIdentifiersFound, "input contains no clause identifiers");
    for (auto& [key, n] : tree.nodes) n.references = extract_references(n.text);
    tree.stats = tree_stats(tree);
    return tree;
}

/// Inverse of parse_document: one line per regulation node in document order.
inline std::string render_document(const DocumentTree& tree) {
    std::string out;
    for (const auto& key : tree.preorder()) {
        if (key == tree.root) continue;
        const auto& n = tree.node(key);
        out += key;
        if (!n.text.empty()) {
            out += ' ';
            out += n.text;
        }
        out += '\n';
    }
    return out;
}

/// Root-to-node clause texts joined by single spaces, empty texts skipped.
inline std::string node_specification(const DocumentTree& tree, std::string_view key) {
    std::vector<const RegulationNode*> path;
    for (const auto* n = &tree.node(key);; n = &tree.node(*n->parent)) {
        path.push_back(n);
        if (!n->parent) break;
    }
    std::string out;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        if ((*it)->text.empty()) continue;
        if (!out.empty()) out += ' ';
        out += (*it)->text;
    }
    return out;
}

inline std::string full_specification(const DocumentTree& tree, std::string_view leaf) {
    const auto& n = tree.node(leaf);
    if (!n.is_leaf()) throw Error(Errc::NotALeaf, std::string(leaf));
    return node_specification(tree, leaf);
}

}  // namespace privcheck

#endif
