#ifndef PRIVCHECK_GRAPHS_HPP
#define PRIVCHECK_GRAPHS_HPP

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "embedding.hpp"
#include "error.hpp"
#include "text.hpp"

namespace privcheck {

/// Directed child -> parent subsumption edges. Multiple parents are allowed.
class SubsumptionGraph {
public:
    void add_vertex(const std::string& label) { parents_.try_emplace(label); }

    /// Returns false when the edge was already present.
    bool add_edge(const std::string& child, const std::string& parent) {
        add_vertex(parent);
        return parents_[child].insert(parent).second;
    }

    bool contains(std::string_view label) const { return parents_.find(label) != parents_.end(); }

    /// Reflexive reachability along parent edges.
    bool is_subsumed_by(std::string_view x, std::string_view y) const {
        if (x == y) return true;
        if (!contains(x) || !contains(y)) return false;
        std::set<std::string_view> seen{x};
        std::vector<std::string_view> frontier{x};
        while (!frontier.empty()) {
            auto cur = frontier.back();
            frontier.pop_back();
            for (const auto& p : parents_.find(cur)->second) {
                if (p == y) return true;
                if (seen.insert(p).second) frontier.push_back(p);
            }
        }
        return false;
    }

    std::vector<std::string> vertices() const {
        std::vector<std::string> out;
        out.reserve(parents_.size());
        for (const auto& [v, _] : parents_) out.push_back(v);
        return out;
    }

    const std::set<std::string>& parents_of(std::string_view label) const {
        static const std::set<std::string> none;
        auto it = parents_.find(label);
        return it == parents_.end() ? none : it->second;
    }

    std::vector<std::pair<std::string, std::string>> edges() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [c, ps] : parents_) {
            for (const auto& p : ps) out.emplace_back(c, p);
        }
        return out;
    }

    std::size_t vertex_count() const { return parents_.size(); }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& [_, ps] : parents_) n += ps.size();
        return n;
    }

    /// A vertex on some cycle, if one exists.
    std::optional<std::string> find_cycle() const {
        enum class Mark { Fresh, Open, Done };
        std::map<std::string_view, Mark> mark;
        for (const auto& [v, _] : parents_) mark[v] = Mark::Fresh;
        for (const auto& [start, _] : parents_) {
            if (mark[start] != Mark::Fresh) continue;
            // Iterative DFS; each frame holds the vertex and its next parent.
            std::vector<std::pair<std::string_view, std::set<std::string>::const_iterator>> stack;
            stack.emplace_back(start, parents_.find(start)->second.begin());
            mark[start] = Mark::Open;
            while (!stack.empty()) {
                auto& [v, it] = stack.back();
                const auto& ps = parents_.find(v)->second;
                if (it == ps.end()) {
                    mark[v] = Mark::Done;
                    stack.pop_back();
                    continue;
                }
                std::string_view p = *it++;
                if (mark[p] == Mark::Open) return std::string(p);
                if (mark[p] == Mark::Fresh) {
                    mark[p] = Mark::Open;
                    stack.emplace_back(p, parents_.find(p)->second.begin());
                }
            }
        }
        return std::nullopt;
    }

    bool operator==(const SubsumptionGraph&) const = default;

private:
    std::map<std::string, std::set<std::string>, std::less<>> parents_;
};

// ---------------------------------------------------------------------------
// Role graph
// ---------------------------------------------------------------------------

inline constexpr std::string_view kRoleRoot = "person.n.01";

struct RoleGraph {
    std::string root = std::string(kRoleRoot);
    SubsumptionGraph graph;
    std::set<std::string> unresolved;
    std::map<std::string, std::string> aliases;  // normalized surface -> vertex
    std::vector<std::string> notes;

    bool is_subsumed_by(std::string_view x, std::string_view y) const { return graph.is_subsumed_by(x, y); }

    /// Vertex for a surface role string, by exact label or recorded alias.
    std::optional<std::string> resolve(std::string_view surface) const {
        if (graph.contains(surface)) return std::string(surface);
        auto norm = text::normalize_term(surface);
        if (graph.contains(norm)) return norm;
        if (auto it = aliases.find(norm); it != aliases.end()) return it->second;
        return std::nullopt;
    }

    bool operator==(const RoleGraph& o) const {
        return root == o.root && graph == o.graph && unresolved == o.unresolved && aliases == o.aliases;
    }
};

/// Source of role hypernyms (a WordNet-derived table in practice).
class TaxonomyProvider {
public:
    virtual ~TaxonomyProvider() = default;
    virtual std::vector<std::string> hypernyms(const std::string& label) const = 0;
    /// Candidate labels for a surface string, preferred sense first.
    virtual std::vector<std::string> lookup(const std::string& surface) const = 0;
};

/// "word.n.01" -> "word"; underscores become spaces. Other labels pass through.
inline std::string label_lemma(std::string_view label) {
    auto dot = label.find('.');
    std::string lemma(label);
    if (dot != std::string_view::npos) {
        auto rest = label.substr(dot + 1);
        auto dot2 = rest.find('.');
        if (dot2 != std::string_view::npos && dot2 > 0 && dot2 + 1 < rest.size()) lemma = std::string(label.substr(0, dot));
    }
    std::replace(lemma.begin(), lemma.end(), '_', ' ');
    return lemma;
}

/// Taxonomy backed by child/parent pairs.
class TableTaxonomy final : public TaxonomyProvider {
public:
    TableTaxonomy() = default;
    explicit TableTaxonomy(const std::vector<std::pair<std::string, std::string>>& pairs) {
        for (const auto& [c, p] : pairs) add(c, p);
    }

    void add(const std::string& child, const std::string& parent) {
        auto& ps = parents_[child];
        if (std::find(ps.begin(), ps.end(), parent) == ps.end()) ps.push_back(parent);
        parents_.try_emplace(parent);
    }

    std::vector<std::string> hypernyms(const std::string& label) const override {
        auto it = parents_.find(label);
        return it == parents_.end() ? std::vector<std::string>{} : it->second;
    }

    std::vector<std::string> lookup(const std::string& surface) const override {
        const auto norm = text::normalize_term(surface);
        std::vector<std::string> exact;
        std::vector<std::string> senses;
        for (const auto& [label, _] : parents_) {
            if (text::normalize_term(label) == norm) {
                exact.push_back(label);
            } else if (text::normalize_term(label_lemma(label)) == norm) {
                senses.push_back(label);
            }
        }
        exact.insert(exact.end(), senses.begin(), senses.end());
        return exact;
    }

private:
    std::map<std::string, std::vector<std::string>> parents_;
};

namespace detail {

inline std::vector<std::vector<std::string>> read_tsv(std::istream& in, std::size_t min_columns, std::string_view what) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto cols = text::split(t, '\t');
        for (auto& c : cols) c = std::string(text::trim(c));
        if (cols.size() < min_columns) {
            throw Error(Errc::MalformedRecord, std::string(what) + " line " + std::to_string(lineno));
        }
        rows.push_back(std::move(cols));
    }
    return rows;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return in;
}

}  // namespace detail

/// Line-delimited "child<TAB>parent".
inline TableTaxonomy load_taxonomy(std::istream& in) {
    TableTaxonomy tax;
    for (const auto& row : detail::read_tsv(in, 2, "taxonomy")) tax.add(row[0], row[1]);
    return tax;
}

inline TableTaxonomy load_taxonomy_file(const std::string& path) {
    auto in = detail::open_input(path);
    return load_taxonomy(in);
}

/// Defined role name and its member roles, in definition order.
using DefinedRoles = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// Line-delimited "defined role<TAB>member role"; rows sharing a name accumulate.
inline DefinedRoles load_defined_roles(std::istream& in) {
    DefinedRoles out;
    for (const auto& row : detail::read_tsv(in, 2, "defined roles")) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == row[0]; });
        if (it == out.end()) {
            out.emplace_back(row[0], std::vector<std::string>{});
            it = std::prev(out.end());
        }
        it->second.push_back(row[1]);
    }
    return out;
}

/// Align surface roles to the taxonomy and climb hypernyms toward the root.
/// Roles the taxonomy does not know, and chains that never reach the root,
/// are kept and flagged unresolved. Defined roles whose members are already
/// present become vertices above those members.
inline RoleGraph build_role_graph(const std::vector<std::string>& roles, const TaxonomyProvider& tax,
                                  const DefinedRoles& defined_roles = {}, std::string root = std::string(kRoleRoot)) {
    RoleGraph g;
    g.root = std::move(root);
    g.graph.add_vertex(g.root);

    std::map<std::string, int> state;  // 1 = on stack, 2 = finished
    auto climb = [&](const std::string& start) {
        std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
        std::map<std::string, std::vector<std::string>> memo;
        g.graph.add_vertex(start);
        if (state[start] == 2) return;
        state[start] = 1;
        while (!stack.empty()) {
            auto& [label, next] = stack.back();
            auto& ps = memo.try_emplace(label, tax.hypernyms(label)).first->second;
            if (next == ps.size()) {
                state[label] = 2;
                stack.pop_back();
                continue;
            }
            auto parent = ps[next++];
            g.graph.add_edge(label, parent);
            if (state[parent] == 1) throw Error(Errc::CyclicTaxonomy, label + " -> " + parent);
            if (state[parent] == 0) {
                state[parent] = 1;
                stack.emplace_back(parent, 0);
            }
        }
    };

    auto align = [&](const std::string& surface) -> std::optional<std::string> {
        const auto norm = text::normalize_term(surface);
        if (norm.empty()) return std::nullopt;
        auto labels = tax.lookup(surface);
        if (labels.empty()) {
            g.graph.add_vertex(norm);
            g.aliases[norm] = norm;
            return norm;
        }
        if (labels.size() > 1) {
            std::string alts;
            for (std::size_t i = 1; i < labels.size(); ++i) alts += (i > 1 ? ", " : "") + labels[i];
            g.notes.push_back("'" + surface + "' -> " + labels[0] + " (alternatives: " + alts + ")");
        }
        climb(labels[0]);
        g.aliases[norm] = labels[0];
        return labels[0];
    };

    for (const auto& r : roles) align(r);

    for (const auto& [name, members] : defined_roles) {
        std::vector<std::string> present;
        for (const auto& m : members) {
            if (auto v = g.resolve(m)) {
                present.push_back(*v);
                continue;
            }
            for (const auto& l : tax.lookup(m)) {
                if (g.graph.contains(l)) {
                    present.push_back(l);
                    break;
                }
            }
        }
        if (present.empty()) {
            g.notes.push_back("defined role '" + name + "' skipped: no member in graph");
            continue;
        }
        std::string label;
        if (auto known = tax.lookup(name); !known.empty()) {
            label = *align(name);
        } else {
            label = text::normalize_term(name);
            g.graph.add_edge(label, g.root);
            g.aliases[label] = label;
        }
        for (const auto& m : present) {
            if (m != label) g.graph.add_edge(m, label);
        }
    }
    if (auto v = g.graph.find_cycle()) throw Error(Errc::CyclicTaxonomy, "cycle through " + *v);

    for (const auto& v : g.graph.vertices()) {
        if (!g.graph.is_subsumed_by(v, g.root)) g.unresolved.insert(v);
    }
    return g;
}

struct RoleMatch {
    std::string label;
    double similarity = 0.0;
};

/// Text used to embed a vertex label.
inline std::string vertex_text(std::string_view label) { return label_lemma(label); }

/// Vertex whose label embedding is most similar to `surface`; ties go to the
/// lexicographically smallest label. Zero vectors score 0.
inline RoleMatch nearest_role(const RoleGraph& g, const std::string& surface, EmbeddingProvider& embedder) {
    const auto labels = g.graph.vertices();
    if (labels.empty()) throw Error(Errc::EmptyGraph, "role graph has no vertices");
    std::vector<std::string> texts{surface};
    for (const auto& l : labels) texts.push_back(vertex_text(l));
    const auto vecs = embedder.embed(texts);
    RoleMatch best{labels.front(), -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double s = cosine_or_zero(vecs[0], vecs[i + 1]);
        if (s > best.similarity) best = {labels[i], s};
    }
    return best;
}

// ---------------------------------------------------------------------------
// Attribute graph
// ---------------------------------------------------------------------------

enum class EdgeKind { ClassClass, ClassIndividual };

inline std::string_view edge_kind_name(EdgeKind k) {
    return k == EdgeKind::ClassClass ? "class-class" : "class-individual";
}

inline EdgeKind parse_edge_kind(std::string_view s) {
    auto n = text::normalize_term(s);
    if (n == "class-class") return EdgeKind::ClassClass;
    if (n == "class-individual") return EdgeKind::ClassIndividual;
    throw Error(Errc::MalformedRecord, "unknown edge kind '" + std::string(s) + "'");
}

struct OntologyRecord {
    std::string child;
    std::string parent;
    EdgeKind kind = EdgeKind::ClassClass;
};

struct AttributeGraph {
    SubsumptionGraph graph;
    std::map<std::pair<std::string, std::string>, EdgeKind> kinds;

    bool is_subsumed_by(std::string_view x, std::string_view y) const { return graph.is_subsumed_by(x, y); }
    bool operator==(const AttributeGraph&) const = default;
};

/// Deduplicates records; rejects any cycle.
inline AttributeGraph ingest_attribute_ontology(const std::vector<OntologyRecord>& records) {
    AttributeGraph g;
    for (const auto& r : records) {
        if (r.child == r.parent) throw Error(Errc::CycleDetected, "self edge on " + r.child);
        if (g.graph.add_edge(r.child, r.parent)) g.kinds.emplace(std::pair{r.child, r.parent}, r.kind);
    }
    if (auto v = g.graph.find_cycle()) throw Error(Errc::CycleDetected, "cycle through " + *v);
    return g;
}

/// Line-delimited "child<TAB>parent[<TAB>class-class|class-individual]".
inline std::vector<OntologyRecord> load_ontology(std::istream& in) {
    std::vector<OntologyRecord> out;
    for (const auto& row : detail::read_tsv(in, 2, "ontology")) {
        out.push_back({row[0], row[1], row.size() > 2 ? parse_edge_kind(row[2]) : EdgeKind::ClassClass});
    }
    return out;
}

}  // namespace privcheck

#endif
