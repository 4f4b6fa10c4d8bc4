#ifndef PRIVCHECK_CHECKLIST_HPP
#define PRIVCHECK_CHECKLIST_HPP

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "graphs.hpp"
#include "regdoc.hpp"
#include "text.hpp"

namespace privcheck {

using json = nlohmann::ordered_json;

enum class NormType { Positive, Negative, GeneralDefinition };
enum class ConsentForm { None, Consent, Authorization };
enum class Tristate { Yes, No, NotSure };
enum class RelationKind { Support, Exception };

inline std::string_view to_string(NormType t) {
    switch (t) {
    case NormType::Positive: return "positive";
    case NormType::Negative: return "negative";
    case NormType::GeneralDefinition: return "general_definition";
    }
    return "";
}
inline std::string_view to_string(ConsentForm c) {
    switch (c) {
    case ConsentForm::None: return "none";
    case ConsentForm::Consent: return "consent";
    case ConsentForm::Authorization: return "authorization";
    }
    return "";
}
inline std::string_view to_string(Tristate t) {
    switch (t) {
    case Tristate::Yes: return "yes";
    case Tristate::No: return "no";
    case Tristate::NotSure: return "not_sure";
    }
    return "";
}
inline std::string_view to_string(RelationKind k) { return k == RelationKind::Support ? "support" : "exception"; }

namespace detail {
template <typename E, std::size_t N>
E enum_from(std::string_view s, const E (&all)[N], std::string_view what) {
    for (E e : all) {
        if (to_string(e) == s) return e;
    }
    throw Error(Errc::CorruptPayload, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}
}  // namespace detail

inline NormType parse_norm_type(std::string_view s) {
    static constexpr NormType all[] = {NormType::Positive, NormType::Negative, NormType::GeneralDefinition};
    return detail::enum_from(s, all, "norm type");
}
inline ConsentForm parse_consent_form(std::string_view s) {
    static constexpr ConsentForm all[] = {ConsentForm::None, ConsentForm::Consent, ConsentForm::Authorization};
    return detail::enum_from(s, all, "consent form");
}
inline Tristate parse_tristate(std::string_view s) {
    static constexpr Tristate all[] = {Tristate::Yes, Tristate::No, Tristate::NotSure};
    return detail::enum_from(s, all, "tristate");
}
inline RelationKind parse_relation_kind(std::string_view s) {
    static constexpr RelationKind all[] = {RelationKind::Support, RelationKind::Exception};
    return detail::enum_from(s, all, "relation kind");
}

/// Contextual-integrity description of one information flow.
struct CICharacteristics {
    std::optional<std::string> sender;
    std::optional<std::string> sender_role;
    std::optional<std::string> recipient;
    std::optional<std::string> recipient_role;
    std::optional<std::string> subject;
    std::optional<std::string> subject_role;
    std::optional<std::string> information_type;
    std::optional<std::string> purpose;
    ConsentForm consent_form = ConsentForm::None;
    Tristate sender_is_subject = Tristate::NotSure;
    Tristate recipient_is_subject = Tristate::NotSure;

    bool operator==(const CICharacteristics&) const = default;

    bool has_roles() const { return sender_role || recipient_role || subject_role; }
};

/// Authorization claimed without a stated purpose. Flagged, never rejected.
inline bool authorization_lacks_evidence(const CICharacteristics& ci) {
    return ci.consent_form == ConsentForm::Authorization && (!ci.purpose || text::trim(*ci.purpose).empty());
}

struct ReferenceRelation {
    RegulationId target;
    RelationKind kind = RelationKind::Support;
    bool dangling = false;       // target not present in the tree
    bool informational = false;  // attached to a general definition

    bool operator==(const ReferenceRelation&) const = default;
};

struct Provenance {
    std::string annotator;
    std::string transcript_key;

    bool operator==(const Provenance&) const = default;
};

struct NormAnnotation {
    RegulationId leaf;
    NormType norm_type = NormType::GeneralDefinition;
    std::optional<CICharacteristics> characteristics;  // present iff not a general definition
    std::vector<ReferenceRelation> reference_relations;
    Provenance provenance;
    std::vector<std::string> flags;

    bool operator==(const NormAnnotation&) const = default;
};

/// Term -> definition, terms lowercased with whitespace collapsed.
class DefinitionDictionary {
public:
    /// Returns false if the term was already defined; the first definition wins.
    bool add(std::string_view term, std::string definition) {
        auto key = text::normalize_term(term);
        if (key.empty()) throw Error(Errc::InvalidArgument, "empty definition term");
        return entries_.emplace(std::move(key), std::move(definition)).second;
    }

    std::optional<std::string> lookup(std::string_view term) const {
        auto it = entries_.find(text::normalize_term(term));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    const std::map<std::string, std::string>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool operator==(const DefinitionDictionary&) const = default;

private:
    std::map<std::string, std::string> entries_;
};

/// Two-column "term<TAB>definition" text.
inline DefinitionDictionary load_definitions(std::istream& in) {
    DefinitionDictionary d;
    for (const auto& row : detail::read_tsv(in, 2, "definitions")) d.add(row[0], row[1]);
    return d;
}

struct Checklist {
    DocumentTree tree;
    std::map<std::string, NormAnnotation> annotations;  // keyed by canonical leaf id
    RoleGraph role_graph;
    AttributeGraph attribute_graph;
    DefinitionDictionary definitions;

    bool operator==(const Checklist&) const = default;
};

inline Checklist make_checklist(DocumentTree tree) {
    Checklist c;
    c.tree = std::move(tree);
    return c;
}

inline bool verify_id(const Checklist& c, const RegulationId& id) { return c.tree.contains(id.str()); }

/// Accepts any spelling parse_regulation_id accepts; malformed ids are simply absent.
inline bool verify_id(const Checklist& c, std::string_view id) {
    auto parsed = try_parse_regulation_id(id);
    return parsed && verify_id(c, *parsed);
}

/// Annotated leaves of the given type in document order.
inline std::vector<RegulationId> norms_by_type(const Checklist& c, NormType t) {
    std::vector<RegulationId> out;
    for (const auto& key : c.tree.leaves()) {
        auto it = c.annotations.find(key);
        if (it != c.annotations.end() && it->second.norm_type == t) out.push_back(it->second.leaf);
    }
    return out;
}

/// Positive and negative norms in document order.
inline std::vector<RegulationId> norm_leaves(const Checklist& c) {
    std::vector<RegulationId> out;
    for (const auto& key : c.tree.leaves()) {
        auto it = c.annotations.find(key);
        if (it != c.annotations.end() && it->second.norm_type != NormType::GeneralDefinition) out.push_back(it->second.leaf);
    }
    return out;
}

inline std::optional<std::string> lookup_definition(const Checklist& c, std::string_view term) {
    return c.definitions.lookup(term);
}

/// Every annotated sender/recipient/subject role, first occurrence order.
inline std::vector<std::string> annotated_roles(const Checklist& c) {
    std::vector<std::string> out;
    auto push = [&](const std::optional<std::string>& r) {
        if (r && std::find(out.begin(), out.end(), *r) == out.end()) out.push_back(*r);
    };
    for (const auto& key : c.tree.leaves()) {
        auto it = c.annotations.find(key);
        if (it == c.annotations.end() || !it->second.characteristics) continue;
        const auto& ci = *it->second.characteristics;
        push(ci.sender_role);
        push(ci.recipient_role);
        push(ci.subject_role);
    }
    return out;
}

inline void validate_checklist(const Checklist& c) {
    validate_tree(c.tree);
    for (const auto& [key, a] : c.annotations) {
        if (a.leaf.str() != key) throw Error(Errc::CorruptPayload, "annotation key mismatch at " + key);
        const auto* n = c.tree.find(key);
        if (!n || !n->is_leaf()) throw Error(Errc::CorruptPayload, "annotation on non-leaf " + key);
        if (a.characteristics.has_value() == (a.norm_type == NormType::GeneralDefinition)) {
            throw Error(Errc::CorruptPayload, "characteristics presence does not match norm type at " + key);
        }
    }
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline constexpr int kChecklistSchemaVersion = 1;

namespace detail {

inline json opt_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

inline std::optional<std::string> opt_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::string>();
}

inline json ci_to_json(const CICharacteristics& ci) {
    return json{{"sender", opt_json(ci.sender)},
                {"sender_role", opt_json(ci.sender_role)},
                {"recipient", opt_json(ci.recipient)},
                {"recipient_role", opt_json(ci.recipient_role)},
                {"subject", opt_json(ci.subject)},
                {"subject_role", opt_json(ci.subject_role)},
                {"information_type", opt_json(ci.information_type)},
                {"purpose", opt_json(ci.purpose)},
                {"consent_form", to_string(ci.consent_form)},
                {"sender_is_subject", to_string(ci.sender_is_subject)},
                {"recipient_is_subject", to_string(ci.recipient_is_subject)}};
}

inline CICharacteristics ci_from_json(const json& j) {
    CICharacteristics ci;
    ci.sender = opt_from(j.at("sender"));
    ci.sender_role = opt_from(j.at("sender_role"));
    ci.recipient = opt_from(j.at("recipient"));
    ci.recipient_role = opt_from(j.at("recipient_role"));
    ci.subject = opt_from(j.at("subject"));
    ci.subject_role = opt_from(j.at("subject_role"));
    ci.information_type = opt_from(j.at("information_type"));
    ci.purpose = opt_from(j.at("purpose"));
    ci.consent_form = parse_consent_form(j.at("consent_form").get<std::string>());
    ci.sender_is_subject = parse_tristate(j.at("sender_is_subject").get<std::string>());
    ci.recipient_is_subject = parse_tristate(j.at("recipient_is_subject").get<std::string>());
    return ci;
}

inline RegulationId id_from_json(const json& j) {
    auto id = try_parse_regulation_id(j.get<std::string>());
    if (!id) throw Error(Errc::CorruptPayload, "bad identifier " + j.dump());
    return *id;
}

}  // namespace detail

inline json tree_to_json(const DocumentTree& tree) {
    json nodes = json::array();
    for (const auto& key : tree.preorder()) {
        const auto& n = tree.node(key);
        json refs = json::array();
        for (const auto& r : n.references) refs.push_back(r.str());
        nodes.push_back(json{{"key", n.key},
                             {"parent", n.parent ? json(*n.parent) : json(nullptr)},
                             {"text", n.text},
                             {"children", n.children},
                             {"references", refs}});
    }
    return json{{"root", tree.root}, {"nodes", nodes}};
}

inline DocumentTree tree_from_json(const json& j) {
    DocumentTree tree;
    tree.root = j.at("root").get<std::string>();
    for (const auto& jn : j.at("nodes")) {
        RegulationNode n;
        n.key = jn.at("key").get<std::string>();
        if (n.key != tree.root) n.id = detail::id_from_json(jn.at("key"));
        if (!jn.at("parent").is_null()) n.parent = jn.at("parent").get<std::string>();
        n.text = jn.at("text").get<std::string>();
        n.children = jn.at("children").get<std::vector<std::string>>();
        for (const auto& r : jn.at("references")) n.references.push_back(detail::id_from_json(r));
        auto key = n.key;
        if (!tree.nodes.emplace(key, std::move(n)).second) throw Error(Errc::CorruptPayload, "duplicate node " + key);
    }
    validate_tree(tree);
    tree.stats = tree_stats(tree);
    return tree;
}

inline json role_graph_to_json(const RoleGraph& g) {
    json edges = json::array();
    for (const auto& [c, p] : g.graph.edges()) edges.push_back(json::array({c, p}));
    return json{{"root", g.root},
                {"vertices", g.graph.vertices()},
                {"edges", edges},
                {"unresolved", g.unresolved},
                {"aliases", g.aliases},
                {"notes", g.notes}};
}

inline RoleGraph role_graph_from_json(const json& j) {
    RoleGraph g;
    g.root = j.at("root").get<std::string>();
    for (const auto& v : j.at("vertices")) g.graph.add_vertex(v.get<std::string>());
    for (const auto& e : j.at("edges")) g.graph.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    g.unresolved = j.at("unresolved").get<std::set<std::string>>();
    g.aliases = j.at("aliases").get<std::map<std::string, std::string>>();
    g.notes = j.at("notes").get<std::vector<std::string>>();
    return g;
}

inline json attribute_graph_to_json(const AttributeGraph& g) {
    json edges = json::array();
    for (const auto& [c, p] : g.graph.edges()) {
        auto it = g.kinds.find({c, p});
        edges.push_back(json{{"child", c},
                             {"parent", p},
                             {"kind", edge_kind_name(it == g.kinds.end() ? EdgeKind::ClassClass : it->second)}});
    }
    return json{{"vertices", g.graph.vertices()}, {"edges", edges}};
}

inline AttributeGraph attribute_graph_from_json(const json& j) {
    AttributeGraph g;
    for (const auto& v : j.at("vertices")) g.graph.add_vertex(v.get<std::string>());
    for (const auto& e : j.at("edges")) {
        auto c = e.at("child").get<std::string>();
        auto p = e.at("parent").get<std::string>();
        g.graph.add_edge(c, p);
        g.kinds[{c, p}] = parse_edge_kind(e.at("kind").get<std::string>());
    }
    if (g.graph.find_cycle()) throw Error(Errc::CorruptPayload, "attribute graph has a cycle");
    return g;
}

inline json annotation_to_json(const NormAnnotation& a) {
    json rels = json::array();
    for (const auto& r : a.reference_relations) {
        rels.push_back(json{{"target", r.target.str()},
                            {"kind", to_string(r.kind)},
                            {"dangling", r.dangling},
                            {"informational", r.informational}});
    }
    return json{{"leaf", a.leaf.str()},
                {"norm_type", to_string(a.norm_type)},
                {"characteristics", a.characteristics ? detail::ci_to_json(*a.characteristics) : json(nullptr)},
                {"reference_relations", rels},
                {"provenance", json{{"annotator", a.provenance.annotator}, {"transcript_key", a.provenance.transcript_key}}},
                {"flags", a.flags}};
}

inline NormAnnotation annotation_from_json(const json& j) {
    NormAnnotation a;
    a.leaf = detail::id_from_json(j.at("leaf"));
    a.norm_type = parse_norm_type(j.at("norm_type").get<std::string>());
    if (!j.at("characteristics").is_null()) a.characteristics = detail::ci_from_json(j.at("characteristics"));
    for (const auto& r : j.at("reference_relations")) {
        a.reference_relations.push_back({detail::id_from_json(r.at("target")),
                                         parse_relation_kind(r.at("kind").get<std::string>()),
                                         r.at("dangling").get<bool>(), r.at("informational").get<bool>()});
    }
    a.provenance.annotator = j.at("provenance").at("annotator").get<std::string>();
    a.provenance.transcript_key = j.at("provenance").at("transcript_key").get<std::string>();
    a.flags = j.at("flags").get<std::vector<std::string>>();
    return a;
}

inline json checklist_to_json(const Checklist& c) {
    json annotations = json::array();
    for (const auto& [key, a] : c.annotations) annotations.push_back(annotation_to_json(a));
    json defs = json::object();
    for (const auto& [t, d] : c.definitions.entries()) defs[t] = d;
    auto stats = tree_stats(c.tree);
    return json{{"schema_version", kChecklistSchemaVersion},
                {"stats", json{{"internal_count", stats.internal_count},
                               {"leaf_count", stats.leaf_count},
                               {"edge_count", stats.edge_count},
                               {"cross_reference_count", stats.cross_reference_count}}},
                {"tree", tree_to_json(c.tree)},
                {"annotations", annotations},
                {"role_graph", role_graph_to_json(c.role_graph)},
                {"attribute_graph", attribute_graph_to_json(c.attribute_graph)},
                {"definitions", defs}};
}

inline Checklist checklist_from_json(const json& j) {
    if (!j.is_object() || !j.contains("schema_version") || !j.at("schema_version").is_number_integer()) {
        throw Error(Errc::CorruptPayload, "missing schema_version");
    }
    const auto version = j.at("schema_version").get<int>();
    if (version != kChecklistSchemaVersion) {
        throw Error(Errc::SchemaVersionMismatch,
                    "expected " + std::to_string(kChecklistSchemaVersion) + ", found " + std::to_string(version));
    }
    try {
        Checklist c;
        c.tree = tree_from_json(j.at("tree"));
        for (const auto& ja : j.at("annotations")) {
            auto a = annotation_from_json(ja);
            auto key = a.leaf.str();
            c.annotations.emplace(std::move(key), std::move(a));
        }
        c.role_graph = role_graph_from_json(j.at("role_graph"));
        c.attribute_graph = attribute_graph_from_json(j.at("attribute_graph"));
        for (const auto& [t, d] : j.at("definitions").items()) c.definitions.add(t, d.get<std::string>());
        validate_checklist(c);
        return c;
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptPayload, e.what());
    }
}

inline void save_checklist(const Checklist& c, std::ostream& out) { out << checklist_to_json(c).dump(2) << '\n'; }

inline Checklist load_checklist(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptPayload, e.what());
    }
    return checklist_from_json(j);
}

inline void save_checklist_file(const Checklist& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    save_checklist(c, out);
}

inline Checklist load_checklist_file(const std::string& path) {
    auto in = detail::open_input(path);
    return load_checklist(in);
}

}  // namespace privcheck

#endif
