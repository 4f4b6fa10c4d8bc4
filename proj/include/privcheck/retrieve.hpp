#ifndef PRIVCHECK_RETRIEVE_HPP
#define PRIVCHECK_RETRIEVE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "checklist.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "graphs.hpp"
#include "llm_gateway.hpp"
#include "prompts.hpp"
#include "regdoc.hpp"
#include "text.hpp"

namespace privcheck {

using text::tokenize;

enum class RetrievalMethod { BM25, Embedding, Agent };

inline std::string_view to_string(RetrievalMethod m) {
    switch (m) {
    case RetrievalMethod::BM25: return "bm25";
    case RetrievalMethod::Embedding: return "embedding";
    case RetrievalMethod::Agent: return "agent";
    }
    return "";
}

struct RetrievalHit {
    RegulationId leaf;
    double score = 0.0;
    RetrievalMethod method = RetrievalMethod::BM25;

    bool operator==(const RetrievalHit&) const = default;
};

/// Score descending, then id ascending.
inline bool hit_before(const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.leaf < b.leaf;
}

inline void sort_hits(std::vector<RetrievalHit>& hits) { std::sort(hits.begin(), hits.end(), hit_before); }

// ---------------------------------------------------------------------------
// Corpora
// ---------------------------------------------------------------------------

/// Canonical leaf id -> text.
using Corpus = std::map<std::string, std::string>;

/// Full specifications of annotated norms (positive and negative), or of
/// every leaf when `all_leaves` is set.
inline Corpus norm_corpus(const Checklist& c, bool all_leaves = false) {
    Corpus out;
    if (all_leaves) {
        for (const auto& key : c.tree.leaves()) out.emplace(key, full_specification(c.tree, key));
    } else {
        for (const auto& id : norm_leaves(c)) out.emplace(id.str(), full_specification(c.tree, id.str()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// BM25
// ---------------------------------------------------------------------------

struct Bm25Doc {
    RegulationId id;
    std::map<std::string, std::size_t> tf;
    std::size_t length = 0;
};

struct Bm25Index {
    std::vector<Bm25Doc> docs;  // ascending id
    std::map<std::string, std::size_t> position;
    std::map<std::string, std::size_t> df;
    std::size_t N = 0;
    double avgdl = 0.0;
    double k1 = 1.5;
    double b = 0.75;

    double idf(const std::string& w) const {
        auto it = df.find(w);
        const double n = it == df.end() ? 0.0 : static_cast<double>(it->second);
        return std::log(1.0 + (static_cast<double>(N) - n + 0.5) / (n + 0.5));
    }

    const Bm25Doc& doc(std::string_view id) const {
        auto it = position.find(std::string(id));
        if (it == position.end()) throw Error(Errc::UnknownDoc, std::string(id));
        return docs[it->second];
    }
};

inline Bm25Index build_bm25_index(const Corpus& corpus, double k1 = 1.5, double b = 0.75) {
    if (corpus.empty()) throw Error(Errc::EmptyCorpus, "BM25 corpus is empty");
    if (!(k1 > 0.0)) throw Error(Errc::InvalidArgument, "k1 must be positive");
    if (b < 0.0 || b > 1.0) throw Error(Errc::InvalidArgument, "b must lie in [0, 1]");
    Bm25Index idx;
    idx.k1 = k1;
    idx.b = b;
    for (const auto& [key, body] : corpus) {
        Bm25Doc d;
        d.id = parse_regulation_id(key);
        for (auto& tok : tokenize(body)) {
            ++d.tf[tok];
            ++d.length;
        }
        idx.docs.push_back(std::move(d));
    }
    std::sort(idx.docs.begin(), idx.docs.end(), [](const Bm25Doc& x, const Bm25Doc& y) { return x.id < y.id; });
    double total = 0.0;
    for (std::size_t i = 0; i < idx.docs.size(); ++i) {
        const auto& d = idx.docs[i];
        if (!idx.position.emplace(d.id.str(), i).second) throw Error(Errc::DuplicateIdentifier, d.id.str());
        for (const auto& [w, _] : d.tf) ++idx.df[w];
        total += static_cast<double>(d.length);
    }
    idx.N = idx.docs.size();
    idx.avgdl = total / static_cast<double>(idx.N);
    return idx;
}

namespace detail {

inline double bm25_term(const Bm25Index& idx, const std::string& w, const Bm25Doc& d) {
    auto it = d.tf.find(w);
    if (it == d.tf.end()) return 0.0;
    const double f = static_cast<double>(it->second);
    const double norm = idx.k1 * (1.0 - idx.b + idx.b * static_cast<double>(d.length) / idx.avgdl);
    return idx.idf(w) * f * (idx.k1 + 1.0) / (f + norm);
}

}  // namespace detail

inline double bm25_word_score(const Bm25Index& idx, const std::string& w, std::string_view doc_id) {
    return detail::bm25_term(idx, w, idx.doc(doc_id));
}

inline double bm25_word_score(const Bm25Index& idx, const std::string& w, const RegulationId& doc_id) {
    return bm25_word_score(idx, w, doc_id.str());
}

/// Sum of per-token scores over the query (repeated tokens count each time).
inline double bm25_similarity(const Bm25Index& idx, const std::vector<std::string>& query_tokens, std::string_view doc_id) {
    const auto& d = idx.doc(doc_id);
    double s = 0.0;
    for (const auto& w : query_tokens) s += detail::bm25_term(idx, w, d);
    return s;
}

/// Top-k documents for the query. An empty query yields no hits.
inline std::vector<RetrievalHit> bm25_query(const Bm25Index& idx, std::string_view query, std::size_t k) {
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be positive");
    const auto tokens = tokenize(query);
    if (tokens.empty()) return {};
    std::vector<RetrievalHit> hits;
    hits.reserve(idx.docs.size());
    for (const auto& d : idx.docs) {
        double s = 0.0;
        for (const auto& w : tokens) s += detail::bm25_term(idx, w, d);
        hits.push_back({d.id, s, RetrievalMethod::BM25});
    }
    sort_hits(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// ---------------------------------------------------------------------------
// Embedding retrieval
// ---------------------------------------------------------------------------

enum class CandidateMode {
    Filter,  // rank only norms whose roles match the event's
    Union,   // role-matched norms first, then the rest by similarity
};

struct EmbeddingRetrieveOptions {
    std::size_t k = 5;
    double tau = 0.6;
    CandidateMode mode = CandidateMode::Filter;
};

struct MatchedRole {
    std::string surface;
    std::string vertex;
    double similarity = 0.0;
};

struct EmbeddingRetrieval {
    std::vector<RetrievalHit> hits;
    std::vector<MatchedRole> matched;
    std::vector<std::string> unmatched;  // surface roles below tau
    std::size_t candidates = 0;
    bool fallback = false;  // ranked over all norms
};

/// Event roles mapped onto role-graph vertices: exact or alias hits first,
/// otherwise the nearest vertex when it clears tau.
inline void match_event_roles(const RoleGraph& g, const CICharacteristics& ci, EmbeddingProvider& embedder, double tau,
                              EmbeddingRetrieval& out) {
    for (const auto* r : {&ci.sender_role, &ci.recipient_role, &ci.subject_role}) {
        if (!*r || text::trim(**r).empty()) continue;
        if (auto v = g.resolve(**r)) {
            out.matched.push_back({**r, *v, 1.0});
            continue;
        }
        if (g.graph.vertex_count() == 0) {
            out.unmatched.push_back(**r);
            continue;
        }
        auto m = nearest_role(g, **r, embedder);
        if (m.similarity >= tau) {
            out.matched.push_back({**r, m.label, m.similarity});
        } else {
            out.unmatched.push_back(**r);
        }
    }
}

inline EmbeddingRetrieval embedding_retrieve_detailed(const Checklist& c, const CICharacteristics& ci, std::string_view event_text,
                                                      EmbeddingProvider& embedder, const EmbeddingRetrieveOptions& opts = {}) {
    if (opts.k == 0) throw Error(Errc::InvalidArgument, "k must be positive");
    EmbeddingRetrieval out;
    match_event_roles(c.role_graph, ci, embedder, opts.tau, out);

    const auto norms = norm_leaves(c);
    if (norms.empty()) return out;

    auto role_matches = [&](const std::optional<std::string>& norm_role) {
        if (!norm_role) return false;
        auto v = c.role_graph.resolve(*norm_role);
        if (!v) return false;
        return std::any_of(out.matched.begin(), out.matched.end(),
                           [&](const MatchedRole& m) { return c.role_graph.is_subsumed_by(m.vertex, *v); });
    };
    std::vector<bool> is_candidate(norms.size(), false);
    for (std::size_t i = 0; i < norms.size(); ++i) {
        const auto& a = c.annotations.at(norms[i].str());
        if (a.characteristics) is_candidate[i] = role_matches(a.characteristics->sender_role) || role_matches(a.characteristics->recipient_role);
        if (is_candidate[i]) ++out.candidates;
    }
    if (out.candidates == 0) {
        out.fallback = true;
        is_candidate.assign(norms.size(), true);
    }

    std::vector<std::string> texts{std::string(event_text)};
    for (const auto& id : norms) texts.push_back(full_specification(c.tree, id.str()));
    const auto vecs = embedder.embed(texts);
    if (vecs.size() != texts.size()) throw Error(Errc::DimensionMismatch, "embedding provider returned wrong vector count");

    std::vector<RetrievalHit> primary, rest;
    for (std::size_t i = 0; i < norms.size(); ++i) {
        RetrievalHit h{norms[i], cosine_or_zero(vecs[0], vecs[i + 1]), RetrievalMethod::Embedding};
        (is_candidate[i] ? primary : rest).push_back(std::move(h));
    }
    sort_hits(primary);
    out.hits = std::move(primary);
    if (opts.mode == CandidateMode::Union && out.hits.size() < opts.k) {
        sort_hits(rest);
        for (auto& h : rest) {
            if (out.hits.size() >= opts.k) break;
            out.hits.push_back(std::move(h));
        }
    }
    if (out.hits.size() > opts.k) out.hits.resize(opts.k);
    return out;
}

inline std::vector<RetrievalHit> embedding_retrieve(const Checklist& c, const CICharacteristics& ci, std::string_view event_text,
                                                    EmbeddingProvider& embedder, const EmbeddingRetrieveOptions& opts = {}) {
    return embedding_retrieve_detailed(c, ci, event_text, embedder, opts).hits;
}

// ---------------------------------------------------------------------------
// LLM-assisted retrieval
// ---------------------------------------------------------------------------

/// Model paraphrase of the event in regulatory terms; used verbatim as a BM25 query.
inline std::string llm_explanation(Gateway& gw, std::string_view event, std::string_view regulation = "HIPAA") {
    return gw.ask(prompts::explanation(event, regulation)).content;
}

/// Ids named in an agent reply that exist in the tree, first mention only,
/// at most max_n. Scores are 1/rank.
inline std::vector<RetrievalHit> verified_agent_hits(const Checklist& c, std::string_view reply, std::size_t max_n) {
    std::vector<RetrievalHit> hits;
    std::vector<RegulationId> seen;
    for (auto& id : extract_references(reply)) {
        if (hits.size() >= max_n) break;
        if (std::find(seen.begin(), seen.end(), id) != seen.end()) continue;
        seen.push_back(id);
        if (!verify_id(c, id)) continue;
        hits.push_back({id, 1.0 / static_cast<double>(hits.size() + 1), RetrievalMethod::Agent});
    }
    return hits;
}

inline std::vector<RetrievalHit> agent_retrieve(Gateway& gw, const Checklist& c, std::string_view event, std::size_t max_n,
                                                std::string_view regulation = "HIPAA") {
    if (max_n == 0) return {};
    const auto reply = gw.ask(prompts::agent_ids(event, max_n, regulation));
    return verified_agent_hits(c, reply.content, max_n);
}

}  // namespace privcheck

#endif
