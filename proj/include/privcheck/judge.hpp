#ifndef PRIVCHECK_JUDGE_HPP
#define PRIVCHECK_JUDGE_HPP

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "annotate.hpp"
#include "checklist.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "llm_gateway.hpp"
#include "parallel.hpp"
#include "prompts.hpp"
#include "retrieve.hpp"
#include "text.hpp"

namespace privcheck {

enum class Label { Permit, Prohibit, NotApplicable, ParseFailure };

inline std::string_view to_string(Label l) {
    switch (l) {
    case Label::Permit: return "Permit";
    case Label::Prohibit: return "Prohibit";
    case Label::NotApplicable: return "Not Applicable";
    case Label::ParseFailure: return "ParseFailure";
    }
    return "";
}

inline Label parse_label(std::string_view s) {
    if (s == "Permit") return Label::Permit;
    if (s == "Prohibit") return Label::Prohibit;
    if (s == "Not Applicable") return Label::NotApplicable;
    if (s == "ParseFailure") return Label::ParseFailure;
    throw Error(Errc::MalformedRecord, "unknown label '" + std::string(s) + "'");
}

enum class CaseKind { Real, Synthetic };

inline std::string_view to_string(CaseKind k) { return k == CaseKind::Real ? "real" : "synthetic"; }

struct CaseRecord {
    std::string id;
    std::string context;
    Label gold = Label::NotApplicable;
    CaseKind kind = CaseKind::Real;
    std::vector<RegulationId> references;
};

enum class Method { DP, CoTAuto, CoTManual, AgentID, Bm25Content, CiEsContent };

inline constexpr Method kAllMethods[] = {Method::DP, Method::CoTAuto, Method::CoTManual,
                                         Method::AgentID, Method::Bm25Content, Method::CiEsContent};

inline std::string_view to_string(Method m) {
    switch (m) {
    case Method::DP: return "dp";
    case Method::CoTAuto: return "cot-auto";
    case Method::CoTManual: return "cot-manual";
    case Method::AgentID: return "agent-id";
    case Method::Bm25Content: return "bm25-content";
    case Method::CiEsContent: return "ci-es-content";
    }
    return "";
}

inline Method parse_method(std::string_view s) {
    for (auto m : kAllMethods) {
        if (to_string(m) == s) return m;
    }
    throw Error(Errc::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

inline bool uses_checklist(Method m) { return m == Method::AgentID || m == Method::Bm25Content || m == Method::CiEsContent; }

struct Judgment {
    std::string case_id;
    Method method = Method::DP;
    Label predicted = Label::ParseFailure;
    std::vector<RetrievalHit> hits;           // retrieved, before filtering
    std::vector<RegulationId> kept;           // survivors of the law filter
    std::vector<std::string> transcript_keys;  // request hashes, in call order
    std::string note;

    bool operator==(const Judgment&) const = default;
};

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

/// Last "Choice: X" line wins. A -> Prohibit, B -> Permit, C -> NotApplicable.
inline Label parse_choice(std::string_view raw) {
    static const std::regex re(R"([Cc][Hh][Oo][Ii][Cc][Ee]\s*:\s*\**\s*\[?\s*\(?([ABC])(?![A-Za-z]))");
    std::optional<char> last;
    for (auto line : text::split_lines(raw)) {
        std::string l(line);
        std::smatch m;
        if (std::regex_search(l, m, re)) last = m[1].str()[0];
    }
    if (!last) return Label::ParseFailure;
    switch (*last) {
    case 'A': return Label::Prohibit;
    case 'B': return Label::Permit;
    default: return Label::NotApplicable;
    }
}

enum class FilterDecision { Keep, Drop, None };

inline std::string_view to_string(FilterDecision d) {
    switch (d) {
    case FilterDecision::Keep: return "keep";
    case FilterDecision::Drop: return "drop";
    case FilterDecision::None: return "none";
    }
    return "";
}

/// Decided by the first yes / no / none token; anything else drops.
inline FilterDecision parse_filter_reply(std::string_view raw) {
    for (const auto& tok : tokenize(raw)) {
        if (tok == "yes") return FilterDecision::Keep;
        if (tok == "no") return FilterDecision::Drop;
        if (tok == "none") return FilterDecision::None;
    }
    return FilterDecision::Drop;
}

inline FilterDecision law_filter(Gateway& gw, std::string_view event, std::string_view candidate_text,
                                 std::string_view regulation = "HIPAA", std::string* request_hash = nullptr) {
    auto reply = gw.ask(prompts::law_filter(event, candidate_text, regulation));
    if (request_hash) *request_hash = reply.provider_meta.value("request_hash", std::string());
    return parse_filter_reply(reply.content);
}

// ---------------------------------------------------------------------------
// Reference blocks
// ---------------------------------------------------------------------------

struct ReferenceEntry {
    RegulationId id;
    std::string content;
};

/// Cuts entries to a common length cap so the total content fits `budget`
/// characters; short entries stay whole and the longest ones lose most.
inline std::vector<ReferenceEntry> fit_reference_budget(std::vector<ReferenceEntry> entries, std::size_t budget) {
    std::size_t total = 0;
    for (const auto& e : entries) total += e.content.size();
    if (total <= budget) return entries;
    std::vector<std::size_t> lengths;
    for (const auto& e : entries) lengths.push_back(e.content.size());
    std::sort(lengths.begin(), lengths.end());
    // Largest cap c with sum(min(len, c)) <= budget.
    std::size_t remaining = budget;
    std::size_t cap = 0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const std::size_t left = lengths.size() - i;
        if (lengths[i] * left <= remaining) {
            remaining -= lengths[i];
            continue;
        }
        cap = remaining / left;
        break;
    }
    for (auto& e : entries) {
        if (e.content.size() > cap) e.content = text::utf8_truncate(e.content, cap);
    }
    return entries;
}

inline std::string render_references(const std::vector<ReferenceEntry>& entries, bool with_content) {
    if (entries.empty()) return std::string(prompts::kNoReferences);
    std::string out;
    for (const auto& e : entries) {
        if (!out.empty()) out += with_content ? "\n\n" : "\n";
        out += e.id.str();
        if (with_content) out += ": " + e.content;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

struct JudgeConfig {
    std::size_t k = 5;            // retrieval depth and survivor cap
    std::size_t agent_max_n = 5;  // ids requested from the agent
    EmbeddingRetrieveOptions embedding;
    std::size_t reference_budget = 4000;
    std::size_t max_parallel = 4;
    AnnotationOptions extraction;
    std::string regulation = "HIPAA";
};

class Judge {
public:
    /// `checklist` and `embedder` may be null when only non-retrieval methods are run.
    Judge(Gateway& gw, const Checklist* checklist, EmbeddingProvider* embedder, JudgeConfig config = {})
        : gw_(gw), checklist_(checklist), embedder_(embedder), config_(std::move(config)) {
        config_.embedding.k = config_.k;
        config_.extraction.regulation = config_.regulation;
    }

    const JudgeConfig& config() const { return config_; }

    /// Times any method has reached into the checklist.
    std::size_t checklist_accesses() const { return accesses_.load(); }

    Judgment judge(Method method, const CaseRecord& c) {
        Judgment j;
        j.case_id = c.id;
        j.method = method;
        try {
            run(method, c, j);
        } catch (const Error& e) {
            j.predicted = Label::ParseFailure;
            j.note = std::string(errc_name(e.code())) + ": " + e.what();
        }
        return j;
    }

    /// All cases for one method, concurrently, returned ordered by case id.
    std::vector<Judgment> judge_all(Method method, const std::vector<CaseRecord>& cases) {
        std::vector<Judgment> out(cases.size());
        parallel_for(cases.size(), config_.max_parallel, [&](std::size_t i) { out[i] = judge(method, cases[i]); });
        std::stable_sort(out.begin(), out.end(), [](const Judgment& a, const Judgment& b) { return a.case_id < b.case_id; });
        return out;
    }

private:
    const Checklist& checklist() {
        ++accesses_;
        if (!checklist_) throw Error(Errc::InvalidArgument, "retrieval methods need a checklist");
        return *checklist_;
    }

    EmbeddingProvider& embedder() {
        if (!embedder_) throw Error(Errc::InvalidArgument, "ci-es-content needs an embedding provider");
        return *embedder_;
    }

    const Bm25Index& bm25() {
        std::call_once(bm25_once_, [&] { bm25_ = build_bm25_index(norm_corpus(checklist())); });
        return *bm25_;
    }

    std::string ask(Judgment& j, std::string prompt) {
        auto r = gw_.ask(std::move(prompt));
        j.transcript_keys.push_back(r.provider_meta.value("request_hash", std::string()));
        return r.content;
    }

    void run(Method method, const CaseRecord& c, Judgment& j) {
        const auto& reg = config_.regulation;
        switch (method) {
        case Method::DP:
            j.predicted = parse_choice(ask(j, prompts::direct(c.context, reg)));
            return;
        case Method::CoTAuto:
            j.predicted = parse_choice(ask(j, prompts::cot_auto(c.context, reg)));
            return;
        case Method::CoTManual:
            j.predicted = parse_choice(ask(j, prompts::cot_manual(c.context, reg)));
            return;
        case Method::AgentID: {
            const auto& cl = checklist();
            const auto reply = ask(j, prompts::agent_ids(c.context, config_.agent_max_n, reg));
            j.hits = verified_agent_hits(cl, reply, config_.agent_max_n);
            filter_and_decide(j, c, cl, false);
            return;
        }
        case Method::Bm25Content: {
            const auto& cl = checklist();
            const auto query = ask(j, prompts::explanation(c.context, reg));
            j.hits = bm25_query(bm25(), query, config_.k);
            filter_and_decide(j, c, cl, true);
            return;
        }
        case Method::CiEsContent: {
            const auto& cl = checklist();
            CICharacteristics ci;
            try {
                AnnotationTranscript t;
                ci = extract_characteristics(gw_, c.context, config_.extraction, c.id, &t);
                j.transcript_keys.push_back(t.request_hash);
            } catch (const AnnotationFailed& e) {
                j.note = std::string("extraction failed, ranking all norms: ") + e.what();
            }
            auto r = embedding_retrieve_detailed(cl, ci, c.context, embedder(), config_.embedding);
            j.hits = std::move(r.hits);
            filter_and_decide(j, c, cl, true);
            return;
        }
        }
    }

    void filter_and_decide(Judgment& j, const CaseRecord& c, const Checklist& cl, bool with_content) {
        const auto& reg = config_.regulation;
        std::vector<ReferenceEntry> kept;
        for (const auto& h : j.hits) {
            if (kept.size() >= config_.k) break;
            auto spec = full_specification(cl.tree, h.leaf.str());
            std::string key;
            const auto d = law_filter(gw_, c.context, h.leaf.str() + ": " + spec, reg, &key);
            j.transcript_keys.push_back(key);
            if (d != FilterDecision::Keep) continue;
            j.kept.push_back(h.leaf);
            kept.push_back({h.leaf, std::move(spec)});
        }
        kept = fit_reference_budget(std::move(kept), config_.reference_budget);
        const auto refs = render_references(kept, with_content);
        const auto prompt = with_content ? prompts::content_decision(c.context, refs, reg) : prompts::id_decision(c.context, refs, reg);
        j.predicted = parse_choice(ask(j, prompt));
    }

    Gateway& gw_;
    const Checklist* checklist_;
    EmbeddingProvider* embedder_;
    JudgeConfig config_;
    std::atomic<std::size_t> accesses_{0};
    std::once_flag bm25_once_;
    std::optional<Bm25Index> bm25_;
};

// ---------------------------------------------------------------------------
// Judgments file
// ---------------------------------------------------------------------------

inline json judgment_to_json(const Judgment& j) {
    json hits = json::array();
    for (const auto& h : j.hits) hits.push_back({{"id", h.leaf.str()}, {"score", h.score}, {"method", to_string(h.method)}});
    json kept = json::array();
    for (const auto& k : j.kept) kept.push_back(k.str());
    json out{{"case_id", j.case_id},     {"method", to_string(j.method)}, {"predicted", to_string(j.predicted)},
             {"hits", hits},             {"kept", kept},                  {"transcript_keys", j.transcript_keys}};
    if (!j.note.empty()) out["note"] = j.note;
    return out;
}

inline RetrievalMethod parse_retrieval_method(std::string_view s) {
    for (auto m : {RetrievalMethod::BM25, RetrievalMethod::Embedding, RetrievalMethod::Agent}) {
        if (to_string(m) == s) return m;
    }
    throw Error(Errc::MalformedRecord, "unknown retrieval method '" + std::string(s) + "'");
}

inline Judgment judgment_from_json(const json& j) {
    try {
        Judgment out;
        out.case_id = j.at("case_id").get<std::string>();
        out.method = parse_method(j.at("method").get<std::string>());
        out.predicted = parse_label(j.at("predicted").get<std::string>());
        for (const auto& h : j.value("hits", json::array())) {
            out.hits.push_back({parse_regulation_id(h.at("id").get<std::string>()), h.at("score").get<double>(),
                                parse_retrieval_method(h.value("method", std::string("bm25")))});
        }
        for (const auto& k : j.value("kept", json::array())) out.kept.push_back(parse_regulation_id(k.get<std::string>()));
        out.transcript_keys = j.value("transcript_keys", std::vector<std::string>{});
        out.note = j.value("note", std::string());
        return out;
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedRecord, std::string("judgment record: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::MalformedRecord) throw;
        throw Error(Errc::MalformedRecord, std::string("judgment record: ") + e.what());
    }
}

inline void write_judgments(std::ostream& out, const std::vector<Judgment>& judgments) {
    for (const auto& j : judgments) out << judgment_to_json(j).dump() << '\n';
}

inline std::vector<Judgment> read_judgments(std::istream& in) {
    std::vector<Judgment> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(judgment_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedRecord, "judgments line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(Errc::MalformedRecord, "judgments line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace privcheck

#endif
