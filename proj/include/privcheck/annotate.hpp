#ifndef PRIVCHECK_ANNOTATE_HPP
#define PRIVCHECK_ANNOTATE_HPP

#include <array>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "checklist.hpp"
#include "error.hpp"
#include "llm_gateway.hpp"
#include "parallel.hpp"
#include "prompts.hpp"
#include "regdoc.hpp"
#include "text.hpp"

namespace privcheck {

enum class Question { Q1 = 1, Q2, Q3, Q4, Q5 };

// ---------------------------------------------------------------------------
// Answer parsing
// ---------------------------------------------------------------------------

namespace detail {

/// Question number opening this line, if any ("Q3:", "**Q1.**", "- Q2 ...").
inline std::optional<int> question_marker(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (text::is_space(line[i]) || line[i] == '*' || line[i] == '#' || line[i] == '>' || line[i] == '-')) ++i;
    if (i + 1 >= line.size() || (line[i] != 'Q' && line[i] != 'q')) return std::nullopt;
    const char d = line[i + 1];
    if (d < '1' || d > '5') return std::nullopt;
    if (i + 2 < line.size() && text::is_digit(line[i + 2])) return std::nullopt;
    return d - '0';
}

/// Text belonging to question `q`. If the reply carries no markers at all,
/// the whole reply is the section; if it has markers but not this one, empty.
inline std::string question_section(std::string_view raw, Question q, bool* had_markers = nullptr) {
    std::string out;
    bool any = false;
    bool inside = false;
    for (auto line : text::split_lines(raw)) {
        if (auto m = question_marker(line)) {
            any = true;
            inside = *m == static_cast<int>(q);
        }
        if (inside) {
            out += line;
            out += '\n';
        }
    }
    if (had_markers) *had_markers = any;
    if (!any) return std::string(raw);
    return out;
}

inline std::optional<int> answer_letter(std::string_view section, std::span<const std::pair<std::string_view, int>> labels) {
    static const std::regex marker_re(R"(^[\s*#>\-]*Q[1-5]\s*[.:)\]\-]*\s*\**\s*[\[(]?\s*([ABC])(?![A-Za-z]))", std::regex::icase);
    static const std::regex answer_re(R"((?:answer|choice)\s*[:\-]?\s*\**\s*[\[(]?\s*([ABC])(?![A-Za-z]))", std::regex::icase);
    static const std::regex option_re(R"(^\s*[\[(]?\s*([ABC])\s*[.)\]:])", std::regex::icase);
    auto letter = [](const std::smatch& m) { return std::toupper(static_cast<unsigned char>(m[1].str()[0])) - 'A'; };

    const std::string s(section);
    const auto lines = text::split_lines(s);
    std::smatch m;
    for (auto line : lines) {
        std::string l(line);
        if (question_marker(l) && std::regex_search(l, m, marker_re)) return letter(m);
    }
    for (auto line : lines) {
        std::string l(line);
        if (std::regex_search(l, m, answer_re)) return letter(m);
    }
    std::optional<int> only;
    int options = 0;
    for (auto line : lines) {
        std::string l(line);
        if (std::regex_search(l, m, option_re)) {
            ++options;
            only = letter(m);
        }
    }
    if (options == 1) return only;

    // Bare label words, e.g. "Permit" or "Not Sure", accepted when exactly one appears.
    const auto lowered = text::to_lower(s);
    std::optional<int> found;
    int hits = 0;
    for (const auto& [label, idx] : labels) {
        auto pos = lowered.find(label);
        bool hit = false;
        while (pos != std::string::npos) {
            const bool left_ok = pos == 0 || !text::is_alpha(lowered[pos - 1]);
            const auto end = pos + label.size();
            const bool right_ok = end >= lowered.size() || !text::is_alpha(lowered[end]) || label == "prohibit" || label == "permit";
            if (left_ok && right_ok) {
                hit = true;
                break;
            }
            pos = lowered.find(label, pos + 1);
        }
        if (hit && found != idx) {
            ++hits;
            found = idx;
        }
    }
    if (hits == 1) return found;
    return std::nullopt;
}

inline constexpr std::array<std::pair<std::string_view, int>, 3> kNormLabels{{{"general definition", 2}, {"prohibit", 0}, {"permit", 1}}};
inline constexpr std::array<std::pair<std::string_view, int>, 3> kTristateLabels{{{"not sure", 2}, {"yes", 0}, {"no", 1}}};

inline std::string strip_line_prefix(std::string_view line) {
    auto s = text::trim(line);
    for (bool changed = true; changed && !s.empty();) {
        changed = false;
        while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '#' || s.front() == '>' || text::is_space(s.front()))) {
            s.remove_prefix(1);
            changed = true;
        }
        if (s.substr(0, 3) == "\xE2\x80\xA2") {
            s.remove_prefix(3);
            changed = true;
        }
        std::size_t d = 0;
        while (d < s.size() && text::is_digit(s[d])) ++d;
        if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')')) {
            s.remove_prefix(d + 1);
            changed = true;
        }
    }
    return std::string(s);
}

inline std::string clean_value(std::string_view v) {
    auto s = text::trim(v);
    auto strip = [&](char c) {
        while (!s.empty() && s.front() == c) s.remove_prefix(1);
        while (!s.empty() && s.back() == c) s.remove_suffix(1);
        s = text::trim(s);
    };
    strip('*');
    strip('"');
    strip('\'');
    strip('`');
    return std::string(s);
}

inline bool is_none_value(std::string_view v) {
    auto n = text::normalize_term(v);
    while (!n.empty() && (n.back() == '.' || n.back() == ',')) n.pop_back();
    return n.empty() || n == "none" || n == "n/a";
}

inline std::optional<ConsentForm> consent_value(std::string_view v) {
    if (is_none_value(v)) return ConsentForm::None;
    auto n = text::normalize_term(v);
    if (n.find("authoriz") != std::string::npos) return ConsentForm::Authorization;
    if (n.rfind("no", 0) == 0 || n.rfind("not ", 0) == 0) return ConsentForm::None;
    if (n.find("consent") != std::string::npos) return ConsentForm::Consent;
    return std::nullopt;
}

}  // namespace detail

inline std::optional<NormType> parse_q1(std::string_view raw) {
    auto letter = detail::answer_letter(detail::question_section(raw, Question::Q1), detail::kNormLabels);
    if (!letter) return std::nullopt;
    static constexpr NormType by_letter[] = {NormType::Negative, NormType::Positive, NormType::GeneralDefinition};
    return by_letter[*letter];
}

/// Q3 / Q4 answers. A -> Yes, B -> No, C -> NotSure.
inline std::optional<Tristate> parse_same_person(std::string_view raw, Question q) {
    auto letter = detail::answer_letter(detail::question_section(raw, q), detail::kTristateLabels);
    if (!letter) return std::nullopt;
    static constexpr Tristate by_letter[] = {Tristate::Yes, Tristate::No, Tristate::NotSure};
    return by_letter[*letter];
}

/// "Field: value" lines for the nine flow fields. Every field must appear.
/// Tristate members are left at NotSure; they come from Q3/Q4.
inline std::optional<CICharacteristics> parse_q2(std::string_view raw) {
    bool markers = false;
    auto section = detail::question_section(raw, Question::Q2, &markers);
    if (markers && text::trim(section).empty()) section = std::string(raw);

    std::map<std::string, std::string> fields;
    for (auto line : text::split_lines(section)) {
        auto l = detail::strip_line_prefix(line);
        auto colon = l.find(':');
        if (colon == std::string::npos) continue;
        std::string key;
        for (char c : l.substr(0, colon)) {
            if (c != '*' && c != '"' && c != '\'' && c != '`') key.push_back(c);
        }
        key = text::normalize_term(key);
        if (key.rfind("receiver", 0) == 0) key.replace(0, 8, "recipient");
        fields.try_emplace(key, detail::clean_value(l.substr(colon + 1)));
    }
    static constexpr std::string_view names[] = {"sender", "sender role", "recipient", "recipient role", "subject",
                                                 "subject role", "information type", "consent form", "purpose"};
    for (auto n : names) {
        if (!fields.contains(std::string(n))) return std::nullopt;
    }
    auto opt = [&](std::string_view n) -> std::optional<std::string> {
        const auto& v = fields.at(std::string(n));
        if (detail::is_none_value(v)) return std::nullopt;
        return v;
    };
    CICharacteristics ci;
    ci.sender = opt("sender");
    ci.sender_role = opt("sender role");
    ci.recipient = opt("recipient");
    ci.recipient_role = opt("recipient role");
    ci.subject = opt("subject");
    ci.subject_role = opt("subject role");
    ci.information_type = opt("information type");
    ci.purpose = opt("purpose");
    auto consent = detail::consent_value(fields.at("consent form"));
    if (!consent) return std::nullopt;
    ci.consent_form = *consent;
    return ci;
}

/// One Support/Exception per reference, matched by id when the reply names
/// them, otherwise by order when the count of verdicts equals the count of refs.
inline std::optional<std::vector<RelationKind>> parse_q5(std::string_view raw, const std::vector<RegulationId>& refs) {
    if (refs.empty()) return std::vector<RelationKind>{};
    const auto section = detail::question_section(raw, Question::Q5);
    const auto lowered = text::to_lower(section);

    struct Mark {
        std::size_t pos;
        std::optional<RegulationId> id;
        std::optional<RelationKind> kind;
    };
    std::vector<Mark> marks;
    for (std::string_view word : {std::string_view("exception"), std::string_view("support")}) {
        for (auto pos = lowered.find(word); pos != std::string::npos; pos = lowered.find(word, pos + 1)) {
            if (pos > 0 && text::is_alpha(lowered[pos - 1])) continue;
            marks.push_back({pos, std::nullopt, word == "exception" ? RelationKind::Exception : RelationKind::Support});
        }
    }
    std::vector<Mark> kinds_only = marks;
    std::sort(kinds_only.begin(), kinds_only.end(), [](const Mark& a, const Mark& b) { return a.pos < b.pos; });
    {
        std::size_t i = 0;
        while (i < section.size()) {
            if (!text::is_digit(section[i]) || (i > 0 && text::is_digit(section[i - 1]))) {
                ++i;
                continue;
            }
            if (auto m = detail::match_id_at(section, i)) {
                marks.push_back({i, m->id, std::nullopt});
                i += m->length;
            } else {
                ++i;
            }
        }
    }
    std::sort(marks.begin(), marks.end(), [](const Mark& a, const Mark& b) { return a.pos < b.pos; });

    std::map<std::string, RelationKind> by_id;
    for (std::size_t i = 0; i < marks.size(); ++i) {
        if (!marks[i].id) continue;
        for (std::size_t j = i + 1; j < marks.size() && !marks[j].id; ++j) {
            if (marks[j].kind) {
                by_id.try_emplace(marks[i].id->str(), *marks[j].kind);
                break;
            }
        }
    }
    std::vector<RelationKind> out;
    for (const auto& r : refs) {
        auto it = by_id.find(r.str());
        if (it == by_id.end()) break;
        out.push_back(it->second);
    }
    if (out.size() == refs.size()) return out;

    if (kinds_only.size() == refs.size()) {
        out.clear();
        for (const auto& k : kinds_only) out.push_back(*k.kind);
        return out;
    }
    return std::nullopt;
}

using ParsedAnswer = std::variant<NormType, CICharacteristics, Tristate, std::vector<RelationKind>>;

/// Generic entry point; `refs` is only consulted for Q5.
inline std::optional<ParsedAnswer> parse_annotation_block(std::string_view raw, Question q,
                                                          const std::vector<RegulationId>& refs = {}) {
    switch (q) {
    case Question::Q1:
        if (auto v = parse_q1(raw)) return ParsedAnswer{*v};
        break;
    case Question::Q2:
        if (auto v = parse_q2(raw)) return ParsedAnswer{*v};
        break;
    case Question::Q3:
    case Question::Q4:
        if (auto v = parse_same_person(raw, q)) return ParsedAnswer{*v};
        break;
    case Question::Q5:
        if (auto v = parse_q5(raw, refs)) return ParsedAnswer{*v};
        break;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Running the questionnaire
// ---------------------------------------------------------------------------

struct AnnotationOptions {
    int max_attempts = 3;
    std::string regulation = "HIPAA";
    std::size_t max_parallel = 4;
};

struct AnnotationTranscript {
    std::string subject_id;  // leaf id or event id
    std::string prompt;
    std::string raw_response;
    int attempts = 0;
    std::string request_hash;
};

/// Raised when every attempt for one leaf or event fails to parse.
class AnnotationFailed : public Error {
public:
    AnnotationFailed(std::string subject, int attempts, std::string reason)
        : Error(Errc::AnnotationFailed, subject + " after " + std::to_string(attempts) + " attempts: " + reason),
          subject_(std::move(subject)), attempts_(attempts) {}

    const std::string& subject() const { return subject_; }
    int attempts() const { return attempts_; }

private:
    std::string subject_;
    int attempts_;
};

namespace detail {

/// Re-asks the same prompt until `parse` yields a value or attempts run out.
template <typename Parse>
auto ask_until_parsed(Gateway& gw, const std::string& subject, const std::string& prompt, int max_attempts, Parse parse)
    -> std::pair<typename std::invoke_result_t<Parse, const std::string&>::value_type, AnnotationTranscript> {
    AnnotationTranscript t{subject, prompt, "", 0, ""};
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto reply = gw.ask(prompt);
        t.attempts = attempt;
        t.raw_response = reply.content;
        t.request_hash = reply.provider_meta.value("request_hash", std::string());
        if (auto v = parse(reply.content)) return {std::move(*v), std::move(t)};
    }
    throw AnnotationFailed(subject, t.attempts, "answer did not match the expected format");
}

inline std::string reference_list(const std::vector<RegulationId>& refs) {
    std::string out = "[";
    for (std::size_t i = 0; i < refs.size(); ++i) out += (i ? ", " : "") + refs[i].str();
    return out + "]";
}

inline std::vector<RegulationId> unique_refs(const std::vector<RegulationId>& refs) {
    std::vector<RegulationId> out;
    for (const auto& r : refs) {
        if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
    }
    return out;
}

}  // namespace detail

/// Q1 on a specification: A -> Negative, B -> Positive, C -> GeneralDefinition.
inline NormType classify_specification(Gateway& gw, const std::string& spec_text, const AnnotationOptions& opts = {},
                                       const std::string& id = "the regulation") {
    if (text::trim(spec_text).empty()) throw Error(Errc::InvalidArgument, "empty specification");
    const auto prompt = prompts::ci_extraction(id, spec_text, "[]", opts.regulation);
    return detail::ask_until_parsed(gw, id, prompt, opts.max_attempts, [](const std::string& r) { return parse_q1(r); }).first;
}

/// Q2-Q4 on free text (an event, or a clause treated as one).
inline CICharacteristics extract_characteristics(Gateway& gw, const std::string& text_in, const AnnotationOptions& opts = {},
                                                 const std::string& subject = "event", AnnotationTranscript* transcript = nullptr) {
    if (text::trim(text_in).empty()) throw Error(Errc::InvalidArgument, "empty text");
    const auto prompt = prompts::event_extraction(text_in, opts.regulation);
    auto [ci, t] = detail::ask_until_parsed(gw, subject, prompt, opts.max_attempts, [](const std::string& r) -> std::optional<CICharacteristics> {
        auto ci = parse_q2(r);
        auto q3 = parse_same_person(r, Question::Q3);
        auto q4 = parse_same_person(r, Question::Q4);
        if (!ci || !q3 || !q4) return std::nullopt;
        ci->sender_is_subject = *q3;
        ci->recipient_is_subject = *q4;
        return ci;
    });
    if (transcript) *transcript = std::move(t);
    return ci;
}

/// Q5 for the given references, one relation per distinct reference.
inline std::vector<ReferenceRelation> annotate_reference_relations(Gateway& gw, const std::string& spec_text,
                                                                   const std::vector<RegulationId>& refs,
                                                                   const AnnotationOptions& opts = {},
                                                                   const std::string& id = "the regulation") {
    const auto unique = detail::unique_refs(refs);
    if (unique.empty()) return {};
    const auto prompt = prompts::ci_extraction(id, spec_text, detail::reference_list(unique), opts.regulation);
    auto kinds = detail::ask_until_parsed(gw, id, prompt, opts.max_attempts, [&](const std::string& r) { return parse_q5(r, unique); }).first;
    std::vector<ReferenceRelation> out;
    for (std::size_t i = 0; i < unique.size(); ++i) out.push_back({unique[i], kinds[i]});
    return out;
}

struct LeafAnnotation {
    NormAnnotation annotation;
    AnnotationTranscript transcript;
};

/// Whole questionnaire for one leaf in a single prompt; any unparseable
/// answer re-asks the prompt.
inline LeafAnnotation annotate_leaf(Gateway& gw, const DocumentTree& tree, const std::string& leaf, const AnnotationOptions& opts = {}) {
    const auto& node = tree.node(leaf);
    if (!node.id) throw Error(Errc::NotALeaf, leaf);
    const auto spec = full_specification(tree, leaf);
    const auto refs = detail::unique_refs(node.references);
    const auto prompt = prompts::ci_extraction(leaf, spec, detail::reference_list(refs), opts.regulation);

    struct Parsed {
        NormType type;
        std::optional<CICharacteristics> ci;
        std::vector<RelationKind> kinds;
    };
    auto [parsed, transcript] = detail::ask_until_parsed(gw, leaf, prompt, opts.max_attempts, [&](const std::string& r) -> std::optional<Parsed> {
        auto type = parse_q1(r);
        if (!type) return std::nullopt;
        Parsed p{*type, std::nullopt, {}};
        if (*type != NormType::GeneralDefinition) {
            auto ci = parse_q2(r);
            auto q3 = parse_same_person(r, Question::Q3);
            auto q4 = parse_same_person(r, Question::Q4);
            if (!ci || !q3 || !q4) return std::nullopt;
            ci->sender_is_subject = *q3;
            ci->recipient_is_subject = *q4;
            p.ci = std::move(ci);
        }
        auto kinds = parse_q5(r, refs);
        if (!kinds) return std::nullopt;
        p.kinds = std::move(*kinds);
        return p;
    });

    LeafAnnotation out;
    auto& a = out.annotation;
    a.leaf = *node.id;
    a.norm_type = parsed.type;
    a.characteristics = std::move(parsed.ci);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        ReferenceRelation rel{refs[i], parsed.kinds[i]};
        rel.dangling = !tree.contains(refs[i].str());
        rel.informational = parsed.type == NormType::GeneralDefinition;
        a.reference_relations.push_back(std::move(rel));
    }
    a.provenance = {gw.config().model, transcript.request_hash};
    if (a.characteristics && authorization_lacks_evidence(*a.characteristics)) a.flags.emplace_back("authorization_without_purpose");
    if (std::any_of(a.reference_relations.begin(), a.reference_relations.end(), [](const auto& r) { return r.dangling; })) {
        a.flags.emplace_back("dangling_reference");
    }
    out.transcript = std::move(transcript);
    return out;
}

struct AnnotationFailure {
    std::string leaf;
    int attempts = 0;
    std::string reason;
};

struct AnnotationReport {
    std::size_t leaves = 0;
    std::size_t annotated = 0;
    std::vector<AnnotationFailure> failures;
    std::map<std::string, int> attempts;  // leaf -> attempts used

    json to_json() const {
        json f = json::array();
        for (const auto& x : failures) f.push_back({{"leaf", x.leaf}, {"attempts", x.attempts}, {"reason", x.reason}});
        return json{{"leaves", leaves}, {"annotated", annotated}, {"failures", f}, {"attempts", attempts}};
    }
};

/// Annotate every leaf of the checklist's tree. Failed leaves are reported
/// and left unannotated; results do not depend on scheduling.
inline AnnotationReport annotate_checklist(Gateway& gw, Checklist& checklist, const AnnotationOptions& opts = {}) {
    const auto leaves = checklist.tree.leaves();
    std::vector<std::optional<LeafAnnotation>> results(leaves.size());
    std::vector<std::optional<AnnotationFailure>> failures(leaves.size());
    parallel_for(leaves.size(), opts.max_parallel, [&](std::size_t i) {
        try {
            results[i] = annotate_leaf(gw, checklist.tree, leaves[i], opts);
        } catch (const AnnotationFailed& e) {
            failures[i] = AnnotationFailure{leaves[i], e.attempts(), e.what()};
        } catch (const Error& e) {
            failures[i] = AnnotationFailure{leaves[i], 0, e.what()};
        }
    });
    AnnotationReport report;
    report.leaves = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (results[i]) {
            report.attempts[leaves[i]] = results[i]->transcript.attempts;
            checklist.annotations[leaves[i]] = std::move(results[i]->annotation);
            ++report.annotated;
        } else if (failures[i]) {
            report.attempts[leaves[i]] = failures[i]->attempts;
            report.failures.push_back(std::move(*failures[i]));
        }
    }
    return report;
}

}  // namespace privcheck

#endif
