#ifndef PRIVCHECK_EVALUATION_HPP
#define PRIVCHECK_EVALUATION_HPP

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "checklist.hpp"
#include "error.hpp"
#include "judge.hpp"
#include "text.hpp"

namespace privcheck {

// ---------------------------------------------------------------------------
// Cases
// ---------------------------------------------------------------------------

struct DatasetStats {
    std::size_t count = 0;
    std::size_t permit = 0;
    std::size_t prohibit = 0;
    std::size_t not_applicable = 0;
    double mean_context_length = 0.0;  // whitespace tokens
};

struct CaseSet {
    std::vector<CaseRecord> cases;
    DatasetStats stats;
};

inline DatasetStats dataset_stats(const std::vector<CaseRecord>& cases) {
    DatasetStats s;
    std::size_t words = 0;
    for (const auto& c : cases) {
        ++s.count;
        if (c.gold == Label::Permit) ++s.permit;
        if (c.gold == Label::Prohibit) ++s.prohibit;
        if (c.gold == Label::NotApplicable) ++s.not_applicable;
        words += text::word_count(c.context);
    }
    if (s.count) s.mean_context_length = static_cast<double>(words) / static_cast<double>(s.count);
    return s;
}

inline CaseRecord case_from_json(const json& j) {
    CaseRecord c;
    if (!j.is_object()) throw Error(Errc::MalformedRecord, "record is not an object");
    if (!j.contains("id") || !j["id"].is_string()) throw Error(Errc::MalformedRecord, "missing id");
    c.id = j["id"].get<std::string>();
    if (!j.contains("context") || !j["context"].is_string() || text::trim(j["context"].get<std::string>()).empty()) {
        throw Error(Errc::MalformedRecord, "missing or empty context");
    }
    c.context = j["context"].get<std::string>();
    if (!j.contains("gold") || !j["gold"].is_string()) throw Error(Errc::MalformedRecord, "missing gold");
    const auto gold = j["gold"].get<std::string>();
    if (gold == "Permit") {
        c.gold = Label::Permit;
    } else if (gold == "Prohibit") {
        c.gold = Label::Prohibit;
    } else if (gold == "Not Applicable") {
        c.gold = Label::NotApplicable;
    } else {
        throw Error(Errc::MalformedRecord, "bad gold '" + gold + "'");
    }
    if (j.contains("kind")) {
        const auto kind = text::to_lower(j["kind"].get<std::string>());
        if (kind == "real") {
            c.kind = CaseKind::Real;
        } else if (kind == "synthetic") {
            c.kind = CaseKind::Synthetic;
        } else {
            throw Error(Errc::MalformedRecord, "bad kind '" + kind + "'");
        }
    }
    if (j.contains("references") && !j["references"].is_null()) {
        for (const auto& r : j["references"]) c.references.push_back(parse_regulation_id(r.get<std::string>()));
    }
    return c;
}

inline json case_to_json(const CaseRecord& c) {
    json refs = json::array();
    for (const auto& r : c.references) refs.push_back(r.str());
    json j{{"id", c.id}, {"context", c.context}, {"gold", to_string(c.gold)}, {"kind", to_string(c.kind)}};
    if (!c.references.empty()) j["references"] = refs;
    return j;
}

/// Line-delimited case records; any bad line raises MalformedRecord naming it.
inline CaseSet load_cases(std::istream& in) {
    CaseSet out;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto c = case_from_json(json::parse(line));
            if (!ids.insert(c.id).second) throw Error(Errc::MalformedRecord, "duplicate id " + c.id);
            out.cases.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedRecord, "line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(Errc::MalformedRecord, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    out.stats = dataset_stats(out.cases);
    return out;
}

inline CaseSet load_cases_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return load_cases(in);
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline constexpr std::array<Label, 3> kClasses{Label::Permit, Label::Prohibit, Label::NotApplicable};

inline std::size_t class_index(Label l) {
    switch (l) {
    case Label::Permit: return 0;
    case Label::Prohibit: return 1;
    case Label::NotApplicable: return 2;
    case Label::ParseFailure: return 3;
    }
    return 3;
}

/// Rows: predicted Permit, Prohibit, NotApplicable, ParseFailure. Columns: gold.
using Confusion = std::array<std::array<std::size_t, 3>, 4>;

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;  // nothing predicted in this class
    bool recall_undefined = false;     // class absent from gold

    bool operator==(const ClassMetrics&) const = default;
};

struct MethodReport {
    std::string method;
    std::size_t case_count = 0;
    std::size_t correct = 0;
    std::size_t parse_failures = 0;
    double accuracy = 0.0;
    std::array<ClassMetrics, 3> classes{};
    double macro_f1 = 0.0;
    Confusion confusion{};

    bool operator==(const MethodReport&) const = default;
};

inline constexpr int kReportSchemaVersion = 1;

struct EvaluationReport {
    std::vector<MethodReport> methods;

    bool operator==(const EvaluationReport&) const = default;
};

inline double safe_ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

/// Metrics from a confusion matrix alone.
inline MethodReport metrics_from_confusion(const Confusion& m, std::string method = {}) {
    MethodReport r;
    r.method = std::move(method);
    r.confusion = m;
    for (const auto& row : m) {
        for (auto x : row) r.case_count += x;
    }
    for (std::size_t c = 0; c < 3; ++c) r.correct += m[c][c];
    for (auto x : m[3]) r.parse_failures += x;
    r.accuracy = safe_ratio(r.correct, r.case_count);
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t tp = m[c][c];
        const std::size_t predicted = m[c][0] + m[c][1] + m[c][2];
        std::size_t actual = 0;
        for (std::size_t row = 0; row < 4; ++row) actual += m[row][c];
        auto& cm = r.classes[c];
        cm.precision = safe_ratio(tp, predicted);
        cm.recall = safe_ratio(tp, actual);
        cm.precision_undefined = predicted == 0;
        cm.recall_undefined = actual == 0;
        cm.f1 = cm.precision + cm.recall == 0.0 ? 0.0 : 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
        f1_sum += cm.f1;
    }
    r.macro_f1 = f1_sum / 3.0;
    return r;
}

inline double macro_f1(std::span<const double> f1s) {
    if (f1s.empty()) return 0.0;
    double s = 0.0;
    for (double f : f1s) s += f;
    return s / static_cast<double>(f1s.size());
}

/// Judgments for one method against the full case set. Every case needs
/// exactly one judgment and every judgment a known case.
inline MethodReport evaluate(const std::vector<Judgment>& judgments, const std::vector<CaseRecord>& cases) {
    std::map<std::string, Label> gold;
    for (const auto& c : cases) gold.emplace(c.id, c.gold);
    std::set<std::string> seen;
    Confusion m{};
    std::string method;
    for (const auto& j : judgments) {
        auto it = gold.find(j.case_id);
        if (it == gold.end()) throw Error(Errc::JudgmentCaseMismatch, "judgment for unknown case " + j.case_id);
        if (!seen.insert(j.case_id).second) throw Error(Errc::JudgmentCaseMismatch, "second judgment for case " + j.case_id);
        const auto name = std::string(to_string(j.method));
        if (method.empty()) method = name;
        if (name != method) throw Error(Errc::JudgmentCaseMismatch, "mixed methods " + method + " and " + name);
        ++m[class_index(j.predicted)][class_index(it->second)];
    }
    if (seen.size() != gold.size()) {
        for (const auto& [id, _] : gold) {
            if (!seen.contains(id)) throw Error(Errc::JudgmentCaseMismatch, "no judgment for case " + id);
        }
    }
    return metrics_from_confusion(m, method);
}

/// One report row per method present, in the canonical method order.
inline EvaluationReport evaluate_all(const std::vector<Judgment>& judgments, const std::vector<CaseRecord>& cases) {
    EvaluationReport r;
    for (auto method : kAllMethods) {
        std::vector<Judgment> subset;
        for (const auto& j : judgments) {
            if (j.method == method) subset.push_back(j);
        }
        if (!subset.empty()) r.methods.push_back(evaluate(subset, cases));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Fraction as a percentage rounded half-up to two decimals.
inline double percent2(double fraction) { return std::floor(fraction * 10000.0 + 0.5 + 1e-9) / 100.0; }

namespace detail {

inline std::string fmt_pct(double fraction) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%6.2f", percent2(fraction));
    return buf;
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace detail

inline std::string render_text(const EvaluationReport& r) {
    std::string out;
    out += detail::pad("Method", 14) + " | " + detail::pad("Permit", 20) + " | " + detail::pad("Prohibit", 20) + " | " +
           detail::pad("Not Applicable", 20) + " |    Acc |  Ma-F1 | Fail |    N\n";
    out += detail::pad("", 14) + " |      P      R     F1 |      P      R     F1 |      P      R     F1 |        |        |      |\n";
    out += std::string(14, '-') + "-+-" + std::string(20, '-') + "-+-" + std::string(20, '-') + "-+-" + std::string(20, '-') +
           "-+--------+--------+------+-----\n";
    for (const auto& m : r.methods) {
        out += detail::pad(m.method, 14) + " |";
        for (const auto& c : m.classes) {
            out += " " + detail::fmt_pct(c.precision) + " " + detail::fmt_pct(c.recall) + " " + detail::fmt_pct(c.f1) + " |";
        }
        char tail[64];
        std::snprintf(tail, sizeof tail, " %s | %s | %4zu | %4zu\n", detail::fmt_pct(m.accuracy).c_str(),
                      detail::fmt_pct(m.macro_f1).c_str(), m.parse_failures, m.case_count);
        out += tail;
    }
    bool flagged = false;
    for (const auto& m : r.methods) {
        for (std::size_t c = 0; c < 3; ++c) {
            const auto& cm = m.classes[c];
            if (!cm.precision_undefined && !cm.recall_undefined) continue;
            if (!flagged) out += "\n";
            flagged = true;
            out += "note: " + m.method + " " + std::string(to_string(kClasses[c])) + ": " +
                   (cm.precision_undefined ? "never predicted, precision set to 0" : "absent from gold, recall set to 0") + "\n";
        }
    }
    return out;
}

inline json report_to_json(const EvaluationReport& r) {
    json methods = json::array();
    for (const auto& m : r.methods) {
        json classes = json::object();
        for (std::size_t c = 0; c < 3; ++c) {
            const auto& cm = m.classes[c];
            classes[std::string(to_string(kClasses[c]))] = {{"precision", cm.precision},
                                                             {"recall", cm.recall},
                                                             {"f1", cm.f1},
                                                             {"precision_undefined", cm.precision_undefined},
                                                             {"recall_undefined", cm.recall_undefined}};
        }
        json confusion = json::array();
        for (const auto& row : m.confusion) confusion.push_back(row);
        methods.push_back({{"method", m.method},
                           {"case_count", m.case_count},
                           {"correct", m.correct},
                           {"parse_failures", m.parse_failures},
                           {"accuracy", m.accuracy},
                           {"macro_f1", m.macro_f1},
                           {"classes", classes},
                           {"confusion", confusion}});
    }
    return json{{"schema_version", kReportSchemaVersion}, {"methods", methods}};
}

inline EvaluationReport report_from_json(const json& j) {
    try {
        if (!j.contains("schema_version")) throw Error(Errc::CorruptPayload, "report without schema_version");
        if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
            throw Error(Errc::SchemaVersionMismatch, "report schema " + j.at("schema_version").dump());
        }
        EvaluationReport r;
        for (const auto& mj : j.at("methods")) {
            MethodReport m;
            m.method = mj.at("method").get<std::string>();
            m.case_count = mj.at("case_count").get<std::size_t>();
            m.correct = mj.at("correct").get<std::size_t>();
            m.parse_failures = mj.at("parse_failures").get<std::size_t>();
            m.accuracy = mj.at("accuracy").get<double>();
            m.macro_f1 = mj.at("macro_f1").get<double>();
            for (std::size_t c = 0; c < 3; ++c) {
                const auto& cj = mj.at("classes").at(std::string(to_string(kClasses[c])));
                m.classes[c] = {cj.at("precision").get<double>(), cj.at("recall").get<double>(), cj.at("f1").get<double>(),
                                cj.at("precision_undefined").get<bool>(), cj.at("recall_undefined").get<bool>()};
            }
            const auto& conf = mj.at("confusion");
            if (conf.size() != 4) throw Error(Errc::CorruptPayload, "confusion needs 4 rows");
            for (std::size_t row = 0; row < 4; ++row) m.confusion[row] = conf.at(row).get<std::array<std::size_t, 3>>();
            r.methods.push_back(std::move(m));
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptPayload, std::string("report: ") + e.what());
    }
}

enum class ReportFormat { Text, Json };

inline std::string render_report(const EvaluationReport& r, ReportFormat f = ReportFormat::Text) {
    return f == ReportFormat::Text ? render_text(r) : report_to_json(r).dump(2) + "\n";
}

}  // namespace privcheck

#endif
