#ifndef PRIVCHECK_TEST_SUPPORT_HPP
#define PRIVCHECK_TEST_SUPPORT_HPP

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <privcheck/privcheck.hpp>

namespace testsupport {

inline std::string fixture(const std::string& name) { return std::string(PRIVCHECK_FIXTURE_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return privcheck::text::read_stream(in);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("privcheck-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

/// Random regulation text of at most `max_nodes` clause ids. Some ancestors
/// are left implicit and clause texts cite random ids.
inline std::string random_document(std::mt19937& rng, std::size_t max_nodes) {
    using privcheck::RegulationId;
    std::uniform_int_distribution<std::size_t> count_dist(1, max_nodes);
    const std::size_t target = count_dist(rng);
    std::vector<RegulationId> ids;
    auto has = [&](const RegulationId& id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); };
    static const char* words[] = {"covered", "entity", "may", "disclose", "health", "information", "plan", "except", "treatment", "notes"};
    while (ids.size() < target) {
        RegulationId id;
        if (ids.empty() || rng() % 4 == 0) {
            id.part = rng() % 2 ? 164 : 160;
            id.section = 100 + static_cast<std::uint32_t>(rng() % 900);
        } else {
            id = ids[rng() % ids.size()];
            if (id.depth() >= 5) continue;
            const bool letters = id.depth() % 2 == 0;
            id.segments.push_back(letters ? std::string(1, static_cast<char>('a' + rng() % 6)) : std::to_string(1 + rng() % 9));
        }
        if (!has(id)) ids.push_back(id);
    }
    std::string out;
    for (const auto& id : ids) {
        if (id.depth() > 0 && rng() % 5 == 0) continue;  // leave implicit
        out += (rng() % 6 == 0 ? "\xC2\xA7 " : "") + id.str();
        const auto n = rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            out += ' ';
            out += words[rng() % 10];
        }
        if (rng() % 3 == 0) out += " under " + ids[rng() % ids.size()].str() + ";";
        out += '\n';
        if (rng() % 7 == 0) out += "continued clause text\n";
    }
    if (out.empty()) out = ids.front().str() + " text\n";
    return out;
}

struct IdCase {
    const char* input;
    const char* canonical;  // nullptr when the input must be rejected
};

/// Valid and invalid identifier spellings shared by the unit and acceptance suites.
inline const std::vector<IdCase>& id_grammar_cases() {
    static const std::vector<IdCase> cases{
        {"164.502(a)(1)(iv)", "164.502(a)(1)(iv)"},
        {"\xC2\xA7 164.508", "164.508"},
        {"164.508", "164.508"},
        {"160.103", "160.103"},
        {"164.502(a)", "164.502(a)"},
        {"164.502(b)", "164.502(b)"},
        {"164.506(c)(1)", "164.506(c)(1)"},
        {"164.508(a)(2)", "164.508(a)(2)"},
        {"164.502(a)(5)(i)", "164.502(a)(5)(i)"},
        {"  164.512(f)(1)(ii)(B) ", "164.512(f)(1)(ii)(b)"},
        {"\xC2\xA7""164.514(e)(4)", "164.514(e)(4)"},
        {"164.502(A)", "164.502(a)"},
        {"164.530(j)(2)", "164.530(j)(2)"},
        {"160.306(a)", "160.306(a)"},
        {"164.524(c)(3)(ii)", "164.524(c)(3)(ii)"},
        {"502(a", nullptr},
        {"164", nullptr},
        {"164.502()", nullptr},
        {"164.502(a", nullptr},
        {"164.502a", nullptr},
        {"", nullptr},
        {"a.b", nullptr},
        {"164.502(a1)", nullptr},
        {"0.502", nullptr},
        {"164.502)(a", nullptr},
        {"164.", nullptr},
        {".502", nullptr},
        {"164.502(a)(", nullptr},
        {"164.502(a)x", nullptr},
        {"164.502(-1)", nullptr},
    };
    return cases;
}

inline privcheck::DocumentTree mini_tree() { return privcheck::parse_document(slurp(fixture("mini_regulation.txt"))); }

/// Mini regulation annotated with the scripted questionnaire, plus graphs and definitions.
inline privcheck::Checklist fixture_checklist() {
    using namespace privcheck;
    auto c = make_checklist(mini_tree());
    ScriptedMockProvider mock(load_mock_script_file(fixture("annotate.script")));
    GatewayConfig cfg;
    cfg.max_parallel = 1;
    Gateway gw(mock, cfg);
    AnnotationOptions opts;
    opts.max_parallel = 1;
    auto report = annotate_checklist(gw, c, opts);
    if (!report.failures.empty()) throw std::runtime_error("fixture annotation failed: " + report.failures.front().reason);

    const auto tax = load_taxonomy_file(fixture("taxonomy.tsv"));
    std::ifstream defined_in(fixture("defined_roles.tsv"));
    auto roles = annotated_roles(c);
    roles.push_back("surgeon");
    c.role_graph = build_role_graph(roles, tax, load_defined_roles(defined_in));
    std::ifstream onto(fixture("ontology.tsv"));
    c.attribute_graph = ingest_attribute_ontology(load_ontology(onto));
    std::ifstream defs(fixture("definitions.tsv"));
    c.definitions = load_definitions(defs);
    return c;
}

}  // namespace testsupport

#endif
