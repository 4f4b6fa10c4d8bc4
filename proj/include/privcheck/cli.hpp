#ifndef PRIVCHECK_CLI_HPP
#define PRIVCHECK_CLI_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "http_providers.hpp"
#include "privcheck.hpp"

namespace privcheck {

namespace detail {

struct GlobalOptions {
    std::string provider_endpoint;
    std::string embedding_endpoint;
    std::string model = GatewayConfig{}.model;
    std::string mock_script;
    std::string transcript;
    std::size_t k = 5;
    std::size_t max_parallel = 4;
    std::uint64_t seed = HashedBagEmbedder::kDefaultSeed;
    std::string regulation = "HIPAA";
};

/// Providers built on demand from the global flags.
class Runtime {
public:
    explicit Runtime(const GlobalOptions& g) : g_(g) {}

    Gateway& gateway() {
        if (!gateway_) {
            if (!g_.mock_script.empty()) {
                chat_ = std::make_unique<ScriptedMockProvider>(load_mock_script_file(g_.mock_script));
            } else if (!g_.provider_endpoint.empty()) {
                chat_ = std::make_unique<HttpChatProvider>(HttpProviderConfig{g_.provider_endpoint});
            } else {
                throw Error(Errc::InvalidArgument, "this command needs --mock-script or --provider-endpoint");
            }
            GatewayConfig cfg;
            cfg.model = g_.model;
            cfg.max_parallel = g_.max_parallel;
            if (!g_.transcript.empty()) cfg.transcript_path = g_.transcript;
            gateway_ = std::make_unique<Gateway>(*chat_, cfg);
        }
        return *gateway_;
    }

    EmbeddingProvider& embedder() {
        if (!embed_cache_) {
            if (!g_.embedding_endpoint.empty()) {
                embed_ = std::make_unique<HttpEmbeddingProvider>(HttpProviderConfig{g_.embedding_endpoint});
            } else {
                embed_ = std::make_unique<HashedBagEmbedder>(HashedBagEmbedder::kDefaultDimension, g_.seed);
            }
            embed_cache_ = std::make_unique<CachingEmbedder>(*embed_);
        }
        return *embed_cache_;
    }

private:
    const GlobalOptions& g_;
    std::unique_ptr<ChatProvider> chat_;
    std::unique_ptr<Gateway> gateway_;
    std::unique_ptr<EmbeddingProvider> embed_;
    std::unique_ptr<CachingEmbedder> embed_cache_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return text::read_stream(in);
}

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    out << body;
    if (!out) throw Error(Errc::Io, "write failed for " + path);
}

inline void emit(std::ostream& out, const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        out << body;
    } else {
        write_file(path, body);
    }
}

inline std::string save_to_string(const Checklist& c) {
    std::ostringstream s;
    save_checklist(c, s);
    return s.str();
}

inline std::vector<Judgment> read_judgments_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return read_judgments(in);
}

inline std::size_t method_rank(Method m) {
    for (std::size_t i = 0; i < std::size(kAllMethods); ++i) {
        if (kAllMethods[i] == m) return i;
    }
    return std::size(kAllMethods);
}

}  // namespace detail

/// Entry point behind tools/privcheck. Exit 0 on success, 1 when the
/// pipeline fails, 2 on a usage error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Regulation checklist builder, retriever and judge"};
    app.name("privcheck");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value settings file");

    detail::GlobalOptions g;
    app.add_option("--provider-endpoint", g.provider_endpoint, "chat-completion URL");
    app.add_option("--embedding-endpoint", g.embedding_endpoint, "embedding URL (default: hashed mock)");
    app.add_option("--model", g.model, "model name sent to the provider");
    app.add_option("--mock-script", g.mock_script, "scripted replies instead of a live provider");
    app.add_option("--transcript", g.transcript, "append every exchange to this JSONL file");
    app.add_option("--k", g.k, "retrieval depth")->check(CLI::PositiveNumber);
    app.add_option("--max-parallel", g.max_parallel, "concurrent provider calls")->check(CLI::Range(1, 256));
    app.add_option("--seed", g.seed, "hash seed for mock embeddings");
    app.add_option("--regulation", g.regulation, "regulation name used in prompts");

    // parse
    std::string parse_input, parse_output, root_label = "HIPAA";
    auto* parse = app.add_subcommand("parse", "regulation text to checklist skeleton");
    parse->add_option("input", parse_input, "regulation text")->required()->check(CLI::ExistingFile);
    parse->add_option("-o,--output", parse_output, "checklist JSON (default stdout)");
    parse->add_option("--root", root_label, "label for the document root");

    // annotate
    std::string ann_checklist, ann_output;
    int ann_attempts = 3;
    auto* annotate = app.add_subcommand("annotate", "run the questionnaire on every leaf");
    annotate->add_option("--checklist", ann_checklist, "checklist JSON")->required()->check(CLI::ExistingFile);
    annotate->add_option("-o,--output", ann_output, "annotated checklist JSON (default stdout)");
    annotate->add_option("--attempts", ann_attempts, "attempts per leaf")->check(CLI::PositiveNumber);

    // graphs
    std::string gr_checklist, gr_output, gr_taxonomy, gr_defined, gr_ontology, gr_definitions;
    std::vector<std::string> gr_roles;
    auto* graphs = app.add_subcommand("graphs", "attach role/attribute graphs and definitions");
    graphs->add_option("--checklist", gr_checklist, "annotated checklist JSON")->required()->check(CLI::ExistingFile);
    graphs->add_option("-o,--output", gr_output, "checklist JSON (default stdout)");
    graphs->add_option("--taxonomy", gr_taxonomy, "child<TAB>parent hypernym table")->check(CLI::ExistingFile);
    graphs->add_option("--defined-roles", gr_defined, "role<TAB>member table")->check(CLI::ExistingFile);
    graphs->add_option("--ontology", gr_ontology, "child<TAB>parent[<TAB>kind] attribute table")->check(CLI::ExistingFile);
    graphs->add_option("--definitions", gr_definitions, "term<TAB>definition table")->check(CLI::ExistingFile);
    graphs->add_option("--role", gr_roles, "extra role to place in the role graph (repeatable)");

    // stats
    std::string st_checklist;
    auto* stats = app.add_subcommand("stats", "tree and checklist counts");
    stats->add_option("checklist", st_checklist, "checklist JSON")->required()->check(CLI::ExistingFile);

    // retrieve
    std::string rt_checklist, rt_method = "bm25", rt_query;
    bool rt_explain = false;
    auto* retrieve = app.add_subcommand("retrieve", "rank norms for a query or event");
    retrieve->add_option("--checklist", rt_checklist, "annotated checklist JSON")->required()->check(CLI::ExistingFile);
    retrieve->add_option("--method", rt_method, "bm25 | embedding | agent")->check(CLI::IsMember({"bm25", "embedding", "agent"}));
    retrieve->add_option("query", rt_query, "query or event text")->required();
    retrieve->add_flag("--explain", rt_explain, "bm25: query with the model's explanation of the event");

    // judge
    std::string jd_checklist, jd_cases, jd_output, jd_method = "dp";
    bool jd_resume = false;
    auto* judge = app.add_subcommand("judge", "judge every case with one method or all");
    judge->add_option("--checklist", jd_checklist, "annotated checklist JSON (retrieval methods)")->check(CLI::ExistingFile);
    judge->add_option("--cases", jd_cases, "case JSONL")->required()->check(CLI::ExistingFile);
    judge->add_option("-o,--output", jd_output, "judgments JSONL")->required();
    judge->add_option("--method", jd_method, "dp | cot-auto | cot-manual | agent-id | bm25-content | ci-es-content | all");
    judge->add_flag("--resume", jd_resume, "keep judgments already in the output file");

    // evaluate
    std::string ev_cases, ev_judgments, ev_output, ev_format = "text";
    auto* evaluate_cmd = app.add_subcommand("evaluate", "judgments + cases to report");
    evaluate_cmd->add_option("--cases", ev_cases, "case JSONL")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--judgments", ev_judgments, "judgments JSONL")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("-o,--output", ev_output, "report file (default stdout)");
    evaluate_cmd->add_option("--format", ev_format, "text | json")->check(CLI::IsMember({"text", "json"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    detail::Runtime rt(g);
    try {
        if (*parse) {
            auto c = make_checklist(parse_document(detail::read_file(parse_input), root_label));
            detail::emit(out, parse_output, detail::save_to_string(c));
            if (!parse_output.empty()) {
                const auto& s = c.tree.stats;
                out << "parsed " << s.leaf_count << " leaves, " << s.internal_count << " internal nodes, "
                    << s.cross_reference_count << " cross-references\n";
            }
        } else if (*annotate) {
            auto c = load_checklist_file(ann_checklist);
            AnnotationOptions opts;
            opts.max_attempts = ann_attempts;
            opts.regulation = g.regulation;
            opts.max_parallel = g.max_parallel;
            const auto report = annotate_checklist(rt.gateway(), c, opts);
            detail::emit(out, ann_output, detail::save_to_string(c));
            err << report.to_json().dump() << '\n';
            if (!report.failures.empty()) return 1;
        } else if (*graphs) {
            auto c = load_checklist_file(gr_checklist);
            if (!gr_taxonomy.empty()) {
                const auto tax = load_taxonomy_file(gr_taxonomy);
                DefinedRoles defined;
                if (!gr_defined.empty()) {
                    auto in = detail::open_input(gr_defined);
                    defined = load_defined_roles(in);
                }
                auto roles = annotated_roles(c);
                for (const auto& r : gr_roles) {
                    if (std::find(roles.begin(), roles.end(), r) == roles.end()) roles.push_back(r);
                }
                c.role_graph = build_role_graph(roles, tax, defined);
                for (const auto& n : c.role_graph.notes) err << "note: " << n << '\n';
            }
            if (!gr_ontology.empty()) {
                auto in = detail::open_input(gr_ontology);
                c.attribute_graph = ingest_attribute_ontology(load_ontology(in));
            }
            if (!gr_definitions.empty()) {
                auto in = detail::open_input(gr_definitions);
                c.definitions = load_definitions(in);
            }
            detail::emit(out, gr_output, detail::save_to_string(c));
        } else if (*stats) {
            const auto c = load_checklist_file(st_checklist);
            const auto& s = c.tree.stats;
            out << "internal_nodes " << s.internal_count << '\n'
                << "leaves " << s.leaf_count << '\n'
                << "edges " << s.edge_count << '\n'
                << "cross_references " << s.cross_reference_count << '\n'
                << "annotated " << c.annotations.size() << '\n'
                << "positive " << norms_by_type(c, NormType::Positive).size() << '\n'
                << "negative " << norms_by_type(c, NormType::Negative).size() << '\n'
                << "general_definition " << norms_by_type(c, NormType::GeneralDefinition).size() << '\n'
                << "role_vertices " << c.role_graph.graph.vertex_count() << '\n'
                << "role_edges " << c.role_graph.graph.edge_count() << '\n'
                << "unresolved_roles " << c.role_graph.unresolved.size() << '\n'
                << "attribute_vertices " << c.attribute_graph.graph.vertex_count() << '\n'
                << "attribute_edges " << c.attribute_graph.graph.edge_count() << '\n'
                << "definitions " << c.definitions.size() << '\n';
        } else if (*retrieve) {
            const auto c = load_checklist_file(rt_checklist);
            std::vector<RetrievalHit> hits;
            if (rt_method == "bm25") {
                const auto query = rt_explain ? llm_explanation(rt.gateway(), rt_query, g.regulation) : rt_query;
                hits = bm25_query(build_bm25_index(norm_corpus(c)), query, g.k);
            } else if (rt_method == "embedding") {
                AnnotationOptions opts;
                opts.regulation = g.regulation;
                const auto ci = extract_characteristics(rt.gateway(), rt_query, opts);
                EmbeddingRetrieveOptions eopts;
                eopts.k = g.k;
                hits = embedding_retrieve(c, ci, rt_query, rt.embedder(), eopts);
            } else {
                hits = agent_retrieve(rt.gateway(), c, rt_query, g.k, g.regulation);
            }
            for (const auto& h : hits) {
                char score[32];
                std::snprintf(score, sizeof score, "%.6f", h.score);
                out << h.leaf.str() << '\t' << score << '\n';
            }
        } else if (*judge) {
            std::vector<Method> methods;
            if (jd_method == "all") {
                methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
            } else {
                methods.push_back(parse_method(jd_method));
            }
            const auto cases = load_cases_file(jd_cases).cases;
            std::optional<Checklist> checklist;
            if (!jd_checklist.empty()) checklist = load_checklist_file(jd_checklist);
            for (auto m : methods) {
                if (uses_checklist(m) && !checklist) throw Error(Errc::InvalidArgument, std::string(to_string(m)) + " needs --checklist");
            }

            std::vector<Judgment> all;
            if (jd_resume && std::filesystem::exists(jd_output)) all = detail::read_judgments_file(jd_output);
            std::set<std::pair<std::string, Method>> done;
            for (const auto& j : all) done.emplace(j.case_id, j.method);

            JudgeConfig cfg;
            cfg.k = g.k;
            cfg.agent_max_n = g.k;
            cfg.max_parallel = g.max_parallel;
            cfg.regulation = g.regulation;
            Judge jd(rt.gateway(), checklist ? &*checklist : nullptr, &rt.embedder(), cfg);
            for (auto m : methods) {
                std::vector<CaseRecord> todo;
                for (const auto& c : cases) {
                    if (!done.contains({c.id, m})) todo.push_back(c);
                }
                auto fresh = jd.judge_all(m, todo);
                all.insert(all.end(), fresh.begin(), fresh.end());
            }
            std::stable_sort(all.begin(), all.end(), [](const Judgment& a, const Judgment& b) {
                const auto ra = detail::method_rank(a.method), rb = detail::method_rank(b.method);
                return ra != rb ? ra < rb : a.case_id < b.case_id;
            });
            std::ostringstream body;
            write_judgments(body, all);
            detail::write_file(jd_output, body.str());
            out << "wrote " << all.size() << " judgments to " << jd_output << '\n';
        } else if (*evaluate_cmd) {
            const auto cases = load_cases_file(ev_cases).cases;
            const auto report = evaluate_all(detail::read_judgments_file(ev_judgments), cases);
            detail::emit(out, ev_output, render_report(report, ev_format == "json" ? ReportFormat::Json : ReportFormat::Text));
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

}  // namespace privcheck

#endif
