#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

#include <privcheck/cli.hpp>

using namespace privcheck;
using testsupport::fixture;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"stats"}).code, 2);
    EXPECT_EQ(cli({"--max-parallel", "0", "stats", fixture("cases.jsonl")}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, PipelineErrorsExitOne) {
    testsupport::TempDir dir;
    const auto r = cli({"judge", "--cases", fixture("cases.jsonl"), "-o", dir.file("j.jsonl"), "--method", "agent-id"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("needs --checklist"), std::string::npos) << r.err;
    EXPECT_EQ(cli({"stats", fixture("cases.jsonl")}).code, 1);
}

TEST(Cli, ParseAnnotateGraphsStats) {
    testsupport::TempDir dir;
    const auto skel = dir.file("skel.json"), ann = dir.file("ann.json"), full = dir.file("full.json");
    auto r = cli({"parse", fixture("mini_regulation.txt"), "-o", skel});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "parsed 9 leaves, 9 internal nodes, 4 cross-references\n");
    r = cli({"--mock-script", fixture("annotate.script"), "annotate", "--checklist", skel, "-o", ann});
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli({"graphs", "--checklist", ann, "-o", full, "--taxonomy", fixture("taxonomy.tsv"), "--defined-roles", fixture("defined_roles.tsv"),
             "--ontology", fixture("ontology.tsv"), "--definitions", fixture("definitions.tsv"), "--role", "surgeon"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli({"stats", full});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("internal_nodes 9\nleaves 9\nedges 17\ncross_references 4\nannotated 9\npositive 5\nnegative 2\ngeneral_definition 2\n"),
              std::string::npos)
        << r.out;
    EXPECT_NE(r.out.find("attribute_edges 3\ndefinitions 2\n"), std::string::npos) << r.out;
    EXPECT_EQ(load_checklist_file(full), testsupport::fixture_checklist());

    r = cli({"retrieve", "--checklist", full, "psychotherapy notes authorization"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\t')), "164.508(a)(2)");
}

TEST(Cli, AnnotateFailureExitsOne) {
    testsupport::TempDir dir;
    const auto skel = dir.file("skel.json"), script = dir.file("bad.script");
    ASSERT_EQ(cli({"parse", fixture("mini_regulation.txt"), "-o", skel}).code, 0);
    std::ofstream(script) << "{\"match\": \"Q1\", \"reply\": \"no idea\"}\n";
    const auto r = cli({"--mock-script", script, "annotate", "--checklist", skel, "--attempts", "1", "-o", dir.file("x.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("\"failures\""), std::string::npos);
}

TEST(Cli, JudgeDpThenEvaluate) {
    testsupport::TempDir dir;
    const auto out = dir.file("dp.jsonl");
    auto r = cli({"--mock-script", fixture("dp.script"), "judge", "--cases", fixture("cases.jsonl"), "-o", out});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(out);
    EXPECT_EQ(read_judgments(in).size(), 12u);
    r = cli({"evaluate", "--cases", fixture("cases.jsonl"), "--judgments", out, "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = report_from_json(json::parse(r.out));
    ASSERT_EQ(rep.methods.size(), 1u);
    EXPECT_EQ(rep.methods[0].correct, 9u);
    EXPECT_EQ(rep.methods[0].parse_failures, 1u);

    // Resume keeps existing rows; a scriptless provider is never asked.
    const auto before = testsupport::slurp(out);
    const auto empty = dir.file("empty.script");
    std::ofstream(empty) << "{\"match\": \"nothing here\", \"reply\": \"Choice: A\"}\n";
    r = cli({"--mock-script", empty, "judge", "--cases", fixture("cases.jsonl"), "-o", out, "--resume"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(testsupport::slurp(out), before);
}
