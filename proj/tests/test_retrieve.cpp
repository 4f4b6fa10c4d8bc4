#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace privcheck;

namespace {

// Independent restatement of the scoring rule over raw token lists.
double oracle_score(const std::vector<std::vector<std::string>>& docs, std::size_t d, const std::vector<std::string>& q) {
    const double N = static_cast<double>(docs.size());
    double total = 0.0;
    for (const auto& x : docs) total += static_cast<double>(x.size());
    const double avgdl = total / N;
    double s = 0.0;
    for (const auto& w : q) {
        double n = 0.0;
        for (const auto& x : docs) n += std::find(x.begin(), x.end(), w) != x.end() ? 1.0 : 0.0;
        const double f = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), w));
        if (f == 0.0) continue;
        const double idf = std::log(1.0 + (N - n + 0.5) / (n + 0.5));
        s += idf * f * 2.5 / (f + 1.5 * (0.25 + 0.75 * static_cast<double>(docs[d].size()) / avgdl));
    }
    return s;
}

const Checklist& fixture() {
    static const Checklist c = testsupport::fixture_checklist();
    return c;
}

CICharacteristics roles(std::optional<std::string> sender, std::optional<std::string> recipient = std::nullopt) {
    CICharacteristics ci;
    ci.sender_role = std::move(sender);
    ci.recipient_role = std::move(recipient);
    return ci;
}

}  // namespace

TEST(Bm25, TwoDocumentIdf) {
    const auto idx = build_bm25_index({{"164.1", "consent form"}, {"164.2", "notes"}});
    EXPECT_NEAR(idx.idf("consent"), std::log(2.0), 1e-12);
    EXPECT_NEAR(idx.avgdl, 1.5, 1e-12);
    EXPECT_NEAR(idx.idf("absent"), std::log(1.0 + 2.5 / 0.5), 1e-12);
    EXPECT_EQ(bm25_word_score(idx, "consent", "164.2"), 0.0);
    EXPECT_GT(bm25_word_score(idx, "consent", parse_regulation_id("164.1")), 0.0);
}

TEST(Bm25, MatchesBruteForceOnRandomCorpora) {
    std::mt19937 rng(7);
    static const std::vector<std::string> vocab{"covered", "entity", "disclose", "health", "plan", "notes", "consent", "minimum"};
    for (int trial = 0; trial < 100; ++trial) {
        Corpus corpus;
        std::vector<std::vector<std::string>> docs;
        const std::size_t n = 1 + rng() % 12;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::string> toks;
            std::string body;
            const std::size_t len = 1 + rng() % 15;
            for (std::size_t t = 0; t < len; ++t) {
                toks.push_back(vocab[rng() % vocab.size()]);
                body += toks.back() + (rng() % 3 ? " " : ", ");
            }
            corpus["164." + std::to_string(100 + i)] = body;
            docs.push_back(toks);
        }
        const auto idx = build_bm25_index(corpus);
        std::vector<std::string> q;
        for (std::size_t t = 0, len = 1 + rng() % 5; t < len; ++t) q.push_back(vocab[rng() % vocab.size()]);
        std::string qtext;
        for (const auto& w : q) qtext += w + " ";

        std::vector<RetrievalHit> expected;
        for (std::size_t i = 0; i < n; ++i) {
            const auto id = "164." + std::to_string(100 + i);
            const double s = oracle_score(docs, i, q);
            EXPECT_NEAR(bm25_similarity(idx, q, id), s, 1e-9);
            expected.push_back({parse_regulation_id(id), s, RetrievalMethod::BM25});
        }
        std::sort(expected.begin(), expected.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
            if (std::abs(a.score - b.score) > 1e-12) return a.score > b.score;
            return a.leaf < b.leaf;
        });
        const std::size_t k = 1 + rng() % 6;
        const auto got = bm25_query(idx, qtext, k);
        ASSERT_EQ(got.size(), std::min(k, n));
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i].score, expected[i].score, 1e-9);
    }
}

TEST(Bm25, MoreOccurrencesScoreHigher) {
    const auto idx = build_bm25_index({{"164.1", "notes notes plan"}, {"164.2", "notes plan plan"}, {"164.3", "entity"}});
    EXPECT_GT(bm25_word_score(idx, "notes", "164.1"), bm25_word_score(idx, "notes", "164.2"));
    const auto hits = bm25_query(idx, "notes", 3);
    EXPECT_EQ(hits.front().leaf.str(), "164.1");
    EXPECT_EQ(hits.back().leaf.str(), "164.3");
}

TEST(Bm25, EmptyInputs) {
    EXPECT_THROW(build_bm25_index({}), Error);
    const auto idx = build_bm25_index({{"164.1", "text"}});
    EXPECT_TRUE(bm25_query(idx, "  ,, ", 3).empty());
    EXPECT_THROW(bm25_query(idx, "text", 0), Error);
    try {
        bm25_word_score(idx, "text", "164.9");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownDoc);
    }
}

TEST(Bm25, TiesBreakByAscendingId) {
    const auto idx = build_bm25_index({{"164.508", "plan"}, {"164.502(b)", "plan"}, {"164.502(a)", "plan"}});
    const auto hits = bm25_query(idx, "plan", 3);
    EXPECT_EQ(hits[0].leaf.str(), "164.502(a)");
    EXPECT_EQ(hits[1].leaf.str(), "164.502(b)");
    EXPECT_EQ(hits[2].leaf.str(), "164.508");
}

TEST(Corpus, NormsOnlyByDefault) {
    EXPECT_EQ(norm_corpus(fixture()).size(), 7u);
    EXPECT_EQ(norm_corpus(fixture(), true).size(), 9u);
}

TEST(EmbeddingRetrieval, SurgeonMatchesCoveredEntityNorms) {
    HashedBagEmbedder emb;
    const auto& c = fixture();
    const auto r = embedding_retrieve_detailed(c, roles("surgeon", "patient"), "A heart surgeon shares an operative report.", emb);
    ASSERT_FALSE(r.matched.empty());
    EXPECT_EQ(r.matched[0].vertex, "surgeon.n.01");
    EXPECT_FALSE(r.fallback);
    EXPECT_EQ(r.candidates, 7u);  // every norm names a covered entity as sender
    EXPECT_EQ(r.hits.size(), 5u);
    EXPECT_TRUE(c.role_graph.is_subsumed_by("surgeon.n.01", *c.role_graph.resolve("covered entity")));
}

TEST(EmbeddingRetrieval, RankingMatchesCosineOracle) {
    HashedBagEmbedder emb;
    const auto& c = fixture();
    const std::string event = "covered entity discloses psychotherapy notes";
    const auto hits = embedding_retrieve(c, roles("covered entity"), event, emb, {7, 0.6, CandidateMode::Filter});
    ASSERT_EQ(hits.size(), 7u);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto v = emb.embed({event, full_specification(c.tree, hits[i].leaf.str())});
        EXPECT_NEAR(hits[i].score, cosine_or_zero(v[0], v[1]), 1e-12);
        if (i) {
            EXPECT_FALSE(hit_before(hits[i], hits[i - 1]));
        }
    }
}

TEST(EmbeddingRetrieval, NoRolesFallsBackToAllNorms) {
    HashedBagEmbedder emb;
    const auto r = embedding_retrieve_detailed(fixture(), CICharacteristics{}, "something happened", emb);
    EXPECT_TRUE(r.fallback);
    EXPECT_EQ(r.candidates, 0u);
    EXPECT_EQ(r.hits.size(), 5u);
    EXPECT_TRUE(r.matched.empty());
}

TEST(EmbeddingRetrieval, UnionModeFillsAfterMatchedBlock) {
    HashedBagEmbedder emb;
    const auto& c = fixture();
    const auto filter = embedding_retrieve_detailed(c, roles("individual"), "the individual asks for records", emb);
    EXPECT_EQ(filter.candidates, 1u);
    ASSERT_EQ(filter.hits.size(), 1u);
    EXPECT_EQ(filter.hits[0].leaf.str(), "164.502(a)(1)(i)");

    const auto uni = embedding_retrieve(c, roles("individual"), "the individual asks for records", emb, {5, 0.6, CandidateMode::Union});
    ASSERT_EQ(uni.size(), 5u);
    EXPECT_EQ(uni[0].leaf.str(), "164.502(a)(1)(i)");
    for (std::size_t i = 2; i < uni.size(); ++i) EXPECT_FALSE(hit_before(uni[i], uni[i - 1]));
}

TEST(EmbeddingRetrieval, DistantRoleStaysUnmatched) {
    HashedBagEmbedder emb;
    const auto r = embedding_retrieve_detailed(fixture(), roles("xylophone tuner"), "tuning", emb);
    EXPECT_TRUE(r.matched.empty());
    EXPECT_EQ(r.unmatched, std::vector<std::string>{"xylophone tuner"});
    EXPECT_TRUE(r.fallback);
}

TEST(AgentRetrieval, DropsFabricatedIds) {
    const auto& c = fixture();
    const auto hits = verified_agent_hits(c, "1. 164.502(a)(1)(i)\n2. 164.999(z)\n3. 164.508(a)(2)\n4. 170.1\n5. 164.502(a)(1)(i)", 5);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].leaf.str(), "164.502(a)(1)(i)");
    EXPECT_EQ(hits[1].leaf.str(), "164.508(a)(2)");
    EXPECT_DOUBLE_EQ(hits[1].score, 0.5);
    for (const auto& h : hits) EXPECT_TRUE(verify_id(c, h.leaf));
}

TEST(AgentRetrieval, CapsAtMaxN) {
    const auto hits = verified_agent_hits(fixture(), "164.502(b), 164.506(a), 164.506(c)(1), 160.103(a)", 2);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[1].leaf.str(), "164.506(a)");
}

TEST(AgentRetrieval, ThroughGateway) {
    ScriptedMockProvider mock({{PromptMatcher::substring("generate the applicable"), {"164.508(a)(2) and 164.777"}}});
    Gateway gw(mock);
    const auto hits = agent_retrieve(gw, fixture(), "an event", 5);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].method, RetrievalMethod::Agent);
    EXPECT_TRUE(agent_retrieve(gw, fixture(), "an event", 0).empty());
}
