#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace privcheck;

namespace {

Checklist roundtrip(const Checklist& c) {
    std::stringstream s;
    save_checklist(c, s);
    return load_checklist(s);
}

Errc load_error(const std::string& payload) {
    std::istringstream in(payload);
    try {
        load_checklist(in);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "payload loaded";
    return Errc::Io;
}

}  // namespace

TEST(Checklist, VerifyIdNormalizesCase) {
    const auto c = make_checklist(testsupport::mini_tree());
    EXPECT_TRUE(verify_id(c, "164.502(a)(1)(i)"));
    EXPECT_TRUE(verify_id(c, "164.502(A)(1)(I)"));
    EXPECT_TRUE(verify_id(c, "\xC2\xA7 164.508"));
    EXPECT_FALSE(verify_id(c, "999.999"));
    EXPECT_FALSE(verify_id(c, "not an id"));
}

TEST(Checklist, VerifyIdMatchesLinearScan) {
    const auto c = make_checklist(testsupport::mini_tree());
    std::mt19937 rng(3);
    for (int i = 0; i < 300; ++i) {
        RegulationId id;
        id.part = rng() % 2 ? 164 : 160;
        id.section = std::vector<std::uint32_t>{103, 502, 506, 508, 510}[rng() % 5];
        for (std::size_t d = rng() % 4; d > 0; --d) id.segments.push_back(std::string(1, "a1ic2"[rng() % 5]));
        bool scan = false;
        for (const auto& [key, _] : c.tree.nodes) scan = scan || key == id.str();
        EXPECT_EQ(verify_id(c, id), scan) << id.str();
    }
}

TEST(Checklist, NormsByTypePartitionFixture) {
    const auto c = testsupport::fixture_checklist();
    const auto pos = norms_by_type(c, NormType::Positive);
    const auto neg = norms_by_type(c, NormType::Negative);
    const auto def = norms_by_type(c, NormType::GeneralDefinition);
    EXPECT_EQ(pos.size(), 5u);
    EXPECT_EQ(neg.size(), 2u);
    EXPECT_EQ(def.size(), 2u);
    EXPECT_EQ(pos.size() + neg.size() + def.size(), c.annotations.size());
    EXPECT_EQ(neg.front().str(), "164.502(b)");
    EXPECT_EQ(norm_leaves(c).size(), 7u);
    EXPECT_TRUE(norms_by_type(make_checklist(testsupport::mini_tree()), NormType::Positive).empty());
}

TEST(Checklist, DefinitionLookupIsCaseInsensitive) {
    const auto c = testsupport::fixture_checklist();
    auto d = lookup_definition(c, "Covered   Entity");
    ASSERT_TRUE(d);
    EXPECT_EQ(*d, *lookup_definition(c, "covered entity"));
    EXPECT_FALSE(lookup_definition(c, "unknown term"));
}

TEST(Checklist, FixtureRoundTrip) {
    const auto c = testsupport::fixture_checklist();
    EXPECT_EQ(roundtrip(c), c);
}

TEST(Checklist, RandomRoundTrip) {
    std::mt19937 rng(5);
    static const char* roles[] = {"covered entity", "individual", "doctor", "health plan"};
    for (int trial = 0; trial < 30; ++trial) {
        auto c = make_checklist(parse_document(testsupport::random_document(rng, 25)));
        for (const auto& leaf : c.tree.leaves()) {
            if (rng() % 3 == 0) continue;
            NormAnnotation a;
            a.leaf = parse_regulation_id(leaf);
            a.norm_type = static_cast<NormType>(rng() % 3);
            if (a.norm_type != NormType::GeneralDefinition) {
                CICharacteristics ci;
                ci.sender_role = roles[rng() % 4];
                if (rng() % 2) ci.recipient_role = roles[rng() % 4];
                ci.consent_form = static_cast<ConsentForm>(rng() % 3);
                ci.sender_is_subject = static_cast<Tristate>(rng() % 3);
                a.characteristics = ci;
            }
            for (const auto& r : c.tree.node(leaf).references) {
                a.reference_relations.push_back({r, static_cast<RelationKind>(rng() % 2), !c.tree.contains(r.str()), false});
            }
            a.provenance = {"mock", "abc"};
            c.annotations.emplace(leaf, a);
        }
        c.definitions.add("term " + std::to_string(trial), "meaning");
        ASSERT_EQ(roundtrip(c), c);
    }
}

TEST(Checklist, TruncatedPayloadIsCorrupt) {
    std::stringstream s;
    save_checklist(testsupport::fixture_checklist(), s);
    const auto full = s.str();
    EXPECT_EQ(load_error(full.substr(0, full.size() / 2)), Errc::CorruptPayload);
    EXPECT_EQ(load_error("{}"), Errc::CorruptPayload);
}

TEST(Checklist, FutureVersionRejected) {
    auto j = checklist_to_json(make_checklist(testsupport::mini_tree()));
    j["schema_version"] = kChecklistSchemaVersion + 1;
    EXPECT_EQ(load_error(j.dump()), Errc::SchemaVersionMismatch);
}

TEST(Checklist, AnnotationOnInternalNodeRejected) {
    auto c = testsupport::fixture_checklist();
    auto a = c.annotations.begin()->second;
    a.leaf = parse_regulation_id("164.502(a)");
    c.annotations.emplace("164.502(a)", a);
    EXPECT_EQ(load_error(checklist_to_json(c).dump()), Errc::CorruptPayload);
}
