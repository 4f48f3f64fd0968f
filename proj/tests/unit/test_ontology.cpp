#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "avs/errors.hpp"
#include "avs/ontology.hpp"

using namespace avs;
using namespace avs::ontology;

namespace {

AliasTable parse(const std::string& text) {
    std::istringstream in(text);
    return parse_alias_table(in);
}

const char* kThreeRows =
    "# canonical\tdataset\tlabel\n"
    "dog\tlvis\tdog\n"
    "dog\tvggsound\tdog barking\n"
    "cat\tvggsound\tcat meowing\n";

}  // namespace

TEST(Normalize, Examples) {
    EXPECT_EQ(normalize_label("computer_keyboard"), "computer keyboard");
    EXPECT_EQ(normalize_label("Dog"), "dog");
    EXPECT_EQ(normalize_label("  typing   on computer_keyboard "), "typing on computer keyboard");
    EXPECT_EQ(normalize_label("fire-truck\t siren"), "fire truck siren");
    EXPECT_EQ(normalize_label(""), "");
    EXPECT_EQ(normalize_label("___"), "");
}

TEST(Normalize, Idempotent) {
    for (const char* s : {"A__b  C", " x-y_z ", "already clean"}) {
        EXPECT_EQ(normalize_label(normalize_label(s)), normalize_label(s));
    }
}

TEST(Resolve, ManyToOneAndNoMatch) {
    AliasTable t;
    t.add({"dog", "vggsound", "dog barking"});
    t.add({"dog", "vggsound", "dog baying"});
    t.add({"computer_keyboard", "lvis", "computer_keyboard"});
    EXPECT_EQ(t.resolve("vggsound", "dog barking"), "dog");
    EXPECT_EQ(t.resolve("vggsound", "Dog_Baying"), "dog");
    EXPECT_EQ(t.resolve("lvis", "computer keyboard"), "computer_keyboard");
    EXPECT_EQ(t.resolve("lvis", "unregistered_thing"), std::nullopt);
    // Lookup is per dataset and never fuzzy.
    EXPECT_EQ(t.resolve("lvis", "dog barking"), std::nullopt);
    EXPECT_EQ(t.resolve("vggsound", "dog bark"), std::nullopt);
}

TEST(Resolve, DuplicateAfterNormalizationRejected) {
    AliasTable t;
    t.add({"dog", "lvis", "dog"});
    EXPECT_THROW(t.add({"cat", "lvis", " DOG "}), DuplicateAlias);
    EXPECT_THROW(t.add({"", "lvis", "cat"}), Error);
}

TEST(Load, EmptyFileGivesEmptyTable) {
    EXPECT_TRUE(parse("").empty());
    EXPECT_TRUE(parse("# only a comment\n\n").empty());
}

TEST(Load, ThreeRowFixture) {
    const auto t = parse(kThreeRows);
    EXPECT_EQ(t.entries().size(), 3u);
    EXPECT_EQ(t.canonical_set(), (std::set<std::string>{"dog", "cat"}));
    EXPECT_EQ(t.datasets_for("dog"), (std::set<std::string>{"lvis", "vggsound"}));
    EXPECT_EQ(t.resolve("vggsound", "cat_meowing"), "cat");
}

TEST(Load, DuplicateRowsRejected) {
    EXPECT_THROW(parse("dog\tlvis\tdog\ndog\tlvis\tdog\n"), DuplicateAlias);
}

TEST(Load, ParseErrorCarriesLineNumber) {
    try {
        parse("dog\tlvis\tdog\n# comment\ncat lvis cat\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse("dog\t\tdog\n"), ParseError);
}

TEST(Load, FromFileAndMissingFile) {
    const auto path = std::filesystem::path(testing::TempDir()) / "aliases_test.tsv";
    std::ofstream(path) << "dog\tlvis\tdog\r\ncat\tlvis\tcat\r\n";
    const auto t = load_alias_table(path);
    EXPECT_EQ(t.canonical_set().size(), 2u);
    EXPECT_THROW(load_alias_table(path.string() + ".missing"), IoError);
}

TEST(Load, ShippedAliasFileCoversOverlapClasses) {
    const auto t = load_alias_table(AVS_DATA_DIR "/aliases.tsv");
    for (const char* cls : {"ambulance", "cat", "dog", "bus", "horse", "lion", "bird", "guitar", "piano",
                            "computer_keyboard"}) {
        ASSERT_TRUE(t.canonical_set().count(cls)) << cls;
        EXPECT_GE(t.datasets_for(cls).size(), 2u) << cls;
    }
    EXPECT_EQ(t.resolve("vggsound", "dog baying"), "dog");
    EXPECT_EQ(t.resolve("vggsound", "dog barking"), "dog");
    EXPECT_EQ(t.resolve("lvis", "computer_keyboard"), "computer_keyboard");
}
