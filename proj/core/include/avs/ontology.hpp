#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace avs::ontology {

struct CategoryAlias {
    std::string canonical;
    std::string source_dataset;
    std::string source_label;
};

// Lowercases, maps '_' and '-' to spaces, trims, and collapses whitespace runs.
std::string normalize_label(std::string_view raw);

// Exact (dataset, normalized label) -> canonical class lookup. Immutable once built.
class AliasTable {
public:
    AliasTable() = default;

    // Throws DuplicateAlias when (dataset, normalized label) is already present.
    void add(CategoryAlias alias);

    // std::nullopt is the NoMatch result.
    std::optional<std::string> resolve(std::string_view dataset, std::string_view raw_label) const;

    const std::vector<CategoryAlias>& entries() const { return entries_; }
    const std::set<std::string>& canonical_set() const { return canonical_; }
    // Datasets that contribute at least one alias of `canonical`.
    std::set<std::string> datasets_for(const std::string& canonical) const;
    bool empty() const { return entries_.empty(); }

private:
    std::vector<CategoryAlias> entries_;
    std::set<std::string> canonical_;
    std::map<std::pair<std::string, std::string>, std::string> index_;
};

// Tab-separated "canonical<TAB>dataset<TAB>source_label" records; '#' starts
// a comment line. Throws ParseError (with line number) or DuplicateAlias.
AliasTable parse_alias_table(std::istream& in);
AliasTable load_alias_table(const std::filesystem::path& path);

}  // namespace avs::ontology
