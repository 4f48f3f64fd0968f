#include "avs/ontology.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "avs/errors.hpp"

namespace avs::ontology {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string dataset_key(std::string_view dataset) {
    std::string key = trim(dataset);
    for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return key;
}

}  // namespace

std::string normalize_label(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        const auto uc = static_cast<unsigned char>(c);
        if (c == '_' || c == '-' || std::isspace(uc)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(uc)));
    }
    return out;
}

void AliasTable::add(CategoryAlias alias) {
    alias.canonical = trim(alias.canonical);
    if (alias.canonical.empty()) throw Error("alias with empty canonical class");
    auto key = std::make_pair(dataset_key(alias.source_dataset), normalize_label(alias.source_label));
    if (index_.count(key)) {
        throw DuplicateAlias("duplicate alias (" + key.first + ", " + key.second + ")");
    }
    index_.emplace(std::move(key), alias.canonical);
    canonical_.insert(alias.canonical);
    entries_.push_back(std::move(alias));
}

std::optional<std::string> AliasTable::resolve(std::string_view dataset,
                                               std::string_view raw_label) const {
    auto it = index_.find({dataset_key(dataset), normalize_label(raw_label)});
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::set<std::string> AliasTable::datasets_for(const std::string& canonical) const {
    std::set<std::string> out;
    for (const auto& e : entries_) {
        if (e.canonical == canonical) out.insert(dataset_key(e.source_dataset));
    }
    return out;
}

AliasTable parse_alias_table(std::istream& in) {
    AliasTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(trim(field));
        if (fields.size() != 3) {
            throw ParseError("expected 3 tab-separated fields, got " + std::to_string(fields.size()),
                             lineno);
        }
        for (const auto& f : fields) {
            if (f.empty()) throw ParseError("empty alias field", lineno);
        }
        try {
            table.add({fields[0], fields[1], fields[2]});
        } catch (const DuplicateAlias& e) {
            throw DuplicateAlias(std::string(e.what()) + " at line " + std::to_string(lineno));
        }
    }
    return table;
}

AliasTable load_alias_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open alias file " + path.string());
    return parse_alias_table(in);
}

}  // namespace avs::ontology
