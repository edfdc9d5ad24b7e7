#include "bpghunt/labeling.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "bpghunt/text.hpp"

namespace bpghunt {

FileTypeTaxonomy FileTypeTaxonomy::defaults() {
    return FileTypeTaxonomy({
        {"hklm\\*", "registry"},   {"hkcu\\*", "registry"},   {"hkey_*", "registry"},
        {"*.doc", "office_file"},  {"*.docx", "office_file"}, {"*.docm", "office_file"},
        {"*.xls", "office_file"},  {"*.xlsx", "office_file"}, {"*.xlsm", "office_file"},
        {"*.ppt", "office_file"},  {"*.pptx", "office_file"}, {"*.zip", "zipped_file"},
        {"*.rar", "zipped_file"},  {"*.7z", "zipped_file"},   {"*.tar.gz", "zipped_file"},
        {"*.exe", "executable"},   {"*.scr", "executable"},   {"*.tmp", "executable"},
        {"*.msi", "executable"},   {"*.dll", "library"},      {"*.so", "library"},
        {"*.py", "code_file"},     {"*.c", "code_file"},      {"*.cpp", "code_file"},
        {"*.h", "code_file"},      {"*.java", "code_file"},   {"*.js", "code_file"},
        {"*.pdf", "document"},     {"*.csv", "data_file"},    {"*.txt", "text_file"},
        {"*.log", "text_file"},    {"*.lnk", "shortcut"},     {"*.apk", "package"},
    });
}

FileTypeTaxonomy FileTypeTaxonomy::parse(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> rules;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::string_view body = line;
        if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = text::trim(body);
        if (body.empty()) continue;
        // The class is the last word, so patterns may contain spaces.
        auto ws = body.find_last_of(" \t");
        if (ws == std::string_view::npos) throw std::runtime_error("taxonomy line " + std::to_string(n) + ": missing class");
        std::string pattern = text::lower(text::trim(body.substr(0, ws)));
        std::string cls(body.substr(ws + 1));
        rules.emplace_back(std::move(pattern), std::move(cls));
    }
    return FileTypeTaxonomy(std::move(rules));
}

std::string_view FileTypeTaxonomy::match(std::string_view path) const {
    std::string lowered = text::lower(path);
    for (const auto& [pattern, cls] : rules_)
        if (text::glob_match(pattern, lowered)) return cls;
    return {};
}

namespace {

std::string_view basename(std::string_view path) {
    auto pos = path.find_last_of("/\\");
    return pos == std::string_view::npos ? path : path.substr(pos + 1);
}

}  // namespace

std::string node_label(const EntityRef& entity, const FileTypeTaxonomy& taxonomy, LabelStats* stats) {
    switch (entity.kind) {
        case EntityKind::Process: {
            const std::string* path = entity.attr("path");
            std::string_view base = (path && !path->empty()) ? basename(*path) : std::string_view(*entity.attr("name"));
            return text::lower(base);
        }
        case EntityKind::File: {
            std::string_view cls = taxonomy.match(entity.attr_or("path", ""));
            if (cls.empty()) {
                if (stats) ++stats->fallback_files;
                return std::string(FileTypeTaxonomy::kFallback);
            }
            return std::string(cls);
        }
        case EntityKind::IP: return entity.attr_or("address", "") + ":" + entity.attr_or("port", "0");
        case EntityKind::User: return entity.attr_or("name", "");
    }
    return {};
}

std::string_view edge_label(RelationKind relation) { return to_string(relation); }

LabelDictionary::LabelDictionary(std::vector<std::string> sorted_unique) : texts_(std::move(sorted_unique)) {
    if (!std::is_sorted(texts_.begin(), texts_.end()) ||
        std::adjacent_find(texts_.begin(), texts_.end()) != texts_.end())
        throw std::invalid_argument("label dictionary must be sorted and unique");
    text::Fnv1a h;
    for (std::uint32_t i = 0; i < texts_.size(); ++i) {
        ids_.emplace(texts_[i], i);
        h.update(texts_[i]);
        h.update(std::string_view("\0", 1));
    }
    hash_ = h.digest();
}

std::uint32_t LabelDictionary::id(std::string_view text) const {
    auto it = ids_.find(std::string(text));
    if (it == ids_.end()) throw std::out_of_range("label '" + std::string(text) + "' not in dictionary");
    return it->second;
}

bool LabelDictionary::contains(std::string_view text) const { return ids_.count(std::string(text)) != 0; }

void LabelDictionary::save(std::ostream& out) const {
    out << "bpghunt-labels\t1\t" << text::hex64(hash_) << '\n';
    for (std::uint32_t i = 0; i < texts_.size(); ++i) out << i << '\t' << text::escape(texts_[i]) << '\n';
}

LabelDictionary LabelDictionary::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("bpghunt-labels\t1\t"))
        throw std::runtime_error("label dictionary: bad header");
    std::string expected_hash = line.substr(std::string_view("bpghunt-labels\t1\t").size());
    std::vector<std::string> texts;
    while (std::getline(in, line)) {
        auto parts = text::split(line, '\t');
        if (parts.size() != 2 || parts[0] != std::to_string(texts.size()))
            throw std::runtime_error("label dictionary: bad row");
        auto t = text::unescape(parts[1]);
        if (!t) throw std::runtime_error("label dictionary: bad escape");
        texts.push_back(std::move(*t));
    }
    LabelDictionary dict(std::move(texts));
    if (text::hex64(dict.hash()) != expected_hash) throw std::runtime_error("label dictionary: hash mismatch");
    return dict;
}

}  // namespace bpghunt
