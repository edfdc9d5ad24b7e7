#include "bpghunt/bpg.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bpghunt/text.hpp"

namespace bpghunt {

void attach_labels(std::vector<BehaviorGraph>& corpus, const FileTypeTaxonomy& taxonomy, LabelStats* stats) {
    for (auto& g : corpus) {
        for (auto& n : g.nodes) n.label = node_label(n.entity, taxonomy, stats);
        for (auto& e : g.edges) e.label = std::string(edge_label(e.relation));
    }
}

LabelDictionary intern_labels(std::vector<BehaviorGraph>& corpus) {
    std::set<std::string> all;
    for (const auto& g : corpus) {
        for (const auto& n : g.nodes) all.insert(n.label);
        for (const auto& e : g.edges) all.insert(e.label);
    }
    LabelDictionary dict(std::vector<std::string>(all.begin(), all.end()));
    apply_dictionary(corpus, dict);
    return dict;
}

void apply_dictionary(std::vector<BehaviorGraph>& corpus, const LabelDictionary& dict) {
    for (auto& g : corpus) {
        for (auto& n : g.nodes) n.label_id = dict.id(n.label);
        for (auto& e : g.edges) e.label_id = dict.id(e.label);
    }
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw std::runtime_error("bpg file: " + what); }

std::string id_text(std::uint32_t id) { return id == kNoLabel ? "-" : std::to_string(id); }

std::uint32_t parse_id(std::string_view s) {
    if (s == "-") return kNoLabel;
    auto v = text::parse_canonical_uint(s);
    if (!v || *v >= kNoLabel) bad("bad id '" + std::string(s) + "'");
    return static_cast<std::uint32_t>(*v);
}

std::uint64_t parse_u64(std::string_view s) {
    auto v = text::parse_canonical_uint(s);
    if (!v) bad("bad number '" + std::string(s) + "'");
    return *v;
}

std::int32_t parse_i32(std::string_view s) {
    std::int32_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad("bad integer '" + std::string(s) + "'");
    return v;
}

std::string need_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) bad("unexpected end of file");
    return line;
}

std::size_t counted(std::istream& in, std::string_view tag) {
    auto line = need_line(in);
    auto parts = text::split(line, '\t');
    if (parts.size() != 2 || parts[0] != tag) bad("expected '" + std::string(tag) + "'");
    return parse_u64(parts[1]);
}

}  // namespace

void write_bpg(std::ostream& out, const BehaviorGraph& g) {
    out << "bpghunt-bpg\t" << kBpgFormatVersion << '\t' << g.id << '\n';
    out << "seeds";
    for (NodeId s : g.seeds) out << '\t' << s;
    out << '\n';
    out << "nodes\t" << g.nodes.size() << '\n';
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const BpgNode& n = g.nodes[i];
        out << i << '\t' << n.graph_node << '\t' << n.unit << '\t' << text::escape(n.label) << '\t'
            << id_text(n.label_id) << "\thost=" << text::escape(n.host) << '\t' << serialize_entity_fields(n.entity)
            << '\n';
    }
    out << "edges\t" << g.edges.size() << '\n';
    for (const BpgEdge& e : g.edges)
        out << e.src << '\t' << e.dst << '\t' << to_string(e.relation) << '\t' << e.timestamp_us << '\t' << e.event
            << '\t' << e.seq << '\t' << text::escape(e.label) << '\t' << id_text(e.label_id) << '\n';
}

BehaviorGraph read_bpg(std::istream& in) {
    BehaviorGraph g;
    std::string head_line = need_line(in);
    auto head = text::split(head_line, '\t');
    if (head.size() != 3 || head[0] != "bpghunt-bpg" || head[1] != std::to_string(kBpgFormatVersion))
        bad("bad header");
    g.id = static_cast<std::uint32_t>(parse_u64(head[2]));

    std::string seeds_line = need_line(in);
    auto seeds = text::split(seeds_line, '\t');
    if (seeds.empty() || seeds[0] != "seeds") bad("expected 'seeds'");
    for (std::size_t i = 1; i < seeds.size(); ++i) g.seeds.push_back(static_cast<NodeId>(parse_u64(seeds[i])));

    std::size_t n = counted(in, "nodes");
    for (std::size_t i = 0; i < n; ++i) {
        std::string line = need_line(in);
        auto f = text::split(line, '\t');
        if (f.size() < 7 || parse_u64(f[0]) != i || !f[5].starts_with("host=")) bad("bad node row");
        BpgNode node;
        node.graph_node = static_cast<NodeId>(parse_u64(f[1]));
        node.unit = parse_i32(f[2]);
        auto label = text::unescape(f[3]);
        auto host = text::unescape(f[5].substr(5));
        if (!label || !host) bad("bad escape");
        node.label = std::move(*label);
        node.label_id = parse_id(f[4]);
        node.host = std::move(*host);
        node.entity = parse_entity_fields(std::span(f).subspan(6));
        g.nodes.push_back(std::move(node));
    }
    std::size_t m = counted(in, "edges");
    for (std::size_t i = 0; i < m; ++i) {
        std::string line = need_line(in);
        auto f = text::split(line, '\t');
        if (f.size() != 8) bad("bad edge row");
        BpgEdge e;
        e.src = static_cast<std::uint32_t>(parse_u64(f[0]));
        e.dst = static_cast<std::uint32_t>(parse_u64(f[1]));
        if (e.src >= g.nodes.size() || e.dst >= g.nodes.size()) bad("edge endpoint out of range");
        auto rel = parse_relation_kind(f[2]);
        if (!rel) bad("bad relation");
        e.relation = *rel;
        e.timestamp_us = static_cast<std::int64_t>(parse_u64(f[3]));
        e.event = static_cast<EventId>(parse_u64(f[4]));
        e.seq = parse_u64(f[5]);
        auto label = text::unescape(f[6]);
        if (!label) bad("bad escape");
        e.label = std::move(*label);
        e.label_id = parse_id(f[7]);
        g.edges.push_back(std::move(e));
    }
    std::string extra;
    if (std::getline(in, extra)) bad("trailing content");
    return g;
}

std::uint64_t bpg_hash(const BehaviorGraph& bpg) {
    std::ostringstream os;
    write_bpg(os, bpg);
    text::Fnv1a h;
    h.update(os.str());
    return h.digest();
}

std::uint64_t compute_manifest_hash(const BpgStore& store) {
    text::Fnv1a h;
    h.update_u64(store.dictionary.hash());
    h.update_u64(store.corpus.size());
    for (const auto& g : store.corpus) h.update_u64(bpg_hash(g));
    return h.digest();
}

namespace {

std::string bpg_filename(std::uint32_t id) {
    std::string s = std::to_string(id);
    return "bpg/" + std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s + ".bpg";
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

void save_store(const std::filesystem::path& dir, BpgStore& store) {
    std::filesystem::create_directories(dir / "bpg");
    store.manifest_hash = compute_manifest_hash(store);

    std::ostringstream labels;
    store.dictionary.save(labels);
    write_file(dir / "labels.tsv", labels.str());

    std::ostringstream manifest;
    manifest << "bpghunt-store\t" << kBpgFormatVersion << '\n';
    manifest << "labels\t" << text::hex64(store.dictionary.hash()) << '\n';
    manifest << "manifest\t" << text::hex64(store.manifest_hash) << '\n';
    manifest << "count\t" << store.corpus.size() << '\n';
    for (const auto& g : store.corpus) {
        std::ostringstream body;
        write_bpg(body, g);
        std::string file = bpg_filename(g.id);
        write_file(dir / file, body.str());
        manifest << g.id << '\t' << file << '\t' << text::hex64(bpg_hash(g)) << '\t' << g.nodes.size() << '\t'
                 << g.edges.size() << '\n';
    }
    write_file(dir / "manifest.tsv", manifest.str());
}

BpgStore load_store(const std::filesystem::path& dir) {
    auto fail = [&](const std::string& what) -> void { throw std::runtime_error("store " + dir.string() + ": " + what); };
    std::ifstream mf(dir / "manifest.tsv");
    if (!mf) fail("missing manifest.tsv");
    std::ifstream lf(dir / "labels.tsv");
    if (!lf) fail("missing labels.tsv");

    BpgStore store;
    store.dictionary = LabelDictionary::load(lf);

    std::string line;
    auto next = [&]() -> std::vector<std::string_view> {
        if (!std::getline(mf, line)) fail("truncated manifest");
        return text::split(line, '\t');
    };
    auto head = next();
    if (head.size() != 2 || head[0] != "bpghunt-store" || head[1] != std::to_string(kBpgFormatVersion))
        fail("bad manifest header");
    auto lab = next();
    if (lab.size() != 2 || lab[0] != "labels" || lab[1] != text::hex64(store.dictionary.hash()))
        fail("label dictionary does not match manifest");
    auto man = next();
    if (man.size() != 2 || man[0] != "manifest") fail("missing manifest hash");
    std::string manifest_hex(man[1]);
    auto cnt = next();
    if (cnt.size() != 2 || cnt[0] != "count") fail("missing count");
    auto count = text::parse_canonical_uint(cnt[1]);
    if (!count) fail("bad count");

    for (std::uint64_t i = 0; i < *count; ++i) {
        auto row = next();
        if (row.size() != 5) fail("bad manifest row");
        std::string file(row[1]), hash(row[2]);
        std::ifstream bf(dir / file, std::ios::binary);
        if (!bf) fail("missing " + file);
        std::string bytes((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());
        text::Fnv1a h;
        h.update(bytes);
        if (text::hex64(h.digest()) != hash) fail(file + " content hash mismatch");
        std::istringstream body(bytes);
        BehaviorGraph g = read_bpg(body);
        store.corpus.push_back(std::move(g));
    }
    store.manifest_hash = compute_manifest_hash(store);
    if (text::hex64(store.manifest_hash) != manifest_hex) fail("manifest hash mismatch");
    return store;
}

namespace {

std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + '"';
}

std::string_view dot_shape(EntityKind k) {
    switch (k) {
        case EntityKind::Process: return "box";
        case EntityKind::File: return "ellipse";
        case EntityKind::IP: return "diamond";
        case EntityKind::User: return "house";
    }
    return "ellipse";
}

}  // namespace

void write_dot(std::ostream& out, const BehaviorGraph& g) {
    out << "digraph bpg_" << g.id << " {\n  rankdir=LR;\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto& n = g.nodes[i];
        std::string label = n.label;
        if (n.unit >= 0) label += " #" + std::to_string(n.unit);
        out << "  n" << i << " [label=" << dot_quote(label) << ", shape=" << dot_shape(n.entity.kind) << "];\n";
    }
    for (const auto& e : g.edges)
        out << "  n" << e.src << " -> n" << e.dst << " [label=" << dot_quote(std::string(to_string(e.relation)) + " @" + std::to_string(e.timestamp_us)) << "];\n";
    out << "}\n";
}

}  // namespace bpghunt
