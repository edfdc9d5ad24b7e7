#include "bpghunt/threat.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "bpghunt/labeling.hpp"
#include "bpghunt/text.hpp"

namespace bpghunt {

void ScoringConfig::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0)) throw std::invalid_argument(std::string(name) + " must be non-negative");
    };
    nonneg(weight_ip, "weight_ip");
    nonneg(weight_user, "weight_user");
    nonneg(weight_sens, "weight_sens");
    nonneg(threshold_score, "threshold_score");
    nonneg(malicious_ip_score, "malicious_ip_score");
    nonneg(rare_ip_max, "rare_ip_max");
    nonneg(privilege_escalation_score, "privilege_escalation_score");
    for (const auto& [cls, v] : sensitive_class_scores) nonneg(v, ("sensitive score for " + cls).c_str());
    if (threshold_graphs < 1) throw std::invalid_argument("threshold_graphs must be positive");
}

std::uint64_t ScoringConfig::hash() const {
    std::ostringstream os;
    os << text::format_double(weight_ip) << '|' << text::format_double(weight_user) << '|'
       << text::format_double(weight_sens) << '|' << threshold_graphs << '|' << text::format_double(threshold_score)
       << '|' << text::format_double(malicious_ip_score) << '|' << text::format_double(rare_ip_max) << '|'
       << text::format_double(privilege_escalation_score);
    for (const auto& [cls, v] : sensitive_class_scores) os << '|' << cls << '=' << text::format_double(v);
    for (const auto& u : privileged_users) os << "|u:" << u;
    text::Fnv1a h;
    h.update(os.str());
    return h.digest();
}

ReputationDB::ReputationDB(std::set<std::string> deny, std::set<std::string> allow)
    : deny_(std::move(deny)), allow_(std::move(allow)) {
    for (const auto& d : deny_)
        if (allow_.count(d)) throw std::invalid_argument("reputation entry '" + d + "' is both denied and allowed");
}

std::set<std::string> ReputationDB::parse_list(std::istream& in) {
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view body = line;
        if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = text::trim(body);
        if (!body.empty()) out.insert(text::lower(body));
    }
    return out;
}

ReputationDB ReputationDB::load(const std::filesystem::path& deny, const std::filesystem::path& allow) {
    if (deny.empty()) throw MissingReputationDB("no deny-list configured");
    std::ifstream d(deny);
    if (!d) throw MissingReputationDB("cannot open deny-list " + deny.string());
    std::set<std::string> allow_set;
    if (!allow.empty()) {
        std::ifstream a(allow);
        if (!a) throw MissingReputationDB("cannot open allow-list " + allow.string());
        allow_set = parse_list(a);
    }
    return ReputationDB(parse_list(d), std::move(allow_set));
}

bool ReputationDB::listed(const std::set<std::string>& list, const EntityRef& ip) const {
    std::string address = text::lower(ip.attr_or("address", ""));
    if (list.count(address)) return true;
    if (const std::string* port = ip.attr("port"); port && list.count(address + ":" + *port)) return true;
    if (const std::string* domain = ip.attr("domain"); domain && list.count(text::lower(*domain))) return true;
    return false;
}

bool ReputationDB::is_malicious(const EntityRef& ip) const { return listed(deny_, ip); }
bool ReputationDB::is_allowed(const EntityRef& ip) const { return listed(allow_, ip); }

void ReputationDB::count_frequencies(std::span<const BehaviorGraph> corpus) {
    freq_.clear();
    max_freq_ = 0;
    for (const auto& g : corpus) {
        std::set<std::string> seen;
        for (const auto& n : g.nodes)
            if (n.entity.kind == EntityKind::IP) seen.insert(text::lower(n.entity.attr_or("address", "")));
        for (const auto& a : seen) max_freq_ = std::max(max_freq_, ++freq_[a]);
    }
}

std::size_t ReputationDB::frequency(const std::string& address) const {
    auto it = freq_.find(text::lower(address));
    return it == freq_.end() ? 0 : it->second;
}

SensitivityConfig SensitivityConfig::defaults() {
    return SensitivityConfig({
        {"/etc/shadow", "credentials"},
        {"/etc/gshadow", "credentials"},
        {"hklm\\sam\\*", "credentials"},
        {"hklm\\security\\*", "credentials"},
        {"*\\login data", "credentials"},
        {"*.kdbx", "credentials"},
        {"*/.ssh/id_*", "credentials"},
        {"*.db", "database"},
        {"*.sqlite", "database"},
        {"*.mdb", "database"},
        {"*.sql", "database"},
        {"*confidential*", "labeled_file"},
        {"*secret*", "labeled_file"},
    });
}

SensitivityConfig SensitivityConfig::parse(std::istream& in) {
    return SensitivityConfig(FileTypeTaxonomy::parse(in).rules());
}

std::string SensitivityConfig::classify(const std::string& path) const {
    std::string lowered = text::lower(path);
    for (const auto& [pattern, cls] : rules_)
        if (text::glob_match(pattern, lowered)) return cls;
    return {};
}

std::vector<std::uint32_t> flag_abnormal(const ClusterAssignment& assignment, const ScoringConfig& config) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < assignment.labels.size(); ++i)
        if (assignment.labels[i] == kNoise || assignment.cluster_size_of(i) <= config.threshold_graphs)
            out.push_back(i);
    return out;
}

namespace {

bool truthy(const std::string* v) { return v && (*v == "1" || *v == "true" || *v == "yes"); }

bool privileged(const EntityRef& user, const ScoringConfig& config) {
    if (config.privileged_users.count(text::lower(user.attr_or("name", "")))) return true;
    const std::string* p = user.attr("privilege");
    return p && config.privileged_users.count(text::lower(*p));
}

}  // namespace

std::vector<EventScore> score_components(const BehaviorGraph& bpg, const ReputationDB& reputation,
                                         const SensitivityConfig& sensitivity, const ScoringConfig& config) {
    std::vector<EventScore> out;
    auto ip_score = [&](const EntityRef& ip) {
        if (reputation.is_malicious(ip)) return config.malicious_ip_score;
        if (reputation.is_allowed(ip)) return 0.0;
        const double max = static_cast<double>(reputation.max_frequency());
        if (max <= 0) return config.rare_ip_max;
        const double f = static_cast<double>(reputation.frequency(ip.attr_or("address", "")));
        return config.rare_ip_max * (1.0 - std::min(f, max) / max);
    };
    for (std::size_t i = 0; i < bpg.edges.size(); ++i) {
        const BpgEdge& e = bpg.edges[i];
        const EntityRef& src = bpg.nodes[e.src].entity;
        const EntityRef& dst = bpg.nodes[e.dst].entity;
        EventScore s{i};
        switch (e.relation) {
            case RelationKind::Connect: s.f_ip = ip_score(dst); break;
            case RelationKind::Logon:
                s.f_ip = ip_score(src);
                if (privileged(dst, config)) s.f_user = config.privilege_escalation_score;
                break;
            case RelationKind::ExecuteProcess:
                if (privileged(src, config) || truthy(dst.attr("elevated"))) s.f_user = config.privilege_escalation_score;
                break;
            case RelationKind::Read: {
                std::string cls = sensitivity.classify(dst.attr_or("path", ""));
                if (!cls.empty()) {
                    auto it = config.sensitive_class_scores.find(cls);
                    if (it != config.sensitive_class_scores.end()) s.f_sens = it->second;
                }
                break;
            }
            default: break;
        }
        if (s.f_ip != 0.0 || s.f_user != 0.0 || s.f_sens != 0.0) out.push_back(s);
    }
    return out;
}

ThreatBreakdown threat_score(std::span<const EventScore> components, const ScoringConfig& config) {
    ThreatBreakdown b;
    for (const EventScore& s : components) {
        b.score += config.weight_ip * s.f_ip + config.weight_user * s.f_user + config.weight_sens * s.f_sens;
        b.f_ip += s.f_ip;
        b.f_user += s.f_user;
        b.f_sens += s.f_sens;
    }
    b.relevant_events = components.size();
    return b;
}

std::size_t ThreatReport::alarm_count() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const ThreatEntry& e) { return e.alarm; }));
}

ThreatReport rank_and_alarm(std::vector<ThreatEntry> entries, const ScoringConfig& config) {
    for (auto& e : entries) e.alarm = e.breakdown.score > config.threshold_score;
    std::sort(entries.begin(), entries.end(), [](const ThreatEntry& a, const ThreatEntry& b) {
        if (a.breakdown.score != b.breakdown.score) return a.breakdown.score > b.breakdown.score;
        return a.bpg < b.bpg;
    });
    ThreatReport r;
    r.entries = std::move(entries);
    r.config_hash = config.hash();
    r.threshold_score = config.threshold_score;
    r.threshold_graphs = config.threshold_graphs;
    return r;
}

ThreatReport assess(std::span<const BehaviorGraph> corpus, const ClusterAssignment& assignment,
                    const ReputationDB& reputation, const SensitivityConfig& sensitivity, const ScoringConfig& config) {
    config.validate();
    if (assignment.labels.size() != corpus.size()) throw std::invalid_argument("assignment does not match corpus");
    auto flagged = flag_abnormal(assignment, config);
    std::vector<ThreatEntry> entries(flagged.size());
    const auto n = static_cast<std::ptrdiff_t>(flagged.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::uint32_t id = flagged[i];
        ThreatEntry& e = entries[i];
        e.bpg = id;
        e.breakdown = threat_score(score_components(corpus[id], reputation, sensitivity, config), config);
        e.cluster = assignment.labels[id];
        e.cluster_size = assignment.cluster_size_of(id);
    }
    return rank_and_alarm(std::move(entries), config);
}

void write_report(std::ostream& out, const ThreatReport& r) {
    out << "bpghunt-report\t" << kReportFormatVersion << '\n';
    out << "corpus\t" << text::hex64(r.corpus_hash) << '\n';
    out << "config\t" << text::hex64(r.config_hash) << '\n';
    out << "threshold_score\t" << text::format_double(r.threshold_score) << '\n';
    out << "threshold_graphs\t" << r.threshold_graphs << '\n';
    out << "count\t" << r.entries.size() << '\n';
    out << "# rank\tbpg\tscore\tf_ip\tf_user\tf_sens\tevents\tcluster\tcluster_size\talarm\n";
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        const ThreatEntry& e = r.entries[i];
        out << i + 1 << '\t' << e.bpg << '\t' << text::format_double(e.breakdown.score) << '\t'
            << text::format_double(e.breakdown.f_ip) << '\t' << text::format_double(e.breakdown.f_user) << '\t'
            << text::format_double(e.breakdown.f_sens) << '\t' << e.breakdown.relevant_events << '\t'
            << (e.cluster == kNoise ? std::string("noise") : std::to_string(e.cluster)) << '\t' << e.cluster_size
            << '\t' << (e.alarm ? "ALARM" : "-") << '\n';
    }
}

ThreatReport read_report(std::istream& in) {
    auto bad = [](const std::string& what) { return std::runtime_error("report: " + what); };
    std::string line;
    auto field = [&](std::string_view key) {
        if (!std::getline(in, line)) throw bad("truncated");
        auto parts = text::split(line, '\t');
        if (parts.size() != 2 || parts[0] != key) throw bad("expected '" + std::string(key) + "'");
        return std::string(parts[1]);
    };
    if (field("bpghunt-report") != std::to_string(kReportFormatVersion)) throw bad("unsupported version");
    ThreatReport r;
    auto hex = [&](const std::string& s) {
        std::uint64_t v = 0;
        std::istringstream is(s);
        is >> std::hex >> v;
        if (!is || s.size() != 16) throw bad("bad hash");
        return v;
    };
    r.corpus_hash = hex(field("corpus"));
    r.config_hash = hex(field("config"));
    auto ts = text::parse_double(field("threshold_score"));
    auto tg = text::parse_canonical_uint(field("threshold_graphs"));
    auto count = text::parse_canonical_uint(field("count"));
    if (!ts || !tg || !count) throw bad("bad header value");
    r.threshold_score = *ts;
    r.threshold_graphs = *tg;
    if (!std::getline(in, line) || !line.starts_with("#")) throw bad("missing column header");
    for (std::uint64_t i = 0; i < *count; ++i) {
        if (!std::getline(in, line)) throw bad("truncated rows");
        auto f = text::split(line, '\t');
        if (f.size() != 10) throw bad("bad row");
        ThreatEntry e;
        auto bpg = text::parse_canonical_uint(f[1]);
        auto score = text::parse_double(f[2]);
        auto fip = text::parse_double(f[3]);
        auto fuser = text::parse_double(f[4]);
        auto fsens = text::parse_double(f[5]);
        auto events = text::parse_canonical_uint(f[6]);
        auto size = text::parse_canonical_uint(f[8]);
        if (!bpg || !score || !fip || !fuser || !fsens || !events || !size) throw bad("bad row value");
        e.bpg = static_cast<std::uint32_t>(*bpg);
        e.breakdown = {*score, *fip, *fuser, *fsens, static_cast<std::size_t>(*events)};
        if (f[7] == "noise") e.cluster = kNoise;
        else if (auto c = text::parse_canonical_uint(f[7])) e.cluster = static_cast<int>(*c);
        else throw bad("bad cluster");
        e.cluster_size = *size;
        e.alarm = f[9] == "ALARM";
        r.entries.push_back(e);
    }
    return r;
}

namespace {

std::string fixed1(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << v;
    return os.str();
}

}  // namespace

void write_summary(std::ostream& out, const ThreatReport& r, std::size_t corpus_size) {
    out << "BPGs in corpus:      " << corpus_size << '\n';
    out << "abnormal (scored):   " << r.entries.size() << "  (clusters of <= " << r.threshold_graphs
        << " graphs, plus noise)\n";
    out << "alarms:              " << r.alarm_count() << "  (score > " << text::format_double(r.threshold_score) << ")\n";
    const std::size_t shown = std::min<std::size_t>(r.entries.size(), 20);
    if (shown) out << "\ntop " << shown << ":\n";
    for (std::size_t i = 0; i < shown; ++i) {
        const auto& e = r.entries[i];
        out << "  " << (e.alarm ? "ALARM " : "      ") << "bpg " << e.bpg << "  score " << fixed1(e.breakdown.score)
            << "  (ip " << fixed1(e.breakdown.f_ip) << ", user " << fixed1(e.breakdown.f_user)
            << ", sensitive " << fixed1(e.breakdown.f_sens) << ")  cluster "
            << (e.cluster == kNoise ? std::string("noise") : std::to_string(e.cluster)) << '\n';
    }
}

}  // namespace bpghunt
