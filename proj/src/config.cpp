#include "bpghunt/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "bpghunt/text.hpp"

namespace bpghunt {

namespace {

using Setter = std::function<void(PipelineConfig&, const std::string&)>;
using Getter = std::function<std::string(const PipelineConfig&)>;

struct Key {
    std::string name;
    Setter set;
    Getter get;
};

[[noreturn]] void bad_value(const std::string& value, const char* expected) {
    throw ConfigError("'" + value + "' is not " + expected);
}

double to_real(const std::string& v) {
    auto d = text::parse_double(v);
    if (!d) bad_value(v, "a number");
    return *d;
}

std::uint64_t to_uint(const std::string& v) {
    auto u = text::parse_canonical_uint(v);
    if (!u) bad_value(v, "a non-negative integer");
    return *u;
}

std::int64_t to_int(const std::string& v) {
    auto u = to_uint(v);
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) bad_value(v, "in range");
    return static_cast<std::int64_t>(u);
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(v, "a boolean");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

template <class M>
Key path_key(std::string name, M member) {
    return {std::move(name), [member](PipelineConfig& c, const std::string& v) { c.*member = v; },
            [member](const PipelineConfig& c) { return (c.*member).string(); }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(path_key("log_file", &PipelineConfig::log_file));
        k.push_back(path_key("truth_file", &PipelineConfig::truth_file));
        k.push_back(path_key("store_dir", &PipelineConfig::store_dir));
        k.push_back(path_key("hunt_dir", &PipelineConfig::hunt_dir));
        k.push_back(path_key("report_dir", &PipelineConfig::report_dir));
        k.push_back(path_key("templates", &PipelineConfig::templates));
        k.push_back(path_key("taxonomy", &PipelineConfig::taxonomy));
        k.push_back(path_key("sensitivity", &PipelineConfig::sensitivity));
        k.push_back(path_key("deny_list", &PipelineConfig::deny_list));
        k.push_back(path_key("allow_list", &PipelineConfig::allow_list));
        k.push_back({"seed", [](auto& c, auto& v) { c.seed = to_uint(v); }, [](auto& c) { return std::to_string(c.seed); }});
        k.push_back({"gen.start_us", [](auto& c, auto& v) { c.interleave.start_us = to_int(v); },
                     [](auto& c) { return std::to_string(c.interleave.start_us); }});
        k.push_back({"gen.gap_min_us", [](auto& c, auto& v) { c.interleave.gap_min_us = to_int(v); },
                     [](auto& c) { return std::to_string(c.interleave.gap_min_us); }});
        k.push_back({"gen.gap_max_us", [](auto& c, auto& v) { c.interleave.gap_max_us = to_int(v); },
                     [](auto& c) { return std::to_string(c.interleave.gap_max_us); }});
        k.push_back({"gen.shuffle", [](auto& c, auto& v) { c.interleave.shuffle = to_bool(v); },
                     [](auto& c) { return from_bool(c.interleave.shuffle); }});
        k.push_back({"long_run.min_lifetime_us", [](auto& c, auto& v) { c.long_run.min_lifetime_us = to_int(v); },
                     [](auto& c) { return std::to_string(c.long_run.min_lifetime_us); }});
        k.push_back({"long_run.min_degree", [](auto& c, auto& v) { c.long_run.min_degree = to_uint(v); },
                     [](auto& c) { return std::to_string(c.long_run.min_degree); }});
        k.push_back({"kernel.alpha", [](auto& c, auto& v) { c.kernel.alpha = to_real(v); },
                     [](auto& c) { return text::format_double(c.kernel.alpha); }});
        k.push_back({"kernel.beta", [](auto& c, auto& v) { c.kernel.beta = to_real(v); },
                     [](auto& c) { return text::format_double(c.kernel.beta); }});
        k.push_back({"kernel.iterations", [](auto& c, auto& v) { c.kernel.iterations = static_cast<int>(to_uint(v)); },
                     [](auto& c) { return std::to_string(c.kernel.iterations); }});
        k.push_back({"cluster.min_cluster_size", [](auto& c, auto& v) { c.cluster.min_cluster_size = to_uint(v); },
                     [](auto& c) { return std::to_string(c.cluster.min_cluster_size); }});
        k.push_back({"cluster.min_samples", [](auto& c, auto& v) { c.cluster.min_samples = to_uint(v); },
                     [](auto& c) { return std::to_string(c.cluster.min_samples); }});
        auto real = [&k](std::string name, double ScoringConfig::*m) {
            k.push_back({std::move(name), [m](auto& c, auto& v) { c.scoring.*m = to_real(v); },
                         [m](auto& c) { return text::format_double(c.scoring.*m); }});
        };
        real("score.weight_ip", &ScoringConfig::weight_ip);
        real("score.weight_user", &ScoringConfig::weight_user);
        real("score.weight_sens", &ScoringConfig::weight_sens);
        real("score.threshold_score", &ScoringConfig::threshold_score);
        k.push_back({"score.threshold_graphs", [](auto& c, auto& v) { c.scoring.threshold_graphs = to_uint(v); },
                     [](auto& c) { return std::to_string(c.scoring.threshold_graphs); }});
        real("score.malicious_ip", &ScoringConfig::malicious_ip_score);
        real("score.rare_ip_max", &ScoringConfig::rare_ip_max);
        real("score.privilege_escalation", &ScoringConfig::privilege_escalation_score);
        k.push_back({"score.sensitive_classes",
                     [](auto& c, auto& v) {
                         std::map<std::string, double> m;
                         for (auto item : text::split(v, ',')) {
                             item = text::trim(item);
                             if (item.empty()) continue;
                             auto colon = item.find(':');
                             if (colon == std::string_view::npos) bad_value(std::string(item), "class:score");
                             m[std::string(text::trim(item.substr(0, colon)))] =
                                 to_real(std::string(text::trim(item.substr(colon + 1))));
                         }
                         c.scoring.sensitive_class_scores = std::move(m);
                     },
                     [](auto& c) {
                         std::string out;
                         for (const auto& [cls, s] : c.scoring.sensitive_class_scores)
                             out += (out.empty() ? "" : ",") + cls + ":" + text::format_double(s);
                         return out;
                     }});
        k.push_back({"score.privileged_users",
                     [](auto& c, auto& v) {
                         std::set<std::string> users;
                         for (auto u : text::split(v, ','))
                             if (!text::trim(u).empty()) users.insert(text::lower(text::trim(u)));
                         c.scoring.privileged_users = std::move(users);
                     },
                     [](auto& c) {
                         std::string out;
                         for (const auto& u : c.scoring.privileged_users) out += (out.empty() ? "" : ",") + u;
                         return out;
                     }});
        k.push_back({"threads", [](auto& c, auto& v) { c.threads = static_cast<int>(to_uint(v)); },
                     [](auto& c) { return std::to_string(c.threads); }});
        return k;
    }();
    return table;
}

}  // namespace

PipelineConfig PipelineConfig::with_data_dir(const std::filesystem::path& data_dir) {
    PipelineConfig c;
    c.templates = data_dir / "templates.json";
    c.taxonomy = data_dir / "taxonomy.conf";
    c.sensitivity = data_dir / "sensitivity.conf";
    c.deny_list = data_dir / "deny.txt";
    c.allow_list = data_dir / "allow.txt";
    return c;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    for (const auto& k : keys())
        if (k.name == key) {
            try {
                k.set(*this, value);
            } catch (const ConfigError& e) {
                throw ConfigError(key + ": " + e.what());
            }
            return;
        }
    throw ConfigError("unknown config key '" + key + "'");
}

void PipelineConfig::validate() const {
    try {
        kernel.validate();
        scoring.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cluster.min_cluster_size < 2) throw ConfigError("cluster.min_cluster_size must be at least 2");
    if (cluster.min_samples < 1) throw ConfigError("cluster.min_samples must be at least 1");
    if (interleave.gap_max_us < interleave.gap_min_us) throw ConfigError("gen.gap_max_us is below gen.gap_min_us");
    if (long_run.min_degree < 1) throw ConfigError("long_run.min_degree must be positive");
    if (threads < 0) throw ConfigError("threads must be non-negative");
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
    std::ostringstream x, y;
    write_config(x, a);
    write_config(y, b);
    return x.str() == y.str();
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::string_view body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
        std::string key(text::trim(body.substr(0, eq)));
        std::string value(text::trim(body.substr(eq + 1)));
        try {
            base.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
        }
    }
    return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const PipelineConfig& config) {
    for (const auto& k : keys()) out << k.name << " = " << k.get(config) << '\n';
}

}  // namespace bpghunt
