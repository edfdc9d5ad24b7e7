#include "bpghunt/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

#include "bpghunt/text.hpp"

namespace bpghunt {

std::string_view to_string(TruthTag tag) { return tag == TruthTag::Attack ? "attack" : "benign"; }

ScenarioTemplate& TemplateSet::find(const std::string& name) {
    for (auto& t : templates)
        if (t.name == name) return t;
    throw std::out_of_range("no template named '" + name + "'");
}

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
    throw InvalidTemplate(where + ": " + what);
}

void only_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) invalid(where, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) invalid(where, "unknown key '" + key + "'");
}

std::pair<std::int64_t, std::int64_t> range_of(const json& j, const std::string& where) {
    if (j.is_number_integer()) return {j.get<std::int64_t>(), j.get<std::int64_t>()};
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        invalid(where, "expected an integer or [min, max]");
    return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
}

EntitySpec parse_entity(const json& j, const std::string& where) {
    only_keys(j, {"kind", "attributes", "shared", "per_use"}, where);
    EntitySpec e;
    if (j.contains("shared")) {
        if (j.size() != 1) invalid(where, "a shared reference takes no other keys");
        e.shared = j.at("shared").get<std::string>();
        return e;
    }
    auto kind = parse_entity_kind(j.at("kind").get<std::string>());
    if (!kind) invalid(where, "unknown kind '" + j.at("kind").get<std::string>() + "'");
    e.kind = *kind;
    if (j.contains("attributes")) e.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
    e.per_use = j.value("per_use", false);
    return e;
}

TemplateSet parse_json(const json& root) {
    TemplateSet set;
    only_keys(root, {"format", "version", "shared", "templates"}, "templates file");
    if (root.value("format", "") != "bpghunt-templates") invalid("templates file", "format must be 'bpghunt-templates'");
    if (root.value("version", 0) != 1) invalid("templates file", "unsupported version");
    if (root.contains("shared")) {
        for (const auto& [name, j] : root.at("shared").items()) {
            std::string where = "shared '" + name + "'";
            only_keys(j, {"host", "kind", "attributes"}, where);
            SharedEntity s;
            s.host = j.at("host").get<std::string>();
            json body = j;
            body.erase("host");
            s.entity = parse_entity(body, where);
            set.shared.emplace(name, std::move(s));
        }
    }
    for (const auto& tj : root.at("templates")) {
        ScenarioTemplate t;
        t.name = tj.at("name").get<std::string>();
        std::string where = "template '" + t.name + "'";
        only_keys(tj, {"name", "tag", "count", "host", "vars", "entities", "steps"}, where);
        std::string tag = tj.at("tag").get<std::string>();
        if (tag == "benign") t.tag = TruthTag::Benign;
        else if (tag == "attack") t.tag = TruthTag::Attack;
        else invalid(where, "tag must be 'benign' or 'attack'");
        auto count = tj.value("count", std::int64_t{1});
        if (count < 0) invalid(where, "count must be non-negative");
        t.count = static_cast<std::size_t>(count);
        t.host = tj.at("host").get<std::string>();
        if (tj.contains("vars")) t.vars = tj.at("vars").get<std::map<std::string, std::vector<std::string>>>();
        for (const auto& [name, ej] : tj.at("entities").items())
            t.entities.emplace(name, parse_entity(ej, where + " entity '" + name + "'"));
        for (const auto& sj : tj.at("steps")) {
            std::string sw = where + " step " + std::to_string(t.steps.size());
            only_keys(sj, {"subject", "relation", "object", "delay_us", "repeat"}, sw);
            StepSpec s;
            s.subject = sj.at("subject").get<std::string>();
            s.object = sj.at("object").get<std::string>();
            auto rel = parse_relation_kind(sj.at("relation").get<std::string>());
            if (!rel) invalid(sw, "unknown relation '" + sj.at("relation").get<std::string>() + "'");
            s.relation = *rel;
            if (sj.contains("delay_us")) std::tie(s.delay_min_us, s.delay_max_us) = range_of(sj.at("delay_us"), sw);
            if (sj.contains("repeat")) {
                auto [lo, hi] = range_of(sj.at("repeat"), sw);
                if (lo < 1 || hi < lo) invalid(sw, "repeat must satisfy 1 <= min <= max");
                s.repeat_min = static_cast<std::uint32_t>(lo);
                s.repeat_max = static_cast<std::uint32_t>(hi);
            }
            t.steps.push_back(std::move(s));
        }
        set.templates.push_back(std::move(t));
    }
    validate_templates(set);
    return set;
}

// Deterministic across standard libraries, unlike std::uniform_int_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo;
        if (span == std::numeric_limits<std::uint64_t>::max()) return engine_();
        const std::uint64_t n = span + 1;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return lo + x % n;
    }
    std::int64_t uniform_signed(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(uniform(0, static_cast<std::uint64_t>(hi - lo)));
    }
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform(0, i - 1)]);
    }

private:
    std::mt19937_64 engine_;
};

struct Expander {
    std::size_t instance = 0;
    std::uint64_t* counter = nullptr;
    const std::map<std::string, std::string>* vars = nullptr;

    std::string operator()(const std::string& in, const std::string& where) const {
        std::string out;
        for (std::size_t i = 0; i < in.size(); ++i) {
            if (in[i] != '{') {
                out += in[i];
                continue;
            }
            auto close = in.find('}', i);
            if (close == std::string::npos) invalid(where, "unterminated placeholder in '" + in + "'");
            std::string key = in.substr(i + 1, close - i - 1);
            if (key == "i") out += std::to_string(instance);
            else if (key == "n") out += std::to_string((*counter)++);
            else if (auto it = vars->find(key); it != vars->end()) out += it->second;
            else invalid(where, "unknown placeholder '{" + key + "}'");
            i = close;
        }
        return out;
    }
};

EntityRef materialize(const EntitySpec& spec, const Expander& expand, std::uint64_t& next_pid, const std::string& where) {
    EntityRef e;
    e.kind = spec.kind;
    for (const auto& [k, v] : spec.attributes) e.attributes[k] = expand(v, where);
    if (e.kind == EntityKind::Process) {
        if (!e.attributes.count("id")) e.attributes["id"] = std::to_string(next_pid++);
        if (!e.attributes.count("name")) {
            const std::string& path = e.attributes["path"];
            auto slash = path.find_last_of("/\\");
            e.attributes["name"] = slash == std::string::npos ? path : path.substr(slash + 1);
        }
    }
    return e;
}

EntityKind resolved_kind(const TemplateSet& set, const EntitySpec& e) {
    return e.shared.empty() ? e.kind : set.shared.at(e.shared).entity.kind;
}

}  // namespace

void validate_templates(const TemplateSet& set) {
    for (const auto& [name, s] : set.shared) {
        if (!s.entity.shared.empty()) invalid("shared '" + name + "'", "cannot refer to another shared entity");
        if (s.host.empty()) invalid("shared '" + name + "'", "host must be nonempty");
    }
    std::set<std::string> names;
    for (const auto& t : set.templates) {
        const std::string where = "template '" + t.name + "'";
        if (t.name.empty()) invalid("template", "name must be nonempty");
        if (!names.insert(t.name).second) invalid(where, "duplicate name");
        if (t.host.empty()) invalid(where, "host must be nonempty");
        if (t.steps.empty()) invalid(where, "needs at least one step");
        for (const auto& [v, values] : t.vars)
            if (values.empty()) invalid(where, "variable '" + v + "' has no values");
        std::map<std::string, std::string> sample_vars;
        for (const auto& [v, values] : t.vars) sample_vars[v] = values.front();
        std::uint64_t counter = 0, pid = 1;
        Expander sample{0, &counter, &sample_vars};
        for (const auto& [name, e] : t.entities) {
            const std::string ew = where + " entity '" + name + "'";
            if (!e.shared.empty()) {
                auto it = set.shared.find(e.shared);
                if (it == set.shared.end()) invalid(ew, "unknown shared entity '" + e.shared + "'");
                if (it->second.host != t.host) invalid(ew, "shared entity lives on host '" + it->second.host + "'");
                continue;
            }
            try {
                validate_entity(materialize(e, sample, pid, ew));
            } catch (const IngestError& err) {
                invalid(ew, err.what());
            }
        }
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            const auto& s = t.steps[i];
            const std::string sw = where + " step " + std::to_string(i);
            auto subj = t.entities.find(s.subject);
            auto obj = t.entities.find(s.object);
            if (subj == t.entities.end()) invalid(sw, "unknown subject '" + s.subject + "'");
            if (obj == t.entities.end()) invalid(sw, "unknown object '" + s.object + "'");
            if (!is_legal(resolved_kind(set, subj->second), resolved_kind(set, obj->second), s.relation))
                invalid(sw, "illegal " + std::string(to_string(s.relation)) + " between these entity kinds");
            if (s.delay_min_us < 0 || s.delay_max_us < s.delay_min_us) invalid(sw, "delay must satisfy 0 <= min <= max");
            if (s.repeat_min < 1 || s.repeat_max < s.repeat_min) invalid(sw, "repeat must satisfy 1 <= min <= max");
        }
    }
    for (const auto& [name, s] : set.shared) {
        std::uint64_t counter = 0, pid = 1;
        std::map<std::string, std::string> none;
        try {
            validate_entity(materialize(s.entity, Expander{0, &counter, &none}, pid, "shared '" + name + "'"));
        } catch (const IngestError& err) {
            invalid("shared '" + name + "'", err.what());
        }
    }
}

TemplateSet parse_templates(std::istream& in) {
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidTemplate(std::string("templates file: ") + e.what());
    }
    try {
        return parse_json(root);
    } catch (const json::exception& e) {
        throw InvalidTemplate(std::string("templates file: ") + e.what());
    }
}

TemplateSet load_templates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidTemplate("cannot open template file " + path.string());
    return parse_templates(in);
}

GeneratedLog generate(const TemplateSet& set, std::uint64_t seed, const InterleavePolicy& policy) {
    validate_templates(set);
    if (policy.gap_min_us < 0 || policy.gap_max_us < policy.gap_min_us)
        throw std::invalid_argument("interleave gap must satisfy 0 <= min <= max");
    Rng rng(seed);

    std::vector<std::size_t> order;
    for (std::size_t t = 0; t < set.templates.size(); ++t) order.insert(order.end(), set.templates[t].count, t);
    if (policy.shuffle) rng.shuffle(order);

    struct Pending {
        LogRecord record;
        TruthRow truth;
    };
    std::vector<Pending> events;
    std::map<std::string, EntityRef> shared;
    std::uint64_t counter = 0;
    std::uint64_t next_pid = 1000;
    std::int64_t start = policy.start_us;

    for (std::size_t inst = 0; inst < order.size(); ++inst) {
        if (inst > 0) start += rng.uniform_signed(policy.gap_min_us, policy.gap_max_us);
        const ScenarioTemplate& t = set.templates[order[inst]];
        const std::string where = "template '" + t.name + "'";

        std::map<std::string, std::string> vars;
        for (const auto& [v, values] : t.vars) vars[v] = values[rng.uniform(0, values.size() - 1)];
        Expander expand{inst, &counter, &vars};

        std::map<std::string, EntityRef> bound;
        auto resolve = [&](const std::string& name) -> EntityRef {
            const EntitySpec& spec = t.entities.at(name);
            if (!spec.shared.empty()) {
                auto it = shared.find(spec.shared);
                if (it == shared.end())
                    it = shared.emplace(spec.shared, materialize(set.shared.at(spec.shared).entity, expand, next_pid, where)).first;
                return it->second;
            }
            if (spec.per_use) return materialize(spec, expand, next_pid, where);
            auto it = bound.find(name);
            if (it == bound.end()) it = bound.emplace(name, materialize(spec, expand, next_pid, where)).first;
            return it->second;
        };

        std::int64_t clock = start;
        for (const StepSpec& s : t.steps) {
            const auto reps = rng.uniform(s.repeat_min, s.repeat_max);
            for (std::uint64_t r = 0; r < reps; ++r) {
                clock += rng.uniform_signed(s.delay_min_us, s.delay_max_us);
                LogRecord rec{clock, t.host, resolve(s.subject), resolve(s.object), s.relation};
                try {
                    validate_record(rec);
                } catch (const IngestError& e) {
                    invalid(where, e.what());
                }
                events.push_back({std::move(rec), {inst, t.name, t.tag}});
            }
        }
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const Pending& a, const Pending& b) { return a.record.timestamp_us < b.record.timestamp_us; });
    GeneratedLog out;
    out.instances = order.size();
    out.records.reserve(events.size());
    out.truth.reserve(events.size());
    for (auto& e : events) {
        out.records.push_back(std::move(e.record));
        out.truth.push_back(std::move(e.truth));
    }
    return out;
}

void write_log(std::ostream& out, const GeneratedLog& log) {
    for (const auto& r : log.records) out << serialize_record(r) << '\n';
}

void write_truth(std::ostream& out, const GeneratedLog& log) {
    out << "# bpghunt-truth\t1\n# record\tinstance\ttemplate\ttag\n";
    for (std::size_t i = 0; i < log.truth.size(); ++i) {
        const auto& t = log.truth[i];
        out << i << '\t' << t.instance << '\t' << text::escape(t.template_name) << '\t' << to_string(t.tag) << '\n';
    }
}

std::vector<TruthRow> read_truth(std::istream& in) {
    std::vector<TruthRow> rows;
    std::string line;
    if (!std::getline(in, line) || line != "# bpghunt-truth\t1") throw std::runtime_error("truth file: bad header");
    while (std::getline(in, line)) {
        if (line.starts_with("#")) continue;
        auto f = text::split(line, '\t');
        if (f.size() != 4) throw std::runtime_error("truth file: bad row");
        auto idx = text::parse_canonical_uint(f[0]);
        auto inst = text::parse_canonical_uint(f[1]);
        auto name = text::unescape(f[2]);
        if (!idx || *idx != rows.size() || !inst || !name || (f[3] != "benign" && f[3] != "attack"))
            throw std::runtime_error("truth file: bad row " + std::to_string(rows.size()));
        rows.push_back({static_cast<std::size_t>(*inst), std::move(*name), f[3] == "attack" ? TruthTag::Attack : TruthTag::Benign});
    }
    return rows;
}

}  // namespace bpghunt
