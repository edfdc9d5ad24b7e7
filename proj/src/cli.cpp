#include "bpghunt/cli.hpp"

#include <omp.h>

#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "bpghunt/config.hpp"
#include "bpghunt/pipeline.hpp"
#include "bpghunt/scenario.hpp"
#include "bpghunt/text.hpp"

#ifndef BPGHUNT_DATA_DIR
#define BPGHUNT_DATA_DIR "data"
#endif

namespace bpghunt {

const char* version_string() {
    return "bpghunt 1.0.0 (bpg-store 1, labels 1, kernel-matrix 1, report 1, truth 1, templates 1)";
}

namespace {

namespace fs = std::filesystem;

// Carries an exit code out of a stage.
struct Failure {
    int code;
    std::string message;
};

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& body) {
    ensure_parent(p);
    std::ofstream out(p, std::ios::binary);
    out << body;
    if (!out) throw Failure{kExitIngest, "cannot write " + p.string()};
}

std::string hunt_file(const PipelineConfig& c, const char* name) { return (c.hunt_dir / name).string(); }

int cmd_gen(const PipelineConfig& c, const std::vector<std::string>& counts, bool exclusive, std::ostream& out) {
    TemplateSet set = load_templates(c.templates);
    if (exclusive)
        for (auto& t : set.templates) t.count = 0;
    for (const auto& spec : counts) {
        auto eq = spec.find('=');
        auto n = eq == std::string::npos ? std::nullopt : text::parse_canonical_uint(std::string_view(spec).substr(eq + 1));
        if (!n) throw ConfigError("--count expects template=N, got '" + spec + "'");
        try {
            set.find(spec.substr(0, eq)).count = static_cast<std::size_t>(*n);
        } catch (const std::out_of_range& e) {
            throw InvalidTemplate(e.what());
        }
    }
    GeneratedLog log = generate(set, c.seed, c.interleave);
    std::ostringstream body, truth;
    write_log(body, log);
    write_truth(truth, log);
    write_text(c.log_file, body.str());
    write_text(c.truth_file, truth.str());
    std::size_t attacks = 0;
    for (const auto& t : set.templates)
        if (t.tag == TruthTag::Attack) attacks += t.count;
    out << "generated " << log.records.size() << " records from " << log.instances << " instances (" << attacks
        << " attack) with seed " << c.seed << "\n  log:   " << c.log_file.string() << "\n  truth: "
        << c.truth_file.string() << '\n';
    return kExitOk;
}

int cmd_build(const PipelineConfig& c, std::ostream& out) {
    FileTypeTaxonomy taxonomy = load_taxonomy(c.taxonomy);
    std::ifstream in(c.log_file, std::ios::binary);
    if (!in) throw Failure{kExitIngest, "cannot open log file " + c.log_file.string()};
    StageClock clock;
    clock.start("ingest");
    LoadResult loaded = load_stream(in);
    clock.stop();

    BuildResult r = build_corpus(loaded.records, taxonomy, c.long_run);
    try {
        fs::create_directories(c.store_dir);
        std::ofstream rejects(c.store_dir / "rejects.tsv");
        write_reject_report(rejects, loaded.rejects);
        save_store(c.store_dir, r.store);
    } catch (const std::exception& e) {
        throw Failure{kExitIngest, e.what()};
    }

    std::vector<StageTiming> timings = clock.timings();
    timings.insert(timings.end(), r.timings.begin(), r.timings.end());
    out << "records:        " << loaded.records.size() << " accepted, " << loaded.rejects.size() << " rejected\n"
        << "graph nodes:    " << r.graph_nodes << " (" << r.long_running << " long-running processes partitioned)\n"
        << "BPGs:           " << r.store.corpus.size() << '\n'
        << "labels:         " << r.store.dictionary.size() << " (" << r.label_stats.fallback_files
        << " files fell back to " << FileTypeTaxonomy::kFallback << ")\n"
        << "store:          " << c.store_dir.string() << " manifest " << text::hex64(r.store.manifest_hash) << '\n'
        << "BPG construction time:\n";
    write_timings(out, timings);
    return kExitOk;
}

BpgStore open_store(const PipelineConfig& c, int code) {
    try {
        return load_store(c.store_dir);
    } catch (const std::exception& e) {
        throw Failure{code, e.what()};
    }
}

int cmd_hunt(const PipelineConfig& c, std::ostream& out) {
    // Reputation first: no point computing a kernel matrix we cannot score.
    ReputationDB rep = ReputationDB::load(c.deny_list, c.allow_list);
    SensitivityConfig sens = load_sensitivity(c.sensitivity);
    BpgStore store = open_store(c, kExitIngest);

    HuntResult r = hunt_corpus(store, rep, sens, c);

    fs::create_directories(c.hunt_dir);
    std::ostringstream kernel, assignment, report, summary;
    write_kernel_matrix(kernel, r.kernel);
    write_assignment(assignment, r.assignment);
    write_report(report, r.report);
    write_summary(summary, r.report, store.corpus.size());
    write_text(hunt_file(c, "kernel.bin"), kernel.str());
    write_text(hunt_file(c, "assignment.tsv"), assignment.str());
    write_text(hunt_file(c, "report.tsv"), report.str());
    write_text(hunt_file(c, "summary.txt"), summary.str());

    out << summary.str();
    if (r.too_few_points) out << "note: corpus too small to cluster; every BPG treated as noise\n";
    if (r.clamped) out << "note: " << r.clamped << " kernel distances clamped at zero\n";
    out << "clusters:            " << r.assignment.clusters.size() << '\n' << "search time:\n";
    write_timings(out, r.timings);
    return r.report.alarm_count() > 0 ? kExitAlarms : kExitOk;
}

std::vector<std::size_t> read_assignment_sizes(std::istream& in, std::vector<int>& labels) {
    std::string line;
    std::vector<std::size_t> sizes;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        auto f = text::split(line, '\t');
        if (f.size() != 4) throw std::runtime_error("assignment: bad row");
        if (f[1] == "noise") labels.push_back(kNoise);
        else labels.push_back(static_cast<int>(text::parse_canonical_uint(f[1]).value_or(0)));
        sizes.push_back(text::parse_canonical_uint(f[2]).value_or(0));
    }
    return sizes;
}

int cmd_report(const PipelineConfig& c, const std::string& format, std::ostream& out) {
    for (const char* name : {"report.tsv", "kernel.bin", "assignment.tsv"})
        if (!fs::exists(hunt_file(c, name)))
            throw Failure{kExitMissingInputs, "missing hunt output " + hunt_file(c, name) + "; run 'hunt' first"};
    BpgStore store = open_store(c, kExitMissingInputs);
    ThreatReport report;
    KernelMatrix k;
    std::vector<int> labels;
    try {
        std::ifstream rf(hunt_file(c, "report.tsv"));
        report = read_report(rf);
        std::ifstream kf(hunt_file(c, "kernel.bin"), std::ios::binary);
        k = read_kernel_matrix(kf);
        std::ifstream af(hunt_file(c, "assignment.tsv"));
        read_assignment_sizes(af, labels);
    } catch (const std::exception& e) {
        throw Failure{kExitMissingInputs, e.what()};
    }
    if (k.manifest_hash != store.manifest_hash || report.corpus_hash != store.manifest_hash || k.n != store.corpus.size() ||
        labels.size() != store.corpus.size())
        throw Failure{kExitMissingInputs, "hunt outputs do not belong to the store at " + c.store_dir.string()};

    const bool all = format == "all";
    fs::create_directories(c.report_dir);
    if (all || format == "dot") {
        fs::create_directories(c.report_dir / "dot");
        for (const auto& e : report.entries) {
            std::ostringstream dot;
            write_dot(dot, store.corpus.at(e.bpg));
            std::string id = std::to_string(e.bpg);
            write_text(c.report_dir / "dot" / ("bpg_" + std::string(id.size() < 6 ? 6 - id.size() : 0, '0') + id + ".dot"),
                       dot.str());
        }
        out << "dot:        " << report.entries.size() << " flagged BPGs in " << (c.report_dir / "dot").string() << '\n';
    }
    if (all || format == "csv") {
        std::ostringstream csv;
        write_kernel_csv(csv, k);
        write_text(c.report_dir / "kernel.csv", csv.str());
        out << "csv:        " << (c.report_dir / "kernel.csv").string() << '\n';
    }
    if (all || format == "embedding") {
        auto coords = classical_mds(kernel_to_distance(k).distance, 2);
        std::ostringstream csv;
        csv << "bpg,x,y,cluster,flagged\n";
        std::vector<char> flagged(k.n, 0);
        for (const auto& e : report.entries) flagged[e.bpg] = 1;
        for (std::size_t i = 0; i < coords.size(); ++i)
            csv << i << ',' << text::format_double(coords[i][0]) << ',' << text::format_double(coords[i][1]) << ','
                << (labels[i] == kNoise ? std::string("noise") : std::to_string(labels[i])) << ','
                << int(flagged[i]) << '\n';
        write_text(c.report_dir / "embedding.csv", csv.str());
        out << "embedding:  " << (c.report_dir / "embedding.csv").string() << '\n';
    }
    if (all || format == "summary") {
        std::ostringstream s;
        write_summary(s, report, store.corpus.size());
        write_text(c.report_dir / "summary.txt", s.str());
        out << s.str();
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Behavior provenance graph threat hunting"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    int threads = -1;
    bool version = false;
    app.add_option("-c,--config", config_path, "key = value config file");
    app.add_option("-s,--set", overrides, "override a config key (key=value), repeatable");
    app.add_option("-t,--threads", threads, "worker threads for parallel stages")->check(CLI::NonNegativeNumber);
    app.add_flag("-V,--version", version, "print version and artifact format versions");

    std::string templates, log_file, truth_file, store_dir, hunt_dir, report_dir, deny, allow, format = "all";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> counts;
    bool exclusive = false;

    auto* gen = app.add_subcommand("gen", "generate a synthetic audit log with ground truth");
    gen->add_option("--templates", templates, "template file (JSON)");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("-o,--log", log_file, "output audit log");
    gen->add_option("--truth", truth_file, "output ground-truth file");
    gen->add_option("--count", counts, "instance count override, template=N (repeatable)");
    gen->add_flag("--only", exclusive, "generate only the templates named by --count");

    auto* build = app.add_subcommand("build", "build and persist the BPG corpus of an audit log");
    build->add_option("-l,--log", log_file, "input audit log");
    build->add_option("--store", store_dir, "output store directory");

    auto* hunt = app.add_subcommand("hunt", "kernel matrix, clustering and threat scoring of a stored corpus");
    hunt->add_option("--store", store_dir, "store directory");
    hunt->add_option("-o,--out", hunt_dir, "output directory");
    hunt->add_option("--deny", deny, "deny-list file");
    hunt->add_option("--allow", allow, "allow-list file");

    auto* report = app.add_subcommand("report", "render DOT graphs, CSV matrix, embedding and summary");
    report->add_option("--store", store_dir, "store directory");
    report->add_option("--hunt", hunt_dir, "hunt output directory");
    report->add_option("-o,--out", report_dir, "report directory");
    report->add_option("-f,--format", format, "what to render")
        ->check(CLI::IsMember({"all", "dot", "csv", "embedding", "summary"}));

    auto* run = app.add_subcommand("run", "build then hunt");
    run->add_option("-l,--log", log_file, "input audit log");
    run->add_option("--store", store_dir, "store directory");
    run->add_option("-o,--out", hunt_dir, "hunt output directory");
    run->add_option("--deny", deny, "deny-list file");
    run->add_option("--allow", allow, "allow-list file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "bpghunt: " << e.what() << '\n';
        return kExitConfig;
    }
    if (version) {
        out << version_string() << '\n';
        return kExitOk;
    }
    if (app.get_subcommands().empty()) {
        err << app.help();
        return kExitConfig;
    }

    PipelineConfig config = PipelineConfig::with_data_dir(BPGHUNT_DATA_DIR);
    try {
        if (!config_path.empty()) config = load_config(config_path, config);
        for (const auto& o : overrides) {
            auto eq = o.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
            config.set(std::string(text::trim(o.substr(0, eq))), std::string(text::trim(o.substr(eq + 1))));
        }
        if (!templates.empty()) config.templates = templates;
        if (seed) config.seed = *seed;
        if (!log_file.empty()) config.log_file = log_file;
        if (!truth_file.empty()) config.truth_file = truth_file;
        if (!store_dir.empty()) config.store_dir = store_dir;
        if (!hunt_dir.empty()) config.hunt_dir = hunt_dir;
        if (!report_dir.empty()) config.report_dir = report_dir;
        if (!deny.empty()) config.deny_list = deny;
        if (!allow.empty()) config.allow_list = allow;
        if (threads >= 0) config.threads = threads;
        config.validate();
    } catch (const ConfigError& e) {
        err << "bpghunt: config error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (config.threads > 0) omp_set_num_threads(config.threads);

    const CLI::App* sub = app.get_subcommands().front();
    try {
        if (sub == gen) return cmd_gen(config, counts, exclusive, out);
        if (sub == build) return cmd_build(config, out);
        if (sub == hunt) return cmd_hunt(config, out);
        if (sub == report) return cmd_report(config, format, out);
        int code = cmd_build(config, out);
        return code == kExitOk ? cmd_hunt(config, out) : code;
    } catch (const Failure& f) {
        err << "bpghunt: " << f.message << '\n';
        return f.code;
    } catch (const ConfigError& e) {
        err << "bpghunt: config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidTemplate& e) {
        err << "bpghunt: template error: " << e.what() << '\n';
        return kExitTemplate;
    } catch (const MissingReputationDB& e) {
        err << "bpghunt: " << e.what() << '\n';
        return kExitReputation;
    } catch (const IngestError& e) {
        err << "bpghunt: ingest failure: " << e.what() << '\n';
        return kExitIngest;
    } catch (const std::invalid_argument& e) {
        err << "bpghunt: config error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace bpghunt
