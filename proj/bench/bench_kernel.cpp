#include <benchmark/benchmark.h>
#include <omp.h>

#include "bpghunt/cluster.hpp"
#include "bpghunt/kernel.hpp"
#include "bpghunt/pipeline.hpp"
#include "bpghunt/scenario.hpp"

using namespace bpghunt;

namespace {

// Shipped templates scaled down so one iteration stays under a second.
const std::vector<KernelGraph>& corpus(std::size_t per_template) {
    static std::map<std::size_t, std::vector<KernelGraph>> cache;
    auto it = cache.find(per_template);
    if (it != cache.end()) return it->second;
    PipelineConfig config = PipelineConfig::with_data_dir(BPGHUNT_DATA_DIR);
    TemplateSet set = load_templates(config.templates);
    for (auto& t : set.templates) t.count = std::min(t.count, per_template);
    auto log = generate(set, 7);
    auto built = build_corpus(log.records, load_taxonomy(config.taxonomy), config.long_run);
    return cache[per_template] = kernel_graphs(built.store);
}

void BM_KernelMatrix(benchmark::State& state) {
    const auto& graphs = corpus(state.range(0));
    omp_set_num_threads(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(kernel_matrix(graphs, KernelParams{}));
    state.counters["graphs"] = static_cast<double>(graphs.size());
    state.counters["pairs/s"] = benchmark::Counter(graphs.size() * (graphs.size() + 1) / 2.0, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_KernelMatrixSerial(benchmark::State& state) {
    const auto& graphs = corpus(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernel_matrix_serial(graphs, KernelParams{}));
    state.counters["graphs"] = static_cast<double>(graphs.size());
    state.counters["pairs/s"] = benchmark::Counter(graphs.size() * (graphs.size() + 1) / 2.0, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_Hdbscan(benchmark::State& state) {
    const auto& graphs = corpus(state.range(0));
    auto d = kernel_to_distance(kernel_matrix(graphs, KernelParams{})).distance;
    for (auto _ : state) benchmark::DoNotOptimize(hdbscan(mutual_reachability(d, 1), 2));
    state.counters["graphs"] = static_cast<double>(graphs.size());
}

}  // namespace

BENCHMARK(BM_KernelMatrix)->ArgsProduct({{20, 80}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelMatrixSerial)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hdbscan)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
