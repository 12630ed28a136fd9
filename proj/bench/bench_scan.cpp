#include <benchmark/benchmark.h>
#include <omp.h>

#include <set>

#include "skillscan/pipeline.hpp"

using namespace skillscan;

namespace {

// The listing fixtures replicated under fresh ids, so each copy is scanned independently.
const CorpusSnapshot& corpus(std::size_t copies) {
    static std::map<std::size_t, CorpusSnapshot> cache;
    auto it = cache.find(copies);
    if (it != cache.end()) return it->second;
    const auto base = load_corpus(SKILLSCAN_FIXTURES_DIR "/listings");
    CorpusSnapshot snap;
    snap.timestamp = base.timestamp;
    for (std::size_t c = 0; c < copies; ++c) {
        for (auto b : base.bundles) {
            b.skill_id += "-" + std::to_string(c);
            snap.bundles.push_back(std::move(b));
        }
    }
    snap.population_size = snap.bundles.size();
    return cache.emplace(copies, std::move(snap)).first->second;
}

const Scanner& scanner() {
    static const Scanner s;
    return s;
}

void BM_ScanSerial(benchmark::State& state) {
    const auto& snap = corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(scan_corpus_serial(snap, scanner()));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(snap.bundles.size()));
}

void BM_ScanParallel(benchmark::State& state) {
    const auto& snap = corpus(static_cast<std::size_t>(state.range(0)));
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(scan_corpus_parallel(snap, scanner(), {}, threads));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(snap.bundles.size()));
    state.counters["threads"] = threads;
}

void parallel_args(benchmark::internal::Benchmark* b) {
    std::set<int> counts = {1, 2, 4, omp_get_max_threads()};
    for (int copies : {16, 64}) {
        for (int t : counts) b->Args({copies, t});
    }
}

}  // namespace

BENCHMARK(BM_ScanSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScanParallel)->Apply(parallel_args)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
