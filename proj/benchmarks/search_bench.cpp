#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "hicops/assemble.hpp"
#include "hicops/index.hpp"
#include "hicops/scoring.hpp"

using namespace hicops;

namespace {

std::string random_peptide(std::mt19937_64& rng, int min_len, int max_len) {
    static const char kResidues[] = "ACDEFGHIKLMNPQRSTVWY";
    std::uniform_int_distribution<int> len_d(min_len, max_len);
    std::uniform_int_distribution<int> res_d(0, 19);
    std::string s(static_cast<std::size_t>(len_d(rng)), 'A');
    for (auto& c : s) c = kResidues[res_d(rng)];
    return s;
}

struct Workload {
    std::vector<std::string> base;
    std::vector<PeptideEntry> entries;
    FragmentIonIndex index;
    std::vector<ExperimentalSpectrum> queries;
    DatabaseConfig db;
};

const Workload& workload() {
    static Workload w = [] {
        Workload x;
        x.db.min_len = 6;
        x.db.min_mass = 500.0;
        x.db.max_mass = 5000.0;
        x.db.ptms = {{'M', 15.994915, false}};
        std::mt19937_64 rng(99);
        for (int i = 0; i < 20000; ++i)
            x.base.push_back(random_peptide(rng, 7, 30));
        std::sort(x.base.begin(), x.base.end());
        x.base.erase(std::unique(x.base.begin(), x.base.end()), x.base.end());
        x.entries = expand_variants(x.base, x.db);
        x.index = build_index(x.entries, x.base, x.db.ptms);
        std::uniform_int_distribution<std::size_t> pick(0, x.entries.size() - 1);
        std::uniform_real_distribution<float> in_d(1.0f, 100.0f);
        for (int q = 0; q < 64; ++q) {
            const auto& e = x.entries[pick(rng)];
            ExperimentalSpectrum s;
            s.spectrum_id = static_cast<std::uint32_t>(q);
            s.precursor_mass = e.precursor_mass;
            for (const auto& f :
                 fragment_ions(x.base[e.base_id], e.mod_mask, x.db.ptms))
                s.peaks.push_back({static_cast<float>(f.mz), in_d(rng)});
            std::sort(s.peaks.begin(), s.peaks.end(),
                      [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
            x.queries.push_back(std::move(s));
        }
        return x;
    }();
    return w;
}

void BM_Hyperscore(benchmark::State& state) {
    const auto& w = workload();
    const auto& q = w.queries.front();
    const auto frags = fragment_ions(w.base[w.entries.front().base_id],
                                     w.entries.front().mod_mask, w.db.ptms);
    for (auto _ : state)
        benchmark::DoNotOptimize(hyperscore(q, frags, 0.02));
}
BENCHMARK(BM_Hyperscore);

void BM_SearchQuery(benchmark::State& state) {
    const auto& w = workload();
    SearchConfig cfg;
    cfg.delta_m = state.range(0);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& q = w.queries[i++ % w.queries.size()];
        benchmark::DoNotOptimize(search_query(q, w.index, cfg));
    }
}
BENCHMARK(BM_SearchQuery)->Arg(1)->Arg(5)->Arg(20);

void BM_PrecursorFilter(benchmark::State& state) {
    const auto& w = workload();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& q = w.queries[i++ % w.queries.size()];
        benchmark::DoNotOptimize(precursor_filter(w.index, q.precursor_mass, 5.0));
    }
}
BENCHMARK(BM_PrecursorFilter);

void BM_SavitzkyGolay(benchmark::State& state) {
    std::vector<std::uint64_t> bins(1024, 0);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100000; ++i)
        bins[std::min<std::size_t>(static_cast<std::size_t>(rng() % 400), 1023)]++;
    for (auto _ : state)
        benchmark::DoNotOptimize(savitzky_golay(bins, 9, 3));
}
BENCHMARK(BM_SavitzkyGolay);

}  // namespace

BENCHMARK_MAIN();
