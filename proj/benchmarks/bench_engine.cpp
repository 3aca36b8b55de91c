#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include "dsa/analytics.hpp"
#include "dsa/config.hpp"
#include "dsa/criteria.hpp"
#include "dsa/dynsim.hpp"
#include "dsa/powerflow.hpp"
#include "dsa/screener.hpp"
#include "dsa/snapshot_io.hpp"

using namespace dsa;

namespace {

const Snapshot& synthetic50() {
    static const Snapshot s = load_snapshot_file(std::string(DSA_FIXTURE_DIR) + "/synthetic50.json");
    return s;
}

// The largest online machine: the trip that moves frequency the most.
Contingency biggest_trip(const Snapshot& s) {
    const SyncMachine* big = nullptr;
    for (const auto& g : s.machines)
        if (g.online && (!big || g.p_set > big->p_set)) big = &g;
    return {"gen:" + big->id, ContingencyKind::gen_trip, {big->id}};
}

void BM_PowerFlow(benchmark::State& state) {
    SolveOptions o;
    o.flat_start = true;
    for (auto _ : state) benchmark::DoNotOptimize(solve(synthetic50(), o));
}
BENCHMARK(BM_PowerFlow)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const auto model = DynamicModel::prepare(synthetic50());
    SimConfig cfg;
    cfg.network_model = state.range(0) ? NetworkModel::dc_network : NetworkModel::coi_uniform;
    const auto c = biggest_trip(synthetic50());
    for (auto _ : state) benchmark::DoNotOptimize(model->simulate(c, cfg));
    state.SetLabel(to_string(cfg.network_model));
}
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_WindowedRocof(benchmark::State& state) {
    std::vector<double> f(4001);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = 50.0 - 0.4 * (1.0 - std::exp(-0.005 * k / 2.0));
    for (auto _ : state) benchmark::DoNotOptimize(rocof({0.0, 0.005, f}, 0.5, 0.1, 1.0));
}
BENCHMARK(BM_WindowedRocof);

void BM_ScreenCycle(benchmark::State& state) {
    const EngineConfig cfg;
    const auto set = build_contingency_set(synthetic50(), cfg.contingencies);
    auto opts = cfg.screen_options();
    opts.workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(screen(synthetic50(), set, opts));
    state.counters["cases"] = static_cast<double>(set.size());
}
BENCHMARK(BM_ScreenCycle)->Arg(1)->Arg(8)->Iterations(1)->Unit(benchmark::kSecond)->UseRealTime();

void BM_Summarize(benchmark::State& state) {
    CaseArchive a;
    for (int cyc = 0; cyc < 288; ++cyc) {
        CycleReport r;
        r.snapshot_ts = 1000 + 300 * cyc;
        r.system_metrics.inertia_mws = 20000 + 10 * cyc;
        r.system_metrics.demand_mw = 4000;
        for (int i = 0; i < 800; ++i) {
            CaseResult c;
            c.contingency_id = "c" + std::to_string(i);
            if ((i * 7 + cyc) % 97 == 0) {
                c.status = CaseStatus::insecure;
                c.metrics.binding.insert(Binding::rocof_plus);
            }
            r.cases.push_back(c);
        }
        r.totals = tally(r.cases);
        a.append(r);
    }
    for (auto _ : state) benchmark::DoNotOptimize(summarize(a));
}
BENCHMARK(BM_Summarize)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
