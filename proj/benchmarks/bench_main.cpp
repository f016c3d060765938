#include <benchmark/benchmark.h>

#include "finslerlab/bundles.hpp"
#include "finslerlab/curvature.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/l2.hpp"
#include "finslerlab/multilinear.hpp"

using namespace finslerlab;

namespace {

void BM_HkGram(benchmark::State& state) {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const int k = static_cast<int>(state.range(0));
  l2::L2Options o;
  o.check_resolution = false;
  const CVec z = (CVec(1) << cplx(0.3, -0.2)).finished();
  for (auto _ : state) benchmark::DoNotOptimize(l2::hk_gram(*b.metric, 0, z, k, o));
}
BENCHMARK(BM_HkGram)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_HkGramRank3(benchmark::State& state) {
  const auto b = bundles::builtin_bundle("trivial_weighted(3,(1,2,3),2)");
  const CVec z = CVec::Zero(2);
  for (auto _ : state) benchmark::DoNotOptimize(l2::hk_gram(*b.metric, 0, z, 2, l2::L2Options{}));
}
BENCHMARK(BM_HkGramRank3)->Unit(benchmark::kMillisecond);

// Fresh field each iteration so the per-point cache does not hide assembly cost.
void BM_GramFieldEval(benchmark::State& state) {
  const auto b = bundles::builtin_bundle("line_sum(1,1)");
  const auto pts = bundles::sample_points(*b.atlas, {16, 3});
  for (auto _ : state) {
    const l2::GramField field(b.metric, b.atlas, 2);
    for (const auto& p : pts) benchmark::DoNotOptimize(field(p.chart, p.z));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pts.size()));
}
BENCHMARK(BM_GramFieldEval)->Unit(benchmark::kMillisecond);

void BM_KobayashiJet(benchmark::State& state) {
  const auto b = bundles::builtin_bundle(state.range(0) == 0 ? "line_sum(1,1)" : "quartic_finsler(2)");
  const auto s = bundles::sample_points(*b.atlas, {1, 11}).front();
  for (auto _ : state) benchmark::DoNotOptimize(curvature::kobayashi_jet(*b.metric, s.chart, s.z, s.zeta, s.direction));
}
BENCHMARK(BM_KobayashiJet)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ConvexityProbe(benchmark::State& state) {
  const multilinear::GramMatrix g(multilinear::SymBasis(2, 2),
                                  CMat((CVec(3) << 0.5, 0.5, 1.0).finished().asDiagonal()));
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = finsler::probe_vectors(2, n, 1);
  const auto c = finsler::probe_vectors(2, n, 2);
  std::vector<multilinear::VectorPair> pairs;
  for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(a[i], c[i]);
  const auto points = finsler::probe_vectors(2, n / 10, 3);
  const ComplexScalarFn norm = [&g](const CVec& v) { return multilinear::kth_root_norm(g, v); };
  for (auto _ : state) benchmark::DoNotOptimize(multilinear::convexity_probe(norm, pairs, points));
}
BENCHMARK(BM_ConvexityProbe)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
