#include <benchmark/benchmark.h>

#include "relqm/catalog.hpp"
#include "relqm/kgmap.hpp"
#include "relqm/position.hpp"
#include "relqm/triplets.hpp"

using namespace relqm;

namespace {

State packet(const MomentumGrid& g) {
  PacketSpec s;
  s.center = {0.5, 0.3, -0.2};
  s.width = 1.2;
  if (g.blocks() == 2) s.block_weights = {cplx(1.0), cplx(0.5)};
  return gaussian_packet(g, s);
}

void BM_Derivative(benchmark::State& st) {
  const MomentumGrid g(static_cast<int>(st.range(0)), 6.0, 1.0);
  const State psi = packet(g);
  const auto d = derivative_op(0);
  for (auto _ : st) benchmark::DoNotOptimize(d(psi));
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(g.node_count()));
}
BENCHMARK(BM_Derivative)->Arg(16)->Arg(32)->Arg(48);

void BM_Boost(benchmark::State& st) {
  const MomentumGrid g(static_cast<int>(st.range(0)), 6.0, 1.0, 2);
  const auto tr = make_triplet(TripletClass::parse("massive_pm_1"), g);
  const State psi = packet(g);
  for (auto _ : st) benchmark::DoNotOptimize(tr.K(0)(psi));
}
BENCHMARK(BM_Boost)->Arg(16)->Arg(32);

void BM_Commutator(benchmark::State& st) {
  const MomentumGrid g(static_cast<int>(st.range(0)), 6.0, 1.0, 2);
  const auto tr = make_triplet(TripletClass::parse("massive_pm_1"), g);
  const auto q = newton_wigner(g);
  const State psi = packet(g);
  for (auto _ : st) benchmark::DoNotOptimize(commutator(tr.J(2), q.Q[0])(psi));
}
BENCHMARK(BM_Commutator)->Arg(16)->Arg(32);

void BM_KgForward(benchmark::State& st) {
  const MomentumGrid g(static_cast<int>(st.range(0)), 6.0, 1.0, 2);
  const State psi = packet(g);
  for (auto _ : st) benchmark::DoNotOptimize(kg_forward(psi));
}
BENCHMARK(BM_KgForward)->Arg(16)->Arg(32)->Arg(64);

}  // namespace
BENCHMARK_MAIN();
