#include "lmor/basis.hpp"
#include "lmor/config.hpp"
#include "lmor/parallel.hpp"
#include "lmor/rangefinder.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace lmor;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

const Material& material() {
  static const Material m = two_phase_material(30000.0, 60000.0, 0.2, PlaneModel::strain);
  return m;
}

FineMesh rce(int n_verts) { return build_rce_mesh(rce_preset("type1", n_verts)); }

void set_label(benchmark::State& state) {
  state.SetLabel(state.range(1) ? "parallel x" + std::to_string(max_threads()) : "serial");
}

void BM_ElementMatrices(benchmark::State& state) {
  const FineMesh mesh = rce(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(element_matrices(mesh, material(), exec_of(state)));
  set_label(state);
}

void BM_Assemble(benchmark::State& state) {
  const FineMesh mesh = rce(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(mesh, material(), exec_of(state)));
  set_label(state);
}

void BM_ExtendCoarse(benchmark::State& state) {
  const RceOperator op(rce(static_cast<int>(state.range(0))), material());
  for (auto _ : state) benchmark::DoNotOptimize(extend_coarse(op, exec_of(state)));
  set_label(state);
}

void BM_TransferApply(benchmark::State& state) {
  const auto grid = build_coarse_grid({GridShape::rectangle, 5, 5}, 20.0);
  GlobalBc bc = free_bc(grid);
  assign_edges(bc, grid, [](const Vec2&) { return true; }, {BcType::dirichlet, {true, true}});
  bc.ignore_in_oversampling = true;
  const auto configs = classify_configurations(grid, bc);
  const TransferOperator op(configs.front(), rce(static_cast<int>(state.range(0))), material(), bc);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  Matrix g(op.source_dim(), 16);
  for (Eigen::Index k = 0; k < g.size(); ++k) g.data()[k] = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(g, true, exec_of(state)));
  set_label(state);
}

}  // namespace

BENCHMARK(BM_ElementMatrices)->ArgsProduct({{7, 15}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Assemble)->ArgsProduct({{7, 15}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ExtendCoarse)->ArgsProduct({{7, 15}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransferApply)->ArgsProduct({{7}, {0, 1}})->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
