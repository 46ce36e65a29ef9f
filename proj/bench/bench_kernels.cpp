// Serial reference kernels against their OpenMP counterparts, at sizes close
// to one MaFengWo-scale propagation step and one full evaluation pass.
//
//   igrec_bench --benchmark_filter=spmm

#include <random>

#include <benchmark/benchmark.h>

#include "igrec/data.hpp"
#include "igrec/eval.hpp"
#include "igrec/kernels.hpp"

using namespace igrec;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.1);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = n(rng);
  return m;
}

struct World {
  Dataset data;
  NormAdjacency adj;
  AnchorItems items;

  World() {
    SyntheticSpec spec;
    spec.n_users = 5000;
    spec.n_items = 1500;
    spec.n_groups = 1000;
    spec.noise = 0.1;
    data = generate_synthetic(spec).dataset;
    prepare(data, PrepareOptions{});
    adj = build_norm_adjacency(data);
    items = index_by_split(data.user_items);
  }
};

const World& world() {
  static const World w;
  return w;
}

template <Matrix (*F)(const Matrix&, const Matrix&)>
void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 64, 1), b = random_matrix(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * 64 * 64));
}

template <Matrix (*F)(const Matrix&, const Matrix&)>
void bm_matmul_tn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 64, 1), b = random_matrix(n, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * 64 * 64));
}

template <Matrix (*F)(const SparseMatrix&, const Matrix&)>
void bm_spmm(benchmark::State& state) {
  const SparseMatrix& s = world().adj.user_item;
  const Matrix x = random_matrix(s.cols(), 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(F(s, x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.nnz() * 64));
}

template <bool Parallel>
void bm_evaluate(benchmark::State& state) {
  const World& w = world();
  const EmbeddingScorer scorer(random_matrix(w.data.n_users, 64, 4), random_matrix(w.data.n_items, 64, 5));
  const std::size_t ks[] = {5, 10};
  for (auto _ : state) {
    if constexpr (Parallel) benchmark::DoNotOptimize(evaluate_ranking(scorer, w.items, EvalTarget::Test, ks));
    else benchmark::DoNotOptimize(serial::evaluate_ranking(scorer, w.items, EvalTarget::Test, ks));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.data.n_users));
}

}  // namespace

BENCHMARK(bm_matmul<kernels::serial::matmul>)->Name("matmul/serial")->Arg(1024)->Arg(8192);
BENCHMARK(bm_matmul<kernels::parallel::matmul>)->Name("matmul/parallel")->Arg(1024)->Arg(8192);
BENCHMARK(bm_matmul_tn<kernels::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(1024)->Arg(8192);
BENCHMARK(bm_matmul_tn<kernels::parallel::matmul_tn>)->Name("matmul_tn/parallel")->Arg(1024)->Arg(8192);
BENCHMARK(bm_spmm<kernels::serial::spmm>)->Name("spmm/serial");
BENCHMARK(bm_spmm<kernels::parallel::spmm>)->Name("spmm/parallel");
BENCHMARK(bm_evaluate<false>)->Name("evaluate_ranking/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(bm_evaluate<true>)->Name("evaluate_ranking/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
