#include <benchmark/benchmark.h>

#include "dlane/assignment.hpp"
#include "dlane/random.hpp"

namespace {

void BM_SolveAssignment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  dlane::Rng rng(1);
  dlane::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = dlane::uniform(rng, 0, 100);
  for (auto _ : state) benchmark::DoNotOptimize(dlane::solve_assignment(m));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveAssignment)->RangeMultiplier(2)->Range(4, 256)->Complexity(benchmark::oNCubed);

}  // namespace
