#include <benchmark/benchmark.h>

// the packaged benchmark_main archive is LTO bytecode tied to one gcc build
BENCHMARK_MAIN();
