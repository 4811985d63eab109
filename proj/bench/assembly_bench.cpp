// Serial reference kernels against their OpenMP versions.
// SKEWOPT_THREADS caps the thread count of the parallel variants.

#include <map>

#include <benchmark/benchmark.h>

#include "skewopt/assembly.hpp"
#include "skewopt/ball_example.hpp"
#include "skewopt/perforation.hpp"

namespace {

using namespace skewopt;

struct Setup {
  SimplicialMesh mesh;
  MatrixField coeff;
};

const Setup& setup(int dim, int n) {
  static std::map<std::pair<int, int>, Setup> cache;
  auto it = cache.find({dim, n});
  if (it == cache.end()) {
    Setup s;
    const Point lo{-1, -1, dim == 3 ? -1.0 : 0.0}, hi{1, 1, dim == 3 ? 1.0 : 0.0};
    s.mesh = build_box_mesh(dim, lo, hi, n);
    s.coeff = MatrixField::identity(s.mesh);
    s.coeff = s.coeff.axpby(1.0, sample_field(s.mesh, [dim](const Point& x) -> SmallMat {
      if (dim == 3) return BallExample::envelope(x);
      SmallMat m = SmallMat::Zero(2, 2);
      m(0, 1) = x[0];
      m(1, 0) = -x[0];
      return m;
    }), 1.0);
    it = cache.emplace(std::make_pair(dim, n), std::move(s)).first;
  }
  return it->second;
}

void BM_StiffnessSerial(benchmark::State& st) {
  const auto& s = setup(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(stiffness_matrix_serial(s.mesh, s.coeff));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(s.mesh.num_cells()));
}

void BM_StiffnessParallel(benchmark::State& st) {
  const auto& s = setup(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(stiffness_matrix(s.mesh, s.coeff));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(s.mesh.num_cells()));
}

void BM_KeepMaskSerial(benchmark::State& st) {
  const auto& s = setup(3, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(perforation_keep_mask_serial(s.coeff, 0.1));
}

void BM_KeepMaskParallel(benchmark::State& st) {
  const auto& s = setup(3, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(perforation_keep_mask(s.coeff, 0.1));
}

BENCHMARK(BM_StiffnessSerial)->Args({2, 128})->Args({3, 24})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StiffnessParallel)->Args({2, 128})->Args({3, 24})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KeepMaskSerial)->Arg(48)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KeepMaskParallel)->Arg(48)->Unit(benchmark::kMicrosecond);

}  // namespace

int main(int argc, char** argv) {
  skewopt::apply_thread_limit();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
