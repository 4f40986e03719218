// OpenMP kernels against their serial references on a d = k = 5 problem.
// Run: bench_kernels [--benchmark_filter=...]; the thread count is the
// benchmark argument (0 = OpenMP default).

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "islimits/importance_sampling.hpp"
#include "islimits/inverse_problem.hpp"

using namespace islimits;

namespace {

struct Fixture {
  LinearGaussianInverseProblem ip;
  GaussianDensityRatio ratio;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Stream s(7, 0);
    auto ip = random_problem(5, 5, s).with_noise_scale(0.5);
    GaussianDensityRatio ratio(posterior(ip).as_gaussian(), ip.prior());
    return Fixture{std::move(ip), std::move(ratio)};
  }();
  return f;
}

constexpr std::int64_t kParticles = 4096;
constexpr int kReplicates = 64;
constexpr std::int64_t kDraws = 1 << 20;

void BM_ReplicateDiagnosticsSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(replicate_diagnostics_serial(f.ratio, kParticles, kReplicates, 1, 0));
  }
  state.SetItemsProcessed(state.iterations() * kParticles * kReplicates);
}

void BM_ReplicateDiagnostics(benchmark::State& state) {
  const auto& f = fixture();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        replicate_diagnostics(f.ratio, kParticles, kReplicates, 1, 0, threads));
  }
  state.SetItemsProcessed(state.iterations() * kParticles * kReplicates);
}

LogDensity density(const GaussianDensityRatio& r) {
  return [&r](const Eigen::Ref<const Vector>& u) { return r(u); };
}

void BM_McMomentsSerial(benchmark::State& state) {
  const auto& f = fixture();
  const auto g = density(f.ratio);
  for (auto _ : state) benchmark::DoNotOptimize(mc_moments_serial(f.ip.prior(), g, kDraws, 1));
  state.SetItemsProcessed(state.iterations() * kDraws);
}

void BM_McMoments(benchmark::State& state) {
  const auto& f = fixture();
  const auto g = density(f.ratio);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_moments(f.ip.prior(), g, kDraws, 1, threads));
  }
  state.SetItemsProcessed(state.iterations() * kDraws);
}

std::vector<TestFunction> test_functions() {
  return {[](const Eigen::Ref<const Vector>& u) { return std::cos(u[0]); },
          [](const Eigen::Ref<const Vector>& u) { return std::tanh(u.sum()); }};
}

void BM_ReplicateErrorsSerial(benchmark::State& state) {
  const auto& f = fixture();
  const auto phis = test_functions();
  const std::vector<double> exact = {0.0, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        replicate_errors_serial(f.ratio, phis, exact, kParticles, kReplicates, 1, 0));
  }
  state.SetItemsProcessed(state.iterations() * kParticles * kReplicates);
}

void BM_ReplicateErrors(benchmark::State& state) {
  const auto& f = fixture();
  const auto phis = test_functions();
  const std::vector<double> exact = {0.0, 0.0};
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        replicate_errors(f.ratio, phis, exact, kParticles, kReplicates, 1, 0, threads));
  }
  state.SetItemsProcessed(state.iterations() * kParticles * kReplicates);
}

}  // namespace

BENCHMARK(BM_ReplicateDiagnosticsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicateDiagnostics)->Arg(1)->Arg(2)->Arg(4)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_McMomentsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_McMoments)->Arg(1)->Arg(2)->Arg(4)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicateErrorsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicateErrors)->Arg(1)->Arg(2)->Arg(4)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
