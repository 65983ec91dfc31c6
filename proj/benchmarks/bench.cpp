#include <benchmark/benchmark.h>

#include "pianodiff/denoiser.hpp"
#include "pianodiff/diffusion.hpp"
#include "pianodiff/rng.hpp"
#include "pianodiff/schedule.hpp"

using namespace pianodiff;

namespace {

PianoRoll bench_roll(int frames, std::uint64_t seed) {
  PianoRoll roll(frames);
  Rng rng(seed);
  for (int p = 0; p < kNumPitches; ++p) {
    int t = 0;
    while (t < frames) {
      if (rng.uniform() < 0.08) {
        int len = std::min<int>(1 + static_cast<int>(rng.below(6)), frames - t);
        roll.set(t, p, NoteState::Onset);
        for (int k = 1; k < len; ++k) roll.set(t + k, p, NoteState::Sustain);
        t += len;
      } else {
        ++t;
      }
    }
  }
  return roll;
}

void BM_ScheduleBuild(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(NoiseSchedule::linear(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ScheduleBuild)->Arg(100)->Arg(1000);

void BM_Posterior(benchmark::State& state) {
  auto s = NoiseSchedule::linear(100);
  Vec4 dist;
  dist << 0.2, 0.5, 0.3, 0.0;
  int tau = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(posterior(NoteState::Mask, dist, tau, s));
    tau = tau % 100 + 1;
  }
}
BENCHMARK(BM_Posterior);

void BM_ForwardSample(benchmark::State& state) {
  auto s = NoiseSchedule::linear(100);
  PianoRoll y0 = bench_roll(128, 1);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(forward_sample(y0, 50, s, ++seed));
}
BENCHMARK(BM_ForwardSample);

void BM_DenoiseForward(benchmark::State& state) {
  Denoiser model{DenoiserConfig{}};
  model.init_params(1);
  PianoRoll lead = bench_roll(128, 2);
  PianoRoll y = bench_roll(128, 3);
  Mat enc = model.encode(lead, nullptr);
  for (auto _ : state)
    benchmark::DoNotOptimize(model.denoise(y, enc, 50, nullptr));
}
BENCHMARK(BM_DenoiseForward);

}  // namespace

BENCHMARK_MAIN();
