// The per-frame update must not touch the heap once the engine is warm.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <new>
#include <random>

#include "auxiva/separator.hpp"

namespace {
std::atomic<long> allocations{0};
}

void* operator new(std::size_t n) {
  allocations.fetch_add(1, std::memory_order_relaxed);
  if (void* p = std::malloc(n ? n : 1)) return p;
  throw std::bad_alloc();
}
void* operator new[](std::size_t n) { return operator new(n); }
void* operator new(std::size_t n, std::align_val_t a) {
  allocations.fetch_add(1, std::memory_order_relaxed);
  const std::size_t al = static_cast<std::size_t>(a);
  if (void* p = std::aligned_alloc(al, (n + al - 1) / al * al)) return p;
  throw std::bad_alloc();
}
void* operator new[](std::size_t n, std::align_val_t a) { return operator new(n, a); }
void operator delete(void* p) noexcept { std::free(p); }
void operator delete[](void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t) noexcept { std::free(p); }
void operator delete(void* p, std::align_val_t) noexcept { std::free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { std::free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { std::free(p); }

int main() {
  using namespace auxiva;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  int failures = 0;
  for (const auto method : {UpdateMethod::ISS, UpdateMethod::IP}) {
    for (const int K : {2, 3, 8}) {
      const int F = 129;
      OnlineConfig<double> cfg;
      cfg.method = method;
      const long at_start = allocations.load();
      OnlineAuxIva<double> eng(K, F, cfg, ContrastModel<double>{ContrastKind::Laplace, F});
      failures += allocations.load() == at_start;  // the counter must see the engine's own state
      std::vector<Frame<double>> frames;
      for (int t = 0; t < 8; ++t) {
        Frame<double> x(K, F);
        for (int f = 0; f < F; ++f)
          for (int k = 0; k < K; ++k) x(k, f) = {g(rng), g(rng)};
        frames.push_back(x);
      }
      Frame<double> y;
      eng.process_frame(frames[0], y);
      const long before = allocations.load();
      for (int t = 1; t < 8; ++t) eng.process_frame(frames[t], y);
      const long count = allocations.load() - before;
      std::printf("%s K=%d: %ld allocations in 7 frames\n", method == UpdateMethod::ISS ? "ISS" : "IP", K, count);
      failures += count != 0;
    }
  }
  return failures == 0 ? 0 : 1;
}
