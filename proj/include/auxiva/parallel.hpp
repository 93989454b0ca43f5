#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

namespace auxiva {

/// Persistent worker pool for splitting a range of frequency bins. `run`
/// blocks until every chunk has finished. With one thread the body runs
/// inline on the caller and nothing is allocated.
class BinWorkers {
 public:
  explicit BinWorkers(int threads = 1) { resize(threads); }
  ~BinWorkers() { stop(); }

  BinWorkers(const BinWorkers&) = delete;
  BinWorkers& operator=(const BinWorkers&) = delete;

  int threads() const noexcept { return static_cast<int>(pool_.size()) + 1; }

  void resize(int threads) {
    stop();
    if (threads < 1) threads = 1;
    stopping_ = false;
    pool_.reserve(static_cast<std::size_t>(threads - 1));
    for (int i = 0; i < threads - 1; ++i) {
      pool_.emplace_back([this, i] { loop(i + 1); });
    }
  }

  /// Calls fn(begin, end) over disjoint chunks covering [0, n).
  template <typename Fn>
  void run(int n, Fn& fn) {
    if (pool_.empty() || n < 2) {
      fn(0, n);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      job_ = [](void* ctx, int b, int e) { (*static_cast<Fn*>(ctx))(b, e); };
      ctx_ = &fn;
      n_ = n;
      pending_ = static_cast<int>(pool_.size());
      ++generation_;
    }
    start_cv_.notify_all();
    const auto [b, e] = chunk(0, n);
    fn(b, e);
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
  }

 private:
  using Job = void (*)(void*, int, int);

  std::pair<int, int> chunk(int idx, int n) const {
    const int parts = threads();
    const int base = n / parts;
    const int extra = n % parts;
    const int begin = idx * base + std::min(idx, extra);
    return {begin, begin + base + (idx < extra ? 1 : 0)};
  }

  void loop(int idx) {
    std::uint64_t seen = 0;
    for (;;) {
      Job job;
      void* ctx;
      int n;
      {
        std::unique_lock<std::mutex> lock(mu_);
        start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
        job = job_;
        ctx = ctx_;
        n = n_;
      }
      const auto [b, e] = chunk(idx, n);
      if (b < e) job(ctx, b, e);
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  void stop() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stopping_ = true;
    }
    start_cv_.notify_all();
    for (auto& th : pool_) th.join();
    pool_.clear();
  }

  std::vector<std::thread> pool_;
  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  Job job_ = nullptr;
  void* ctx_ = nullptr;
  int n_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
};

}  // namespace auxiva
