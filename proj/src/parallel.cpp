#include "csplat/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace csplat {

namespace {

int g_thread_count = 0; // 0 = uninitialized

int detect_threads() {
  if (const char* env = std::getenv("CSPLAT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

// One launched parallel region. Chunks are claimed from an atomic counter;
// each chunk writes only its own outputs, so claim order never affects
// results.
struct RunState {
  const std::function<void(std::size_t)>* func = nullptr;
  std::size_t total = 0;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0};
};

class Pool {
public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  void run(std::size_t n_chunks, const std::function<void(std::size_t)>& f) {
    const int workers = thread_count();
    if (workers <= 1 || n_chunks <= 1 || running_region_) {
      // Serial fallback; also used for (unsupported) nested regions.
      for (std::size_t c = 0; c < n_chunks; ++c) f(c);
      return;
    }
    ensure_workers(workers - 1);
    auto state = std::make_shared<RunState>();
    state->func = &f;
    state->total = n_chunks;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      current_ = state;
    }
    cv_.notify_all();
    running_region_ = true;
    work(*state);
    running_region_ = false;
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [&] {
      return state->completed.load(std::memory_order_acquire) == state->total;
    });
    current_.reset();
  }

private:
  Pool() = default;

  void ensure_workers(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    while (int(threads_.size()) < n) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  void worker_loop() {
    std::shared_ptr<RunState> last;
    for (;;) {
      std::shared_ptr<RunState> state;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return current_ && current_ != last; });
        state = current_;
      }
      last = state;
      work(*state);
    }
  }

  void work(RunState& state) {
    for (;;) {
      const std::size_t c = state.next.fetch_add(1, std::memory_order_relaxed);
      if (c >= state.total) break;
      (*state.func)(c);
      if (state.completed.fetch_add(1, std::memory_order_acq_rel) + 1 ==
          state.total) {
        std::lock_guard<std::mutex> lock(mutex_);
        done_cv_.notify_all();
      }
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_, done_cv_;
  std::vector<std::thread> threads_;
  std::shared_ptr<RunState> current_;
  bool running_region_ = false; // main-thread only
};

} // namespace

int thread_count() {
  if (g_thread_count == 0) g_thread_count = detect_threads();
  return g_thread_count;
}

void set_thread_count(int n) { g_thread_count = n >= 1 ? n : 1; }

void parallel_chunks(std::size_t n_chunks,
                     const std::function<void(std::size_t)>& f) {
  Pool::instance().run(n_chunks, f);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  if (n == 0) return;
  // Chunk size fixed by n alone so splits are thread-count independent.
  const std::size_t chunk = std::max<std::size_t>(1, n / 64);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  parallel_chunks(n_chunks, [&](std::size_t c) {
    const std::size_t lo = c * chunk;
    const std::size_t hi = std::min(lo + chunk, n);
    for (std::size_t i = lo; i < hi; ++i) f(i);
  });
}

} // namespace csplat
