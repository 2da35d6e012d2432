#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kst {

// Worker count: KST_THREADS caps parallelism (0 or unset -> hardware concurrency).
inline int worker_count() {
  static const int n = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("KST_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<int>(std::min<long>(v, 256));
    }
    return hw;
  }();
  return n;
}

namespace detail {

// Persistent pool; the calling thread participates, so worker_count() - 1
// background threads are kept. Nested calls run inline on the calling thread.
// A new job is admitted only once every straggler of the previous one has left
// its claim loop, so task lifetimes end strictly before the next reset.
class ThreadPool {
public:
  static ThreadPool& instance() {
    static ThreadPool pool(worker_count() - 1);
    return pool;
  }

  static bool& in_task() {
    thread_local bool flag = false;
    return flag;
  }

  void run(int n_tasks, const std::function<void(int)>& task) {
    if (n_tasks <= 0) return;
    if (workers_.empty() || n_tasks == 1 || in_task()) {
      for (int i = 0; i < n_tasks; ++i) task(i);
      return;
    }

    {
      std::unique_lock<std::mutex> lock(m_);
      cv_done_.wait(lock, [&] { return active_.load(std::memory_order_acquire) == 0; });
      task_ = &task;
      total_ = n_tasks;
      next_.store(0, std::memory_order_relaxed);
      done_.store(0, std::memory_order_relaxed);
      error_ = nullptr;
      ++generation_;
      active_.fetch_add(1, std::memory_order_acq_rel);  // the caller participates
    }
    cv_work_.notify_all();

    in_task() = true;
    claim_loop(task);
    in_task() = false;
    finish_participation();

    std::unique_lock<std::mutex> lock(m_);
    cv_done_.wait(lock, [&] { return done_.load(std::memory_order_acquire) >= total_; });
    task_ = nullptr;
    if (error_) {
      auto err = error_;
      error_ = nullptr;
      lock.unlock();
      std::rethrow_exception(err);
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(m_);
      stop_ = true;
      ++generation_;
    }
    cv_work_.notify_all();
    for (auto& w : workers_) w.join();
  }

private:
  explicit ThreadPool(int n_workers) {
    for (int w = 0; w < n_workers; ++w)
      workers_.emplace_back([this] { worker_loop(); });
  }

  void claim_loop(const std::function<void(int)>& task) {
    for (;;) {
      const int i = next_.fetch_add(1, std::memory_order_relaxed);
      if (i >= total_) break;
      try {
        task(i);
      } catch (...) {
        std::unique_lock<std::mutex> lock(m_);
        if (!error_) error_ = std::current_exception();
      }
      if (done_.fetch_add(1, std::memory_order_acq_rel) + 1 >= total_) {
        // lock-then-notify so a waiter cannot slip between its predicate check
        // and the futex sleep
        { std::lock_guard<std::mutex> lock(m_); }
        cv_done_.notify_all();
      }
    }
  }

  void finish_participation() {
    if (active_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      { std::lock_guard<std::mutex> lock(m_); }
      cv_done_.notify_all();
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    in_task() = true;
    for (;;) {
      const std::function<void(int)>* task = nullptr;
      {
        std::unique_lock<std::mutex> lock(m_);
        cv_work_.wait(lock, [&] { return stop_ || (generation_ != seen && task_ != nullptr); });
        if (stop_) return;
        seen = generation_;
        task = task_;
        active_.fetch_add(1, std::memory_order_acq_rel);
      }
      claim_loop(*task);
      finish_participation();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex m_;
  std::condition_variable cv_work_, cv_done_;
  const std::function<void(int)>* task_ = nullptr;
  int total_ = 0;
  std::atomic<int> next_{0};
  std::atomic<int> done_{0};
  std::atomic<int> active_{0};
  std::exception_ptr error_ = nullptr;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace detail

// Static block split of [begin, end) over the pool. fn(i0, i1) handles one block.
template <typename Fn>
void parallel_blocks(std::int64_t begin, std::int64_t end, Fn&& fn) {
  const std::int64_t n = end - begin;
  if (n <= 0) return;
  const int nw = static_cast<int>(std::min<std::int64_t>(worker_count(), n));
  if (nw <= 1) {
    fn(begin, end);
    return;
  }
  const std::int64_t chunk = (n + nw - 1) / nw;
  std::function<void(int)> task = [&](int w) {
    const std::int64_t i0 = begin + static_cast<std::int64_t>(w) * chunk;
    const std::int64_t i1 = std::min<std::int64_t>(i0 + chunk, end);
    if (i0 < i1) fn(i0, i1);
  };
  detail::ThreadPool::instance().run(nw, task);
}

template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, Fn&& fn) {
  parallel_blocks(begin, end, [&fn](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) fn(i);
  });
}

}  // namespace kst
