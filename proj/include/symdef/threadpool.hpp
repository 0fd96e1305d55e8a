#ifndef SYMDEF_THREADPOOL_HPP
#define SYMDEF_THREADPOOL_HPP

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace symdef {

// A minimal fixed-size worker pool for data-parallel maps. Work items are
// claimed by index, so results land in caller-owned slots and reductions
// stay in deterministic order regardless of the thread count.
class ThreadPool {
 public:
  explicit ThreadPool(int threads) {
    int n = std::max(1, threads) - 1;  // caller thread participates
    workers_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      shutdown_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) w.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int thread_count() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(i) for i in [0, count). Blocks until all items finish. The
  // calling thread works too, so a pool of size 1 degenerates to a loop.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (workers_.empty()) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    {
      std::unique_lock<std::mutex> lock(mutex_);
      job_ = &fn;
      job_count_ = count;
      next_index_ = 0;
      remaining_ = count;
    }
    wake_.notify_all();
    run_items();
    std::unique_lock<std::mutex> lock(mutex_);
    done_.wait(lock, [this] { return remaining_ == 0; });
    job_ = nullptr;
  }

 private:
  void run_items() {
    for (;;) {
      std::size_t i;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        if (job_ == nullptr || next_index_ >= job_count_) return;
        i = next_index_++;
      }
      (*job_)(i);
      std::unique_lock<std::mutex> lock(mutex_);
      if (--remaining_ == 0) done_.notify_all();
    }
  }

  void worker_loop() {
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mutex_);
        wake_.wait(lock, [this] {
          return shutdown_ || (job_ != nullptr && next_index_ < job_count_);
        });
        if (shutdown_) return;
      }
      run_items();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_count_ = 0;
  std::size_t next_index_ = 0;
  std::size_t remaining_ = 0;
  bool shutdown_ = false;
};

}  // namespace symdef

#endif  // SYMDEF_THREADPOOL_HPP
