#include "qptori/parallel.hpp"

#include <algorithm>
#include <memory>

namespace qptori {

namespace {
// Set while a thread runs pool work; nested parallel_for calls run inline.
thread_local bool in_parallel_region = false;

struct RegionGuard {
  bool previous;
  RegionGuard() : previous(in_parallel_region) { in_parallel_region = true; }
  ~RegionGuard() { in_parallel_region = previous; }
};
}  // namespace

ThreadPool::ThreadPool(std::size_t workers) {
  const std::size_t extra = workers > 1 ? workers - 1 : 0;
  threads_.reserve(extra);
  for (std::size_t i = 0; i < extra; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::run_chunks() {
  RegionGuard guard;
  for (;;) {
    const std::size_t begin = next_.fetch_add(chunk_);
    if (begin >= count_) return;
    const std::size_t end = std::min(count_, begin + chunk_);
    try {
      (*body_)(begin, end);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
      next_.store(count_);
    }
  }
}

void ThreadPool::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    run_chunks();
    {
      std::lock_guard lock(mutex_);
      --busy_;
    }
    done_.notify_one();
  }
}

void ThreadPool::parallel_for(std::size_t count, const RangeBody& body) {
  if (count == 0) return;
  if (threads_.empty() || count == 1 || in_parallel_region) {
    body(0, count);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    body_ = &body;
    count_ = count;
    chunk_ = std::max<std::size_t>(1, count / (size() * 32));
    next_.store(0);
    error_ = nullptr;
    busy_ = threads_.size();
    ++generation_;
  }
  wake_.notify_all();
  run_chunks();
  std::exception_ptr error;
  {
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return busy_ == 0; });
    body_ = nullptr;
    error = error_;
  }
  if (error) std::rethrow_exception(error);
}

namespace {
std::unique_ptr<ThreadPool>& pool_slot() {
  static std::unique_ptr<ThreadPool> pool = std::make_unique<ThreadPool>(1);
  return pool;
}
}  // namespace

void set_thread_count(std::size_t workers) {
  pool_slot() = std::make_unique<ThreadPool>(std::max<std::size_t>(1, workers));
}

std::size_t thread_count() { return pool_slot()->size(); }

ThreadPool& default_pool() { return *pool_slot(); }

}  // namespace qptori
