#ifndef QPTORI_PARALLEL_HPP
#define QPTORI_PARALLEL_HPP

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qptori {

/// Fixed pool of worker threads created once and reused by every
/// parallel phase. Work items are independent index ranges, so results never
/// depend on the number of workers or on scheduling order.
class ThreadPool {
 public:
  using RangeBody = std::function<void(std::size_t begin, std::size_t end)>;

  explicit ThreadPool(std::size_t workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  /// Number of threads taking part in a parallel_for, caller included.
  std::size_t size() const { return threads_.size() + 1; }

  /// Calls body on disjoint subranges covering [0, count). The calling
  /// thread participates. The first exception thrown by any chunk is
  /// rethrown here after all chunks have finished.
  void parallel_for(std::size_t count, const RangeBody& body);

 private:
  void worker_loop();
  void run_chunks();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const RangeBody* body_ = nullptr;
  std::size_t count_ = 0;
  std::size_t chunk_ = 1;
  std::atomic<std::size_t> next_{0};
  std::size_t generation_ = 0;
  std::size_t busy_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

/// Resizes the process-wide pool. Call once at startup, before any
/// parallel phase runs.
void set_thread_count(std::size_t workers);
std::size_t thread_count();
ThreadPool& default_pool();

/// parallel_for on the process-wide pool, calling body(i) for each index.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  default_pool().parallel_for(count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace qptori

#endif  // QPTORI_PARALLEL_HPP
