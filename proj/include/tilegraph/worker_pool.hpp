#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tilegraph {

/// Fixed set of threads that all run the same task once per run() call.
/// The calling thread acts as worker 0.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned size() const noexcept { return workers_; }
  /// Runs task(i) for every worker index i and waits; rethrows the first
  /// exception any worker raised.
  void run(const std::function<void(unsigned)>& task);

 private:
  void loop(unsigned index);

  unsigned workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(unsigned)>* task_ = nullptr;
  std::uint64_t generation_ = 0;
  unsigned pending_ = 0;
  bool stop_ = false;
  std::exception_ptr failure_;
};

}  // namespace tilegraph
