#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stop_token>
#include <thread>
#include <vector>

#include "greenview/error.hpp"

namespace greenview {

/// Fixed-capacity multi-producer multi-consumer queue. push blocks while
/// full, pop blocks while empty; close() wakes everyone and makes pop return
/// nothing once drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Returns false if the queue was closed before the item could be queued.
  bool push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
};

/// Runs task(i) for i in [0, count) on `workers` lanes fed by a bounded queue
/// and returns the results in index order, so the output never depends on
/// the lane count. The error of the lowest failing index is rethrown; a stop
/// request raises Cancelled.
template <typename Result>
std::vector<Result> parallel_map(std::size_t count, std::size_t workers,
                                 const std::function<Result(std::size_t)>& task,
                                 std::stop_token stop = {}) {
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);

  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "interrupted");
      slots[i].emplace(task(i));
    }
  } else {
    BoundedQueue<std::size_t> queue(2 * workers);
    std::stop_source failed;
    {
      std::vector<std::jthread> lanes;
      lanes.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        lanes.emplace_back([&] {
          while (auto index = queue.pop()) {
            if (failed.stop_requested() || stop.stop_requested()) continue;
            try {
              slots[*index].emplace(task(*index));
            } catch (...) {
              errors[*index] = std::current_exception();
              failed.request_stop();
            }
          }
        });
      }
      for (std::size_t i = 0; i < count; ++i) {
        if (failed.stop_requested() || stop.stop_requested()) break;
        queue.push(i);
      }
      queue.close();
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "interrupted");
  }

  std::vector<Result> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace greenview
