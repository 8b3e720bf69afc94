#ifndef HICOPS_QUEUES_HPP
#define HICOPS_QUEUES_HPP

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

namespace hicops {

// Bounded many-producer/many-consumer channel with blocking pop and
// close semantics.
template <typename T>
class Channel {
  public:
    explicit Channel(std::size_t capacity) : capacity_(capacity) {}

    bool push(T item) {
        std::unique_lock lk(mu_);
        not_full_.wait(lk, [&] { return items_.size() < capacity_ || closed_; });
        if (closed_) return false;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    bool try_push(T item) {
        std::lock_guard lk(mu_);
        if (closed_ || items_.size() >= capacity_) return false;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    // Blocks until an item or close; nullopt means closed-and-drained.
    std::optional<T> pop() {
        std::unique_lock lk(mu_);
        not_empty_.wait(lk, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    std::optional<T> pop_for(std::chrono::duration<double> timeout) {
        std::unique_lock lk(mu_);
        if (!not_empty_.wait_for(lk, timeout,
                                 [&] { return !items_.empty() || closed_; }))
            return std::nullopt;
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    std::optional<T> try_pop() {
        std::lock_guard lk(mu_);
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    void close() {
        std::lock_guard lk(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    bool closed() const {
        std::lock_guard lk(mu_);
        return closed_;
    }

    std::size_t size() const {
        std::lock_guard lk(mu_);
        return items_.size();
    }

    bool full() const {
        std::lock_guard lk(mu_);
        return items_.size() >= capacity_;
    }

    bool empty() const {
        std::lock_guard lk(mu_);
        return items_.empty();
    }

    std::size_t capacity() const { return capacity_; }

  private:
    mutable std::mutex mu_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<T> items_;
    std::size_t capacity_;
    bool closed_ = false;
};

}  // namespace hicops

#endif
