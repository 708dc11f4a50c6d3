// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

namespace sketchwatch::pipeline {

struct QueueStats {
    std::uint64_t enqueued = 0;
    std::uint64_t dequeued = 0;
    std::uint64_t dropped = 0;
    std::size_t depth = 0;
    std::size_t capacity = 0;
    std::size_t high_water = 0;
};

/// Bounded multi-producer multi-consumer FIFO. Every item that gets in is either
/// popped once or removed by a counted drop, so enqueued = dequeued + dropped + depth.
template <typename T> class WorkQueue {
public:
    explicit WorkQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

    /// Blocks while full. Returns false (item discarded, not counted) once closed.
    bool push(T item)
    {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_)
            return false;
        enqueue_locked(std::move(item));
        lock.unlock();
        not_empty_.notify_one();
        return true;
    }

    bool try_push(T item)
    {
        std::unique_lock lock(mutex_);
        if (closed_ || items_.size() >= capacity_)
            return false;
        enqueue_locked(std::move(item));
        lock.unlock();
        not_empty_.notify_one();
        return true;
    }

    /// Never blocks. When full, the oldest queued item with `same_key(queued)` true
    /// is dropped to make room; failing that, the oldest item overall. The dropped
    /// item is returned. Returns nullopt with the item discarded when closed (check
    /// closed() to tell the cases apart).
    template <typename Pred> std::optional<T> push_superseding(T item, Pred same_key)
    {
        std::unique_lock lock(mutex_);
        if (closed_)
            return std::nullopt;
        std::optional<T> victim;
        if (items_.size() >= capacity_) {
            auto it = items_.begin();
            for (; it != items_.end(); ++it)
                if (same_key(*it))
                    break;
            if (it == items_.end())
                it = items_.begin();
            victim = std::move(*it);
            items_.erase(it);
            ++stats_.dropped;
        }
        enqueue_locked(std::move(item));
        lock.unlock();
        not_empty_.notify_one();
        return victim;
    }

    /// Blocks until an item is available; nullopt once closed and drained.
    std::optional<T> pop()
    {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        return pop_locked(lock);
    }

    template <typename Rep, typename Period> std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout)
    {
        std::unique_lock lock(mutex_);
        not_empty_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
        return pop_locked(lock);
    }

    std::optional<T> try_pop()
    {
        std::unique_lock lock(mutex_);
        return pop_locked(lock);
    }

    /// Wakes every waiter. Queued items can still be popped.
    void close()
    {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    bool closed() const
    {
        std::lock_guard lock(mutex_);
        return closed_;
    }

    QueueStats stats() const
    {
        std::lock_guard lock(mutex_);
        QueueStats s = stats_;
        s.depth = items_.size();
        s.capacity = capacity_;
        return s;
    }

    std::size_t capacity() const { return capacity_; }

private:
    void enqueue_locked(T item)
    {
        items_.push_back(std::move(item));
        ++stats_.enqueued;
        if (items_.size() > stats_.high_water)
            stats_.high_water = items_.size();
    }

    std::optional<T> pop_locked(std::unique_lock<std::mutex> &lock)
    {
        if (items_.empty())
            return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        ++stats_.dequeued;
        lock.unlock();
        not_full_.notify_one();
        return item;
    }

    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<T> items_;
    QueueStats stats_;
    bool closed_ = false;
};

} // namespace sketchwatch::pipeline
