#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "llmrl/errors.hpp"

namespace llmrl::nn {

/// Fixed-capacity FIFO ring of records with uniform sampling (with replacement).
template <typename Record>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
        records_.reserve(capacity < 4096 ? capacity : 4096);
    }

    void push(Record record) {
        if (records_.size() < capacity_) {
            records_.push_back(std::move(record));
        } else {
            records_[cursor_] = std::move(record);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    /// Indices of `count` records drawn uniformly from the stored ones.
    template <typename Rng>
    std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const {
        if (records_.empty()) throw UsageError("cannot sample from an empty replay buffer");
        std::uniform_int_distribution<std::size_t> pick(0, records_.size() - 1);
        std::vector<std::size_t> out(count);
        for (auto& idx : out) idx = pick(rng);
        return out;
    }

    template <typename Rng>
    std::vector<const Record*> sample(std::size_t count, Rng& rng) const {
        std::vector<const Record*> out;
        out.reserve(count);
        for (std::size_t idx : sample_indices(count, rng)) out.push_back(&records_[idx]);
        return out;
    }

    const Record& operator[](std::size_t i) const { return records_.at(i); }
    std::size_t size() const noexcept { return records_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool empty() const noexcept { return records_.empty(); }

    /// Stored records in insertion order, oldest first.
    std::vector<Record> chronological() const {
        std::vector<Record> out;
        out.reserve(records_.size());
        const std::size_t start = records_.size() < capacity_ ? 0 : cursor_;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            out.push_back(records_[(start + i) % records_.size()]);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Record> records_;
};

}  // namespace llmrl::nn
