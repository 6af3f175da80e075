#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace dira {

/// Named, ordered collection of tensors. Entry order is part of the contract:
/// it is preserved by snapshots, checkpoints and Fisher files.
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    void add(std::string name, Tensor tensor);

    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Entry& entry(size_t i) const { return entries_[i]; }
    Entry& entry(size_t i) { return entries_[i]; }

    const Tensor* find(std::string_view name) const;

    int64_t total_len() const;

    /// Deep copy; the copy's tensors do not require gradients.
    ParamSet clone() const;

    /// Copies data from `src` into this set's tensors in place. Names and
    /// shapes must match entry by entry.
    void assign_from(const ParamSet& src);

    void zero_grad();

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    std::vector<Entry> entries_;
};

/// Order-sensitive FNV digest over names, shapes and raw float payloads.
uint64_t param_digest(const ParamSet& params);

}  // namespace dira
