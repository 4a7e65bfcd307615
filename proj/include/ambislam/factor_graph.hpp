#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "ambislam/factor.hpp"

namespace ambislam {

using FactorId = std::size_t;

/// Factors indexed by stable slot id, plus the variable registry and the
/// variable -> incident-factor adjacency. Removed factors leave an empty slot
/// that reinsert() can refill, so surgery preserves evaluation order.
class FactorGraph {
 public:
  void addVariable(const Key& key);
  bool hasVariable(const Key& key) const { return adjacency_.count(key) != 0; }
  std::vector<Key> variables() const;
  std::size_t variableCount() const { return adjacency_.size(); }

  /// All keys of the factor must already be registered.
  FactorId add(FactorPtr factor);
  /// Puts a factor back into a previously vacated slot.
  void reinsert(FactorId id, FactorPtr factor);
  FactorPtr removeFactor(FactorId id);

  /// Removes the variable and every incident factor; returns the removed
  /// factors in slot order.
  std::vector<std::pair<FactorId, FactorPtr>> removeVariable(const Key& key);

  const std::set<FactorId>& incidentFactors(const Key& key) const;

  const FactorPtr& factor(FactorId id) const;
  bool isLive(FactorId id) const { return id < slots_.size() && slots_[id] != nullptr; }
  /// Slot count including vacated slots; ids are < slotCount().
  std::size_t slotCount() const { return slots_.size(); }
  /// Number of live factors.
  std::size_t size() const { return live_; }

  template <typename Fn>
  void forEachFactor(Fn&& fn) const {
    for (FactorId id = 0; id < slots_.size(); ++id) {
      if (slots_[id]) fn(id, *slots_[id]);
    }
  }

  /// Sum of factor errors, accumulated in slot order.
  double totalError(const Values& values) const;

 private:
  void attach(FactorId id, const FactorPtr& f);

  std::vector<FactorPtr> slots_;
  std::map<Key, std::set<FactorId>> adjacency_;
  std::size_t live_ = 0;
};

}  // namespace ambislam
