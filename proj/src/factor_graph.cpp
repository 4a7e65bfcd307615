#include "ambislam/factor_graph.hpp"

#include <stdexcept>

namespace ambislam {

void FactorGraph::addVariable(const Key& key) {
  if (!adjacency_.emplace(key, std::set<FactorId>{}).second) throw DuplicateKeyError(key);
}

std::vector<Key> FactorGraph::variables() const {
  std::vector<Key> out;
  out.reserve(adjacency_.size());
  for (const auto& [k, _] : adjacency_) out.push_back(k);
  return out;
}

void FactorGraph::attach(FactorId id, const FactorPtr& f) {
  for (const Key& k : f->keys()) {
    if (!hasVariable(k)) throw MissingKeyError(k);
  }
  for (const Key& k : f->keys()) adjacency_[k].insert(id);
}

FactorId FactorGraph::add(FactorPtr factor) {
  if (!factor) throw std::invalid_argument("FactorGraph::add: null factor");
  const FactorId id = slots_.size();
  attach(id, factor);
  slots_.push_back(std::move(factor));
  ++live_;
  return id;
}

void FactorGraph::reinsert(FactorId id, FactorPtr factor) {
  if (!factor) throw std::invalid_argument("FactorGraph::reinsert: null factor");
  if (id < slots_.size() && slots_[id]) throw std::invalid_argument("FactorGraph::reinsert: slot occupied");
  attach(id, factor);
  if (id >= slots_.size()) slots_.resize(id + 1);
  slots_[id] = std::move(factor);
  ++live_;
}

FactorPtr FactorGraph::removeFactor(FactorId id) {
  if (!isLive(id)) throw std::out_of_range("FactorGraph::removeFactor: no factor in slot");
  FactorPtr f = std::move(slots_[id]);
  slots_[id] = nullptr;
  for (const Key& k : f->keys()) adjacency_[k].erase(id);
  --live_;
  return f;
}

std::vector<std::pair<FactorId, FactorPtr>> FactorGraph::removeVariable(const Key& key) {
  auto it = adjacency_.find(key);
  if (it == adjacency_.end()) throw MissingKeyError(key);
  const std::set<FactorId> incident = it->second;
  std::vector<std::pair<FactorId, FactorPtr>> removed;
  removed.reserve(incident.size());
  for (FactorId id : incident) removed.emplace_back(id, removeFactor(id));
  adjacency_.erase(key);
  return removed;
}

const std::set<FactorId>& FactorGraph::incidentFactors(const Key& key) const {
  auto it = adjacency_.find(key);
  if (it == adjacency_.end()) throw MissingKeyError(key);
  return it->second;
}

const FactorPtr& FactorGraph::factor(FactorId id) const {
  if (!isLive(id)) throw std::out_of_range("FactorGraph::factor: no factor in slot");
  return slots_[id];
}

double FactorGraph::totalError(const Values& values) const {
  double sum = 0.0;
  forEachFactor([&](FactorId, const Factor& f) { sum += f.error(values); });
  return sum;
}

}  // namespace ambislam
