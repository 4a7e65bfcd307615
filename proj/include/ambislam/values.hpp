#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "ambislam/key.hpp"
#include "ambislam/se3.hpp"

namespace ambislam {

class MissingKeyError : public std::out_of_range {
 public:
  explicit MissingKeyError(const Key& k) : std::out_of_range("missing variable " + k.str()), key(k) {}
  Key key;
};

class DuplicateKeyError : public std::invalid_argument {
 public:
  explicit DuplicateKeyError(const Key& k) : std::invalid_argument("duplicate variable " + k.str()), key(k) {}
  Key key;
};

/// Ordered map from variable key to pose estimate.
class Values {
 public:
  using Map = std::map<Key, Pose3d>;
  using const_iterator = Map::const_iterator;

  void insert(const Key& k, const Pose3d& p) {
    if (!map_.emplace(k, p).second) throw DuplicateKeyError(k);
  }
  void insertOrAssign(const Key& k, const Pose3d& p) { map_.insert_or_assign(k, p); }
  void update(const Key& k, const Pose3d& p) { at_(k) = p; }
  void erase(const Key& k) {
    if (map_.erase(k) == 0) throw MissingKeyError(k);
  }

  const Pose3d& at(const Key& k) const {
    auto it = map_.find(k);
    if (it == map_.end()) throw MissingKeyError(k);
    return it->second;
  }
  bool contains(const Key& k) const { return map_.count(k) != 0; }
  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }

  std::vector<Key> keys() const {
    std::vector<Key> out;
    out.reserve(map_.size());
    for (const auto& [k, _] : map_) out.push_back(k);
    return out;
  }

  const_iterator begin() const { return map_.begin(); }
  const_iterator end() const { return map_.end(); }

  /// Same keys and bit-identical poses.
  friend bool operator==(const Values& a, const Values& b) {
    if (a.map_.size() != b.map_.size()) return false;
    auto ib = b.map_.begin();
    for (const auto& [k, p] : a.map_) {
      if (k != ib->first) return false;
      if (!(p == ib->second)) return false;
      ++ib;
    }
    return true;
  }

 private:
  Pose3d& at_(const Key& k) {
    auto it = map_.find(k);
    if (it == map_.end()) throw MissingKeyError(k);
    return it->second;
  }

  Map map_;
};

}  // namespace ambislam
