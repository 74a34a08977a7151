#pragma once

#include <cmath>
#include <cstddef>
#include <list>
#include <vector>

#include "roughcount/vlma_adapter.hpp"

// Straight-line reimplementation of the adapter store used as an oracle:
// plain vectors for the slots plus a list of slot indices in write order,
// oldest first.
namespace reference {

using Vec = std::vector<double>;

inline Vec unit(Vec v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

inline double vdot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Store {
  std::size_t capacity;
  double delta;
  double lambda;
  std::vector<Vec> keys;
  std::vector<Vec> values;
  std::list<std::size_t> write_order;

  void touch(std::size_t slot) {
    write_order.remove(slot);
    write_order.push_back(slot);
  }

  roughcount::UpdateKind update(const Vec& v_raw, const Vec& u_raw) {
    const Vec v = unit(v_raw);
    const Vec u = unit(u_raw);
    if (!keys.empty()) {
      std::size_t best = 0;
      double best_sim = -2.0;
      for (std::size_t j = 0; j < keys.size(); ++j) {
        const double s = vdot(v, keys[j]) / std::sqrt(vdot(keys[j], keys[j]));
        if (s > best_sim) {
          best_sim = s;
          best = j;
        }
      }
      double d2 = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) d2 += (values[best][i] - u[i]) * (values[best][i] - u[i]);
      if (std::sqrt(d2) < delta) {
        Vec k = keys[best];
        for (std::size_t i = 0; i < k.size(); ++i) k[i] += v[i];
        keys[best] = unit(k);
        touch(best);
        return roughcount::UpdateKind::kMerged;
      }
    }
    Vec value(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) value[i] = lambda * v[i] + (1.0 - lambda) * u[i];
    if (keys.size() < capacity) {
      keys.push_back(v);
      values.push_back(value);
      touch(keys.size() - 1);
      return roughcount::UpdateKind::kInserted;
    }
    const std::size_t slot = write_order.front();
    keys[slot] = v;
    values[slot] = value;
    touch(slot);
    return roughcount::UpdateKind::kEvicted;
  }
};

}  // namespace reference
