#include "favor/core.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace favor {

double euclidean(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw UsageError("euclidean: dimension mismatch (" +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<Neighbor> top_k_of(const std::vector<Neighbor>& candidates,
                               size_t k) {
  if (k == 0) return {};
  auto farther_first = [](const Neighbor& a, const Neighbor& b) {
    return nearer(a, b);  // priority_queue keeps the farthest on top
  };
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(farther_first)>
      heap(farther_first);
  for (const Neighbor& c : candidates) {
    if (heap.size() < k) {
      heap.push(c);
    } else if (nearer(c, heap.top())) {
      heap.pop();
      heap.push(c);
    }
  }
  std::vector<Neighbor> out(heap.size());
  for (size_t i = heap.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

}  // namespace favor
