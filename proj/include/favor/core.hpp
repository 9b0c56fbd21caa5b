#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace favor {

// Thrown for malformed arguments or parameters. CLI maps this to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown for bad input data or corrupt files. CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<float>;

struct Neighbor {
  uint64_t id = 0;
  double dist = 0.0;
};

// Ordering used everywhere: by distance, ties broken by ascending id.
inline bool nearer(const Neighbor& a, const Neighbor& b) {
  if (a.dist != b.dist) return a.dist < b.dist;
  return a.id < b.id;
}

inline bool operator==(const Neighbor& a, const Neighbor& b) {
  return a.id == b.id && a.dist == b.dist;
}

struct AttributeSchema {
  uint32_t n_bool = 0;
  uint32_t n_int = 0;
  uint32_t n_float = 0;

  bool operator==(const AttributeSchema&) const = default;
};

// Column-major attribute storage: one flat array per attribute type,
// record i occupies the i-th slot of each column group.
struct AttributeTable {
  AttributeSchema schema;
  uint64_t count = 0;
  std::vector<uint8_t> bools;   // count * n_bool
  std::vector<int32_t> ints;    // count * n_int
  std::vector<float> floats;    // count * n_float

  bool bool_at(uint64_t rec, uint32_t attr) const {
    return bools[rec * schema.n_bool + attr] != 0;
  }
  int32_t int_at(uint64_t rec, uint32_t attr) const {
    return ints[rec * schema.n_int + attr];
  }
  float float_at(uint64_t rec, uint32_t attr) const {
    return floats[rec * schema.n_float + attr];
  }
};

struct VectorDataset {
  uint32_t dim = 0;
  std::vector<float> data;  // count * dim, row-major
  AttributeTable attrs;     // optional; when present attrs.count == count()

  uint64_t count() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> vec(uint64_t i) const {
    return {data.data() + i * dim, dim};
  }
};

// True Euclidean distance (with the square root). Throws UsageError on
// dimension mismatch.
double euclidean(std::span<const float> a, std::span<const float> b);

// The k nearest candidates, sorted ascending by (dist, id). k = 0 or an
// empty candidate list yields an empty result; k > size returns all sorted.
std::vector<Neighbor> top_k_of(const std::vector<Neighbor>& candidates,
                               size_t k);

}  // namespace favor
