#pragma once

// Nearest-neighbor geometry of Z^d for paths anchored at the origin. A path of
// length n is the sequence (x_1, ..., x_n); the origin is never part of it.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace polylab {

using Coord = std::int64_t;

class Site {
 public:
  Site() = default;
  explicit Site(std::vector<Coord> coords) : coords_(std::move(coords)) {}
  Site(std::initializer_list<Coord> coords) : coords_(coords) {}

  static Site origin(int d) { return Site(std::vector<Coord>(static_cast<std::size_t>(d), 0)); }

  int dim() const { return static_cast<int>(coords_.size()); }
  Coord operator[](std::size_t i) const { return coords_[i]; }
  Coord& operator[](std::size_t i) { return coords_[i]; }
  std::span<const Coord> coords() const { return coords_; }
  Coord l1_norm() const;

  // Lexicographic on coordinates.
  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;

  // "x" for d = 1, "x;y;..." otherwise.
  std::string to_string() const;

 private:
  std::vector<Coord> coords_;
};

std::ostream& operator<<(std::ostream& os, const Site& x);

Coord l1_distance(const Site& a, const Site& b);

// True when x can be occupied at step k: |x|_1 <= k and |x|_1 = k (mod 2).
bool is_reachable(const Site& x, int k);

// The 2d nearest neighbors of x in lexicographic order.
std::vector<Site> neighbors(const Site& x);

// Every site reachable at step k >= 1, each once, in lexicographic order.
std::vector<Site> reachable_sites(int d, int k);

class PolymerPath {
 public:
  PolymerPath() = default;
  PolymerPath(int d, std::vector<Site> sites);

  int dim() const { return d_; }
  int length() const { return static_cast<int>(sites_.size()); }
  // 1-based step index, matching x_1 .. x_n.
  const Site& at(int k) const { return sites_.at(static_cast<std::size_t>(k - 1)); }
  const std::vector<Site>& sites() const { return sites_; }

  // Throws ConfigError naming the first broken invariant.
  void validate() const;
  bool is_valid() const;

  // d*n integers: coordinate 1 of x_1..x_n, then coordinate 2, and so on.
  std::string to_csv_row() const;
  static PolymerPath from_csv_row(int d, const std::string& row);

  bool operator==(const PolymerPath&) const = default;

 private:
  int d_ = 1;
  std::vector<Site> sites_;
};

// |{k : p_k = q_k}|. Throws ConfigError on length or dimension mismatch.
int overlap(const PolymerPath& p, const PolymerPath& q);

// Packed (k, x_1, ..., x_d) key used for hashing and environment overrides.
struct PackedSite {
  std::vector<std::int64_t> words;

  PackedSite() = default;
  PackedSite(int k, std::span<const Coord> coords);
  bool operator==(const PackedSite&) const = default;
};

struct PackedSiteHash {
  std::size_t operator()(const PackedSite& key) const noexcept;
};

// Reachable sites for steps 0..n laid out as dense per-layer index ranges.
// Layer 0 holds only the origin. Neighbor enumeration visits sites in
// lexicographic order, which callers rely on for deterministic tie-breaking.
//
// d = 1: index i <-> x = 2i - k.
// d = 2: rotated coordinates u = x + y, v = x - y; both are = k (mod 2) with
//        |u|, |v| <= k, so layer k is a (k+1) x (k+1) grid.
// d >= 3: explicit site lists with a hash index.
class Cone {
 public:
  Cone(int d, int n);

  int dim() const { return d_; }
  int length() const { return n_; }
  std::size_t layer_size(int k) const;
  std::size_t total_size() const;

  Site site(int k, std::size_t i) const;
  void coords(int k, std::size_t i, std::span<Coord> out) const;
  std::optional<std::size_t> index(int k, const Site& x) const;

  // Calls f(j) for each neighbor of layer-k site i that lies in layer k-1.
  template <class F>
  void for_each_predecessor(int k, std::size_t i, F&& f) const;
  // Calls f(j) for each neighbor of layer-k site i in layer k+1.
  template <class F>
  void for_each_successor(int k, std::size_t i, F&& f) const;

 private:
  std::uint64_t pack(std::span<const Coord> c) const;
  void neighbor_indices(int k, std::size_t i, int target, std::vector<std::size_t>& out) const;

  int d_;
  int n_;
  // d >= 3 only.
  std::vector<std::vector<Coord>> layer_coords_;  // flattened per layer
  std::vector<std::unordered_map<std::uint64_t, std::size_t>> layer_index_;
  std::vector<std::vector<std::size_t>> pred_offsets_;  // CSR into pred_indices_
  std::vector<std::vector<std::size_t>> pred_indices_;
  std::vector<std::vector<std::size_t>> succ_offsets_;
  std::vector<std::vector<std::size_t>> succ_indices_;
};

// Per-step field over reachable sites; sites outside the cone read as 0.
class LayerField {
 public:
  LayerField() = default;
  LayerField(std::shared_ptr<const Cone> cone, int step, std::vector<double> values);

  int step() const { return step_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double at(const Site& x) const;
  double sum() const;
  const Cone& cone() const { return *cone_; }

 private:
  std::shared_ptr<const Cone> cone_;
  int step_ = 0;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------

template <class F>
void Cone::for_each_predecessor(int k, std::size_t i, F&& f) const {
  if (k <= 0) return;
  if (d_ == 1) {
    // x - 1 -> i - 1, x + 1 -> i, in a layer of size k.
    if (i >= 1) f(i - 1);
    if (i + 1 <= static_cast<std::size_t>(k)) f(i);
    return;
  }
  if (d_ == 2) {
    const std::size_t side = static_cast<std::size_t>(k) + 1;
    const std::size_t a = i / side, b = i % side;
    const std::size_t prev = side - 1;
    // (a-1,b-1) = x-1, (a-1,b) = y-1, (a,b-1) = y+1, (a,b) = x+1.
    if (a >= 1 && b >= 1) f((a - 1) * prev + (b - 1));
    if (a >= 1 && b < prev) f((a - 1) * prev + b);
    if (a < prev && b >= 1) f(a * prev + (b - 1));
    if (a < prev && b < prev) f(a * prev + b);
    return;
  }
  const auto& off = pred_offsets_[static_cast<std::size_t>(k)];
  const auto& idx = pred_indices_[static_cast<std::size_t>(k)];
  for (std::size_t p = off[i]; p < off[i + 1]; ++p) f(idx[p]);
}

template <class F>
void Cone::for_each_successor(int k, std::size_t i, F&& f) const {
  if (k >= n_) return;
  if (d_ == 1) {
    f(i);
    f(i + 1);
    return;
  }
  if (d_ == 2) {
    const std::size_t side = static_cast<std::size_t>(k) + 1;
    const std::size_t a = i / side, b = i % side;
    const std::size_t next = side + 1;
    // (a,b) = x-1, (a,b+1) = y-1, (a+1,b) = y+1, (a+1,b+1) = x+1.
    f(a * next + b);
    f(a * next + b + 1);
    f((a + 1) * next + b);
    f((a + 1) * next + b + 1);
    return;
  }
  const auto& off = succ_offsets_[static_cast<std::size_t>(k)];
  const auto& idx = succ_indices_[static_cast<std::size_t>(k)];
  for (std::size_t p = off[i]; p < off[i + 1]; ++p) f(idx[p]);
}

}  // namespace polylab
