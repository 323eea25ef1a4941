#include "polylab/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <sstream>

#include "polylab/error.hpp"
#include "polylab/rng.hpp"

namespace polylab {

Coord Site::l1_norm() const {
  Coord s = 0;
  for (Coord c : coords_) s += c < 0 ? -c : c;
  return s;
}

std::string Site::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(coords_[i]);
  }
  return out;
}

std::ostream& operator<<(std::ostream& os, const Site& x) { return os << '(' << x.to_string() << ')'; }

Coord l1_distance(const Site& a, const Site& b) {
  if (a.dim() != b.dim()) throw ConfigError("site dimension mismatch");
  Coord s = 0;
  for (int i = 0; i < a.dim(); ++i) s += std::llabs(a[i] - b[i]);
  return s;
}

bool is_reachable(const Site& x, int k) {
  const Coord r = x.l1_norm();
  return k >= 0 && r <= k && (r - k) % 2 == 0;
}

std::vector<Site> neighbors(const Site& x) {
  const int d = x.dim();
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(2 * d));
  // x - e_1 < x - e_2 < ... < x - e_d < x + e_d < ... < x + e_1
  for (int i = 0; i < d; ++i) {
    Site y = x;
    y[i] -= 1;
    out.push_back(std::move(y));
  }
  for (int i = d - 1; i >= 0; --i) {
    Site y = x;
    y[i] += 1;
    out.push_back(std::move(y));
  }
  return out;
}

namespace {

void enumerate_ball(int d, int k, int dim, Coord budget, std::vector<Coord>& cur,
                    std::vector<Site>& out) {
  if (dim == d) {
    const Coord r = static_cast<Coord>(k) - budget;
    if ((k - r) % 2 == 0) out.emplace_back(cur);
    return;
  }
  for (Coord c = -budget; c <= budget; ++c) {
    cur[static_cast<std::size_t>(dim)] = c;
    enumerate_ball(d, k, dim + 1, budget - std::llabs(c), cur, out);
  }
}

}  // namespace

std::vector<Site> reachable_sites(int d, int k) {
  if (d < 1) throw ConfigError("dimension must be >= 1");
  if (k < 0) throw ConfigError("step must be >= 0");
  std::vector<Site> out;
  std::vector<Coord> cur(static_cast<std::size_t>(d), 0);
  enumerate_ball(d, k, 0, k, cur, out);
  return out;
}

PolymerPath::PolymerPath(int d, std::vector<Site> sites) : d_(d), sites_(std::move(sites)) {
  if (d < 1) throw ConfigError("dimension must be >= 1");
}

void PolymerPath::validate() const {
  Site prev = Site::origin(d_);
  for (int k = 1; k <= length(); ++k) {
    const Site& x = at(k);
    if (x.dim() != d_) throw ConfigError("path site " + std::to_string(k) + " has wrong dimension");
    if (l1_distance(prev, x) != 1) {
      throw ConfigError("path step " + std::to_string(k) + " is not a nearest-neighbor move");
    }
    if (!is_reachable(x, k)) throw ConfigError("path site " + std::to_string(k) + " is unreachable");
    prev = x;
  }
}

bool PolymerPath::is_valid() const {
  try {
    validate();
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

std::string PolymerPath::to_csv_row() const {
  std::string out;
  bool first = true;
  for (int i = 0; i < d_; ++i) {
    for (const Site& x : sites_) {
      if (!first) out += ',';
      first = false;
      out += std::to_string(x[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

PolymerPath PolymerPath::from_csv_row(int d, const std::string& row) {
  std::vector<Coord> values;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(std::stoll(cell));
    } catch (const std::exception&) {
      throw ConfigError("path row: not an integer: '" + cell + "'");
    }
  }
  if (d < 1 || values.size() % static_cast<std::size_t>(d) != 0) {
    throw ConfigError("path row length is not a multiple of d");
  }
  const std::size_t n = values.size() / static_cast<std::size_t>(d);
  std::vector<Site> sites(n, Site::origin(d));
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
    for (std::size_t k = 0; k < n; ++k) sites[k][i] = values[i * n + k];
  }
  return PolymerPath(d, std::move(sites));
}

int overlap(const PolymerPath& p, const PolymerPath& q) {
  if (p.length() != q.length()) throw ConfigError("overlap needs paths of equal length");
  if (p.dim() != q.dim()) throw ConfigError("overlap needs paths of equal dimension");
  int count = 0;
  for (int k = 1; k <= p.length(); ++k) count += p.at(k) == q.at(k) ? 1 : 0;
  return count;
}

PackedSite::PackedSite(int k, std::span<const Coord> coords) {
  words.reserve(coords.size() + 1);
  words.push_back(k);
  words.insert(words.end(), coords.begin(), coords.end());
}

std::size_t PackedSiteHash::operator()(const PackedSite& key) const noexcept {
  std::uint64_t h = kGolden;
  for (std::int64_t w : key.words) h = splitmix64_mix(h ^ (static_cast<std::uint64_t>(w) * kGolden));
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------

Cone::Cone(int d, int n) : d_(d), n_(n) {
  if (d < 1) throw ConfigError("dimension must be >= 1");
  if (n < 0) throw ConfigError("path length must be >= 0");
  if (d <= 2) return;
  // Mixed-radix packing needs (2n+1)^d < 2^63.
  long double span = 1.0L;
  for (int i = 0; i < d; ++i) span *= (2.0L * n + 1.0L);
  if (span > 9.0e18L) throw ConfigError("cone too large for d >= 3 indexing");

  layer_coords_.resize(static_cast<std::size_t>(n) + 1);
  layer_index_.resize(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const auto sites = reachable_sites(d, k);
    auto& flat = layer_coords_[static_cast<std::size_t>(k)];
    auto& index = layer_index_[static_cast<std::size_t>(k)];
    flat.reserve(sites.size() * static_cast<std::size_t>(d));
    index.reserve(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
      flat.insert(flat.end(), sites[i].coords().begin(), sites[i].coords().end());
      index.emplace(pack(sites[i].coords()), i);
    }
  }
  pred_offsets_.resize(static_cast<std::size_t>(n) + 1);
  pred_indices_.resize(static_cast<std::size_t>(n) + 1);
  succ_offsets_.resize(static_cast<std::size_t>(n) + 1);
  succ_indices_.resize(static_cast<std::size_t>(n) + 1);
  std::vector<std::size_t> buf;
  for (int k = 0; k <= n; ++k) {
    const std::size_t size = layer_size(k);
    auto& po = pred_offsets_[static_cast<std::size_t>(k)];
    auto& pi = pred_indices_[static_cast<std::size_t>(k)];
    auto& so = succ_offsets_[static_cast<std::size_t>(k)];
    auto& si = succ_indices_[static_cast<std::size_t>(k)];
    po.assign(1, 0);
    so.assign(1, 0);
    for (std::size_t i = 0; i < size; ++i) {
      if (k > 0) {
        neighbor_indices(k, i, k - 1, buf);
        pi.insert(pi.end(), buf.begin(), buf.end());
      }
      po.push_back(pi.size());
      if (k < n) {
        neighbor_indices(k, i, k + 1, buf);
        si.insert(si.end(), buf.begin(), buf.end());
      }
      so.push_back(si.size());
    }
  }
}

std::uint64_t Cone::pack(std::span<const Coord> c) const {
  std::uint64_t key = 0;
  const std::uint64_t radix = 2 * static_cast<std::uint64_t>(n_) + 1;
  for (Coord v : c) key = key * radix + static_cast<std::uint64_t>(v + n_);
  return key;
}

void Cone::neighbor_indices(int k, std::size_t i, int target, std::vector<std::size_t>& out) const {
  out.clear();
  for (const Site& y : neighbors(site(k, i))) {
    if (auto j = index(target, y)) out.push_back(*j);
  }
}

std::size_t Cone::layer_size(int k) const {
  if (k < 0 || k > n_) throw ConfigError("layer " + std::to_string(k) + " out of range");
  if (d_ == 1) return static_cast<std::size_t>(k) + 1;
  if (d_ == 2) return (static_cast<std::size_t>(k) + 1) * (static_cast<std::size_t>(k) + 1);
  return layer_coords_[static_cast<std::size_t>(k)].size() / static_cast<std::size_t>(d_);
}

std::size_t Cone::total_size() const {
  std::size_t s = 0;
  for (int k = 0; k <= n_; ++k) s += layer_size(k);
  return s;
}

void Cone::coords(int k, std::size_t i, std::span<Coord> out) const {
  if (d_ == 1) {
    out[0] = 2 * static_cast<Coord>(i) - k;
    return;
  }
  if (d_ == 2) {
    const std::size_t side = static_cast<std::size_t>(k) + 1;
    const Coord u = 2 * static_cast<Coord>(i / side) - k;
    const Coord v = 2 * static_cast<Coord>(i % side) - k;
    out[0] = (u + v) / 2;
    out[1] = (u - v) / 2;
    return;
  }
  const auto& flat = layer_coords_[static_cast<std::size_t>(k)];
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(d_)), d_, out.begin());
}

Site Cone::site(int k, std::size_t i) const {
  std::vector<Coord> c(static_cast<std::size_t>(d_));
  coords(k, i, c);
  return Site(std::move(c));
}

std::optional<std::size_t> Cone::index(int k, const Site& x) const {
  if (k < 0 || k > n_ || x.dim() != d_ || !is_reachable(x, k)) return std::nullopt;
  if (d_ == 1) return static_cast<std::size_t>((x[0] + k) / 2);
  if (d_ == 2) {
    const Coord u = x[0] + x[1];
    const Coord v = x[0] - x[1];
    const std::size_t side = static_cast<std::size_t>(k) + 1;
    return static_cast<std::size_t>((u + k) / 2) * side + static_cast<std::size_t>((v + k) / 2);
  }
  const auto& index = layer_index_[static_cast<std::size_t>(k)];
  auto it = index.find(pack(x.coords()));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

LayerField::LayerField(std::shared_ptr<const Cone> cone, int step, std::vector<double> values)
    : cone_(std::move(cone)), step_(step), values_(std::move(values)) {
  if (values_.size() != cone_->layer_size(step)) throw ConfigError("layer field size mismatch");
}

double LayerField::at(const Site& x) const {
  auto i = cone_->index(step_, x);
  return i ? values_[*i] : 0.0;
}

double LayerField::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

}  // namespace polylab
