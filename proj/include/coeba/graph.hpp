#pragma once

// Graph representation, canonical text formats, edge splitting, negative
// sampling and the symmetric-normalized propagation operator.

#include "coeba/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>

namespace coeba {

/// Undirected simple graph with a node feature matrix.
///
/// Edges are kept sorted and unique in canonical (u < v) form; adjacency
/// lists are derived on construction and kept sorted by neighbor id.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph, dropping self-loops and duplicate pairs in either
  /// direction. Throws RangeError for ids outside [0, n_nodes) and
  /// ShapeError when the feature row count differs from n_nodes.
  Graph(NodeId n_nodes, const EdgeList& edges, SparseMatrix features)
      : n_nodes_(n_nodes), features_(std::move(features)) {
    if (n_nodes < 0) throw RangeError("negative node count");
    if (features_.rows() != n_nodes) {
      throw ShapeError("feature matrix has " + std::to_string(features_.rows()) +
                       " rows, expected " + std::to_string(n_nodes));
    }
    edges_.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.u < 0 || e.v >= n_nodes) {
        throw RangeError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                         ") references a node outside [0," + std::to_string(n_nodes) + ")");
      }
      if (e.u != e.v) edges_.push_back(e);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    build_adjacency();
  }

  Graph(NodeId n_nodes, const EdgeList& edges, const Matrix& dense_features)
      : Graph(n_nodes, edges, SparseMatrix(dense_features.sparseView())) {}

  /// Graph without features (a zero-width feature matrix).
  static Graph structure_only(NodeId n_nodes, const EdgeList& edges) {
    return Graph(n_nodes, edges, SparseMatrix(n_nodes, 0));
  }

  NodeId n_nodes() const { return n_nodes_; }
  std::size_t n_edges() const { return edges_.size(); }
  Index feature_dim() const { return features_.cols(); }
  const EdgeList& edges() const { return edges_; }
  const SparseMatrix& features() const { return features_; }
  const std::vector<NodeId>& neighbors(NodeId v) const { return adjacency_[v]; }
  std::size_t degree(NodeId v) const { return adjacency_[v].size(); }

  bool has_edge(NodeId a, NodeId b) const {
    if (a == b) return false;
    const auto& nb = adjacency_[a];
    return std::binary_search(nb.begin(), nb.end(), b);
  }

  /// Same nodes and features, different edge set.
  Graph with_edges(const EdgeList& edges) const { return Graph(n_nodes_, edges, features_); }

  Graph with_features(SparseMatrix features) const {
    return Graph(n_nodes_, edges_, std::move(features));
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    if (a.n_nodes_ != b.n_nodes_ || a.edges_ != b.edges_) return false;
    if (a.features_.rows() != b.features_.rows() || a.features_.cols() != b.features_.cols()) {
      return false;
    }
    return Matrix(a.features_) == Matrix(b.features_);
  }

 private:
  void build_adjacency() {
    adjacency_.assign(static_cast<std::size_t>(n_nodes_), {});
    for (const Edge& e : edges_) {
      adjacency_[e.u].push_back(e.v);
      adjacency_[e.v].push_back(e.u);
    }
    for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
  }

  NodeId n_nodes_ = 0;
  EdgeList edges_;
  SparseMatrix features_;
  std::vector<std::vector<NodeId>> adjacency_;
};

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_blank_or_comment(std::string_view line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string_view::npos || line[pos] == '#';
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::optional<std::int64_t> parse_nonneg_int(std::string_view tok) {
  if (tok.empty() || tok.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

inline std::optional<Real> parse_real(std::string_view tok) {
  const std::string s(tok);
  char* end = nullptr;
  const Real v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Shortest text that round-trips the double exactly.
inline std::string format_real(Real x) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

}  // namespace detail

/// Reads an edge list: one pair of non-negative ids per line, `#` comments.
inline EdgeList read_edge_list(const std::string& path) {
  auto in = detail::open_input(path);
  EdgeList edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto toks = detail::split_ws(line);
    if (toks.size() != 2) throw ParseError(path, lineno, "expected two node ids");
    const auto a = detail::parse_nonneg_int(toks[0]);
    const auto b = detail::parse_nonneg_int(toks[1]);
    if (!a || !b) throw ParseError(path, lineno, "node ids must be non-negative integers");
    edges.emplace_back(*a, *b);
  }
  return edges;
}

/// Reads a feature file: header `N D_f`, then N rows of D_f reals.
/// `#` comment lines are skipped anywhere.
inline SparseMatrix read_features(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::pair<std::int64_t, std::int64_t>> shape;
  std::vector<Triplet> triplets;
  std::int64_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto toks = detail::split_ws(line);
    if (!shape) {
      if (toks.size() != 2) throw ParseError(path, lineno, "expected header 'N D_f'");
      const auto n = detail::parse_nonneg_int(toks[0]);
      const auto d = detail::parse_nonneg_int(toks[1]);
      if (!n || !d) throw ParseError(path, lineno, "header values must be non-negative integers");
      shape = {*n, *d};
      continue;
    }
    if (row >= shape->first) {
      throw ShapeError(path + ": more than " + std::to_string(shape->first) + " feature rows");
    }
    if (static_cast<std::int64_t>(toks.size()) != shape->second) {
      throw ShapeError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(shape->second) + " values, got " +
                       std::to_string(toks.size()));
    }
    for (std::size_t c = 0; c < toks.size(); ++c) {
      const auto v = detail::parse_real(toks[c]);
      if (!v) throw ParseError(path, lineno, "malformed real '" + std::string(toks[c]) + "'");
      if (*v != 0.0) triplets.emplace_back(row, static_cast<Index>(c), *v);
    }
    ++row;
  }
  if (!shape) throw ParseError(path, lineno, "missing header");
  if (row != shape->first) {
    throw ShapeError(path + ": header declares " + std::to_string(shape->first) +
                     " rows, found " + std::to_string(row));
  }
  SparseMatrix x(shape->first, shape->second);
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

/// Loads a graph from the canonical edge-list and feature files. Node count
/// comes from the feature file, so isolated nodes are retained.
inline Graph load_graph(const std::string& edge_path, const std::string& feature_path) {
  SparseMatrix x = read_features(feature_path);
  const EdgeList edges = read_edge_list(edge_path);
  const NodeId n = x.rows();
  for (const Edge& e : edges) {
    if (e.v >= n) {
      throw RangeError(edge_path + ": node id " + std::to_string(e.v) + " >= N=" +
                       std::to_string(n));
    }
  }
  return Graph(n, edges, std::move(x));
}

inline void write_edge_list(const std::string& path, const EdgeList& edges,
                            const std::string& header_comment = {}) {
  auto out = detail::open_output(path);
  if (!header_comment.empty()) {
    std::istringstream hs(header_comment);
    std::string l;
    while (std::getline(hs, l)) out << "# " << l << '\n';
  }
  for (const Edge& e : edges) out << e.u << ' ' << e.v << '\n';
}

inline void write_features(const std::string& path, const SparseMatrix& x,
                           const std::string& header_comment = {}) {
  auto out = detail::open_output(path);
  if (!header_comment.empty()) {
    std::istringstream hs(header_comment);
    std::string l;
    while (std::getline(hs, l)) out << "# " << l << '\n';
  }
  out << x.rows() << ' ' << x.cols() << '\n';
  std::string line;
  for (Index r = 0; r < x.rows(); ++r) {
    line.clear();
    Index next_col = 0;
    auto put = [&](Index col, Real v) {
      for (; next_col < col; ++next_col) line += next_col == 0 ? "0" : " 0";
      if (col > 0) line += ' ';
      line += detail::format_real(v);
      next_col = col + 1;
    };
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) put(it.col(), it.value());
    for (; next_col < x.cols(); ++next_col) line += next_col == 0 ? "0" : " 0";
    out << line << '\n';
  }
}

inline void save_graph(const Graph& g, const std::string& edge_path,
                       const std::string& feature_path) {
  write_edge_list(edge_path, g.edges());
  write_features(feature_path, g.features());
}

// ---------------------------------------------------------------------------
// Degrees
// ---------------------------------------------------------------------------

struct DegreeStats {
  std::vector<std::int64_t> degree;
  std::int64_t min = 0;
};

inline DegreeStats degrees(const Graph& g) {
  DegreeStats s;
  s.degree.resize(static_cast<std::size_t>(g.n_nodes()));
  for (NodeId v = 0; v < g.n_nodes(); ++v) s.degree[v] = static_cast<std::int64_t>(g.degree(v));
  s.min = s.degree.empty() ? 0 : *std::min_element(s.degree.begin(), s.degree.end());
  return s;
}

// ---------------------------------------------------------------------------
// Propagation operator
// ---------------------------------------------------------------------------

/// Sparse symmetric D^-1/2 (A + I) D^-1/2, degrees taken on A + I.
struct PropagationOperator {
  SparseMatrix matrix;
};

inline PropagationOperator normalized_adjacency(const Graph& g) {
  const NodeId n = g.n_nodes();
  auto d = [&g](NodeId v) { return static_cast<Real>(g.degree(v) + 1); };
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n) + 2 * g.n_edges());
  for (NodeId v = 0; v < n; ++v) t.emplace_back(v, v, 1.0 / d(v));
  for (const Edge& e : g.edges()) {
    const Real w = 1.0 / std::sqrt(d(e.u) * d(e.v));
    t.emplace_back(e.u, e.v, w);
    t.emplace_back(e.v, e.u, w);
  }
  PropagationOperator op;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(t.begin(), t.end());
  return op;
}

// ---------------------------------------------------------------------------
// Negative sampling and splits
// ---------------------------------------------------------------------------

using EdgeKeySet = std::unordered_set<std::uint64_t>;

inline EdgeKeySet edge_key_set(const EdgeList& edges) {
  EdgeKeySet s;
  s.reserve(edges.size() * 2);
  for (const Edge& e : edges) s.insert(pair_key(e.u, e.v));
  return s;
}

/// Draws `count` distinct node pairs that are neither self-loops, edges of
/// `g`, nor members of `exclude`. Uniform over the admissible pairs.
inline EdgeList sample_negatives(const Graph& g, std::size_t count, std::uint64_t seed,
                                 const EdgeList& exclude = {}) {
  if (count == 0) return {};
  const std::uint64_t n = static_cast<std::uint64_t>(g.n_nodes());
  const std::uint64_t total_pairs = n < 2 ? 0 : n * (n - 1) / 2;

  EdgeKeySet forbidden = edge_key_set(g.edges());
  for (const Edge& e : exclude) {
    if (e.u != e.v) forbidden.insert(pair_key(e.u, e.v));
  }
  const std::uint64_t available = total_pairs - std::min<std::uint64_t>(forbidden.size(), total_pairs);
  if (available < count) {
    throw SamplingError("requested " + std::to_string(count) + " negatives but only " +
                        std::to_string(available) + " non-edges are available");
  }

  Rng rng(derive_seed(seed, 0x6e6567));
  EdgeList out;
  out.reserve(count);

  // Dense regime: enumerate and partially shuffle, rejection would stall.
  if (count * 4 > available) {
    EdgeList pool;
    pool.reserve(available);
    for (NodeId a = 0; a < g.n_nodes(); ++a) {
      for (NodeId b = a + 1; b < g.n_nodes(); ++b) {
        if (!forbidden.count(pair_key(a, b))) pool.emplace_back(a, b);
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  EdgeKeySet taken;
  taken.reserve(count * 2);
  while (out.size() < count) {
    const auto a = static_cast<NodeId>(uniform_index(rng, n));
    const auto b = static_cast<NodeId>(uniform_index(rng, n));
    if (a == b) continue;
    const auto key = pair_key(a, b);
    if (forbidden.count(key) || !taken.insert(key).second) continue;
    out.emplace_back(a, b);
  }
  return out;
}

struct SplitRatios {
  Real train = 0.85;
  Real valid = 0.05;
  Real test = 0.10;
};

struct EdgeSplit {
  EdgeList train_pos;
  EdgeList valid_pos;
  EdgeList test_pos;
  EdgeList valid_neg;
  EdgeList test_neg;
  std::uint64_t seed = 0;

  friend bool operator==(const EdgeSplit&, const EdgeSplit&) = default;
};

/// Random partition of the edge set into train/valid/test positives with one
/// fixed set of negatives for validation and test.
inline EdgeSplit split_edges(const Graph& g, const SplitRatios& ratios, std::uint64_t seed) {
  const Real sum = ratios.train + ratios.valid + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  const std::size_t m = g.n_edges();
  if (m < 3) throw SplitError("need at least 3 edges to split, graph has " + std::to_string(m));

  const auto floor_count = [m](Real r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<Real>(m) + 1e-9));
  };
  const std::size_t n_valid = floor_count(ratios.valid);
  const std::size_t n_test = floor_count(ratios.test);
  if (n_valid == 0 || n_test == 0 || n_valid + n_test >= m) {
    throw SplitError("graph with " + std::to_string(m) + " edges leaves an empty split (" +
                     std::to_string(m - std::min(m, n_valid + n_test)) + "/" +
                     std::to_string(n_valid) + "/" + std::to_string(n_test) + ")");
  }

  EdgeList shuffled = g.edges();
  Rng rng(derive_seed(seed, 0x73706c6974));
  shuffle(shuffled, rng);

  EdgeSplit s;
  s.seed = seed;
  s.valid_pos.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid));
  s.test_pos.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid),
                    shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid + n_test));
  s.train_pos.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid + n_test),
                     shuffled.end());
  std::sort(s.train_pos.begin(), s.train_pos.end());
  std::sort(s.valid_pos.begin(), s.valid_pos.end());
  std::sort(s.test_pos.begin(), s.test_pos.end());

  s.valid_neg = sample_negatives(g, n_valid, derive_seed(seed, 1));
  s.test_neg = sample_negatives(g, n_test, derive_seed(seed, 2), s.valid_neg);
  return s;
}

// ---------------------------------------------------------------------------
// Split manifest
// ---------------------------------------------------------------------------

inline void write_split_manifest(const std::string& path, const EdgeSplit& s) {
  auto out = detail::open_output(path);
  out << "# seed " << s.seed << '\n';
  const std::array<std::pair<const char*, const EdgeList*>, 5> sections{{
      {"train_pos", &s.train_pos},
      {"valid_pos", &s.valid_pos},
      {"test_pos", &s.test_pos},
      {"valid_neg", &s.valid_neg},
      {"test_neg", &s.test_neg},
  }};
  for (const auto& [name, edges] : sections) {
    out << '[' << name << "]\n";
    for (const Edge& e : *edges) out << e.u << ' ' << e.v << '\n';
  }
}

inline EdgeSplit read_split_manifest(const std::string& path) {
  auto in = detail::open_input(path);
  EdgeSplit s;
  EdgeList* current = nullptr;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "#") {
      if (toks.size() == 3 && toks[1] == "seed") {
        if (auto v = detail::parse_nonneg_int(toks[2])) s.seed = static_cast<std::uint64_t>(*v);
      }
      continue;
    }
    if (toks[0].front() == '#') continue;
    if (toks[0].front() == '[') {
      const std::string_view name = toks[0];
      if (name == "[train_pos]") current = &s.train_pos;
      else if (name == "[valid_pos]") current = &s.valid_pos;
      else if (name == "[test_pos]") current = &s.test_pos;
      else if (name == "[valid_neg]") current = &s.valid_neg;
      else if (name == "[test_neg]") current = &s.test_neg;
      else throw ParseError(path, lineno, "unknown section " + std::string(name));
      continue;
    }
    if (!current) throw ParseError(path, lineno, "edge outside of a section");
    if (toks.size() != 2) throw ParseError(path, lineno, "expected two node ids");
    const auto a = detail::parse_nonneg_int(toks[0]);
    const auto b = detail::parse_nonneg_int(toks[1]);
    if (!a || !b) throw ParseError(path, lineno, "node ids must be non-negative integers");
    current->emplace_back(*a, *b);
  }
  return s;
}

/// FNV-1a over the manifest's canonical content; used to prove two runs saw
/// identical splits.
inline std::uint64_t split_hash(const EdgeSplit& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const EdgeList* l : {&s.train_pos, &s.valid_pos, &s.test_pos, &s.valid_neg, &s.test_neg}) {
    mix(l->size());
    for (const Edge& e : *l) mix(pair_key(e.u, e.v));
  }
  return h;
}

}  // namespace coeba
