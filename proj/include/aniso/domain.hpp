#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso {

/// Axis-aligned open box with exact corners.
struct RationalBox {
  std::array<Rational, kMaxDim> lo{}, hi{};
};

namespace detail {

/// sign(num / 2^level - r), exact.
inline int compare_dyadic(long long num, long long level, const Rational& r) {
  __int128 lhs = static_cast<__int128>(num) * r.denominator();
  __int128 rhs = static_cast<__int128>(r.numerator()) << level;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

}  // namespace detail

/// Bounded domain D = int(closure(union of boxes)).
/// Internally the union is split along all box faces into elementary cells, each either
/// contained in D or disjoint from it; all containment tests reduce to those cells.
class DomainSpec {
 public:
  DomainSpec(int d, std::vector<RationalBox> boxes) : d_(d), boxes_(std::move(boxes)) {
    check_dim(d);
    if (boxes_.empty()) throw PreconditionError("domain needs at least one box");
    for (const auto& b : boxes_)
      for (int j = 0; j < d_; ++j)
        if (!(b.lo[j] < b.hi[j])) throw PreconditionError("box lower corner must be below upper corner");
    build();
  }

  static DomainSpec from_boxes(const std::vector<Box>& boxes) {
    if (boxes.empty()) throw PreconditionError("domain needs at least one box");
    std::vector<RationalBox> rb;
    for (const auto& b : boxes) {
      RationalBox r;
      for (int j = 0; j < b.dim(); ++j) {
        r.lo[j] = exact_rational(b.lo[j]);
        r.hi[j] = exact_rational(b.hi[j]);
      }
      rb.push_back(r);
    }
    return DomainSpec(boxes.front().dim(), std::move(rb));
  }

  static DomainSpec unit_cube(int d) {
    RationalBox b;
    for (int j = 0; j < d; ++j) {
      b.lo[j] = 0;
      b.hi[j] = 1;
    }
    return DomainSpec(d, {b});
  }

  /// One box per line: d lower coordinates then d upper coordinates; '#' starts a comment.
  static DomainSpec parse(std::istream& in) {
    std::vector<RationalBox> boxes;
    int d = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ls(line);
      std::vector<std::string> tok;
      for (std::string t; ls >> t;) tok.push_back(t);
      if (tok.empty()) continue;
      if (tok.size() % 2 != 0 || tok.size() > 2 * kMaxDim)
        throw ParseError("expected 2d numbers (d lower, d upper corners), got " + std::to_string(tok.size()),
                         lineno);
      int dd = static_cast<int>(tok.size() / 2);
      if (d == 0) d = dd;
      if (dd != d) throw ParseError("box dimension " + std::to_string(dd) + " differs from " + std::to_string(d), lineno);
      RationalBox b;
      for (int j = 0; j < d; ++j) {
        try {
          b.lo[j] = parse_rational(tok[j]);
          b.hi[j] = parse_rational(tok[d + j]);
        } catch (const ParseError& e) {
          throw ParseError(e.what(), lineno);
        }
        if (!(b.lo[j] < b.hi[j])) throw ParseError("empty box: lower corner not below upper corner", lineno);
      }
      boxes.push_back(b);
    }
    if (boxes.empty()) throw ParseError("domain file contains no boxes", 0);
    return DomainSpec(d, std::move(boxes));
  }

  static DomainSpec parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static DomainSpec load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open domain file '" + path + "'", 0);
    return parse(in);
  }

  int dim() const noexcept { return d_; }
  const std::vector<RationalBox>& boxes() const noexcept { return boxes_; }

  Box bounding_box() const {
    Point lo(d_), hi(d_);
    for (int j = 0; j < d_; ++j) {
      lo[j] = to_double(breaks_[j].front());
      hi[j] = to_double(breaks_[j].back());
    }
    return Box(lo, hi);
  }
  const Rational& lower_bound(int j) const { return breaks_[j].front(); }
  const Rational& upper_bound(int j) const { return breaks_[j].back(); }

  double diameter() const {
    Box b = bounding_box();
    double s = 0;
    for (int j = 0; j < d_; ++j) s += b.width(j) * b.width(j);
    return std::sqrt(s);
  }

  /// Image x0 + delta * D.
  DomainSpec transformed(const ScaleMap& map) const {
    std::vector<RationalBox> out;
    for (const auto& b : boxes_) {
      RationalBox r;
      for (int j = 0; j < d_; ++j) {
        r.lo[j] = map.exact_offset(j) + map.exact_delta(j) * b.lo[j];
        r.hi[j] = map.exact_offset(j) + map.exact_delta(j) * b.hi[j];
      }
      out.push_back(r);
    }
    return DomainSpec(d_, std::move(out));
  }

  /// Point membership in D (corner comparisons in double precision).
  bool contains(const Point& x) const {
    std::array<std::array<int, 2>, kMaxDim> range{};
    for (int j = 0; j < d_; ++j) {
      const auto& c = dbreaks_[j];
      if (!(x[j] > c.front() && x[j] < c.back())) return false;
      auto it = std::upper_bound(c.begin(), c.end(), x[j]);
      int i = static_cast<int>(it - c.begin()) - 1;  // c[i] <= x < c[i+1]
      range[j] = {x[j] == c[i] ? i - 1 : i, i};
    }
    return all_inside(range);
  }

  /// Is the open (closed = false) or closed (closed = true) dyadic box
  /// 2^{-level}(lo, hi) contained in D?
  bool covers(std::span<const long long> lo, std::span<const long long> hi, const LevelVector& level,
              bool closed) const {
    std::array<std::array<int, 2>, kMaxDim> range{};
    for (int j = 0; j < d_; ++j) {
      const auto& c = breaks_[j];
      const long long k = level[j];
      int a_vs_first = detail::compare_dyadic(lo[j], k, c.front());
      int b_vs_last = detail::compare_dyadic(hi[j], k, c.back());
      if (closed ? (a_vs_first <= 0 || b_vs_last >= 0) : (a_vs_first < 0 || b_vs_last > 0)) return false;
      const int M = static_cast<int>(c.size()) - 1;
      int first = 0, last = M - 1;
      // first elementary interval whose (closure) meets the query from the left
      while (first < M && (closed ? detail::compare_dyadic(lo[j], k, c[first + 1]) > 0
                                  : detail::compare_dyadic(lo[j], k, c[first + 1]) >= 0))
        ++first;
      while (last >= 0 && (closed ? detail::compare_dyadic(hi[j], k, c[last]) < 0
                                  : detail::compare_dyadic(hi[j], k, c[last]) <= 0))
        --last;
      if (first > last) return false;
      range[j] = {first, last};
    }
    return all_inside(range);
  }

  bool cell_inside(const LevelVector& kappa, const SignedIndex& nu, bool closed) const {
    std::array<long long, kMaxDim> lo{}, hi{};
    for (int j = 0; j < d_; ++j) {
      lo[j] = nu[j];
      hi[j] = nu[j] + 1;
    }
    return covers({lo.data(), std::size_t(d_)}, {hi.data(), std::size_t(d_)}, kappa, closed);
  }

  /// Does the open dyadic box 2^{-level}(lo, hi) (or its closure) meet D?
  bool meets(std::span<const long long> lo, std::span<const long long> hi, const LevelVector& level) const {
    for (const auto& b : boxes_) {
      bool hit = true;
      for (int j = 0; j < d_ && hit; ++j)
        hit = detail::compare_dyadic(lo[j], level[j], b.hi[j]) < 0 &&
              detail::compare_dyadic(hi[j], level[j], b.lo[j]) > 0;
      if (hit) return true;
    }
    return false;
  }

  bool cell_meets(const LevelVector& kappa, const SignedIndex& nu) const {
    std::array<long long, kMaxDim> lo{}, hi{};
    for (int j = 0; j < d_; ++j) {
      lo[j] = nu[j];
      hi[j] = nu[j] + 1;
    }
    return meets({lo.data(), std::size_t(d_)}, {hi.data(), std::size_t(d_)}, kappa);
  }

  bool blend_support_meets(const LevelVector& kappa, const SignedIndex& nu, const MultiIndex& m) const {
    std::array<long long, kMaxDim> lo{}, hi{};
    for (int j = 0; j < d_; ++j) {
      lo[j] = nu[j];
      hi[j] = nu[j] + m[j] + 1;
    }
    return meets({lo.data(), std::size_t(d_)}, {hi.data(), std::size_t(d_)}, kappa);
  }

  /// Disjoint boxes whose union is D up to a null set.
  std::vector<Box> pieces() const {
    std::vector<Box> out;
    for_each_elementary([&](const std::array<int, kMaxDim>& idx) {
      if (!inside_[flat(idx)]) return;
      Point lo(d_), hi(d_);
      for (int j = 0; j < d_; ++j) {
        lo[j] = dbreaks_[j][idx[j]];
        hi[j] = dbreaks_[j][idx[j] + 1];
      }
      out.emplace_back(lo, hi);
    });
    return out;
  }

  /// Pieces of {x in D : x + t s e_axis in D for all t in [0,1]}.
  std::vector<Box> shrunk_pieces(int axis, double shift) const {
    std::vector<Box> out;
    for_each_run(axis, [&](const std::array<int, kMaxDim>& idx, double a, double b) {
      double lo_a = shift >= 0 ? a : a - shift;
      double hi_a = shift >= 0 ? b - shift : b;
      if (!(hi_a > lo_a)) return;
      Point lo(d_), hi(d_);
      for (int j = 0; j < d_; ++j) {
        lo[j] = j == axis ? lo_a : dbreaks_[j][idx[j]];
        hi[j] = j == axis ? hi_a : dbreaks_[j][idx[j] + 1];
      }
      out.emplace_back(lo, hi);
    });
    return out;
  }

  /// Lengths of the maximal segments of D along `axis` (one per slab).
  std::vector<double> run_lengths(int axis) const {
    std::vector<double> out;
    for_each_run(axis, [&](const std::array<int, kMaxDim>&, double a, double b) { out.push_back(b - a); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  double volume() const {
    double v = 0;
    for (const auto& b : pieces()) v += b.volume();
    return v;
  }

 private:
  void build() {
    for (int j = 0; j < d_; ++j) {
      auto& c = breaks_[j];
      for (const auto& b : boxes_) {
        c.push_back(b.lo[j]);
        c.push_back(b.hi[j]);
      }
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      for (const auto& r : c) dbreaks_[j].push_back(to_double(r));
      count_[j] = static_cast<int>(c.size()) - 1;
    }
    std::size_t total = 1;
    for (int j = 0; j < d_; ++j) total *= count_[j];
    inside_.assign(total, 0);
    for_each_elementary([&](const std::array<int, kMaxDim>& idx) {
      for (const auto& b : boxes_) {
        bool in = true;
        for (int j = 0; j < d_ && in; ++j) {
          Rational mid = (breaks_[j][idx[j]] + breaks_[j][idx[j] + 1]) / 2;
          in = b.lo[j] < mid && mid < b.hi[j];
        }
        if (in) {
          inside_[flat(idx)] = 1;
          return;
        }
      }
    });
  }

  std::size_t flat(const std::array<int, kMaxDim>& idx) const {
    std::size_t f = 0;
    for (int j = 0; j < d_; ++j) f = f * count_[j] + idx[j];
    return f;
  }

  template <class F>
  void for_each_elementary(F&& fn) const {
    std::array<int, kMaxDim> idx{};
    while (true) {
      fn(idx);
      int j = d_ - 1;
      while (j >= 0 && idx[j] == count_[j] - 1) idx[j--] = 0;
      if (j < 0) return;
      ++idx[j];
    }
  }

  bool all_inside(const std::array<std::array<int, 2>, kMaxDim>& range) const {
    std::array<int, kMaxDim> idx{};
    for (int j = 0; j < d_; ++j) idx[j] = range[j][0];
    while (true) {
      if (!inside_[flat(idx)]) return false;
      int j = d_ - 1;
      while (j >= 0 && idx[j] == range[j][1]) {
        idx[j] = range[j][0];
        --j;
      }
      if (j < 0) return true;
      ++idx[j];
    }
  }

  /// Calls fn(transverse index, a, b) for every maximal run of inside cells along `axis`.
  template <class F>
  void for_each_run(int axis, F&& fn) const {
    for_each_elementary([&](const std::array<int, kMaxDim>& idx) {
      if (idx[axis] != 0) return;
      auto cur = idx;
      int i = 0;
      while (i < count_[axis]) {
        cur[axis] = i;
        if (!inside_[flat(cur)]) {
          ++i;
          continue;
        }
        int start = i;
        while (i < count_[axis]) {
          cur[axis] = i;
          if (!inside_[flat(cur)]) break;
          ++i;
        }
        fn(idx, dbreaks_[axis][start], dbreaks_[axis][i]);
      }
    });
  }

  int d_;
  std::vector<RationalBox> boxes_;
  std::array<std::vector<Rational>, kMaxDim> breaks_;
  std::array<std::vector<double>, kMaxDim> dbreaks_;
  std::array<int, kMaxDim> count_{1, 1, 1};
  std::vector<char> inside_;
};

// ---------------------------------------------------------------------------
// Per-level cell classification

/// Cells of one level: those meeting D, those whose blend support meets D, and the
/// interior ones (open cells inside D, or closed cells inside D in closed mode).
class DomainGrid {
 public:
  DomainGrid(DomainSpec domain, LevelVector kappa, MultiIndex m, bool closed_mode)
      : domain_(std::move(domain)), kappa_(std::move(kappa)), m_(std::move(m)), closed_(closed_mode) {
    const int d = domain_.dim();
    if (kappa_.dim() != d || m_.dim() != d) throw PreconditionError("level/order dimension mismatch");
    SignedIndex lo(d), hi(d), slo(d);
    for (int j = 0; j < d; ++j) {
      lo[j] = floor_of(domain_.lower_bound(j) * dyadic_scale(j));
      hi[j] = ceil_of(domain_.upper_bound(j) * dyadic_scale(j)) - 1;
      slo[j] = lo[j] - m_[j] - 1;
    }
    for_each_in_box(slo, hi, [&](const SignedIndex& nu) {
      if (!domain_.blend_support_meets(kappa_, nu, m_)) return;
      support_.push_back(nu);
      if (!all_le(lo, nu) || !domain_.cell_meets(kappa_, nu)) return;
      meets_.push_back(nu);
      if (domain_.cell_inside(kappa_, nu, closed_)) interior_.push_back(nu);
    });
    interior_set_.insert(interior_.begin(), interior_.end());
  }

  const DomainSpec& domain() const noexcept { return domain_; }
  const LevelVector& kappa() const noexcept { return kappa_; }
  const MultiIndex& m() const noexcept { return m_; }
  bool closed_mode() const noexcept { return closed_; }
  int dim() const noexcept { return kappa_.dim(); }

  const std::vector<SignedIndex>& meets() const noexcept { return meets_; }
  const std::vector<SignedIndex>& support() const noexcept { return support_; }
  const std::vector<SignedIndex>& interior() const noexcept { return interior_; }
  bool is_interior(const SignedIndex& nu) const { return interior_set_.count(nu) != 0; }
  bool has_interior() const noexcept { return !interior_.empty(); }

  void require_interior() const {
    if (!has_interior())
      throw EmptyInteriorError("no cell of level " + to_string(kappa_) +
                               " lies inside the domain; the level is too coarse");
  }

  /// Interior cell closest in the max-norm; ties go to the lexicographically smallest.
  SignedIndex nearest_interior(const SignedIndex& nu) const {
    require_interior();
    if (is_interior(nu)) return nu;
    const int d = dim();
    const double n_int = static_cast<double>(interior_.size());
    for (long long r = 1;; ++r) {
      if (std::pow(2.0 * r + 1, d) > 4 * n_int + 64) break;
      SignedIndex lo = nu, hi = nu;
      for (int j = 0; j < d; ++j) {
        lo[j] -= r;
        hi[j] += r;
      }
      bool found = false;
      SignedIndex best;
      for_each_in_box(lo, hi, [&](const SignedIndex& c) {
        if (found || linf_distance(c, nu) != r) return;
        if (is_interior(c)) {
          best = c;
          found = true;
        }
      });
      if (found) return best;
    }
    // Far from every interior cell: scan the (sorted) interior list.
    SignedIndex best = interior_.front();
    long long best_d = linf_distance(best, nu);
    for (const auto& c : interior_) {
      long long dd = linf_distance(c, nu);
      if (dd < best_d) {
        best = c;
        best_d = dd;
      }
    }
    return best;
  }

 private:
  Rational dyadic_scale(int j) const { return Rational(1LL << kappa_[j]); }

  DomainSpec domain_;
  LevelVector kappa_;
  MultiIndex m_;
  bool closed_;
  std::vector<SignedIndex> meets_, support_, interior_;
  std::unordered_set<SignedIndex> interior_set_;
};

inline DomainGrid classify_cells(const DomainSpec& domain, const LevelVector& kappa, const MultiIndex& m,
                                 bool closed_mode = false) {
  return DomainGrid(domain, kappa, m, closed_mode);
}

inline SignedIndex nearest_interior(const DomainGrid& grid, const SignedIndex& nu) {
  return grid.nearest_interior(nu);
}

// ---------------------------------------------------------------------------
// Chains

struct ChainReport {
  bool found = false;
  LevelVector level;               ///< level of the chain cells
  std::vector<SignedIndex> chain;  ///< consecutive cells differ by one unit step
  std::vector<int> axis;           ///< step direction per step
  std::vector<int> sign;           ///< step sign per step

  long long length() const { return found ? static_cast<long long>(chain.size()) - 1 : -1; }
};

namespace detail {

/// Cells of one level stored densely over their bounding index box, with
/// breadth-first search over unit steps.
class CellGraph {
 public:
  CellGraph(LevelVector level, std::vector<SignedIndex> cells) : level_(std::move(level)), cells_(std::move(cells)) {
    d_ = level_.dim();
    if (cells_.empty()) return;
    lo_ = hi_ = cells_.front();
    for (const auto& c : cells_)
      for (int j = 0; j < d_; ++j) {
        lo_[j] = std::min(lo_[j], c[j]);
        hi_[j] = std::max(hi_[j], c[j]);
      }
    std::size_t total = 1;
    for (int j = 0; j < d_; ++j) {
      ext_[j] = hi_[j] - lo_[j] + 1;
      total *= static_cast<std::size_t>(ext_[j]);
    }
    id_.assign(total, -1);
    for (std::size_t i = 0; i < cells_.size(); ++i) id_[slot(cells_[i])] = static_cast<int>(i);
  }

  const LevelVector& level() const noexcept { return level_; }
  std::size_t size() const noexcept { return cells_.size(); }
  const SignedIndex& cell(int i) const { return cells_[i]; }

  int find(const SignedIndex& c) const {
    if (cells_.empty()) return -1;
    for (int j = 0; j < d_; ++j)
      if (c[j] < lo_[j] || c[j] > hi_[j]) return -1;
    return id_[slot(c)];
  }

  /// Distances (in steps) from the source set; -1 when unreachable. `parent` optional.
  std::vector<int> bfs(std::span<const int> sources, std::vector<int>* parent = nullptr) const {
    std::vector<int> dist(cells_.size(), -1);
    if (parent) parent->assign(cells_.size(), -1);
    std::vector<int> queue;
    queue.reserve(cells_.size());
    for (int s : sources)
      if (s >= 0 && dist[s] < 0) {
        dist[s] = 0;
        queue.push_back(s);
      }
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int v = queue[h];
      SignedIndex c = cells_[v];
      for (int j = 0; j < d_; ++j)
        for (int s : {-1, 1}) {
          c[j] += s;
          int w = find(c);
          c[j] -= s;
          if (w >= 0 && dist[w] < 0) {
            dist[w] = dist[v] + 1;
            if (parent) (*parent)[w] = v;
            queue.push_back(w);
          }
        }
    }
    return dist;
  }

  /// Component label per cell.
  std::vector<int> components(int* count) const {
    std::vector<int> label(cells_.size(), -1);
    int n = 0;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (label[i] >= 0) continue;
      int src = static_cast<int>(i);
      auto dist = bfs(std::span<const int>(&src, 1));
      for (std::size_t k = 0; k < dist.size(); ++k)
        if (dist[k] >= 0) label[k] = n;
      ++n;
    }
    if (count) *count = n;
    return label;
  }

 private:
  std::size_t slot(const SignedIndex& c) const {
    std::size_t f = 0;
    for (int j = 0; j < d_; ++j) f = f * static_cast<std::size_t>(ext_[j]) + static_cast<std::size_t>(c[j] - lo_[j]);
    return f;
  }

  LevelVector level_;
  std::vector<SignedIndex> cells_;
  int d_ = 0;
  SignedIndex lo_, hi_;
  std::array<long long, kMaxDim> ext_{};
  std::vector<int> id_;
};

inline LevelVector refine(const LevelVector& kappa, int sublevel) {
  LevelVector r = kappa;
  for (int j = 0; j < r.dim(); ++j) r[j] += sublevel;
  return r;
}

/// Cells of the refined level whose closures lie in D.
inline std::vector<SignedIndex> closed_cells(const DomainSpec& domain, const LevelVector& level) {
  const int d = domain.dim();
  SignedIndex lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    Rational s(1LL << level[j]);
    lo[j] = floor_of(domain.lower_bound(j) * s);
    hi[j] = ceil_of(domain.upper_bound(j) * s) - 1;
  }
  std::vector<SignedIndex> out;
  for_each_in_box(lo, hi, [&](const SignedIndex& nu) {
    if (domain.cell_inside(level, nu, true)) out.push_back(nu);
  });
  return out;
}

/// Children at `sublevel` finer levels of a cell.
inline std::vector<SignedIndex> children(const SignedIndex& nu, int sublevel) {
  const int d = nu.dim();
  SignedIndex lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    lo[j] = nu[j] << sublevel;
    hi[j] = lo[j] + (1LL << sublevel) - 1;
  }
  std::vector<SignedIndex> out;
  for_each_in_box(lo, hi, [&](const SignedIndex& c) { out.push_back(c); });
  return out;
}

inline ChainReport chain_from_parents(const CellGraph& g, const std::vector<int>& parent, int end) {
  ChainReport r;
  r.found = true;
  r.level = g.level();
  for (int v = end; v >= 0; v = parent[v]) r.chain.push_back(g.cell(v));
  std::reverse(r.chain.begin(), r.chain.end());
  for (std::size_t i = 0; i + 1 < r.chain.size(); ++i) {
    auto diff = r.chain[i + 1] - r.chain[i];
    for (int j = 0; j < diff.dim(); ++j)
      if (diff[j] != 0) {
        r.axis.push_back(j);
        r.sign.push_back(static_cast<int>(diff[j]));
      }
  }
  return r;
}

inline CellGraph narrow_graph(const DomainGrid& grid) { return CellGraph(grid.kappa(), grid.interior()); }

inline CellGraph wide_graph(const DomainGrid& grid, int sublevel) {
  auto level = refine(grid.kappa(), sublevel);
  return CellGraph(level, closed_cells(grid.domain(), level));
}

}  // namespace detail

/// Does the step between two adjacent cells stay in D? Narrow mode: the interior of the
/// union of the two closed cells; wide mode: both closed cells.
inline bool step_inside(const DomainSpec& domain, const LevelVector& level, const SignedIndex& a,
                        const SignedIndex& b, bool closed) {
  if (closed) return domain.cell_inside(level, a, true) && domain.cell_inside(level, b, true);
  std::array<long long, kMaxDim> lo{}, hi{};
  for (int j = 0; j < a.dim(); ++j) {
    lo[j] = std::min(a[j], b[j]);
    hi[j] = std::max(a[j], b[j]) + 1;
  }
  return domain.covers({lo.data(), std::size_t(a.dim())}, {hi.data(), std::size_t(a.dim())}, level, false);
}

/// Shortest unit-step chain between two interior cells of `grid`. In closed mode the chain
/// runs `sublevel` levels finer and may start/end at any child of the given cells.
inline ChainReport find_chain(const DomainGrid& grid, const SignedIndex& from, const SignedIndex& to,
                              int sublevel = 0) {
  if (sublevel < 0) throw PreconditionError("sublevel must be non-negative");
  if (!grid.closed_mode() && sublevel != 0)
    throw PreconditionError("open-mode chains run at the grid level; use a closed-mode grid for sublevels");
  ChainReport none;
  none.level = detail::refine(grid.kappa(), sublevel);
  if (!grid.is_interior(from) || !grid.is_interior(to)) return none;
  auto g = grid.closed_mode() ? detail::wide_graph(grid, sublevel) : detail::narrow_graph(grid);
  std::vector<int> src, dst;
  for (const auto& c : detail::children(from, sublevel)) src.push_back(g.find(c));
  for (const auto& c : detail::children(to, sublevel)) dst.push_back(g.find(c));
  std::vector<int> parent;
  auto dist = g.bfs(src, &parent);
  int best = -1;
  for (int t : dst)
    if (t >= 0 && dist[t] >= 0 && (best < 0 || dist[t] < dist[best])) best = t;
  if (best < 0) return none;
  return detail::chain_from_parents(g, parent, best);
}

// ---------------------------------------------------------------------------
// Certification

enum class AlphaMode { narrow, wide };

struct LevelCheck {
  long long k = 0;
  LevelVector kappa;
  bool passes = false;
  std::size_t interior_count = 0;
  std::size_t meets_count = 0;
  MultiIndex gamma;       ///< covering radius needed at this level
  double c0 = 0;          ///< max chain length / distance over tested pairs
  bool sampled = false;   ///< pairs were sampled rather than exhaustive
  std::string witness;    ///< failure description
};

struct AlphaTypeReport {
  AlphaMode mode = AlphaMode::narrow;
  bool passes = false;
  long long K0 = -1;
  int sublevel = -1;  ///< wide mode: smallest working sublevel, -1 if none
  MultiIndex Gamma0;
  double c0 = std::numeric_limits<double>::infinity();
  std::vector<LevelCheck> levels;
  std::string witness;
};

struct CertifyOptions {
  std::uint64_t seed = 1;
  std::size_t exhaustive_limit = 4096;  ///< all-pairs search up to this many interior cells
  std::size_t sampled_sources = 64;
  std::size_t work_limit = 64u << 20;   ///< sources x nodes budget before sampling
  int max_sublevel = 3;
};

namespace detail {

inline std::vector<std::size_t> pick_sources(const std::vector<SignedIndex>& cells, std::size_t graph_nodes,
                                             const CertifyOptions& opt, bool* sampled) {
  std::vector<std::size_t> idx(cells.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  *sampled = cells.size() > opt.exhaustive_limit || cells.size() * graph_nodes > opt.work_limit;
  if (!*sampled) return idx;
  std::mt19937_64 rng(opt.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(opt.sampled_sources, idx.size()));
  const int d = cells.front().dim();
  for (int j = 0; j < d; ++j) {
    std::size_t amin = 0, amax = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i][j] < cells[amin][j]) amin = i;
      if (cells[i][j] > cells[amax][j]) amax = i;
    }
    idx.push_back(amin);
    idx.push_back(amax);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

inline LevelCheck check_level(const DomainSpec& domain, const AnisoProfile& profile, const MultiIndex& m,
                              long long k, bool closed, int sublevel, const CertifyOptions& opt) {
  LevelCheck lc;
  lc.k = k;
  lc.kappa = level_vector(k, profile);
  DomainGrid grid(domain, lc.kappa, m, closed);
  lc.interior_count = grid.interior().size();
  lc.meets_count = grid.meets().size();
  lc.gamma = MultiIndex(domain.dim());
  if (!grid.has_interior()) {
    lc.witness = "k=" + std::to_string(k) + ": no cell of level " + to_string(lc.kappa) + " lies inside D";
    lc.c0 = std::numeric_limits<double>::infinity();
    return lc;
  }
  for (const auto& nu : grid.meets()) {
    auto near = grid.nearest_interior(nu);
    for (int j = 0; j < nu.dim(); ++j)
      lc.gamma[j] = std::max({lc.gamma[j], nu[j] - near[j], near[j] + 1 - nu[j]});
  }
  CellGraph g = closed ? wide_graph(grid, sublevel) : narrow_graph(grid);
  const auto& bold = grid.interior();
  // graph node of (first child of) each interior cell
  std::vector<int> node(bold.size());
  for (std::size_t i = 0; i < bold.size(); ++i) node[i] = g.find(children(bold[i], closed ? sublevel : 0).front());
  int ncomp = 0;
  auto label = g.components(&ncomp);
  for (std::size_t i = 1; i < bold.size(); ++i)
    if (label[node[i]] != label[node[0]]) {
      lc.witness = "k=" + std::to_string(k) + ": no chain between " + to_string(bold[0]) + " and " +
                   to_string(bold[i]);
      lc.c0 = std::numeric_limits<double>::infinity();
      return lc;
    }
  auto sources = pick_sources(bold, g.size(), opt, &lc.sampled);
  std::vector<std::size_t> targets = lc.sampled ? sources : std::vector<std::size_t>{};
  if (!lc.sampled) {
    targets.resize(bold.size());
    for (std::size_t i = 0; i < bold.size(); ++i) targets[i] = i;
  }
  std::vector<std::vector<int>> target_nodes(bold.size());
  auto nodes_of = [&](std::size_t i) -> const std::vector<int>& {
    auto& v = target_nodes[i];
    if (v.empty())
      for (const auto& c : children(bold[i], closed ? sublevel : 0)) v.push_back(g.find(c));
    return v;
  };
  double c0 = 0;
  for (std::size_t s : sources) {
    auto dist = g.bfs(nodes_of(s));
    for (std::size_t t : targets) {
      if (t == s) continue;
      int best = -1;
      for (int v : nodes_of(t))
        if (dist[v] >= 0 && (best < 0 || dist[v] < best)) best = dist[v];
      c0 = std::max(c0, static_cast<double>(best) / static_cast<double>(linf_distance(bold[s], bold[t])));
    }
  }
  lc.c0 = c0;
  lc.passes = true;
  return lc;
}

inline void summarize(AlphaTypeReport& r) {
  r.passes = false;
  r.K0 = -1;
  const long long n = static_cast<long long>(r.levels.size());
  for (long long i = n - 1; i >= 0 && r.levels[i].passes; --i) r.K0 = r.levels[i].k;
  r.passes = r.K0 >= 0;
  const int d = r.levels.front().kappa.dim();
  r.Gamma0 = MultiIndex(d);
  r.c0 = r.passes ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& lc : r.levels) {
    if (r.passes && lc.k < r.K0) continue;
    for (int j = 0; j < d; ++j) r.Gamma0[j] = std::max(r.Gamma0[j], lc.gamma[j]);
    if (r.passes) r.c0 = std::max(r.c0, lc.c0);
  }
  r.witness.clear();
  if (!r.passes)
    for (long long i = n - 1; i >= 0; --i)
      if (!r.levels[i].passes) {
        r.witness = r.levels[i].witness;
        break;
      }
}

}  // namespace detail

/// Empirical check of the alpha-type conditions for levels k = 0..k_max.
/// The domain passes when every level from some K0 up to k_max passes.
inline AlphaTypeReport verify_alpha_type(const DomainSpec& domain, const AnisoProfile& profile, const MultiIndex& m,
                                         long long k_max, AlphaMode mode, const CertifyOptions& opt = {}) {
  if (k_max < 1) throw PreconditionError("k_max must be at least 1");
  if (profile.dim() != domain.dim()) throw PreconditionError("profile and domain dimensions differ");
  auto run = [&](bool closed, int sublevel) {
    AlphaTypeReport r;
    r.mode = mode;
    for (long long k = 0; k <= k_max; ++k)
      r.levels.push_back(detail::check_level(domain, profile, m, k, closed, sublevel, opt));
    detail::summarize(r);
    return r;
  };
  if (mode == AlphaMode::narrow) return run(false, 0);
  AlphaTypeReport first;
  for (int s = 0; s <= opt.max_sublevel; ++s) {
    auto r = run(true, s);
    if (r.passes) {
      r.sublevel = s;
      return r;
    }
    if (s == 0) first = std::move(r);
  }
  first.sublevel = -1;
  return first;
}

}  // namespace aniso
