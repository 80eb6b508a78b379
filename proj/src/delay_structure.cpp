#include "dhinf/delay_structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dhinf/errors.hpp"

namespace dhinf {

namespace {

constexpr int kInf = std::numeric_limits<int>::max() / 4;

Index total(const std::vector<Index>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{0});
}

std::vector<Index> offsets(const std::vector<Index>& dims) {
  std::vector<Index> off(dims.size() + 1, 0);
  for (size_t i = 0; i < dims.size(); ++i) off[i + 1] = off[i] + dims[i];
  return off;
}

}  // namespace

Index DelayPattern::rows() const { return total(row_dims); }
Index DelayPattern::cols() const { return total(col_dims); }

int DelayPattern::max_delay() const {
  int m = 0;
  for (const auto& row : d)
    for (int v : row) m = std::max(m, v);
  return m;
}

std::vector<std::vector<int>> DelayPattern::expanded() const {
  const auto ro = offsets(row_dims), co = offsets(col_dims);
  std::vector<std::vector<int>> e(rows(), std::vector<int>(cols(), 0));
  for (size_t bj = 0; bj < d.size(); ++bj)
    for (size_t bk = 0; bk < d[bj].size(); ++bk)
      for (Index r = ro[bj]; r < ro[bj + 1]; ++r)
        for (Index c = co[bk]; c < co[bk + 1]; ++c) e[r][c] = d[bj][bk];
  return e;
}

DelayPattern make_pattern(std::vector<std::vector<int>> d) {
  DelayPattern p;
  const size_t r = d.size(), c = d.empty() ? 0 : d[0].size();
  for (const auto& row : d)
    require(row.size() == c, ErrorCode::kDimensionMismatch, "pattern rows differ");
  p.d = std::move(d);
  p.row_dims.assign(r, 1);
  p.col_dims.assign(c, 1);
  return p;
}

void validate(const CommGraph& g) {
  require(g.node_count >= 1, ErrorCode::kInvalidArgument, "graph: no nodes");
  require(static_cast<int>(g.u_dims.size()) == g.node_count &&
              static_cast<int>(g.y_dims.size()) == g.node_count,
          ErrorCode::kDimensionMismatch, "graph: u_dims/y_dims must list every node");
  for (const auto& e : g.edges) {
    require(e.from >= 0 && e.from < g.node_count && e.to >= 0 && e.to < g.node_count,
            ErrorCode::kInvalidArgument, "graph: edge endpoint out of range");
    require(e.delay >= 1, ErrorCode::kInvalidArgument, "graph: edge delay must be >= 1");
  }
  for (Index v : g.u_dims)
    require(v >= 0, ErrorCode::kInvalidArgument, "graph: negative u dim");
  for (Index v : g.y_dims)
    require(v >= 0, ErrorCode::kInvalidArgument, "graph: negative y dim");
}

DelayPattern pattern_from_graph(const CommGraph& g) {
  validate(g);
  const int n = g.node_count;
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, kInf));
  for (int i = 0; i < n; ++i) dist[i][i] = 0;
  for (const auto& e : g.edges) dist[e.from][e.to] = std::min(dist[e.from][e.to], e.delay);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (dist[i][k] + dist[k][j] < dist[i][j]) dist[i][j] = dist[i][k] + dist[k][j];
  DelayPattern p;
  p.d.assign(n, std::vector<int>(n, 0));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      require(dist[k][j] < kInf, ErrorCode::kInvalidArgument,
              "graph: not strongly connected (no path " + std::to_string(k) +
                  " -> " + std::to_string(j) + ")");
      p.d[j][k] = dist[k][j];  // measurement at node k travels to node j
    }
  p.row_dims = g.u_dims;
  p.col_dims = g.y_dims;
  return p;
}

DelayConstraint constraint_from_pattern(const DelayPattern& d, std::optional<int> horizon) {
  require(d.row_dims.size() == d.d.size() &&
              (d.d.empty() || d.col_dims.size() == d.d[0].size()),
          ErrorCode::kDimensionMismatch, "pattern block dims");
  for (const auto& row : d.d)
    for (int v : row) require(v >= 0, ErrorCode::kInvalidArgument, "negative delay");
  DelayConstraint c;
  c.pattern = d;
  const int dmax = d.max_delay();
  c.N = std::max(1, dmax);
  if (horizon) {
    require(*horizon >= c.N, ErrorCode::kInvalidArgument,
            "horizon " + std::to_string(*horizon) + " below max delay " +
                std::to_string(dmax));
    c.N = *horizon;
  }
  const auto e = d.expanded();
  const Index r = d.rows(), cc = d.cols();
  for (int i = 0; i < c.N; ++i) {
    Mask m(r, cc);
    for (Index a = 0; a < r; ++a)
      for (Index b = 0; b < cc; ++b) m(a, b) = e[a][b] <= i;
    c.masks.push_back(m);
  }
  return c;
}

QiResult qi_check(const DelayPattern& d_controller,
                  const std::vector<std::vector<int>>& d_plant) {
  const auto dc = d_controller.expanded();
  const Index nu = d_controller.rows(), ny = d_controller.cols();
  require(static_cast<Index>(d_plant.size()) == ny, ErrorCode::kDimensionMismatch,
          "qi_check: plant pattern must have one row per measurement");
  for (const auto& row : d_plant)
    require(static_cast<Index>(row.size()) == nu, ErrorCode::kDimensionMismatch,
            "qi_check: plant pattern must have one column per control");
  QiResult res;
  for (Index i = 0; i < nu; ++i)
    for (Index k = 0; k < ny; ++k)
      for (Index j = 0; j < ny; ++j)
        for (Index l = 0; l < nu; ++l) {
          const int path = dc[i][j] + d_plant[j][l] + dc[l][k];
          if (path < dc[i][k]) {
            res.holds = false;
            res.witness = QiWitness{i, j, l, k, path, dc[i][k]};
            return res;
          }
        }
  return res;
}

std::vector<std::vector<int>> plant_delays(const RealizationSS& p22, int horizon, double tol) {
  if (horizon <= 0) horizon = std::max<int>(1, 4 * static_cast<int>(p22.states()));
  const auto taps = markov(p22, horizon).taps;
  std::vector<std::vector<int>> d(p22.outputs(), std::vector<int>(p22.inputs(), horizon));
  for (Index k = 0; k < p22.outputs(); ++k)
    for (Index j = 0; j < p22.inputs(); ++j)
      for (int t = 0; t < horizon; ++t)
        if (std::abs(taps[t](k, j)) > tol) {
          d[k][j] = t;
          break;
        }
  return d;
}

std::vector<FreeEntry> free_entries(const DelayConstraint& c) {
  std::vector<FreeEntry> out;
  for (int i = 0; i < c.N; ++i)
    for (Index col = 0; col < c.cols(); ++col)
      for (Index row = 0; row < c.rows(); ++row)
        if (c.masks[i](row, col)) out.push_back({i, row, col});
  return out;
}

StructuredFir fir_from_params(const DelayConstraint& c, const VectorXd& x) {
  const auto entries = free_entries(c);
  require(static_cast<Index>(entries.size()) == x.size(), ErrorCode::kDimensionMismatch,
          "fir_from_params: parameter count");
  StructuredFir v;
  v.constraint = c;
  v.taps.assign(c.N, MatrixXd::Zero(c.rows(), c.cols()));
  for (size_t e = 0; e < entries.size(); ++e)
    v.taps[entries[e].tap](entries[e].row, entries[e].col) = x(static_cast<Index>(e));
  return v;
}

VectorXd fir_params(const StructuredFir& v) {
  const auto entries = free_entries(v.constraint);
  VectorXd x(static_cast<Index>(entries.size()));
  for (size_t e = 0; e < entries.size(); ++e)
    x(static_cast<Index>(e)) = v.taps[entries[e].tap](entries[e].row, entries[e].col);
  return x;
}

RealizationSS fir_embed(const StructuredFir& v) {
  require(!v.taps.empty(), ErrorCode::kInvalidArgument, "fir_embed: no taps");
  return fir_realization(v.taps);
}

ProjectedFir fir_project(const std::vector<MatrixXd>& taps, const DelayConstraint& c) {
  require(static_cast<int>(taps.size()) == c.N, ErrorCode::kDimensionMismatch,
          "fir_project: tap count " + std::to_string(taps.size()) + " vs N " +
              std::to_string(c.N));
  ProjectedFir out;
  out.fir.constraint = c;
  out.fir.taps = taps;
  for (int i = 0; i < c.N; ++i) {
    require(taps[i].rows() == c.rows() && taps[i].cols() == c.cols(),
            ErrorCode::kDimensionMismatch, "fir_project: tap shape");
    for (Index r = 0; r < c.rows(); ++r)
      for (Index q = 0; q < c.cols(); ++q)
        if (!c.masks[i](r, q)) {
          out.max_zeroed = std::max(out.max_zeroed, std::abs(taps[i](r, q)));
          out.fir.taps[i](r, q) = 0.0;
        }
  }
  return out;
}

bool respects_masks(const std::vector<MatrixXd>& taps, const DelayConstraint& c) {
  for (size_t i = 0; i < taps.size(); ++i) {
    if (taps[i].rows() != c.rows() || taps[i].cols() != c.cols()) return false;
    if (static_cast<int>(i) >= c.N) continue;  // past the horizon: unconstrained
    for (Index r = 0; r < c.rows(); ++r)
      for (Index q = 0; q < c.cols(); ++q)
        if (!c.masks[i](r, q) && taps[i](r, q) != 0.0) return false;
  }
  return true;
}

}  // namespace dhinf
