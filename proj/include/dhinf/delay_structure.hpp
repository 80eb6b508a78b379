#pragma once

// Communication graphs, the delay patterns they induce, the sparsity masks
// of the constraint set Y + z^{-N} RH-infinity, structured FIR filters and
// quadratic invariance at the delay level.

#include <optional>
#include <vector>

#include "dhinf/realization.hpp"

namespace dhinf {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct CommGraph {
  struct Edge {
    int from = 0;
    int to = 0;
    int delay = 1;
  };
  int node_count = 0;
  std::vector<Edge> edges;
  std::vector<Index> u_dims;  // controller outputs owned by each node
  std::vector<Index> y_dims;  // measurements owned by each node
};

/// d[j][k]: steps before controller block j can use measurement block k.
struct DelayPattern {
  std::vector<std::vector<int>> d;
  std::vector<Index> row_dims;  // u blocks
  std::vector<Index> col_dims;  // y blocks

  Index blocks_rows() const { return static_cast<Index>(d.size()); }
  Index blocks_cols() const { return d.empty() ? 0 : static_cast<Index>(d[0].size()); }
  Index rows() const;
  Index cols() const;
  int max_delay() const;
  /// Entry-level pattern (one row per scalar u, one column per scalar y).
  std::vector<std::vector<int>> expanded() const;
};

/// Pattern with unit block sizes.
DelayPattern make_pattern(std::vector<std::vector<int>> d);

struct DelayConstraint {
  std::vector<Mask> masks;  // Y_0 .. Y_{N-1}, entry level
  int N = 1;
  DelayPattern pattern;
  Index rows() const { return masks.empty() ? 0 : masks[0].rows(); }
  Index cols() const { return masks.empty() ? 0 : masks[0].cols(); }
};

struct FreeEntry {
  int tap;
  Index row;
  Index col;
};

struct StructuredFir {
  std::vector<MatrixXd> taps;  // V_0 .. V_{N-1}
  DelayConstraint constraint;
};

struct QiWitness {
  Index i, j, l, k;
  int path_delay;
  int required;
};

struct QiResult {
  bool holds = true;
  std::optional<QiWitness> witness;
};

void validate(const CommGraph& g);
DelayPattern pattern_from_graph(const CommGraph& g);

/// Mask Y_i = (d <= i); N = max delay (at least 1). A horizon larger than
/// the max delay pads with full masks; a smaller one is rejected.
DelayConstraint constraint_from_pattern(const DelayPattern& d,
                                        std::optional<int> horizon = std::nullopt);

/// Min-plus test of K P22 K in S on entry-level patterns. d_plant is
/// indexed [output][input] of P22 and must be cols(dc) x rows(dc).
QiResult qi_check(const DelayPattern& d_controller,
                  const std::vector<std::vector<int>>& d_plant);

/// Entry-level propagation delays of P22 from Markov-tap support; entries
/// that never exceed tol within `horizon` taps are capped at horizon.
/// horizon <= 0 selects 4 * states (at least 1).
std::vector<std::vector<int>> plant_delays(const RealizationSS& p22,
                                           int horizon = 0, double tol = 1e-9);

std::vector<FreeEntry> free_entries(const DelayConstraint& c);
StructuredFir fir_from_params(const DelayConstraint& c, const VectorXd& x);
VectorXd fir_params(const StructuredFir& v);

RealizationSS fir_embed(const StructuredFir& v);

struct ProjectedFir {
  StructuredFir fir;
  double max_zeroed = 0.0;
};
ProjectedFir fir_project(const std::vector<MatrixXd>& taps, const DelayConstraint& c);

/// True when every masked-out entry of every tap is exactly zero.
bool respects_masks(const std::vector<MatrixXd>& taps, const DelayConstraint& c);

}  // namespace dhinf
