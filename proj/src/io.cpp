#include "dhinf/io.hpp"

#include "dhinf/errors.hpp"

namespace dhinf::io {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kParse, "field '" + field + "': " + what);
}

const json& member(const json& j, const std::string& field, const char* key) {
  if (!j.is_object()) fail(field, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(field + "." + key, "missing");
  return *it;
}

Index index_of(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(field, "expected a non-negative integer");
  return static_cast<Index>(j.get<long long>());
}

std::vector<Index> dims_of(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of block sizes");
  std::vector<Index> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(index_of(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of rows");
  const Index r = static_cast<Index>(j.size());
  if (r == 0) return MatrixXd(0, 0);
  if (!j[0].is_array()) fail(field, "expected an array of rows");
  const Index c = static_cast<Index>(j[0].size());
  MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c)
      fail(field, "row " + std::to_string(i) + " has the wrong length (expected " +
                      std::to_string(c) + ")");
    for (Index k = 0; k < c; ++k) {
      const json& v = row[static_cast<size_t>(k)];
      if (!v.is_number())
        fail(field, "entry (" + std::to_string(i) + "," + std::to_string(k) + ") is not a number");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

MatrixXd matrix_from_json(const json& j, const std::string& field, Index rows, Index cols) {
  MatrixXd m = matrix_from_json(j, field);
  if (m.size() == 0 && rows * cols == 0) return MatrixXd::Zero(rows, cols);
  if (m.rows() != rows || m.cols() != cols)
    fail(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  return m;
}

json to_json(const RealizationSS& g) {
  return {{"states", g.states()}, {"inputs", g.inputs()}, {"outputs", g.outputs()},
          {"A", to_json(g.A())},  {"B", to_json(g.B())},  {"C", to_json(g.C())},
          {"D", to_json(g.D())}};
}

RealizationSS realization_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  const MatrixXd d0 = matrix_from_json(member(j, field, "D"), field + ".D");
  const MatrixXd a0 = j.contains("A") ? matrix_from_json(j["A"], field + ".A") : MatrixXd(0, 0);
  const Index n = j.contains("states") ? index_of(j["states"], field + ".states") : a0.rows();
  const Index p = j.contains("outputs") ? index_of(j["outputs"], field + ".outputs") : d0.rows();
  const Index m = j.contains("inputs") ? index_of(j["inputs"], field + ".inputs") : d0.cols();
  const MatrixXd a = j.contains("A") ? matrix_from_json(j["A"], field + ".A", n, n) : MatrixXd::Zero(n, n);
  const MatrixXd b = j.contains("B") ? matrix_from_json(j["B"], field + ".B", n, m) : MatrixXd::Zero(n, m);
  const MatrixXd c = j.contains("C") ? matrix_from_json(j["C"], field + ".C", p, n) : MatrixXd::Zero(p, n);
  const MatrixXd d = matrix_from_json(j["D"], field + ".D", p, m);
  return RealizationSS(a, b, c, d);
}

json to_json(const Plant& p) {
  return {{"A", to_json(p.A)},     {"B1", to_json(p.B1)},   {"B2", to_json(p.B2)},
          {"C1", to_json(p.C1)},   {"C2", to_json(p.C2)},   {"D11", to_json(p.D11)},
          {"D12", to_json(p.D12)}, {"D21", to_json(p.D21)}, {"D22", to_json(p.D22)}};
}

Plant plant_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  Plant p;
  if (j.contains("P11")) {
    const RealizationSS g[4] = {realization_from_json(member(j, field, "P11"), field + ".P11"),
                                realization_from_json(member(j, field, "P12"), field + ".P12"),
                                realization_from_json(member(j, field, "P21"), field + ".P21"),
                                realization_from_json(member(j, field, "P22"), field + ".P22")};
    const Index nz = g[0].outputs(), nw = g[0].inputs(), nu = g[1].inputs(), ny = g[2].outputs();
    if (g[1].outputs() != nz || g[2].inputs() != nw || g[3].outputs() != ny || g[3].inputs() != nu)
      fail(field, "P11/P12/P21/P22 dimensions are inconsistent");
    Index n = 0;
    for (const auto& gi : g) n += gi.states();
    p.A = MatrixXd::Zero(n, n);
    p.B1 = MatrixXd::Zero(n, nw);
    p.B2 = MatrixXd::Zero(n, nu);
    p.C1 = MatrixXd::Zero(nz, n);
    p.C2 = MatrixXd::Zero(ny, n);
    Index off = 0;
    for (int k = 0; k < 4; ++k) {
      const Index s = g[k].states();
      p.A.block(off, off, s, s) = g[k].A();
      if (k == 0 || k == 2) p.B1.middleRows(off, s) = g[k].B();
      else p.B2.middleRows(off, s) = g[k].B();
      if (k < 2) p.C1.middleCols(off, s) = g[k].C();
      else p.C2.middleCols(off, s) = g[k].C();
      off += s;
    }
    p.D11 = g[0].D();
    p.D12 = g[1].D();
    p.D21 = g[2].D();
    p.D22 = g[3].D();
    return p;
  }
  const MatrixXd a = matrix_from_json(member(j, field, "A"), field + ".A");
  if (a.rows() != a.cols()) fail(field + ".A", "must be square");
  const Index n = a.rows();
  p.A = a;
  if (j.contains("B1")) {
    auto get = [&](const char* k) { return matrix_from_json(member(j, field, k), field + "." + k); };
    p.B1 = get("B1");
    p.B2 = get("B2");
    p.C1 = get("C1");
    p.C2 = get("C2");
    const Index nw = p.B1.cols(), nu = p.B2.cols(), nz = p.C1.rows(), ny = p.C2.rows();
    auto shaped = [&](const char* k, Index r, Index c) {
      return matrix_from_json(member(j, field, k), field + "." + k, r, c);
    };
    p.D11 = shaped("D11", nz, nw);
    p.D12 = shaped("D12", nz, nu);
    p.D21 = shaped("D21", ny, nw);
    p.D22 = shaped("D22", ny, nu);
    if (p.B1.rows() != n || p.B2.rows() != n || p.C1.cols() != n || p.C2.cols() != n)
      fail(field, "B/C blocks do not match the state dimension " + std::to_string(n));
    return p;
  }
  const MatrixXd b = matrix_from_json(member(j, field, "B"), field + ".B");
  const MatrixXd c = matrix_from_json(member(j, field, "C"), field + ".C");
  const MatrixXd d = matrix_from_json(member(j, field, "D"), field + ".D", c.rows(), b.cols());
  const Index nu = index_of(member(j, field, "u_dim"), field + ".u_dim");
  const Index ny = index_of(member(j, field, "y_dim"), field + ".y_dim");
  if (b.rows() != n || c.cols() != n) fail(field, "B/C do not match A");
  if (nu > b.cols() || ny > c.rows()) fail(field, "u_dim/y_dim exceed the plant size");
  const Index nw = b.cols() - nu, nz = c.rows() - ny;
  p.B1 = b.leftCols(nw);
  p.B2 = b.rightCols(nu);
  p.C1 = c.topRows(nz);
  p.C2 = c.bottomRows(ny);
  p.D11 = d.topLeftCorner(nz, nw);
  p.D12 = d.topRightCorner(nz, nu);
  p.D21 = d.bottomLeftCorner(ny, nw);
  p.D22 = d.bottomRightCorner(ny, nu);
  return p;
}

json to_json(const CommGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"delay", e.delay}});
  return {{"nodes", g.node_count}, {"edges", edges}, {"u_dims", g.u_dims}, {"y_dims", g.y_dims}};
}

CommGraph graph_from_json(const json& j, const std::string& field) {
  CommGraph g;
  g.node_count = static_cast<int>(index_of(member(j, field, "nodes"), field + ".nodes"));
  const json& edges = member(j, field, "edges");
  if (!edges.is_array()) fail(field + ".edges", "expected an array");
  for (size_t i = 0; i < edges.size(); ++i) {
    const std::string f = field + ".edges[" + std::to_string(i) + "]";
    CommGraph::Edge e;
    e.from = static_cast<int>(index_of(member(edges[i], f, "from"), f + ".from"));
    e.to = static_cast<int>(index_of(member(edges[i], f, "to"), f + ".to"));
    e.delay = edges[i].contains("delay") ? static_cast<int>(index_of(edges[i]["delay"], f + ".delay")) : 1;
    g.edges.push_back(e);
  }
  const std::vector<Index> ones(static_cast<size_t>(g.node_count), 1);
  g.u_dims = j.contains("u_dims") ? dims_of(j["u_dims"], field + ".u_dims") : ones;
  g.y_dims = j.contains("y_dims") ? dims_of(j["y_dims"], field + ".y_dims") : ones;
  try {
    validate(g);
  } catch (const Error& e) {
    fail(field, e.what());
  }
  return g;
}

json to_json(const DelayPattern& d) {
  return {{"d", d.d}, {"row_dims", d.row_dims}, {"col_dims", d.col_dims}};
}

DelayPattern pattern_from_json(const json& j, const std::string& field) {
  const json& dj = member(j, field, "d");
  if (!dj.is_array()) fail(field + ".d", "expected an array of rows");
  std::vector<std::vector<int>> d;
  for (size_t r = 0; r < dj.size(); ++r) {
    if (!dj[r].is_array()) fail(field + ".d", "row " + std::to_string(r) + " is not an array");
    std::vector<int> row;
    for (size_t c = 0; c < dj[r].size(); ++c)
      row.push_back(static_cast<int>(
          index_of(dj[r][c], field + ".d[" + std::to_string(r) + "][" + std::to_string(c) + "]")));
    d.push_back(std::move(row));
  }
  DelayPattern p;
  try {
    p = make_pattern(d);
  } catch (const Error& e) {
    fail(field + ".d", e.what());
  }
  if (j.contains("row_dims")) p.row_dims = dims_of(j["row_dims"], field + ".row_dims");
  if (j.contains("col_dims")) p.col_dims = dims_of(j["col_dims"], field + ".col_dims");
  if (p.row_dims.size() != p.d.size() ||
      (!p.d.empty() && p.col_dims.size() != p.d[0].size()))
    fail(field, "row_dims/col_dims must have one entry per block row/column");
  return p;
}

json to_json(const StructuredFir& v) {
  json taps = json::array();
  for (const auto& t : v.taps) taps.push_back(to_json(t));
  return {{"N", v.constraint.N}, {"taps", taps}};
}

}  // namespace dhinf::io
