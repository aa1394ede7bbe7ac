#include "dhmm/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dhmm/errors.hpp"

namespace dhmm {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kRankTol = 1e-10;

std::string describe_components(const std::vector<std::vector<std::size_t>>& components) {
  std::ostringstream os;
  for (std::size_t c = 0; c < components.size(); ++c) {
    os << (c ? " | " : "") << "{";
    for (std::size_t i = 0; i < components[c].size(); ++i) {
      os << (i ? "," : "") << components[c][i];
    }
    os << "}";
  }
  return os.str();
}

}  // namespace

Graph::Graph(std::size_t agents) : neighbors_(agents), self_loop_(agents, false) {
  if (agents == 0) throw ValidationError("graph: need at least one agent");
}

Graph Graph::complete(std::size_t agents, bool self_loops) {
  Graph g(agents);
  for (std::size_t u = 0; u < agents; ++u)
    for (std::size_t v = u + 1; v < agents; ++v) g.add_edge(u, v);
  if (self_loops) g.add_self_loops();
  return g;
}

Graph Graph::path(std::size_t agents, bool self_loops) {
  Graph g(agents);
  for (std::size_t u = 0; u + 1 < agents; ++u) g.add_edge(u, u + 1);
  if (self_loops) g.add_self_loops();
  return g;
}

Graph Graph::ring(std::size_t agents, bool self_loops) {
  Graph g = path(agents, self_loops);
  if (agents > 2) g.add_edge(agents - 1, 0);
  return g;
}

Graph Graph::star(std::size_t agents, bool self_loops) {
  Graph g(agents);
  for (std::size_t v = 1; v < agents; ++v) g.add_edge(0, v);
  if (self_loops) g.add_self_loops();
  return g;
}

Graph Graph::from_edge_list(std::istream& in, std::optional<std::size_t> agents) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long u = 0;
    long long v = 0;
    if (!(ls >> u)) continue;
    std::string rest;
    if (!(ls >> v) || (ls >> rest) || u < 0 || v < 0) {
      throw ValidationError("edge list: malformed line " + std::to_string(line_no));
    }
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    max_index = std::max({max_index, edges.back().first, edges.back().second});
  }
  if (edges.empty() && !agents) throw ValidationError("edge list: no edges");
  const std::size_t k = agents.value_or(max_index + 1);
  Graph g(k);
  for (auto [u, v] : edges) g.add_edge(u, v);
  return g;
}

Graph Graph::from_edge_file(const std::filesystem::path& path, std::optional<std::size_t> agents) {
  std::ifstream in(path);
  if (!in) throw ValidationError("edge list: cannot open " + path.string());
  return from_edge_list(in, agents);
}

void Graph::add_edge(std::size_t u, std::size_t v) {
  if (u >= agents() || v >= agents()) {
    std::ostringstream os;
    os << "graph: edge (" << u << "," << v << ") outside 0.." << agents() - 1;
    throw ValidationError(os.str());
  }
  if (u == v) {
    self_loop_[u] = true;
    return;
  }
  neighbors_[u].insert(v);
  neighbors_[v].insert(u);
}

void Graph::add_self_loops() { std::fill(self_loop_.begin(), self_loop_.end(), true); }

bool Graph::adjacent(std::size_t u, std::size_t v) const {
  if (u == v) return self_loop_[u];
  return neighbors_[u].count(v) > 0;
}

ConnectivityReport connectivity_check(const Graph& graph) {
  ConnectivityReport report;
  const std::size_t k = graph.agents();
  std::vector<bool> seen(k, false);
  for (std::size_t start = 0; start < k; ++start) {
    if (seen[start]) continue;
    std::vector<std::size_t> component;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      component.push_back(u);
      for (std::size_t v : graph.neighbors(u)) {
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    std::sort(component.begin(), component.end());
    report.components.push_back(std::move(component));
  }
  report.connected = report.components.size() == 1;
  for (std::size_t u = 0; u < k; ++u) report.has_self_loop = report.has_self_loop || graph.has_self_loop(u);
  report.ok = report.connected && report.has_self_loop;

  std::ostringstream os;
  if (!report.connected) {
    os << "graph is disconnected with " << report.components.size()
       << " components: " << describe_components(report.components);
  }
  if (!report.has_self_loop) {
    if (!report.connected) os << "; ";
    os << "graph has no self-loop";
  }
  report.diagnostics = os.str();
  return report;
}

bool is_primitive(const Eigen::MatrixXd& a) {
  const Eigen::Index k = a.rows();
  Eigen::MatrixXd pattern = (a.array() > 0.0).cast<double>();
  // Repeated squaring up to the Wielandt exponent (K-1)^2 + 1.
  const std::size_t bound = static_cast<std::size_t>((k - 1) * (k - 1) + 1);
  for (std::size_t n = 1;; n *= 2) {
    if ((pattern.array() > 0.0).all()) return true;
    if (n >= bound) return false;
    pattern = ((pattern * pattern).array() > 0.0).cast<double>();
  }
}

CombinationMatrix::CombinationMatrix(Eigen::MatrixXd weights) : a_(std::move(weights)) {
  if (a_.rows() == 0 || a_.rows() != a_.cols()) {
    throw DimensionError("combination matrix: must be square and non-empty");
  }
  if (!a_.allFinite() || (a_.array() < 0.0).any()) {
    throw ValidationError("combination matrix: entries must be finite and nonnegative");
  }
  if (a_ != a_.transpose()) throw ValidationError("combination matrix: not symmetric");
  const Eigen::Index k = a_.rows();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(a_.col(i).sum() - 1.0) > kStochasticTol ||
        std::abs(a_.row(i).sum() - 1.0) > kStochasticTol) {
      throw ValidationError("combination matrix: row or column " + std::to_string(i) +
                            " does not sum to 1");
    }
  }
  if (!is_primitive(a_)) throw ValidationError("combination matrix: not primitive");
}

CombinationMatrix::CombinationMatrix(Eigen::MatrixXd weights, const Graph& graph)
    : CombinationMatrix(std::move(weights)) {
  if (static_cast<std::size_t>(a_.rows()) != graph.agents()) {
    throw DimensionError("combination matrix: size does not match the graph");
  }
  for (Eigen::Index l = 0; l < a_.rows(); ++l) {
    for (Eigen::Index k = 0; k < a_.cols(); ++k) {
      if (l != k && a_(l, k) > 0.0 &&
          !graph.adjacent(static_cast<std::size_t>(l), static_cast<std::size_t>(k))) {
        std::ostringstream os;
        os << "combination matrix: weight on non-edge (" << l << "," << k << ")";
        throw ValidationError(os.str());
      }
    }
  }
}

CombinationMatrix CombinationMatrix::uniform(std::size_t agents) {
  const auto k = static_cast<Eigen::Index>(agents);
  return CombinationMatrix(Eigen::MatrixXd::Constant(k, k, 1.0 / static_cast<double>(agents)));
}

CombinationMatrix CombinationMatrix::identity(std::size_t agents) {
  if (agents != 1) throw ValidationError("combination matrix: identity is primitive only for K = 1");
  return CombinationMatrix(Eigen::MatrixXd::Identity(1, 1));
}

CombinationMatrix metropolis_weights(const Graph& graph) {
  const auto report = connectivity_check(graph);
  if (!report.connected) throw ValidationError("metropolis weights: " + report.diagnostics);
  const std::size_t k = graph.agents();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t u = 0; u < k; ++u) {
    for (std::size_t v : graph.neighbors(u)) {
      a(u, v) = 1.0 / static_cast<double>(std::max(graph.degree(u), graph.degree(v)));
    }
  }
  for (std::size_t u = 0; u < k; ++u) {
    double off = 0.0;
    for (std::size_t v : graph.neighbors(u)) off += a(v, u);
    a(u, u) = std::max(0.0, 1.0 - off);
  }
  return CombinationMatrix(std::move(a), graph);
}

CombinationMatrix uniform_weights(const Graph& graph) {
  const std::size_t k = graph.agents();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t u = 0; u < k; ++u) {
    const double w = 1.0 / static_cast<double>(graph.degree(u) + 1);
    a(u, u) = w;
    for (std::size_t v : graph.neighbors(u)) a(v, u) = w;
  }
  return CombinationMatrix(std::move(a), graph);
}

double second_eigenvalue_modulus(const CombinationMatrix& a) {
  if (a.agents() == 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix(), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending; ev[K-1] is the Perron root
  const Eigen::Index k = ev.size();
  return std::max(std::abs(ev(0)), std::abs(ev(k - 2)));
}

SpectralStats spectral_stats(const CombinationMatrix& a, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("spectral stats: gamma must be > 0");
  SpectralStats s;
  s.rho2 = second_eigenvalue_modulus(a);
  s.lambda = std::max(std::abs(1.0 - static_cast<double>(a.agents()) / gamma), s.rho2);
  return s;
}

LowRankFactor::LowRankFactor(Eigen::MatrixXd q, Eigen::MatrixXd projector,
                             Eigen::MatrixXd a_transpose)
    : q_(std::move(q)), projector_(std::move(projector)), a_transpose_(std::move(a_transpose)) {}

Eigen::VectorXd LowRankFactor::reduce(const Eigen::VectorXd& v) const {
  if (v.size() != a_transpose_.cols()) throw DimensionError("low-rank factor: vector size mismatch");
  return projector_ * (a_transpose_ * v);
}

Eigen::VectorXd LowRankFactor::expand(const Eigen::VectorXd& w_q) const {
  if (w_q.size() != q_.rows()) throw DimensionError("low-rank factor: reduced vector size mismatch");
  return q_.transpose() * w_q;
}

LowRankFactor lowrank_factor(const CombinationMatrix& a, const Eigen::VectorXd& sigma_diag) {
  const Eigen::Index k = static_cast<Eigen::Index>(a.agents());
  if (sigma_diag.size() != k) throw DimensionError("low-rank factor: Sigma size mismatch");
  if (!sigma_diag.allFinite() || (sigma_diag.array() <= 0.0).any()) {
    throw ValidationError("low-rank factor: Sigma entries must be positive");
  }
  const Eigen::MatrixXd& m = a.matrix();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankTol * sv(0)) ++r;

  const Eigen::MatrixXd gram = m.transpose() * sigma_diag.asDiagonal() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  // Eigenvalues ascend, so the r positive ones are the trailing block.
  const Eigen::VectorXd lam = solver.eigenvalues().tail(r).cwiseMax(0.0);
  const Eigen::MatrixXd u = solver.eigenvectors().rightCols(r);
  Eigen::MatrixXd q = lam.cwiseSqrt().asDiagonal() * u.transpose();
  Eigen::MatrixXd projector = (q * q.transpose()).ldlt().solve(q);
  return LowRankFactor(std::move(q), std::move(projector), m.transpose());
}

}  // namespace dhmm
