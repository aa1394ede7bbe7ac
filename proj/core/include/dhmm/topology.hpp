#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dhmm {

/// Undirected graph over agents 0..K-1. Self-loops are tracked separately
/// from the neighbor sets so that degrees exclude them.
class Graph {
 public:
  explicit Graph(std::size_t agents);

  static Graph complete(std::size_t agents, bool self_loops = true);
  static Graph path(std::size_t agents, bool self_loops = true);
  static Graph ring(std::size_t agents, bool self_loops = true);
  static Graph star(std::size_t agents, bool self_loops = true);

  /// Parses "u v" lines (0-indexed, "u u" marks a self-loop). Blank lines
  /// and text after '#' are ignored. The agent count is the largest index
  /// plus one unless `agents` is given.
  static Graph from_edge_list(std::istream& in, std::optional<std::size_t> agents = std::nullopt);
  static Graph from_edge_file(const std::filesystem::path& path,
                              std::optional<std::size_t> agents = std::nullopt);

  void add_edge(std::size_t u, std::size_t v);
  void add_self_loops();

  std::size_t agents() const { return neighbors_.size(); }
  const std::set<std::size_t>& neighbors(std::size_t k) const { return neighbors_[k]; }
  std::size_t degree(std::size_t k) const { return neighbors_[k].size(); }
  bool has_self_loop(std::size_t k) const { return self_loop_[k]; }
  bool adjacent(std::size_t u, std::size_t v) const;

 private:
  std::vector<std::set<std::size_t>> neighbors_;
  std::vector<bool> self_loop_;
};

struct ConnectivityReport {
  bool ok = false;
  bool connected = false;
  bool has_self_loop = false;
  std::vector<std::vector<std::size_t>> components;
  std::string diagnostics;
};

/// Connected and at least one self-loop.
ConnectivityReport connectivity_check(const Graph& graph);

/// Symmetric doubly-stochastic primitive K x K matrix. Entry (l, k) is the
/// weight agent k assigns to agent l.
class CombinationMatrix {
 public:
  /// Validates nonnegativity, exact symmetry, unit row and column sums
  /// within 1e-12, and primitivity.
  explicit CombinationMatrix(Eigen::MatrixXd weights);
  /// Additionally checks that off-diagonal weight appears only on edges.
  CombinationMatrix(Eigen::MatrixXd weights, const Graph& graph);

  static CombinationMatrix uniform(std::size_t agents);
  static CombinationMatrix identity(std::size_t agents);

  std::size_t agents() const { return static_cast<std::size_t>(a_.rows()); }
  double operator()(std::size_t l, std::size_t k) const { return a_(l, k); }
  const Eigen::MatrixXd& matrix() const { return a_; }

 private:
  Eigen::MatrixXd a_;
};

/// Some power of the nonnegative matrix is entrywise positive.
bool is_primitive(const Eigen::MatrixXd& a);

/// a_lk = 1/max(d_l, d_k) on edges, residual mass on the diagonal.
CombinationMatrix metropolis_weights(const Graph& graph);
/// a_lk = 1/(d_k + 1) on the closed neighborhood; symmetric only on regular graphs.
CombinationMatrix uniform_weights(const Graph& graph);

struct SpectralStats {
  double rho2 = 0.0;
  double lambda = 0.0;
};

/// rho2 is the second largest eigenvalue modulus; lambda = max(|1 - K/gamma|, rho2).
SpectralStats spectral_stats(const CombinationMatrix& a, double gamma);
double second_eigenvalue_modulus(const CombinationMatrix& a);

/// A^T Sigma A = Q^T Q with Q of full row rank r.
class LowRankFactor {
 public:
  LowRankFactor(Eigen::MatrixXd q, Eigen::MatrixXd projector, Eigen::MatrixXd a_transpose);

  std::size_t rank() const { return static_cast<std::size_t>(q_.rows()); }
  std::size_t agents() const { return static_cast<std::size_t>(q_.cols()); }
  /// r x K.
  const Eigen::MatrixXd& q() const { return q_; }
  /// (Q^T)^+ = (Q Q^T)^{-1} Q, r x K.
  const Eigen::MatrixXd& q_transpose_pinv() const { return projector_; }

  /// v_Q = (Q^T)^+ A^T v, so that A^T v = Q^T v_Q.
  Eigen::VectorXd reduce(const Eigen::VectorXd& v) const;
  /// Q^T w_Q.
  Eigen::VectorXd expand(const Eigen::VectorXd& w_q) const;

 private:
  Eigen::MatrixXd q_;
  Eigen::MatrixXd projector_;
  Eigen::MatrixXd a_transpose_;
};

/// Rank is decided on the singular values of A with a 1e-10 relative cut.
LowRankFactor lowrank_factor(const CombinationMatrix& a, const Eigen::VectorXd& sigma_diag);

}  // namespace dhmm
