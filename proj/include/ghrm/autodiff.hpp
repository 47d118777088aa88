#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ghrm/matrix.hpp"

namespace ghrm::ad {

struct Node;

/// Handle to a node of a recorded computation. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const;
  Matrix& mutable_value();
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  double scalar() const;  // throws unless 1x1
  bool requires_grad() const;
  bool valid() const { return node_ != nullptr; }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  Matrix value;
  Matrix grad;  // allocated lazily during backward
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  // Discrete decisions taken by the forward pass (gathered rows, top-k
  // picks, active ReLU units). Treated as constants by backward.
  std::vector<std::size_t> selection;
};

Var constant(Matrix value);
Var leaf(Matrix value);  // requires_grad

// Forward operations. Each throws std::invalid_argument naming both shapes
// on a mismatch.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
/// a (m x c) + bias (1 x c) added to every row.
Var add_row(const Var& a, const Var& bias);
/// a (m x c) with row i scaled by col(i); col is m x 1.
Var broadcast_mul(const Var& a, const Var& col);
/// a scaled by the 1x1 value s.
Var scale_by(const Var& a, const Var& s);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var transpose(const Var& a);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(const Var& a, const std::vector<std::size_t>& index);
/// Per column, the k largest values in descending order (ties: lower row
/// first). Rows beyond the column length are zero.
Var topk_per_column(const Var& a, std::size_t k);
/// Softmax over the entries of a column vector where mask is true; masked
/// entries are exactly 0. Throws if no entry is unmasked.
Var masked_softmax(const Var& x, const std::vector<bool>& mask);
Var sum(const Var& a);
Var add_n(const std::vector<Var>& terms);

/// Row indices of the `count` largest entries of a column vector, ties to
/// the lower index, returned in ascending index order.
std::vector<std::size_t> top_rank(const Matrix& scores, std::size_t count);

/// Accumulates d(loss)/d(node) into the grad of every requires_grad node
/// reachable from loss. Leaf gradients accumulate across calls.
void backward(const Var& loss);

/// Every discrete selection made while computing `out`, in a stable order.
std::vector<std::size_t> selection_signature(const Var& out);

/// Named trainable matrices in insertion order.
class ParamSet {
 public:
  Var add(const std::string& name, Matrix value);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  void zero_grad();
  /// Deep copy of values, for checkpoint retention.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<std::pair<std::string, Var>> entries_;
  std::map<std::string, std::size_t> index_;
};

using GradStore = std::map<std::string, Matrix>;

/// Zeroes parameter gradients, runs backward from a scalar loss, and
/// returns a copy of every parameter's gradient.
GradStore backward(const Var& loss, ParamSet& params);

/// Ordered elementwise sum of gradient stores.
GradStore merge_grads(const std::vector<GradStore>& parts);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose perturbation changed a selection
  std::string worst;        // "name[r,c]" of the worst coordinate
};

/// Central differences against backward. Relative error per coordinate is
/// |analytic - numeric| / max(1, |analytic|, |numeric|). Coordinates whose
/// +/- perturbation changes any discrete selection are skipped.
GradCheckReport grad_check(const std::function<Var()>& f, ParamSet& params, double eps);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamSet& params, const GradStore& grads);
  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
};

/// JSON container {"format": "ghrm-params", "version": 1, "params": [{"name",
/// "rows", "cols", "data"}]}. Doubles are written with round-trip precision.
void save_params(const std::string& path, const ParamSet& params);
/// Loads into an existing ParamSet; names and shapes must match exactly.
void load_params(const std::string& path, ParamSet& params);

}  // namespace ghrm::ad
