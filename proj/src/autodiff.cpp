#include "ghrm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace ghrm::ad {

const Matrix& Var::value() const { return node_->value; }
Matrix& Var::mutable_value() { return node_->value; }
const Matrix& Var::grad() const { return node_->grad; }
bool Var::requires_grad() const { return node_->requires_grad; }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows != 1 || v.cols != 1) throw std::invalid_argument("expected scalar, got " + v.shape());
  return v.data[0];
}

namespace {

Var make(Matrix value, const char* op, std::vector<Var> parents,
         std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  for (const auto& p : parents) {
    node->requires_grad = node->requires_grad || p.requires_grad();
    node->parents.push_back(p.shared());
  }
  if (node->requires_grad) node->backward_fn = std::move(backward_fn);
  return Var(std::move(node));
}

// Gradient buffer of a parent, or nullptr when it needs none.
Matrix* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows, p.value.cols);
  return &p.grad;
}

const Matrix& value_of(Node& self, std::size_t i) { return self.parents[i]->value; }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape() + " and " +
                              b.shape());
}

void require_same(const char* op, const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) shape_error(op, a.value(), b.value());
}

template <typename F, typename DF>
Var unary(const Var& a, const char* op, F f, DF df_from_output) {
  Matrix out(a.rows(), a.cols());
  const auto& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = f(x.data[i]);
  return make(std::move(out), op, {a}, [df_from_output](Node& self) {
    Matrix* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < self.value.size(); ++i)
      ga->data[i] += self.grad.data[i] * df_from_output(self.value.data[i]);
  });
}

}  // namespace

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "constant";
  return Var(std::move(node));
}

Var leaf(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var matmul(const Var& a, const Var& b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.cols != B.rows) shape_error("matmul", A, B);
  Matrix out(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      for (std::size_t j = 0; j < B.cols; ++j) out(i, j) += aik * B(k, j);
    }
  return make(std::move(out), "matmul", {a, b}, [](Node& self) {
    const Matrix& A = value_of(self, 0);
    const Matrix& B = value_of(self, 1);
    const Matrix& G = self.grad;
    if (Matrix* ga = grad_of(self, 0))  // G * B^T
      for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = 0; k < A.cols; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < B.cols; ++j) acc += G(i, j) * B(k, j);
          (*ga)(i, k) += acc;
        }
    if (Matrix* gb = grad_of(self, 1))  // A^T * G
      for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = 0; k < A.cols; ++k) {
          const double aik = A(i, k);
          for (std::size_t j = 0; j < B.cols; ++j) (*gb)(k, j) += aik * G(i, j);
        }
  });
}

Var add(const Var& a, const Var& b) {
  require_same("add", a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
  return make(std::move(out), "add", {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (Matrix* g = grad_of(self, p))
        for (std::size_t i = 0; i < g->size(); ++i) g->data[i] += self.grad.data[i];
  });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
  return make(std::move(out), "sub", {a, b}, [](Node& self) {
    if (Matrix* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) g->data[i] += self.grad.data[i];
    if (Matrix* g = grad_of(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) g->data[i] -= self.grad.data[i];
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same("hadamard", a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
  return make(std::move(out), "hadamard", {a, b}, [](Node& self) {
    const Matrix& A = value_of(self, 0);
    const Matrix& B = value_of(self, 1);
    if (Matrix* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < ga->size(); ++i) ga->data[i] += self.grad.data[i] * B.data[i];
    if (Matrix* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < gb->size(); ++i) gb->data[i] += self.grad.data[i] * A.data[i];
  });
}

Var add_row(const Var& a, const Var& bias) {
  const auto& A = a.value();
  const auto& b = bias.value();
  if (b.rows != 1 || b.cols != A.cols) shape_error("add_row", A, b);
  Matrix out = A;
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) out(i, j) += b(0, j);
  return make(std::move(out), "add_row", {a, bias}, [](Node& self) {
    const Matrix& G = self.grad;
    if (Matrix* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < G.size(); ++i) ga->data[i] += G.data[i];
    if (Matrix* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < G.rows; ++i)
        for (std::size_t j = 0; j < G.cols; ++j) (*gb)(0, j) += G(i, j);
  });
}

Var broadcast_mul(const Var& a, const Var& col) {
  const auto& A = a.value();
  const auto& c = col.value();
  if (c.cols != 1 || c.rows != A.rows) shape_error("broadcast_mul", A, c);
  Matrix out = A;
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) out(i, j) *= c(i, 0);
  return make(std::move(out), "broadcast_mul", {a, col}, [](Node& self) {
    const Matrix& A = value_of(self, 0);
    const Matrix& c = value_of(self, 1);
    const Matrix& G = self.grad;
    if (Matrix* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) (*ga)(i, j) += G(i, j) * c(i, 0);
    if (Matrix* gc = grad_of(self, 1))
      for (std::size_t i = 0; i < A.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) acc += G(i, j) * A(i, j);
        (*gc)(i, 0) += acc;
      }
  });
}

Var scale_by(const Var& a, const Var& s) {
  const auto& S = s.value();
  if (S.rows != 1 || S.cols != 1) shape_error("scale_by", a.value(), S);
  Matrix out = a.value();
  for (auto& x : out.data) x *= S.data[0];
  return make(std::move(out), "scale_by", {a, s}, [](Node& self) {
    const Matrix& A = value_of(self, 0);
    const double sv = value_of(self, 1).data[0];
    if (Matrix* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < ga->size(); ++i) ga->data[i] += self.grad.data[i] * sv;
    if (Matrix* gs = grad_of(self, 1)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < A.size(); ++i) acc += self.grad.data[i] * A.data[i];
      gs->data[0] += acc;
    }
  });
}

Var scale(const Var& a, double s) {
  Matrix out = a.value();
  for (auto& x : out.data) x *= s;
  return make(std::move(out), "scale", {a}, [s](Node& self) {
    if (Matrix* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) g->data[i] += self.grad.data[i] * s;
  });
}

Var add_scalar(const Var& a, double s) {
  Matrix out = a.value();
  for (auto& x : out.data) x += s;
  return make(std::move(out), "add_scalar", {a}, [](Node& self) {
    if (Matrix* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) g->data[i] += self.grad.data[i];
  });
}

Var sigmoid(const Var& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  Var out = unary(
      a, "relu", [](double x) { return x < 0.0 ? 0.0 : x; },
      [](double y) { return y > 0.0 ? 1.0 : 0.0; });
  const auto& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x.data[i] > 0.0) out.node()->selection.push_back(i);
  return out;
}

Var transpose(const Var& a) {
  const auto& A = a.value();
  Matrix out(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) out(j, i) = A(i, j);
  return make(std::move(out), "transpose", {a}, [](Node& self) {
    if (Matrix* g = grad_of(self, 0))
      for (std::size_t i = 0; i < g->rows; ++i)
        for (std::size_t j = 0; j < g->cols; ++j) (*g)(i, j) += self.grad(j, i);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts.front().value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + offset);
    offset += p.value().size();
  }
  return make(std::move(out), "concat_rows", parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      const std::size_t n = self.parents[p]->value.size();
      if (Matrix* g = grad_of(self, p))
        for (std::size_t i = 0; i < n; ++i) g->data[i] += self.grad.data[offset + i];
      offset += n;
    }
  });
}

Var gather_rows(const Var& a, const std::vector<std::size_t>& index) {
  const auto& A = a.value();
  Matrix out(index.size(), A.cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= A.rows)
      throw std::out_of_range("gather_rows: row " + std::to_string(index[r]) + " of " + A.shape());
    for (std::size_t j = 0; j < A.cols; ++j) out(r, j) = A(index[r], j);
  }
  Var v = make(std::move(out), "gather_rows", {a}, [](Node& self) {
    if (Matrix* g = grad_of(self, 0))
      for (std::size_t r = 0; r < self.selection.size(); ++r)
        for (std::size_t j = 0; j < g->cols; ++j) (*g)(self.selection[r], j) += self.grad(r, j);
  });
  v.node()->selection = index;
  return v;
}

Var topk_per_column(const Var& a, std::size_t k) {
  const auto& A = a.value();
  const std::size_t take = std::min(k, A.rows);
  Matrix out(k, A.cols);
  std::vector<std::size_t> chosen;  // column-major, `take` rows per column
  chosen.reserve(take * A.cols);
  std::vector<std::size_t> order(A.rows);
  for (std::size_t j = 0; j < A.cols; ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t x, std::size_t y) {
                        if (A(x, j) != A(y, j)) return A(x, j) > A(y, j);
                        return x < y;
                      });
    for (std::size_t r = 0; r < take; ++r) {
      out(r, j) = A(order[r], j);
      chosen.push_back(order[r]);
    }
  }
  Var v = make(std::move(out), "topk_per_column", {a}, [take](Node& self) {
    Matrix* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t j = 0; j < g->cols; ++j)
      for (std::size_t r = 0; r < take; ++r) (*g)(self.selection[j * take + r], j) += self.grad(r, j);
  });
  v.node()->selection = std::move(chosen);
  return v;
}

Var masked_softmax(const Var& x, const std::vector<bool>& mask) {
  const auto& X = x.value();
  if (X.cols != 1 || mask.size() != X.rows)
    throw std::invalid_argument("masked_softmax: expected column of length " +
                                std::to_string(mask.size()) + ", got " + X.shape());
  double mx = -INFINITY;
  for (std::size_t i = 0; i < X.rows; ++i)
    if (mask[i]) mx = std::max(mx, X.data[i]);
  if (mx == -INFINITY) throw std::invalid_argument("masked_softmax: every entry is masked");
  Matrix out(X.rows, 1);
  double z = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i)
    if (mask[i]) z += (out.data[i] = std::exp(X.data[i] - mx));
  for (auto& y : out.data) y /= z;
  return make(std::move(out), "masked_softmax", {x}, [](Node& self) {
    Matrix* g = grad_of(self, 0);
    if (!g) return;
    const auto& y = self.value.data;
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * self.grad.data[i];
    // Masked entries have y = 0 and so receive no gradient.
    for (std::size_t i = 0; i < y.size(); ++i) g->data[i] += y[i] * (self.grad.data[i] - dot);
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double x : a.value().data) s += x;
  return make(Matrix(1, 1, s), "sum", {a}, [](Node& self) {
    if (Matrix* g = grad_of(self, 0))
      for (auto& x : g->data) x += self.grad.data[0];
  });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw std::invalid_argument("add_n: no inputs");
  for (const auto& t : terms) require_same("add_n", terms.front(), t);
  Matrix out = terms.front().value();
  for (std::size_t p = 1; p < terms.size(); ++p)
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += terms[p].value().data[i];
  return make(std::move(out), "add_n", terms, [](Node& self) {
    for (std::size_t p = 0; p < self.parents.size(); ++p)
      if (Matrix* g = grad_of(self, p))
        for (std::size_t i = 0; i < g->size(); ++i) g->data[i] += self.grad.data[i];
  });
}

std::vector<std::size_t> top_rank(const Matrix& scores, std::size_t count) {
  if (scores.cols != 1) throw std::invalid_argument("top_rank: expected column, got " + scores.shape());
  count = std::min(count, scores.rows);
  std::vector<std::size_t> order(scores.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t x, std::size_t y) {
                      if (scores.data[x] != scores.data[y]) return scores.data[x] > scores.data[y];
                      return x < y;
                    });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

// Post-order over nodes that need gradients: parents precede children.
std::vector<Node*> topo_order(Node* root, bool grad_only) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if ((!grad_only || p->requires_grad) && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Var& loss) {
  const auto& L = loss.value();
  if (L.rows != 1 || L.cols != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + L.shape());
  if (!loss.requires_grad()) return;
  auto order = topo_order(loss.node(), true);
  for (Node* n : order)
    if (n->backward_fn) n->grad = Matrix(n->value.rows, n->value.cols);
  if (!loss.node()->grad.same_shape(L)) loss.node()->grad = Matrix(1, 1);
  loss.node()->grad.data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

std::vector<std::size_t> selection_signature(const Var& out) {
  std::vector<std::size_t> sig;
  for (Node* n : topo_order(out.node(), false)) {
    if (n->selection.empty() && std::string_view(n->op) != "relu") continue;
    sig.push_back(n->selection.size());
    sig.insert(sig.end(), n->selection.begin(), n->selection.end());
  }
  return sig;
}

Var ParamSet::add(const std::string& name, Matrix value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter \"" + name + "\"");
  index_[name] = entries_.size();
  entries_.emplace_back(name, leaf(std::move(value)));
  return entries_.back().second;
}

const Var& ParamSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter \"" + name + "\"");
  return entries_[it->second].second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : entries_) n += v.value().size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [_, v] : entries_) v.node()->grad = Matrix(v.rows(), v.cols());
}

std::vector<Matrix> ParamSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(entries_.size());
  for (const auto& [_, v] : entries_) out.push_back(v.value());
  return out;
}

void ParamSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != entries_.size()) throw std::invalid_argument("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& v = entries_[i].second;
    if (!v.value().same_shape(values[i])) shape_error("restore", v.value(), values[i]);
    v.mutable_value() = values[i];
  }
}

GradStore backward(const Var& loss, ParamSet& params) {
  params.zero_grad();
  backward(loss);
  GradStore out;
  for (const auto& [name, v] : params.entries()) out[name] = v.grad();
  return out;
}

GradStore merge_grads(const std::vector<GradStore>& parts) {
  GradStore out;
  for (const auto& part : parts)
    for (const auto& [name, g] : part) {
      auto [it, inserted] = out.emplace(name, g);
      if (inserted) continue;
      if (!it->second.same_shape(g)) shape_error("merge_grads", it->second, g);
      for (std::size_t i = 0; i < g.size(); ++i) it->second.data[i] += g.data[i];
    }
  return out;
}

GradCheckReport grad_check(const std::function<Var()>& f, ParamSet& params, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be > 0");
  Var base = f();
  const auto base_sig = selection_signature(base);
  const GradStore analytic = backward(base, params);

  GradCheckReport report;
  for (const auto& [name, var] : params.entries()) {
    Var p = var;
    const Matrix& g = analytic.at(name);
    for (std::size_t i = 0; i < p.value().size(); ++i) {
      const double orig = p.value().data[i];
      p.mutable_value().data[i] = orig + eps;
      Var plus = f();
      p.mutable_value().data[i] = orig - eps;
      Var minus = f();
      p.mutable_value().data[i] = orig;
      if (selection_signature(plus) != base_sig || selection_signature(minus) != base_sig) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus.scalar() - minus.scalar()) / (2.0 * eps);
      const double a = g.data[i];
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++report.checked;
      if (report.worst.empty() || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = name + "[" + std::to_string(i / p.cols()) + "," +
                       std::to_string(i % p.cols()) + "]";
      }
    }
  }
  return report;
}

void Adam::step(ParamSet& params, const GradStore& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, var] : params.entries()) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    const Matrix& g = it->second;
    Var p = var;
    if (!g.same_shape(p.value())) shape_error("adam_step", p.value(), g);
    auto& m = m_[name];
    auto& v = v_[name];
    if (!m.same_shape(g)) m = Matrix(g.rows, g.cols);
    if (!v.same_shape(g)) v = Matrix(g.rows, g.cols);
    auto& theta = p.mutable_value().data;
    for (std::size_t i = 0; i < g.size(); ++i) {
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / c1;
      const double vhat = v.data[i] / c2;
      theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void save_params(const std::string& path, const ParamSet& params) {
  nlohmann::json doc;
  doc["format"] = "ghrm-params";
  doc["version"] = 1;
  doc["params"] = nlohmann::json::array();
  for (const auto& [name, v] : params.entries())
    doc["params"].push_back(
        {{"name", name}, {"rows", v.rows()}, {"cols", v.cols()}, {"data", v.value().data}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  out << doc.dump(1) << '\n';
}

void load_params(const std::string& path, ParamSet& params) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (doc.value("format", "") != "ghrm-params" || doc.value("version", 0) != 1)
    throw std::runtime_error(path + ": not a version 1 ghrm-params file");
  const auto& list = doc.at("params");
  if (list.size() != params.size())
    throw std::runtime_error(path + ": expected " + std::to_string(params.size()) +
                             " parameters, found " + std::to_string(list.size()));
  std::vector<Matrix> values;
  for (const auto& [name, v] : params.entries()) {
    auto it = std::find_if(list.begin(), list.end(),
                           [&](const nlohmann::json& e) { return e.at("name") == name; });
    if (it == list.end()) throw std::runtime_error(path + ": missing parameter \"" + name + "\"");
    Matrix m((*it).at("rows").get<std::size_t>(), (*it).at("cols").get<std::size_t>(),
             (*it).at("data").get<std::vector<double>>());
    if (!m.same_shape(v.value()))
      throw std::runtime_error(path + ": parameter \"" + name + "\" has shape " + m.shape() +
                               ", model expects " + v.value().shape());
    values.push_back(std::move(m));
  }
  params.restore(values);
}

}  // namespace ghrm::ad
