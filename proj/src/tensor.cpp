#include "snntcl/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace snntcl {

namespace {
thread_local Graph* g_active = nullptr;

std::size_t shape_product(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}
}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(shape_product(shape_), 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(std::move(values))) {
  if (data_->size() != shape_product(shape_))
    throw ShapeError("tensor: " + std::to_string(data_->size()) +
                     " values do not fill shape " + shape_str(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = v;
  return t;
}

double Tensor::value() const {
  if (data_->size() != 1)
    throw ShapeError("value(): tensor of shape " + shape_str(shape_) +
                     " is not scalar");
  return (*data_)[0];
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.node_ = -1;
  return t;
}

Tensor Tensor::clone() const {
  Tensor t(shape_, *data_);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : *data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Graph::Graph() {
  prev_ = g_active;
  g_active = this;
}

Graph::~Graph() { g_active = prev_; }

Graph* Graph::active() { return g_active; }

int Graph::watch(Tensor& t) {
  if (t.tracked()) return t.node();
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{{}, t.size(), nullptr});
  grads_.emplace_back();
  t.set_node(id);
  return id;
}

int Graph::add_node(std::vector<int> inputs, std::size_t out_size,
                    BackwardFn fn) {
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{std::move(inputs), out_size, std::move(fn)});
  grads_.emplace_back();
  return id;
}

std::vector<double>& Graph::grad_buf(int node) {
  auto& buf = grads_[node];
  if (buf.empty()) buf.assign(nodes_[node].out_size, 0.0);
  return buf;
}

void Graph::backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw ValidationError("backward: loss has shape " +
                          shape_str(loss.shape()) + ", expected scalar");
  if (!loss.tracked() || loss.node() >= static_cast<int>(nodes_.size()))
    throw ValidationError("backward: loss was not produced in this graph");
  for (auto& g : grads_) g.clear();
  grad_buf(loss.node())[0] = 1.0;
  for (int i = loss.node(); i >= 0; --i) {
    if (grads_[i].empty() || !nodes_[i].backward) continue;
    nodes_[i].backward(*this, i);
  }
}

Tensor Graph::grad(const Tensor& t) const {
  if (!t.tracked() || t.node() >= static_cast<int>(nodes_.size()))
    throw ValidationError("grad: tensor is not tracked by this graph");
  Tensor g(t.shape());
  const auto& buf = grads_[t.node()];
  if (!buf.empty()) g.data() = buf;
  return g;
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& x, double step) {
  if (step <= 0) throw ValidationError("finite_diff_gradient: step must be > 0");
  Tensor g(x.shape());
  Tensor probe = x.clone();
  for (std::size_t i = 0; i < x.size(); ++i) {
    double orig = probe[i];
    probe.at(i) = orig + step;
    double fp = f(probe);
    probe.at(i) = orig - step;
    double fm = f(probe);
    probe.at(i) = orig;
    g.at(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace snntcl
