#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace snntcl {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense row-major tensor of doubles. Copies are shallow; the payload is
/// shared. A tensor only participates in differentiation once a Graph has
/// assigned it a node id.
class Tensor {
 public:
  Tensor() : data_(std::make_shared<std::vector<double>>()) {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor full(Shape shape, double v);
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  std::vector<double>& data() { return *data_; }
  const std::vector<double>& data() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double& at(std::size_t i) { return (*data_)[i]; }

  /// Value of a scalar (rank-0 or single-element) tensor.
  double value() const;

  int node() const { return node_; }
  void set_node(int n) { node_ = n; }
  bool tracked() const { return node_ >= 0; }

  /// Same payload, no graph node.
  Tensor detached() const;
  /// Deep copy of the payload, no graph node.
  Tensor clone() const;

  bool all_finite() const;

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  int node_ = -1;
};

/// Reverse-mode tape. Nodes are recorded in creation order; backward walks
/// them in exact reverse order. One graph per trainer thread; the active
/// graph is thread-local, installed by the constructor and removed by the
/// destructor.
class Graph {
 public:
  Graph();
  ~Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  static Graph* active();

  /// Registers a leaf (parameter) so it can receive a gradient.
  int watch(Tensor& t);

  using BackwardFn = std::function<void(Graph&, int self)>;
  int add_node(std::vector<int> inputs, std::size_t out_size, BackwardFn fn);

  /// Runs reverse accumulation from a scalar loss. Every watched leaf that
  /// contributed to the loss ends up with a gradient retrievable via grad().
  void backward(const Tensor& loss);

  /// Gradient of the last backward() w.r.t. a tracked tensor. Zero tensor
  /// if the tensor did not influence the loss.
  Tensor grad(const Tensor& t) const;

  /// Accumulation buffer for a node, allocated on first touch.
  std::vector<double>& grad_buf(int node);
  bool has_grad(int node) const { return !grads_[node].empty(); }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<int> inputs;
    std::size_t out_size;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  Graph* prev_ = nullptr;
};

// ---- primitives ----------------------------------------------------------

enum class SurrogateKind { Rectangular, Triangular };

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor sum_axis(const Tensor& a, std::size_t axis);
Tensor mean_axis(const Tensor& a, std::size_t axis);
Tensor reshape(const Tensor& a, Shape shape);
Tensor flatten(const Tensor& a);  // [B, ...] -> [B, rest]
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// x:[B,Cin,H,W], w:[Cout,Cin,kh,kw], bias:[Cout] (may be empty).
/// stride in {1,2}, zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t stride, std::size_t pad);
Tensor avgpool2d(const Tensor& x, std::size_t k, std::size_t stride);
/// [B,C,H,W] -> [B,C], mean over spatial dims.
Tensor global_avg_pool(const Tensor& x);
/// x:[B,In], w:[Out,In], bias:[Out] (may be empty) -> [B,Out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
/// Rows scaled to unit L2 norm; exactly-zero rows pass through unchanged
/// (strict=true rejects them instead).
Tensor l2_normalize_rows(const Tensor& a, bool strict = false);

/// Forward: step(u_pre - v_th) with step(0)=1. Backward: the surrogate
/// derivative, never the true (zero a.e.) one.
Tensor heaviside_surrogate(const Tensor& u_pre, double v_th,
                           SurrogateKind kind, double width);
/// Closed-form surrogate derivative, used by the backward pass above and by
/// its tests.
double surrogate_derivative_scalar(double u_pre, double v_th,
                                   SurrogateKind kind, double width);

/// Batch normalization over the batch axis (and spatial dims for rank-4
/// input), per channel. Training mode uses batch statistics and updates the
/// running buffers in place with the given momentum; inference mode uses the
/// running buffers.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 std::vector<double>& running_mean,
                 std::vector<double>& running_var, bool training,
                 double momentum = 0.1, double eps = 1e-5);

/// Mean cross-entropy of softmax(logits[B,C]) against integer labels.
Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int>& labels);

/// Central-difference gradient of a tensor-to-scalar function.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& x, double step);

}  // namespace snntcl
