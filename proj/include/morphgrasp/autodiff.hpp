#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "morphgrasp/tensor.hpp"

namespace mg::nn {

class Tape;

// Persistent trainable tensor. `grad` accumulates across a batch until the
// optimizer consumes it. Frozen parameters (trainable = false) never receive
// gradient contributions.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
};

// Handle into a Tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

// Records a forward pass as a linear sequence of nodes; reverse iteration over
// the recording order is a valid topological order for backprop. One tape per
// forward pass; deterministic by construction (no threads, fixed loops).
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = false);
    // Mounts a parameter; after backward() its gradient is accumulated into
    // p.grad (skipped when frozen).
    Var param(Parameter& p);

    const Tensor& value(Var v) const;
    // Gradient of the last backward() target w.r.t. v. Zero tensor for nodes
    // that did not require gradients.
    Tensor grad(Var v) const;

    void backward(Var loss);
    bool backward_done() const { return ran_backward_; }

    // internal use by op builders
    Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> backprop);
    // Installed after push so the closure can capture its own node id.
    void set_backprop(int id, std::function<void(Tape&)> backprop);
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }
    void add_grad(int id, const Tensor& delta);
    const Tensor& grad_ref(int id) const { return nodes_[id].grad; }
    const Tensor& value_ref(int id) const { return nodes_[id].value; }
    void check_owns(Var v, const char* who) const;

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Tape&)> backprop;
    };
    std::vector<Node> nodes_;
    std::vector<std::pair<int, Parameter*>> bound_;
    bool ran_backward_ = false;
};

// ---- recorded ops ----

Var matmul(Var a, Var b);
Var matmul_const_left(const Tensor& a, Var b);   // constant lhs (e.g. adjacency)
Var matmul_const_right(Var a, const Tensor& b);  // constant rhs
Var transpose(Var a);
Var add(Var a, Var b);
Var add_scaled(Var a, double wa, Var b, double wb);
Var scale(Var a, double s);
Var add_const(Var a, const Tensor& c);           // e.g. additive attention mask
Var add_rowvec(Var x, Var b);                    // bias broadcast over rows
Var mul_rows_const(Var x, const Tensor& row_scale);  // row i scaled by row_scale[i]
Var relu(Var a);
Var softmax_rows(Var a);
Var layer_norm_rows(Var x, Var gain, Var bias, double eps);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, int c0, int c1);
Var gather_rows(Var a, std::vector<int> indices);
Var tile_rows(Var row, int count);
Var sum_all(Var a);
Var mean_all(Var a);
Var bce_with_logits_mean(Var logits, const Tensor& targets);
Var cross_entropy_row(Var logits, int target_index);

// ---- plain (non-recorded) reference forms ----

double sigmoid(double x);
// Numerically stable mean BCE-with-logits: mean of max(x,0) - x*t + log1p(exp(-|x|)).
double bce_with_logits(const Tensor& logits, const Tensor& targets);
// -log softmax(logits)[target], max-subtraction stabilized.
double cross_entropy(const Tensor& logits, int target_index);
Tensor softmax_vec(const Tensor& logits);

}  // namespace mg::nn
