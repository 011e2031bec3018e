#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "morphgrasp/autodiff.hpp"
#include "morphgrasp/rng.hpp"

namespace mg::nn {

// Owns named parameters with stable addresses and deterministic (insertion)
// iteration order. Checkpoints and the optimizer both rely on that order.
class ParamStore {
  public:
    Parameter& add(const std::string& name, Tensor value, bool trainable = true);
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::size_t size() const { return params_.size(); }
    std::size_t total_values() const;
    void zero_grads();
    // Flips the trainable flag on every parameter whose name starts with prefix.
    void set_trainable_prefix(const std::string& prefix, bool trainable);

  private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// y = x W (+ b). b == nullptr for bias-free layers (keeps zero rows zero).
struct DenseWeights {
    Parameter* w = nullptr;
    Parameter* b = nullptr;
};

struct LayerNormWeights {
    Parameter* gain = nullptr;
    Parameter* bias = nullptr;
};

struct AttentionWeights {
    DenseWeights q, k, v, o;
    int heads = 1;
};

struct FeedForwardWeights {
    DenseWeights in, out;
};

struct TransformerWeights {
    AttentionWeights self_attn, cross_attn;
    LayerNormWeights ln1, ln2, ln3;
    FeedForwardWeights ff;
    DenseWeights proj;  // zero-initialized: module output is 0 until trained
};

struct GcnEncoderWeights {
    std::vector<DenseWeights> hidden;
    DenseWeights out;
};

struct MlpWeights {
    std::vector<DenseWeights> layers;  // relu between layers, raw output
};

// ---- builders (uniform +-1/sqrt(fan_in) weights, zero biases) ----

DenseWeights make_dense(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
                        bool bias = true);
DenseWeights make_dense_zero(ParamStore& ps, const std::string& name, int in, int out,
                             bool bias = true);
LayerNormWeights make_layer_norm(ParamStore& ps, const std::string& name, int dim);
AttentionWeights make_attention(ParamStore& ps, const std::string& name, int dim, int heads,
                                Rng& rng);
TransformerWeights make_transformer(ParamStore& ps, const std::string& name, int dim, int heads,
                                    int ff, Rng& rng);
// Three bias-free relu GCN layers of width `hidden` plus a bias-free linear head to `out`.
GcnEncoderWeights make_gcn_encoder(ParamStore& ps, const std::string& name, int in, int hidden,
                                   int hidden_layers, int out, Rng& rng);
MlpWeights make_mlp(ParamStore& ps, const std::string& name, const std::vector<int>& dims,
                    Rng& rng);

// ---- forward ops ----

Var linear(Tape& t, Var x, const DenseWeights& w);

// One graph-convolution step: relu(adj_norm . x . W). adj_norm is constant
// within a forward pass. Bias-free so zero (padded) rows stay exactly zero.
Var gcn_layer(Tape& t, const DenseWeights& w, const Tensor& adj_norm, Var x);
Var gcn_encode(Tape& t, const GcnEncoderWeights& w, const Tensor& adj_norm, Var x);

// Scaled dot-product attention over `heads` slices. Rows of kv past kv_real are
// masked out of every softmax (additive -1e30 on the scores), which keeps real
// outputs bit-identical no matter how much trailing padding kv carries.
// q_real/kv_real == -1 means all rows are real.
Var multi_head_attention(Tape& t, const AttentionWeights& w, Var q_in, Var kv_in, int q_real,
                         int kv_real, Tensor* avg_cross_weights = nullptr);

// Post-norm block (self-attn, cross-attn, feed-forward, each with residual +
// layer norm) followed by the zero-initialized output projection. Rows of the
// output past q_real are forced to exactly zero.
Var transformer_module(Tape& t, const TransformerWeights& w, Var queries, int q_real, Var memory,
                       int m_real, Tensor* avg_cross_weights = nullptr);

Var mlp_forward(Tape& t, const MlpWeights& w, Var x);

// ---- adjacency helpers ----

// Dense [s, s] 0/1 matrix from an undirected edge list, optionally with self loops.
Tensor adjacency_from_edges(int s, const std::vector<std::pair<int, int>>& edges,
                            bool self_loops);
// mode "row": D^-1 A (zero-degree rows stay zero). mode "sym": D^-1/2 A D^-1/2.
Tensor normalize_adjacency(const Tensor& adj, const std::string& mode);

constexpr double kLayerNormEps = 1e-5;
constexpr double kAttentionMask = -1e30;

}  // namespace mg::nn
