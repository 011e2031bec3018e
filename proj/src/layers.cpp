#include "morphgrasp/layers.hpp"

#include <cmath>

#include "morphgrasp/errors.hpp"

namespace mg::nn {

Parameter& ParamStore::add(const std::string& name, Tensor value, bool trainable) {
    if (index_.count(name))
        throw ConfigMismatch("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->grad = Tensor::zeros(value.shape());
    p->value = std::move(value);
    p->trainable = trainable;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigMismatch("unknown parameter: " + name);
    return *params_[it->second];
}

const Parameter& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigMismatch("unknown parameter: " + name);
    return *params_[it->second];
}

std::vector<Parameter*> ParamStore::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParamStore::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (auto& p : params_) n += p->value.numel();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& p : params_)
        for (std::size_t i = 0; i < p->grad.numel(); ++i) p->grad[i] = 0.0;
}

void ParamStore::set_trainable_prefix(const std::string& prefix, bool trainable) {
    for (auto& p : params_)
        if (p->name.rfind(prefix, 0) == 0) p->trainable = trainable;
}

namespace {

Tensor uniform_fan_in(int in, int out, Rng& rng) {
    Tensor w({in, out});
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

DenseWeights make_dense(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
                        bool bias) {
    DenseWeights d;
    d.w = &ps.add(name + ".w", uniform_fan_in(in, out, rng));
    if (bias) d.b = &ps.add(name + ".b", Tensor::zeros({1, out}));
    return d;
}

DenseWeights make_dense_zero(ParamStore& ps, const std::string& name, int in, int out, bool bias) {
    DenseWeights d;
    d.w = &ps.add(name + ".w", Tensor::zeros({in, out}));
    if (bias) d.b = &ps.add(name + ".b", Tensor::zeros({1, out}));
    return d;
}

LayerNormWeights make_layer_norm(ParamStore& ps, const std::string& name, int dim) {
    LayerNormWeights ln;
    ln.gain = &ps.add(name + ".g", Tensor::full({1, dim}, 1.0));
    ln.bias = &ps.add(name + ".b", Tensor::zeros({1, dim}));
    return ln;
}

AttentionWeights make_attention(ParamStore& ps, const std::string& name, int dim, int heads,
                                Rng& rng) {
    if (heads <= 0 || dim % heads != 0)
        throw HeadDivisibility("attention dim " + std::to_string(dim) + " not divisible by " +
                               std::to_string(heads) + " heads");
    AttentionWeights a;
    a.heads = heads;
    a.q = make_dense(ps, name + ".q", dim, dim, rng);
    a.k = make_dense(ps, name + ".k", dim, dim, rng);
    a.v = make_dense(ps, name + ".v", dim, dim, rng);
    a.o = make_dense(ps, name + ".o", dim, dim, rng);
    return a;
}

TransformerWeights make_transformer(ParamStore& ps, const std::string& name, int dim, int heads,
                                    int ff, Rng& rng) {
    TransformerWeights t;
    t.self_attn = make_attention(ps, name + ".self", dim, heads, rng);
    t.cross_attn = make_attention(ps, name + ".cross", dim, heads, rng);
    t.ln1 = make_layer_norm(ps, name + ".ln1", dim);
    t.ln2 = make_layer_norm(ps, name + ".ln2", dim);
    t.ln3 = make_layer_norm(ps, name + ".ln3", dim);
    t.ff.in = make_dense(ps, name + ".ff_in", dim, ff, rng);
    t.ff.out = make_dense(ps, name + ".ff_out", ff, dim, rng);
    t.proj = make_dense_zero(ps, name + ".proj", dim, dim);
    return t;
}

GcnEncoderWeights make_gcn_encoder(ParamStore& ps, const std::string& name, int in, int hidden,
                                   int hidden_layers, int out, Rng& rng) {
    GcnEncoderWeights g;
    int prev = in;
    for (int i = 0; i < hidden_layers; ++i) {
        g.hidden.push_back(
            make_dense(ps, name + ".h" + std::to_string(i), prev, hidden, rng, false));
        prev = hidden;
    }
    g.out = make_dense(ps, name + ".out", prev, out, rng, false);
    return g;
}

MlpWeights make_mlp(ParamStore& ps, const std::string& name, const std::vector<int>& dims,
                    Rng& rng) {
    if (dims.size() < 2) throw ConfigMismatch("mlp needs at least input and output widths");
    MlpWeights m;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        m.layers.push_back(
            make_dense(ps, name + ".l" + std::to_string(i), dims[i], dims[i + 1], rng));
    return m;
}

Var linear(Tape& t, Var x, const DenseWeights& w) {
    Var y = matmul(x, t.param(*w.w));
    if (w.b) y = add_rowvec(y, t.param(*w.b));
    return y;
}

Var gcn_layer(Tape& t, const DenseWeights& w, const Tensor& adj_norm, Var x) {
    return relu(linear(t, matmul_const_left(adj_norm, x), w));
}

Var gcn_encode(Tape& t, const GcnEncoderWeights& w, const Tensor& adj_norm, Var x) {
    Var h = x;
    for (const DenseWeights& layer : w.hidden) h = gcn_layer(t, layer, adj_norm, h);
    return linear(t, matmul_const_left(adj_norm, h), w.out);
}

namespace {

// Additive score mask: 0 for real kv columns, -1e30 for padded ones. The
// masked entries underflow to exactly 0 in softmax, so real outputs do not
// depend on padding width at all.
Tensor key_mask(int s_q, int s_kv, int kv_real) {
    Tensor m({s_q, s_kv});
    for (int i = 0; i < s_q; ++i)
        for (int j = kv_real; j < s_kv; ++j) m.at(i, j) = kAttentionMask;
    return m;
}

}  // namespace

Var multi_head_attention(Tape& t, const AttentionWeights& w, Var q_in, Var kv_in, int q_real,
                         int kv_real, Tensor* avg_cross_weights) {
    (void)q_real;  // padded query rows are cleaned up by the caller
    const int dim = t.value(q_in).cols();
    const int s_q = t.value(q_in).rows();
    const int s_kv = t.value(kv_in).rows();
    const int dh = dim / w.heads;

    Var q = linear(t, q_in, w.q);
    Var k = linear(t, kv_in, w.k);
    Var v = linear(t, kv_in, w.v);

    bool masked = kv_real >= 0 && kv_real < s_kv;
    Tensor mask = masked ? key_mask(s_q, s_kv, kv_real) : Tensor();
    if (avg_cross_weights) *avg_cross_weights = Tensor::zeros({s_q, s_kv});

    std::vector<Var> heads;
    for (int h = 0; h < w.heads; ++h) {
        Var qh = slice_cols(q, h * dh, (h + 1) * dh);
        Var kh = slice_cols(k, h * dh, (h + 1) * dh);
        Var vh = slice_cols(v, h * dh, (h + 1) * dh);
        Var scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        if (masked) scores = add_const(scores, mask);
        Var attn = softmax_rows(scores);
        if (avg_cross_weights) {
            const Tensor& a = t.value(attn);
            for (std::size_t i = 0; i < a.numel(); ++i)
                (*avg_cross_weights)[i] += a[i] / w.heads;
        }
        heads.push_back(matmul(attn, vh));
    }
    return linear(t, concat_cols(heads), w.o);
}

namespace {

Var residual_norm(Tape& t, const LayerNormWeights& ln, Var x, Var dx) {
    return layer_norm_rows(add(x, dx), t.param(*ln.gain), t.param(*ln.bias), kLayerNormEps);
}

}  // namespace

Var transformer_module(Tape& t, const TransformerWeights& w, Var queries, int q_real, Var memory,
                       int m_real, Tensor* avg_cross_weights) {
    Var x = queries;
    x = residual_norm(t, w.ln1, x, multi_head_attention(t, w.self_attn, x, x, q_real, q_real));
    x = residual_norm(t, w.ln2, x,
                      multi_head_attention(t, w.cross_attn, x, memory, q_real, m_real,
                                           avg_cross_weights));
    Var ff = linear(t, relu(linear(t, x, w.ff.in)), w.ff.out);
    x = residual_norm(t, w.ln3, x, ff);
    Var out = linear(t, x, w.proj);
    int s_q = t.value(queries).rows();
    if (q_real >= 0 && q_real < s_q) {
        Tensor keep({s_q, 1});
        for (int i = 0; i < q_real; ++i) keep.at(i, 0) = 1.0;
        out = mul_rows_const(out, keep);
    }
    return out;
}

Var mlp_forward(Tape& t, const MlpWeights& w, Var x) {
    Var h = x;
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        h = linear(t, h, w.layers[i]);
        if (i + 1 < w.layers.size()) h = relu(h);
    }
    return h;
}

Tensor adjacency_from_edges(int s, const std::vector<std::pair<int, int>>& edges,
                            bool self_loops) {
    Tensor a({s, s});
    for (auto& [i, j] : edges) {
        if (i < 0 || i >= s || j < 0 || j >= s)
            throw IndexOutOfRange("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") outside graph of " + std::to_string(s) + " nodes");
        a.at(i, j) = 1.0;
        a.at(j, i) = 1.0;
    }
    if (self_loops)
        for (int i = 0; i < s; ++i) a.at(i, i) = 1.0;
    return a;
}

Tensor normalize_adjacency(const Tensor& adj, const std::string& mode) {
    check_rank2(adj, "normalize_adjacency");
    if (adj.rows() != adj.cols()) throw ShapeMismatch("adjacency must be square");
    int s = adj.rows();
    std::vector<double> deg(s, 0.0);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) deg[i] += adj.at(i, j);
    Tensor out({s, s});
    if (mode == "row") {
        for (int i = 0; i < s; ++i) {
            if (deg[i] == 0.0) continue;
            for (int j = 0; j < s; ++j) out.at(i, j) = adj.at(i, j) / deg[i];
        }
    } else if (mode == "sym") {
        std::vector<double> inv_sqrt(s, 0.0);
        for (int i = 0; i < s; ++i)
            if (deg[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) out.at(i, j) = inv_sqrt[i] * adj.at(i, j) * inv_sqrt[j];
    } else {
        throw ConfigMismatch("unknown adjacency normalization: " + mode);
    }
    return out;
}

}  // namespace mg::nn
