#include "morphgrasp/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace mg::nn {

Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Var Tape::param(Parameter& p) {
    Var v = push(p.value, p.trainable, nullptr);
    bound_.emplace_back(v.id, &p);
    return v;
}

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> backprop) {
    nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, std::move(backprop)});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::set_backprop(int id, std::function<void(Tape&)> backprop) {
    nodes_[id].backprop = std::move(backprop);
}

void Tape::check_owns(Var v, const char* who) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw GraphNotRecorded(std::string(who) + ": variable does not belong to this tape");
}

const Tensor& Tape::value(Var v) const {
    check_owns(v, "value");
    return nodes_[v.id].value;
}

Tensor Tape::grad(Var v) const {
    check_owns(v, "grad");
    if (!ran_backward_) throw GraphNotRecorded("grad requested before backward()");
    const Node& n = nodes_[v.id];
    if (!n.requires_grad) return Tensor::zeros(n.value.shape());
    return n.grad;
}

void Tape::add_grad(int id, const Tensor& delta) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (!n.grad.same_shape(delta))
        throw ShapeMismatch("gradient shape " + delta.shape_str() + " for node of shape " +
                            n.grad.shape_str());
    for (std::size_t i = 0; i < delta.numel(); ++i) n.grad[i] += delta[i];
}

void Tape::backward(Var loss) {
    check_owns(loss, "backward");
    if (ran_backward_) throw GraphNotRecorded("backward() already ran on this tape");
    if (nodes_[loss.id].value.numel() != 1)
        throw ShapeMismatch("backward target must be scalar, got " +
                            nodes_[loss.id].value.shape_str());
    for (Node& n : nodes_)
        if (n.requires_grad) n.grad = Tensor::zeros(n.value.shape());
    ran_backward_ = true;
    if (!nodes_[loss.id].requires_grad) return;  // nothing trainable upstream
    nodes_[loss.id].grad[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.backprop) n.backprop(*this);
    }
    for (auto& [id, p] : bound_) {
        if (!p->trainable) continue;
        const Tensor& g = nodes_[id].grad;
        if (!p->grad.same_shape(g)) p->grad = Tensor::zeros(p->value.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) p->grad[i] += g[i];
    }
}

namespace {

Tape& tape_of(Var v, const char* who) {
    if (v.tape == nullptr) throw GraphNotRecorded(std::string(who) + ": null variable");
    v.tape->check_owns(v, who);
    return *v.tape;
}

void same_tape(Var a, Var b, const char* who) {
    if (a.tape != b.tape)
        throw GraphNotRecorded(std::string(who) + ": operands from different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, "matmul");
    same_tape(a, b, "matmul");
    Tensor out = matmul(t.value(a), t.value(b));
    bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, bi = b.id, self = v.id;
        t.set_backprop(self, [ai, bi, self](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            if (tp.requires_grad(ai)) tp.add_grad(ai, matmul(g, transpose(tp.value_ref(bi))));
            if (tp.requires_grad(bi)) tp.add_grad(bi, matmul(transpose(tp.value_ref(ai)), g));
        });
    }
    return v;
}

Var matmul_const_left(const Tensor& a, Var b) {
    Tape& t = tape_of(b, "matmul_const_left");
    Tensor out = matmul(a, t.value(b));
    bool rg = t.requires_grad(b.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int bi = b.id, self = v.id;
        Tensor at = transpose(a);
        t.set_backprop(self, [bi, self, at](Tape& tp) {
            tp.add_grad(bi, matmul(at, tp.grad_ref(self)));
        });
    }
    return v;
}

Var matmul_const_right(Var a, const Tensor& b) {
    Tape& t = tape_of(a, "matmul_const_right");
    Tensor out = matmul(t.value(a), b);
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        Tensor bt = transpose(b);
        t.set_backprop(self, [ai, self, bt](Tape& tp) {
            tp.add_grad(ai, matmul(tp.grad_ref(self), bt));
        });
    }
    return v;
}

Var transpose(Var a) {
    Tape& t = tape_of(a, "transpose");
    Tensor out = transpose(t.value(a));
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self](Tape& tp) {
            tp.add_grad(ai, transpose(tp.grad_ref(self)));
        });
    }
    return v;
}

Var add(Var a, Var b) { return add_scaled(a, 1.0, b, 1.0); }

Var add_scaled(Var a, double wa, Var b, double wb) {
    Tape& t = tape_of(a, "add_scaled");
    same_tape(a, b, "add_scaled");
    const Tensor& va = t.value(a);
    const Tensor& vb = t.value(b);
    if (!va.same_shape(vb))
        throw ShapeMismatch("add: " + va.shape_str() + " vs " + vb.shape_str());
    Tensor out = va;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = wa * va[i] + wb * vb[i];
    bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, bi = b.id, self = v.id;
        t.set_backprop(self, [ai, bi, self, wa, wb](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            if (tp.requires_grad(ai)) tp.add_grad(ai, scale(g, wa));
            if (tp.requires_grad(bi)) tp.add_grad(bi, scale(g, wb));
        });
    }
    return v;
}

Var scale(Var a, double s) {
    Tape& t = tape_of(a, "scale");
    Tensor out = scale(t.value(a), s);
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self, s](Tape& tp) {
            tp.add_grad(ai, scale(tp.grad_ref(self), s));
        });
    }
    return v;
}

Var add_const(Var a, const Tensor& c) {
    Tape& t = tape_of(a, "add_const");
    Tensor out = add(t.value(a), c);
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self](Tape& tp) { tp.add_grad(ai, tp.grad_ref(self)); });
    }
    return v;
}

Var add_rowvec(Var x, Var b) {
    Tape& t = tape_of(x, "add_rowvec");
    same_tape(x, b, "add_rowvec");
    Tensor out = add_rowvec(t.value(x), t.value(b));
    bool rg = t.requires_grad(x.id) || t.requires_grad(b.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int xi = x.id, bi = b.id, self = v.id;
        t.set_backprop(self, [xi, bi, self](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            if (tp.requires_grad(xi)) tp.add_grad(xi, g);
            if (tp.requires_grad(bi)) {
                const Tensor& bv = tp.value_ref(bi);
                Tensor gb = Tensor::zeros(bv.shape());
                int s = g.rows(), d = g.cols();
                for (int i = 0; i < s; ++i)
                    for (int j = 0; j < d; ++j) gb[j] += g.at(i, j);
                tp.add_grad(bi, gb);
            }
        });
    }
    return v;
}

Var mul_rows_const(Var x, const Tensor& row_scale) {
    Tape& t = tape_of(x, "mul_rows_const");
    const Tensor& vx = t.value(x);
    check_rank2(vx, "mul_rows_const");
    if (static_cast<int>(row_scale.numel()) != vx.rows())
        throw ShapeMismatch("mul_rows_const: scale length " + row_scale.shape_str());
    Tensor out = vx;
    for (int i = 0; i < vx.rows(); ++i)
        for (int j = 0; j < vx.cols(); ++j) out.at(i, j) *= row_scale[i];
    bool rg = t.requires_grad(x.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int xi = x.id, self = v.id;
        Tensor rs = row_scale;
        t.set_backprop(self, [xi, self, rs](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            Tensor gx = g;
            for (int i = 0; i < gx.rows(); ++i)
                for (int j = 0; j < gx.cols(); ++j) gx.at(i, j) *= rs[i];
            tp.add_grad(xi, gx);
        });
    }
    return v;
}

Var relu(Var a) {
    Tape& t = tape_of(a, "relu");
    const Tensor& va = t.value(a);
    Tensor out = va;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            const Tensor& x = tp.value_ref(ai);
            Tensor gx = g;
            for (std::size_t i = 0; i < gx.numel(); ++i)
                if (x[i] <= 0.0) gx[i] = 0.0;
            tp.add_grad(ai, gx);
        });
    }
    return v;
}

Var softmax_rows(Var a) {
    Tape& t = tape_of(a, "softmax_rows");
    const Tensor& va = t.value(a);
    check_rank2(va, "softmax_rows");
    int s = va.rows(), d = va.cols();
    Tensor out({s, d});
    for (int i = 0; i < s; ++i) {
        double mx = va.at(i, 0);
        for (int j = 1; j < d; ++j) mx = std::max(mx, va.at(i, j));
        double z = 0.0;
        for (int j = 0; j < d; ++j) {
            double e = std::exp(va.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (int j = 0; j < d; ++j) out.at(i, j) /= z;
    }
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            const Tensor& y = tp.value_ref(self);
            Tensor gx = Tensor::zeros(y.shape());
            int rs = y.rows(), cs = y.cols();
            for (int i = 0; i < rs; ++i) {
                double dot = 0.0;
                for (int j = 0; j < cs; ++j) dot += g.at(i, j) * y.at(i, j);
                for (int j = 0; j < cs; ++j) gx.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
            }
            tp.add_grad(ai, gx);
        });
    }
    return v;
}

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
    Tape& t = tape_of(x, "layer_norm_rows");
    same_tape(x, gain, "layer_norm_rows");
    same_tape(x, bias, "layer_norm_rows");
    const Tensor& vx = t.value(x);
    check_rank2(vx, "layer_norm_rows");
    int s = vx.rows(), d = vx.cols();
    const Tensor& vg = t.value(gain);
    const Tensor& vb = t.value(bias);
    if (static_cast<int>(vg.numel()) != d || static_cast<int>(vb.numel()) != d)
        throw ShapeMismatch("layer_norm_rows: gain/bias width");
    Tensor xhat({s, d});
    Tensor inv_sigma({s, 1});
    Tensor out({s, d});
    for (int i = 0; i < s; ++i) {
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += vx.at(i, j);
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            double c = vx.at(i, j) - mu;
            var += c * c;
        }
        var /= d;
        double is = 1.0 / std::sqrt(var + eps);
        inv_sigma.at(i, 0) = is;
        for (int j = 0; j < d; ++j) {
            double xh = (vx.at(i, j) - mu) * is;
            xhat.at(i, j) = xh;
            out.at(i, j) = vg[j] * xh + vb[j];
        }
    }
    bool rg = t.requires_grad(x.id) || t.requires_grad(gain.id) || t.requires_grad(bias.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int xi = x.id, gi = gain.id, bi = bias.id, self = v.id;
        t.set_backprop(self, [xi, gi, bi, self, xhat, inv_sigma](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            const Tensor& vgain = tp.value_ref(gi);
            int s2 = g.rows(), d2 = g.cols();
            if (tp.requires_grad(gi)) {
                Tensor gg = Tensor::zeros(tp.value_ref(gi).shape());
                for (int i = 0; i < s2; ++i)
                    for (int j = 0; j < d2; ++j) gg[j] += g.at(i, j) * xhat.at(i, j);
                tp.add_grad(gi, gg);
            }
            if (tp.requires_grad(bi)) {
                Tensor gb = Tensor::zeros(tp.value_ref(bi).shape());
                for (int i = 0; i < s2; ++i)
                    for (int j = 0; j < d2; ++j) gb[j] += g.at(i, j);
                tp.add_grad(bi, gb);
            }
            if (tp.requires_grad(xi)) {
                Tensor gx({s2, d2});
                for (int i = 0; i < s2; ++i) {
                    double mean_dh = 0.0, mean_dh_xh = 0.0;
                    for (int j = 0; j < d2; ++j) {
                        double dh = g.at(i, j) * vgain[j];
                        mean_dh += dh;
                        mean_dh_xh += dh * xhat.at(i, j);
                    }
                    mean_dh /= d2;
                    mean_dh_xh /= d2;
                    double is = inv_sigma.at(i, 0);
                    for (int j = 0; j < d2; ++j) {
                        double dh = g.at(i, j) * vgain[j];
                        gx.at(i, j) = is * (dh - mean_dh - xhat.at(i, j) * mean_dh_xh);
                    }
                }
                tp.add_grad(xi, gx);
            }
        });
    }
    return v;
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no parts");
    Tape& t = tape_of(parts[0], "concat_cols");
    int s = t.value(parts[0]).rows();
    int total = 0;
    bool rg = false;
    for (Var p : parts) {
        same_tape(parts[0], p, "concat_cols");
        const Tensor& vp = t.value(p);
        check_rank2(vp, "concat_cols");
        if (vp.rows() != s) throw ShapeMismatch("concat_cols: row count mismatch");
        total += vp.cols();
        rg = rg || t.requires_grad(p.id);
    }
    Tensor out({s, total});
    int off = 0;
    for (Var p : parts) {
        const Tensor& vp = t.value(p);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < vp.cols(); ++j) out.at(i, off + j) = vp.at(i, j);
        off += vp.cols();
    }
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        std::vector<int> ids;
        std::vector<int> widths;
        for (Var p : parts) {
            ids.push_back(p.id);
            widths.push_back(t.value(p).cols());
        }
        int self = v.id;
        t.set_backprop(self, [ids, widths, self](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            int s2 = g.rows();
            int off2 = 0;
            for (std::size_t k = 0; k < ids.size(); ++k) {
                int w = widths[k];
                if (tp.requires_grad(ids[k])) {
                    Tensor gp({s2, w});
                    for (int i = 0; i < s2; ++i)
                        for (int j = 0; j < w; ++j) gp.at(i, j) = g.at(i, off2 + j);
                    tp.add_grad(ids[k], gp);
                }
                off2 += w;
            }
        });
    }
    return v;
}

Var slice_cols(Var a, int c0, int c1) {
    Tape& t = tape_of(a, "slice_cols");
    const Tensor& va = t.value(a);
    check_rank2(va, "slice_cols");
    if (c0 < 0 || c1 > va.cols() || c0 >= c1)
        throw IndexOutOfRange("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) + ")");
    int s = va.rows(), w = c1 - c0;
    Tensor out({s, w});
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < w; ++j) out.at(i, j) = va.at(i, c0 + j);
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self, c0, w](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            Tensor gx = Tensor::zeros(tp.value_ref(ai).shape());
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < w; ++j) gx.at(i, c0 + j) = g.at(i, j);
            tp.add_grad(ai, gx);
        });
    }
    return v;
}

Var gather_rows(Var a, std::vector<int> indices) {
    Tape& t = tape_of(a, "gather_rows");
    const Tensor& va = t.value(a);
    check_rank2(va, "gather_rows");
    int d = va.cols();
    for (int idx : indices)
        if (idx < 0 || idx >= va.rows())
            throw IndexOutOfRange("gather_rows index " + std::to_string(idx) + " for " +
                                  std::to_string(va.rows()) + " rows");
    Tensor out({static_cast<int>(indices.size()), d});
    for (std::size_t i = 0; i < indices.size(); ++i)
        for (int j = 0; j < d; ++j) out.at(static_cast<int>(i), j) = va.at(indices[i], j);
    bool rg = t.requires_grad(a.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self, indices](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            Tensor gx = Tensor::zeros(tp.value_ref(ai).shape());
            for (std::size_t i = 0; i < indices.size(); ++i)
                for (int j = 0; j < g.cols(); ++j)
                    gx.at(indices[i], j) += g.at(static_cast<int>(i), j);
            tp.add_grad(ai, gx);
        });
    }
    return v;
}

Var tile_rows(Var row, int count) {
    Tape& t = tape_of(row, "tile_rows");
    const Tensor& vr = t.value(row);
    check_rank2(vr, "tile_rows");
    if (vr.rows() != 1) throw ShapeMismatch("tile_rows expects a [1, d] row");
    int d = vr.cols();
    Tensor out({count, d});
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < d; ++j) out.at(i, j) = vr.at(0, j);
    bool rg = t.requires_grad(row.id);
    Var v = t.push(std::move(out), rg, nullptr);
    if (rg) {
        int ri = row.id, self = v.id;
        t.set_backprop(self, [ri, self](Tape& tp) {
            const Tensor& g = tp.grad_ref(self);
            Tensor gr = Tensor::zeros(tp.value_ref(ri).shape());
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) gr.at(0, j) += g.at(i, j);
            tp.add_grad(ri, gr);
        });
    }
    return v;
}

Var sum_all(Var a) {
    Tape& t = tape_of(a, "sum_all");
    const Tensor& va = t.value(a);
    double s = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) s += va[i];
    bool rg = t.requires_grad(a.id);
    Var v = t.push(Tensor::scalar(s), rg, nullptr);
    if (rg) {
        int ai = a.id, self = v.id;
        t.set_backprop(self, [ai, self](Tape& tp) {
            double g = tp.grad_ref(self)[0];
            tp.add_grad(ai, Tensor::full(tp.value_ref(ai).shape(), g));
        });
    }
    return v;
}

Var mean_all(Var a) {
    Tape& t = tape_of(a, "mean_all");
    std::size_t n = t.value(a).numel();
    if (n == 0) throw ShapeMismatch("mean_all of empty tensor");
    return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {
double bce_elem(double x, double t) {
    return std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
}
}  // namespace

double bce_with_logits(const Tensor& logits, const Tensor& targets) {
    if (!logits.same_shape(targets))
        throw ShapeMismatch("bce_with_logits: " + logits.shape_str() + " vs " + targets.shape_str());
    if (logits.numel() == 0) throw ShapeMismatch("bce_with_logits of empty tensor");
    double s = 0.0;
    for (std::size_t i = 0; i < logits.numel(); ++i) s += bce_elem(logits[i], targets[i]);
    return s / static_cast<double>(logits.numel());
}

double cross_entropy(const Tensor& logits, int target_index) {
    std::size_t n = logits.numel();
    if (target_index < 0 || static_cast<std::size_t>(target_index) >= n)
        throw IndexOutOfRange("cross_entropy target " + std::to_string(target_index) + " for " +
                              std::to_string(n) + " logits");
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
    return std::log(z) + mx - logits[static_cast<std::size_t>(target_index)];
}

Tensor softmax_vec(const Tensor& logits) {
    std::size_t n = logits.numel();
    Tensor out = logits;
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(logits[i] - mx);
        z += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= z;
    return out;
}

Var bce_with_logits_mean(Var logits, const Tensor& targets) {
    Tape& t = tape_of(logits, "bce_with_logits_mean");
    const Tensor& vl = t.value(logits);
    double loss = bce_with_logits(vl, targets);
    bool rg = t.requires_grad(logits.id);
    Var v = t.push(Tensor::scalar(loss), rg, nullptr);
    if (rg) {
        int li = logits.id, self = v.id;
        Tensor tg = targets;
        t.set_backprop(self, [li, self, tg](Tape& tp) {
            double g = tp.grad_ref(self)[0];
            const Tensor& x = tp.value_ref(li);
            Tensor gx = Tensor::zeros(x.shape());
            double inv_n = 1.0 / static_cast<double>(x.numel());
            for (std::size_t i = 0; i < x.numel(); ++i)
                gx[i] = g * inv_n * (sigmoid(x[i]) - tg[i]);
            tp.add_grad(li, gx);
        });
    }
    return v;
}

Var cross_entropy_row(Var logits, int target_index) {
    Tape& t = tape_of(logits, "cross_entropy_row");
    const Tensor& vl = t.value(logits);
    double loss = cross_entropy(vl, target_index);
    bool rg = t.requires_grad(logits.id);
    Var v = t.push(Tensor::scalar(loss), rg, nullptr);
    if (rg) {
        int li = logits.id, self = v.id;
        t.set_backprop(self, [li, self, target_index](Tape& tp) {
            double g = tp.grad_ref(self)[0];
            Tensor gx = softmax_vec(tp.value_ref(li));
            gx[static_cast<std::size_t>(target_index)] -= 1.0;
            for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] *= g;
            tp.add_grad(li, gx);
        });
    }
    return v;
}

}  // namespace mg::nn
