#include "cfs/nn.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>

namespace cfs::nn {

namespace {

void require(bool cond, ErrorCode code, const char* msg) {
    if (!cond) throw Error(code, msg);
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

// C [m x n] += A [m x k] * B [k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            const double* bl = b + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

// C [m x n] += A [m x k] * B^T with B [n x k]
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
            ci[j] += acc;
        }
    }
}

// C [m x n] += A^T * B with A [k x m], B [k x n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t l = 0; l < k; ++l) {
        const double* al = a + l * m;
        const double* bl = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = al[i];
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)) {
    std::size_t n = shape.empty() ? 0 : 1;
    for (std::size_t d : shape) n *= d;
    data.assign(n, fill);
}

Tensor Tensor::row(std::span<const double> values) {
    Tensor t({1, values.size()});
    std::copy(values.begin(), values.end(), t.data.begin());
    return t;
}

Tensor Tensor::vec(std::span<const double> values) {
    Tensor t({values.size()});
    std::copy(values.begin(), values.end(), t.data.begin());
    return t;
}

Var Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::push(Tensor value, std::function<void(Tape&, Var)> pull) {
    Node node;
    node.value = std::move(value);
    node.pull = std::move(pull);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

void Tape::backward(Var output) {
    require(output.id >= 0 && static_cast<std::size_t>(output.id) < nodes_.size(),
            ErrorCode::InvalidSpec, "backward: bad output var");
    require(nodes_[static_cast<std::size_t>(output.id)].value.numel() == 1,
            ErrorCode::ShapeMismatch, "backward: output must be scalar");
    for (auto& n : nodes_) n.grad = Tensor(n.value.shape);
    nodes_[static_cast<std::size_t>(output.id)].grad.data[0] = 1.0;
    for (std::size_t i = static_cast<std::size_t>(output.id) + 1; i-- > 0;) {
        if (nodes_[i].pull) nodes_[i].pull(*this, Var{static_cast<int>(i)});
    }
}

Var add(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(same_shape(av, bv), ErrorCode::ShapeMismatch, "add: shape mismatch");
    Tensor out(av.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = av.data[i] + bv.data[i];
    return t.push(std::move(out), [a, b](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad_ref(a);
        Tensor& gb = tp.grad_ref(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[i];
        }
    });
}

Var sub(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(same_shape(av, bv), ErrorCode::ShapeMismatch, "sub: shape mismatch");
    Tensor out(av.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = av.data[i] - bv.data[i];
    return t.push(std::move(out), [a, b](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad_ref(a);
        Tensor& gb = tp.grad_ref(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] -= g.data[i];
        }
    });
}

Var mul(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(same_shape(av, bv), ErrorCode::ShapeMismatch, "mul: shape mismatch");
    Tensor out(av.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = av.data[i] * bv.data[i];
    return t.push(std::move(out), [a, b](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        const Tensor& av2 = tp.value(a);
        const Tensor& bv2 = tp.value(b);
        Tensor& ga = tp.grad_ref(a);
        Tensor& gb = tp.grad_ref(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i] * bv2.data[i];
            gb.data[i] += g.data[i] * av2.data[i];
        }
    });
}

Var add_const(Tape& t, Var a, const Tensor& c) {
    const Tensor& av = t.value(a);
    require(same_shape(av, c), ErrorCode::ShapeMismatch, "add_const: shape mismatch");
    Tensor out(av.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = av.data[i] + c.data[i];
    return t.push(std::move(out), [a](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad_ref(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
    });
}

Var scale(Tape& t, Var a, double s) {
    Tensor out = t.value(a);
    for (double& v : out.data) v *= s;
    return t.push(std::move(out), [a, s](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad_ref(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += s * g.data[i];
    });
}

Var linear(Tape& t, Var x, Var w, Var b) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    const Tensor& bv = t.value(b);
    require(xv.shape.size() == 2 && wv.shape.size() == 2 && bv.shape.size() == 1,
            ErrorCode::ShapeMismatch, "linear: expects x[BxI], W[OxI], b[O]");
    const std::size_t batch = xv.shape[0], in = xv.shape[1], out_dim = wv.shape[0];
    require(wv.shape[1] == in && bv.shape[0] == out_dim, ErrorCode::ShapeMismatch,
            "linear: dimension mismatch");

    Tensor out({batch, out_dim});
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t o = 0; o < out_dim; ++o) out.at(r, o) = bv.data[o];
    gemm_nt(xv.data.data(), wv.data.data(), out.data.data(), batch, in, out_dim);

    return t.push(std::move(out), [x, w, b, batch, in, out_dim](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.value(x);
        const Tensor& wv2 = tp.value(w);
        // dx += g * W ; dW += g^T * x ; db += column sums of g
        gemm_nn(g.data.data(), wv2.data.data(), tp.grad_ref(x).data.data(), batch, out_dim, in);
        gemm_tn(g.data.data(), xv2.data.data(), tp.grad_ref(w).data.data(), out_dim, batch, in);
        Tensor& gb = tp.grad_ref(b);
        for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t o = 0; o < out_dim; ++o) gb.data[o] += g.at(r, o);
    });
}

Var matmul(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(av.shape.size() == 2 && bv.shape.size() == 2 && av.shape[1] == bv.shape[0],
            ErrorCode::ShapeMismatch, "matmul: inner dimensions must agree");
    const std::size_t m = av.shape[0], k = av.shape[1], n = bv.shape[1];
    Tensor out({m, n});
    gemm_nn(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    return t.push(std::move(out), [a, b, m, k, n](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        gemm_nt(g.data.data(), tp.value(b).data.data(), tp.grad_ref(a).data.data(), m, n, k);
        gemm_tn(tp.value(a).data.data(), g.data.data(), tp.grad_ref(b).data.data(), k, m, n);
    });
}

Var leaky_relu(Tape& t, Var x, double slope) {
    const Tensor& xv = t.value(x);
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = xv.data[i] > 0.0 ? xv.data[i] : slope * xv.data[i];
    return t.push(std::move(out), [x, slope](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.value(x);
        Tensor& gx = tp.grad_ref(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            gx.data[i] += g.data[i] * (xv2.data[i] > 0.0 ? 1.0 : slope);
    });
}

Var sigmoid(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-xv.data[i]));
    return t.push(std::move(out), [x](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        Tensor& gx = tp.grad_ref(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            gx.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
    });
}

Var tanh_op(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::tanh(xv.data[i]);
    return t.push(std::move(out), [x](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        Tensor& gx = tp.grad_ref(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            gx.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    });
}

Var gru_cell(Tape& t, Var x, Var h_prev, const GruWeights& w) {
    const Tensor& xv = t.value(x);
    const Tensor& hv = t.value(h_prev);
    const Tensor& wih = t.value(w.w_ih);
    const Tensor& whh = t.value(w.w_hh);
    const Tensor& bih = t.value(w.b_ih);
    const Tensor& bhh = t.value(w.b_hh);
    require(xv.shape.size() == 2 && hv.shape.size() == 2, ErrorCode::ShapeMismatch,
            "gru_cell: x and h must be 2-D");
    const std::size_t batch = xv.shape[0], in = xv.shape[1], hidden = hv.shape[1];
    require(hv.shape[0] == batch, ErrorCode::ShapeMismatch, "gru_cell: batch mismatch");
    require(wih.shape == std::vector<std::size_t>({3 * hidden, in}) &&
                whh.shape == std::vector<std::size_t>({3 * hidden, hidden}) &&
                bih.shape == std::vector<std::size_t>({3 * hidden}) &&
                bhh.shape == std::vector<std::size_t>({3 * hidden}),
            ErrorCode::ShapeMismatch, "gru_cell: weight shapes inconsistent");

    // gi = x W_ih^T + b_ih, gh = h W_hh^T + b_hh, both [B x 3H], gates r,z,n.
    Tensor gi({batch, 3 * hidden}), gh({batch, 3 * hidden});
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < 3 * hidden; ++j) {
            gi.at(r, j) = bih.data[j];
            gh.at(r, j) = bhh.data[j];
        }
    gemm_nt(xv.data.data(), wih.data.data(), gi.data.data(), batch, in, 3 * hidden);
    gemm_nt(hv.data.data(), whh.data.data(), gh.data.data(), batch, hidden, 3 * hidden);

    Tensor rg({batch, hidden}), zg({batch, hidden}), ng({batch, hidden}), hn({batch, hidden});
    Tensor out({batch, hidden});
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < hidden; ++j) {
            const double rv = 1.0 / (1.0 + std::exp(-(gi.at(r, j) + gh.at(r, j))));
            const double zv = 1.0 / (1.0 + std::exp(-(gi.at(r, hidden + j) + gh.at(r, hidden + j))));
            const double hnv = gh.at(r, 2 * hidden + j);
            const double nv = std::tanh(gi.at(r, 2 * hidden + j) + rv * hnv);
            rg.at(r, j) = rv;
            zg.at(r, j) = zv;
            ng.at(r, j) = nv;
            hn.at(r, j) = hnv;
            out.at(r, j) = (1.0 - zv) * nv + zv * hv.at(r, j);
        }

    auto saved = std::make_shared<std::array<Tensor, 4>>(
        std::array<Tensor, 4>{std::move(rg), std::move(zg), std::move(ng), std::move(hn)});
    GruWeights wc = w;
    return t.push(std::move(out), [x, h_prev, wc, saved, batch, in, hidden](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.value(x);
        const Tensor& hv2 = tp.value(h_prev);
        const Tensor& r = (*saved)[0];
        const Tensor& z = (*saved)[1];
        const Tensor& n = (*saved)[2];
        const Tensor& hn2 = (*saved)[3];

        Tensor dgi({batch, 3 * hidden}), dgh({batch, 3 * hidden});
        Tensor& dh_prev = tp.grad_ref(h_prev);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t j = 0; j < hidden; ++j) {
                const double dh = g.at(b, j);
                const double dz = dh * (hv2.at(b, j) - n.at(b, j));
                const double dn = dh * (1.0 - z.at(b, j));
                dh_prev.at(b, j) += dh * z.at(b, j);
                const double dn_pre = dn * (1.0 - n.at(b, j) * n.at(b, j));
                const double dr = dn_pre * hn2.at(b, j);
                const double dr_pre = dr * r.at(b, j) * (1.0 - r.at(b, j));
                const double dz_pre = dz * z.at(b, j) * (1.0 - z.at(b, j));
                dgi.at(b, j) = dr_pre;
                dgh.at(b, j) = dr_pre;
                dgi.at(b, hidden + j) = dz_pre;
                dgh.at(b, hidden + j) = dz_pre;
                dgi.at(b, 2 * hidden + j) = dn_pre;
                dgh.at(b, 2 * hidden + j) = dn_pre * r.at(b, j);
            }

        gemm_nn(dgi.data.data(), tp.value(wc.w_ih).data.data(), tp.grad_ref(x).data.data(),
                batch, 3 * hidden, in);
        gemm_tn(dgi.data.data(), xv2.data.data(), tp.grad_ref(wc.w_ih).data.data(),
                3 * hidden, batch, in);
        gemm_nn(dgh.data.data(), tp.value(wc.w_hh).data.data(), dh_prev.data.data(), batch,
                3 * hidden, hidden);
        gemm_tn(dgh.data.data(), hv2.data.data(), tp.grad_ref(wc.w_hh).data.data(),
                3 * hidden, batch, hidden);
        Tensor& gbih = tp.grad_ref(wc.b_ih);
        Tensor& gbhh = tp.grad_ref(wc.b_hh);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t j = 0; j < 3 * hidden; ++j) {
                gbih.data[j] += dgi.at(b, j);
                gbhh.data[j] += dgh.at(b, j);
            }
    });
}

Var causal_attention(Tape& t, Var q, Var k, Var v, int heads) {
    const Tensor& qv = t.value(q);
    const Tensor& kv = t.value(k);
    const Tensor& vv = t.value(v);
    require(qv.shape.size() == 2 && same_shape(qv, kv) && same_shape(qv, vv),
            ErrorCode::ShapeMismatch, "causal_attention: q,k,v must share shape [TxD]");
    require(heads >= 1, ErrorCode::HeadDivisibility, "causal_attention: heads must be >= 1");
    const std::size_t seq = qv.shape[0], dim = qv.shape[1];
    require(dim % static_cast<std::size_t>(heads) == 0, ErrorCode::HeadDivisibility,
            "causal_attention: model dim must divide by heads");
    const std::size_t hd = dim / static_cast<std::size_t>(heads);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(hd));

    // Row i only ever reads and reduces over positions <= i; this is what
    // makes prefixes bitwise invariant under suffix perturbations.
    auto probs = std::make_shared<std::vector<Tensor>>();
    probs->reserve(static_cast<std::size_t>(heads));
    Tensor out({seq, dim});
    std::vector<double> logits(seq);
    for (int h = 0; h < heads; ++h) {
        const std::size_t c0 = static_cast<std::size_t>(h) * hd;
        Tensor p({seq, seq});
        for (std::size_t i = 0; i < seq; ++i) {
            double maxv = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < hd; ++c) s += qv.at(i, c0 + c) * kv.at(j, c0 + c);
                logits[j] = s * inv_scale;
                maxv = std::max(maxv, logits[j]);
            }
            double denom = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                logits[j] = std::exp(logits[j] - maxv);
                denom += logits[j];
            }
            for (std::size_t j = 0; j <= i; ++j) {
                const double pij = logits[j] / denom;
                p.at(i, j) = pij;
                for (std::size_t c = 0; c < hd; ++c) out.at(i, c0 + c) += pij * vv.at(j, c0 + c);
            }
        }
        probs->push_back(std::move(p));
    }

    return t.push(std::move(out), [q, k, v, probs, seq, hd, heads, inv_scale](Tape& tp, Var self) {
        const Tensor& g = tp.grad(self);
        const Tensor& qv2 = tp.value(q);
        const Tensor& kv2 = tp.value(k);
        const Tensor& vv2 = tp.value(v);
        Tensor& gq = tp.grad_ref(q);
        Tensor& gk = tp.grad_ref(k);
        Tensor& gv = tp.grad_ref(v);
        std::vector<double> dp(seq), ds(seq);
        for (int h = 0; h < heads; ++h) {
            const std::size_t c0 = static_cast<std::size_t>(h) * hd;
            const Tensor& p = (*probs)[static_cast<std::size_t>(h)];
            for (std::size_t i = 0; i < seq; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j <= i; ++j) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < hd; ++c) acc += g.at(i, c0 + c) * vv2.at(j, c0 + c);
                    dp[j] = acc;
                    dot += acc * p.at(i, j);
                }
                for (std::size_t j = 0; j <= i; ++j) {
                    ds[j] = p.at(i, j) * (dp[j] - dot);
                    const double w = ds[j] * inv_scale;
                    for (std::size_t c = 0; c < hd; ++c) {
                        gq.at(i, c0 + c) += w * kv2.at(j, c0 + c);
                        gk.at(j, c0 + c) += w * qv2.at(i, c0 + c);
                        gv.at(j, c0 + c) += p.at(i, j) * g.at(i, c0 + c);
                    }
                }
            }
        }
    });
}

Var huber_loss(Tape& t, Var pred, Var target, double delta) {
    const Tensor& pv = t.value(pred);
    const Tensor& tv = t.value(target);
    require(same_shape(pv, tv), ErrorCode::ShapeMismatch, "huber_loss: shape mismatch");
    require(delta > 0.0, ErrorCode::InvalidSpec, "huber_loss: delta must be positive");
    require(pv.numel() > 0, ErrorCode::EmptyInput, "huber_loss: empty input");

    const double n = static_cast<double>(pv.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < pv.numel(); ++i) {
        const double r = pv.data[i] - tv.data[i];
        const double a = std::abs(r);
        acc += a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
    }
    Tensor out({1});
    out.data[0] = acc / n;
    return t.push(std::move(out), [pred, target, delta, n](Tape& tp, Var self) {
        const double g = tp.grad(self).data[0];
        const Tensor& pv2 = tp.value(pred);
        const Tensor& tv2 = tp.value(target);
        Tensor& gp = tp.grad_ref(pred);
        Tensor& gt = tp.grad_ref(target);
        for (std::size_t i = 0; i < pv2.numel(); ++i) {
            const double r = pv2.data[i] - tv2.data[i];
            const double d = std::abs(r) <= delta ? r : (r > 0.0 ? delta : -delta);
            gp.data[i] += g * d / n;
            gt.data[i] -= g * d / n;
        }
    });
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state) {
    require(params.size() == grads.size(), ErrorCode::ShapeMismatch,
            "adam_step: params/grads count mismatch");
    if (state.m.empty()) {
        for (const Tensor& p : params) {
            state.m.emplace_back(p.shape);
            state.v.emplace_back(p.shape);
        }
    }
    require(state.m.size() == params.size(), ErrorCode::ShapeMismatch,
            "adam_step: state size mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        require(same_shape(params[p], grads[p]) && same_shape(params[p], state.m[p]),
                ErrorCode::ShapeMismatch, "adam_step: tensor shape mismatch");
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < params[p].numel(); ++i) {
            const double g = grads[p].data[i];
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g;
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            params[p].data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double grad_check(const BuildFn& f, const std::vector<Tensor>& params, double eps) {
    // Analytic gradients.
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(params.size());
        for (const Tensor& p : params) vars.push_back(tape.leaf(p));
        Var loss = f(tape, vars);
        tape.backward(loss);
        for (Var v : vars) analytic.push_back(tape.grad(v));
    }

    auto eval = [&](const std::vector<Tensor>& ps) {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(ps.size());
        for (const Tensor& p : ps) vars.push_back(tape.leaf(p));
        return tape.value(f(tape, vars)).data[0];
    };

    double worst = 0.0;
    std::vector<Tensor> work = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].numel(); ++i) {
            const double orig = work[p].data[i];
            work[p].data[i] = orig + eps;
            const double up = eval(work);
            work[p].data[i] = orig - eps;
            const double down = eval(work);
            work[p].data[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[p].data[i];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

Tensor positional_encoding(std::size_t len, std::size_t dim) {
    Tensor pe({len, dim});
    for (std::size_t pos = 0; pos < len; ++pos)
        for (std::size_t i = 0; i < dim; ++i) {
            const double expo = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, expo);
            pe.at(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    return pe;
}

namespace {

constexpr char kTensorMagic[8] = {'C', 'F', 'S', 'T', 'E', 'N', '0', '1'};

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little,
                  "serialization assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw Error(ErrorCode::ParseError, "tensor stream truncated");
    return v;
}

}  // namespace

void write_tensors(std::ostream& os, std::span<const std::pair<std::string, Tensor>> tensors) {
    os.write(kTensorMagic, sizeof(kTensorMagic));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        write_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<std::uint8_t>(os, static_cast<std::uint8_t>(tensor.shape.size()));
        for (std::size_t d : tensor.shape) write_le<std::uint64_t>(os, d);
        os.write(reinterpret_cast<const char*>(tensor.data.data()),
                 static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    }
    if (!os) throw Error(ErrorCode::IoError, "failed writing tensor stream");
}

std::vector<std::pair<std::string, Tensor>> read_tensors(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0)
        throw Error(ErrorCode::ParseError, "bad tensor stream magic");
    const auto count = read_le<std::uint32_t>(is);
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto name_len = read_le<std::uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto ndim = read_le<std::uint8_t>(is);
        std::vector<std::size_t> shape(ndim);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(read_le<std::uint64_t>(is));
            numel *= d;
        }
        Tensor tensor(shape);
        is.read(reinterpret_cast<char*>(tensor.data.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!is) throw Error(ErrorCode::ParseError, "tensor stream truncated");
        out.emplace_back(std::move(name), std::move(tensor));
    }
    return out;
}

}  // namespace cfs::nn
