#include "qoeplan/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "qoeplan/random.hpp"

namespace qoeplan {

namespace {

using nlohmann::ordered_json;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Flat parameter vector layout for the two-layer cell stack plus the scalar
// output head. Gate rows are ordered (i, f, g, o) within each 4H block.
struct ParamLayout {
    int hidden = 0;
    int wih1 = 0, whh1 = 0, b1 = 0;
    int wih2 = 0, whh2 = 0, b2 = 0;
    int wout = 0, bout = 0;
    int total = 0;

    explicit ParamLayout(int h) : hidden(h) {
        const int gates = 4 * h;
        wih1 = 0;
        whh1 = wih1 + gates;           // layer-1 input dim is 1
        b1 = whh1 + gates * h;
        wih2 = b1 + gates;
        whh2 = wih2 + gates * h;
        b2 = whh2 + gates * h;
        wout = b2 + gates;
        bout = wout + h;
        total = bout + 1;
    }
};

std::vector<double> init_params(const ParamLayout& lay, std::uint64_t seed) {
    std::vector<double> params(static_cast<std::size_t>(lay.total), 0.0);
    Rng rng(seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(lay.hidden));
    auto fill = [&](int off, int count) {
        for (int i = 0; i < count; ++i) params[static_cast<std::size_t>(off + i)] = rng.uniform(-k, k);
    };
    const int h = lay.hidden;
    fill(lay.wih1, 4 * h);
    fill(lay.whh1, 4 * h * h);
    fill(lay.wih2, 4 * h * h);
    fill(lay.whh2, 4 * h * h);
    fill(lay.wout, h);
    // Forget-gate biases start open so early gradients reach back in time.
    for (int j = 0; j < h; ++j) {
        params[static_cast<std::size_t>(lay.b1 + h + j)] = 1.0;
        params[static_cast<std::size_t>(lay.b2 + h + j)] = 1.0;
    }
    return params;
}

// Batched forward/backward over all sliding windows. Buffers are step-major:
// value at (t, b, j) lives at [t * batch * width + b * width + j].
class LstmBatch {
public:
    LstmBatch(int window, int hidden, int batch)
        : window_(window), hidden_(hidden), batch_(batch) {
        const std::size_t bh = static_cast<std::size_t>(batch_) * hidden_;
        const std::size_t bg = bh * 4;
        const std::size_t t = static_cast<std::size_t>(window_);
        for (int l = 0; l < 2; ++l) {
            gates_[l].assign(t * bg, 0.0);
            c_[l].assign(t * bh, 0.0);
            tc_[l].assign(t * bh, 0.0);
            h_[l].assign(t * bh, 0.0);
        }
        dx2_.assign(t * bh, 0.0);
        preds_.assign(static_cast<std::size_t>(batch_), 0.0);
        wihT_.assign(static_cast<std::size_t>(hidden_) * 4 * hidden_, 0.0);
        whhT_[0].assign(static_cast<std::size_t>(hidden_) * 4 * hidden_, 0.0);
        whhT_[1].assign(static_cast<std::size_t>(hidden_) * 4 * hidden_, 0.0);
        scratch_pre_.assign(bg, 0.0);
        scratch_da_.assign(bg, 0.0);
    }

    // xseq is step-major (t * batch + b); targets has batch entries.
    // drop_mask is empty (off) or hidden_ scale factors applied to layer-1
    // outputs before they feed layer 2.
    double forward(std::span<const double> params, std::span<const double> xseq,
                   std::span<const double> targets, std::span<const double> drop_mask) {
        const ParamLayout lay(hidden_);
        const int h = hidden_, g = 4 * h, b = batch_;
        transpose(params.data() + lay.whh1, whhT_[0].data(), g, h);
        transpose(params.data() + lay.whh2, whhT_[1].data(), g, h);
        transpose(params.data() + lay.wih2, wihT_.data(), g, h);

        for (int t = 0; t < window_; ++t) {
            // layer 1: scalar input
            {
                double* pre = scratch_pre_.data();
                const double* wih = params.data() + lay.wih1;
                const double* bias = params.data() + lay.b1;
                const double* x = xseq.data() + static_cast<std::size_t>(t) * b;
                for (int bi = 0; bi < b; ++bi) {
                    double* row = pre + static_cast<std::size_t>(bi) * g;
                    const double xv = x[bi];
                    for (int j = 0; j < g; ++j) row[j] = bias[j] + xv * wih[j];
                }
                if (t > 0) add_matmul(pre, h_at(0, t - 1), whhT_[0].data(), b, h, g);
                activate(0, t, pre, t > 0 ? c_at(0, t - 1) : nullptr);
            }
            // layer 2: input is (possibly dropped) layer-1 output
            {
                double* pre = scratch_pre_.data();
                const double* bias = params.data() + lay.b2;
                for (int bi = 0; bi < b; ++bi) {
                    double* row = pre + static_cast<std::size_t>(bi) * g;
                    for (int j = 0; j < g; ++j) row[j] = bias[j];
                }
                if (drop_mask.empty()) {
                    add_matmul(pre, h_at(0, t), wihT_.data(), b, h, g);
                } else {
                    add_matmul_masked(pre, h_at(0, t), drop_mask.data(), wihT_.data(), b, h, g);
                }
                if (t > 0) add_matmul(pre, h_at(1, t - 1), whhT_[1].data(), b, h, g);
                activate(1, t, pre, t > 0 ? c_at(1, t - 1) : nullptr);
            }
        }

        // output head: pred = b_out + w_out . relu(h2_last)
        const double* wout = params.data() + lay.wout;
        const double bout = params[static_cast<std::size_t>(lay.bout)];
        const double* hlast = h_at(1, window_ - 1);
        double loss = 0.0;
        for (int bi = 0; bi < b; ++bi) {
            const double* hrow = hlast + static_cast<std::size_t>(bi) * h;
            double p = bout;
            for (int j = 0; j < h; ++j) p += wout[j] * std::max(0.0, hrow[j]);
            preds_[static_cast<std::size_t>(bi)] = p;
            const double d = p - targets[bi];
            loss += d * d;
        }
        return loss / b;
    }

    // Accumulates dL/dparams into `grads` (zeroed here). Must follow forward()
    // with the same params/inputs/mask.
    void backward(std::span<const double> params, std::span<const double> xseq,
                  std::span<const double> targets, std::span<const double> drop_mask,
                  std::span<double> grads) {
        const ParamLayout lay(hidden_);
        const int h = hidden_, g = 4 * h, b = batch_;
        std::fill(grads.begin(), grads.end(), 0.0);

        // head gradients and dh at the last step of layer 2
        std::vector<double> dh_ext(static_cast<std::size_t>(b) * h, 0.0);
        {
            const double* wout = params.data() + lay.wout;
            const double* hlast = h_at(1, window_ - 1);
            double* dwout = grads.data() + lay.wout;
            double& dbout = grads[static_cast<std::size_t>(lay.bout)];
            for (int bi = 0; bi < b; ++bi) {
                const double dpred = 2.0 * (preds_[static_cast<std::size_t>(bi)] - targets[bi]) / b;
                const double* hrow = hlast + static_cast<std::size_t>(bi) * h;
                double* dhrow = dh_ext.data() + static_cast<std::size_t>(bi) * h;
                dbout += dpred;
                for (int j = 0; j < h; ++j) {
                    if (hrow[j] > 0.0) {
                        dwout[j] += dpred * hrow[j];
                        dhrow[j] = dpred * wout[j];
                    }
                }
            }
        }

        // layer 2 backward through time; records dx2 per step for layer 1
        backward_layer(params, lay, 1, dh_ext, drop_mask, grads);
        // layer 1 backward through time; external dh comes from dx2 (masked)
        backward_layer(params, lay, 0, dh_ext, drop_mask, grads);

        // layer-1 input weight gradients need the raw inputs (biases were
        // already accumulated during the per-layer pass)
        {
            double* dwih1 = grads.data() + lay.wih1;
            for (int t = 0; t < window_; ++t) {
                const double* da = da_store_.data() + static_cast<std::size_t>(t) * b * g;
                const double* x = xseq.data() + static_cast<std::size_t>(t) * b;
                for (int bi = 0; bi < b; ++bi) {
                    const double xv = x[bi];
                    const double* darow = da + static_cast<std::size_t>(bi) * g;
                    for (int j = 0; j < g; ++j) dwih1[j] += darow[j] * xv;
                }
            }
        }
    }

    double prediction(int b) const { return preds_[static_cast<std::size_t>(b)]; }

    // Sign pattern of the head's ReLU inputs after the last forward pass. A
    // finite-difference pair whose patterns differ straddles a kink, where a
    // central difference is not a valid derivative estimate.
    std::vector<std::uint8_t> head_relu_pattern() {
        const double* hlast = h_at(1, window_ - 1);
        std::vector<std::uint8_t> pattern(static_cast<std::size_t>(batch_) * hidden_);
        for (std::size_t i = 0; i < pattern.size(); ++i) pattern[i] = hlast[i] > 0.0 ? 1 : 0;
        return pattern;
    }

private:
    double* h_at(int l, int t) {
        return h_[l].data() + static_cast<std::size_t>(t) * batch_ * hidden_;
    }
    double* c_at(int l, int t) {
        return c_[l].data() + static_cast<std::size_t>(t) * batch_ * hidden_;
    }
    double* tc_at(int l, int t) {
        return tc_[l].data() + static_cast<std::size_t>(t) * batch_ * hidden_;
    }
    double* gates_at(int l, int t) {
        return gates_[l].data() + static_cast<std::size_t>(t) * batch_ * 4 * hidden_;
    }

    static void transpose(const double* src, double* dst, int rows, int cols) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) dst[static_cast<std::size_t>(c) * rows + r] =
                src[static_cast<std::size_t>(r) * cols + c];
    }

    // out (b x g) += in (b x k) * wT (k x g)
    static void add_matmul(double* out, const double* in, const double* wT, int b, int k, int g) {
        for (int bi = 0; bi < b; ++bi) {
            double* orow = out + static_cast<std::size_t>(bi) * g;
            const double* irow = in + static_cast<std::size_t>(bi) * k;
            for (int kk = 0; kk < k; ++kk) {
                const double a = irow[kk];
                const double* wrow = wT + static_cast<std::size_t>(kk) * g;
                for (int j = 0; j < g; ++j) orow[j] += a * wrow[j];
            }
        }
    }

    static void add_matmul_masked(double* out, const double* in, const double* mask,
                                  const double* wT, int b, int k, int g) {
        for (int bi = 0; bi < b; ++bi) {
            double* orow = out + static_cast<std::size_t>(bi) * g;
            const double* irow = in + static_cast<std::size_t>(bi) * k;
            for (int kk = 0; kk < k; ++kk) {
                const double a = irow[kk] * mask[kk];
                if (a == 0.0) continue;
                const double* wrow = wT + static_cast<std::size_t>(kk) * g;
                for (int j = 0; j < g; ++j) orow[j] += a * wrow[j];
            }
        }
    }

    // Applies gate nonlinearities to preactivations and advances the cell.
    void activate(int l, int t, const double* pre, const double* c_prev) {
        const int h = hidden_, g = 4 * h, b = batch_;
        double* gates = gates_at(l, t);
        double* c = c_at(l, t);
        double* tc = tc_at(l, t);
        double* hh = h_at(l, t);
        for (int bi = 0; bi < b; ++bi) {
            const double* prow = pre + static_cast<std::size_t>(bi) * g;
            double* grow = gates + static_cast<std::size_t>(bi) * g;
            double* crow = c + static_cast<std::size_t>(bi) * h;
            double* tcrow = tc + static_cast<std::size_t>(bi) * h;
            double* hrow = hh + static_cast<std::size_t>(bi) * h;
            const double* cprow = c_prev ? c_prev + static_cast<std::size_t>(bi) * h : nullptr;
            for (int j = 0; j < h; ++j) {
                const double iv = sigmoid(prow[j]);
                const double fv = sigmoid(prow[h + j]);
                const double gv = std::tanh(prow[2 * h + j]);
                const double ov = sigmoid(prow[3 * h + j]);
                grow[j] = iv;
                grow[h + j] = fv;
                grow[2 * h + j] = gv;
                grow[3 * h + j] = ov;
                const double cv = (cprow ? fv * cprow[j] : 0.0) + iv * gv;
                crow[j] = cv;
                const double tcv = std::tanh(cv);
                tcrow[j] = tcv;
                hrow[j] = ov * tcv;
            }
        }
    }

    // BPTT over one layer. For layer 1 the external dh per step is dx2 (taken
    // through the dropout mask); for layer 2 it is dh_last at the final step
    // only. Stores per-step gate deltas for layer 1 so the caller can fold in
    // the raw-input weight gradients.
    void backward_layer(std::span<const double> params, const ParamLayout& lay, int l,
                        std::span<const double> dh_last, std::span<const double> drop_mask,
                        std::span<double> grads) {
        const int h = hidden_, g = 4 * h, b = batch_;
        const double* whh = params.data() + (l == 0 ? lay.whh1 : lay.whh2);
        const double* wih2 = params.data() + lay.wih2;
        double* dwhh = grads.data() + (l == 0 ? lay.whh1 : lay.whh2);
        double* dwih2 = grads.data() + lay.wih2;
        double* db = grads.data() + (l == 0 ? lay.b1 : lay.b2);

        if (l == 0) da_store_.assign(static_cast<std::size_t>(window_) * b * g, 0.0);

        std::vector<double> dh_rec(static_cast<std::size_t>(b) * h, 0.0);
        std::vector<double> dc_rec(static_cast<std::size_t>(b) * h, 0.0);
        double* da = scratch_da_.data();

        for (int t = window_ - 1; t >= 0; --t) {
            const double* gates = gates_at(l, t);
            const double* tc = tc_at(l, t);
            const double* cprev = t > 0 ? c_at(l, t - 1) : nullptr;

            for (int bi = 0; bi < b; ++bi) {
                const std::size_t bh = static_cast<std::size_t>(bi) * h;
                const double* grow = gates + static_cast<std::size_t>(bi) * g;
                double* darow = da + static_cast<std::size_t>(bi) * g;
                for (int j = 0; j < h; ++j) {
                    double dh = dh_rec[bh + j];
                    if (l == 1) {
                        if (t == window_ - 1) dh += dh_last[bh + j];
                    } else {
                        const double m = drop_mask.empty() ? 1.0 : drop_mask[static_cast<std::size_t>(j)];
                        dh += dx2_[static_cast<std::size_t>(t) * b * h + bh + j] * m;
                    }
                    const double iv = grow[j], fv = grow[h + j], gv = grow[2 * h + j],
                                 ov = grow[3 * h + j];
                    const double tcv = tc[bh + j];
                    double dc = dc_rec[bh + j] + dh * ov * (1.0 - tcv * tcv);
                    const double dov = dh * tcv;
                    darow[3 * h + j] = dov * ov * (1.0 - ov);
                    darow[j] = dc * gv * iv * (1.0 - iv);
                    darow[2 * h + j] = dc * iv * (1.0 - gv * gv);
                    const double cp = cprev ? cprev[bh + j] : 0.0;
                    darow[h + j] = dc * cp * fv * (1.0 - fv);
                    dc_rec[bh + j] = dc * fv;
                }
            }

            // weight gradients and recurrent dh
            std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
            const double* hprev = t > 0 ? h_at(l, t - 1) : nullptr;
            for (int bi = 0; bi < b; ++bi) {
                const double* darow = da + static_cast<std::size_t>(bi) * g;
                double* dhrow = dh_rec.data() + static_cast<std::size_t>(bi) * h;
                const double* hprow = hprev ? hprev + static_cast<std::size_t>(bi) * h : nullptr;
                for (int j = 0; j < g; ++j) {
                    const double a = darow[j];
                    if (a == 0.0) continue;
                    const double* wrow = whh + static_cast<std::size_t>(j) * h;
                    for (int k = 0; k < h; ++k) dhrow[k] += a * wrow[k];
                    if (hprow) {
                        double* dwrow = dwhh + static_cast<std::size_t>(j) * h;
                        for (int k = 0; k < h; ++k) dwrow[k] += a * hprow[k];
                    }
                    db[j] += a;
                }
            }

            if (l == 1) {
                // input gradients toward layer 1, plus dW_ih2 against x2
                double* dx2row0 = dx2_.data() + static_cast<std::size_t>(t) * b * h;
                std::fill(dx2row0, dx2row0 + static_cast<std::size_t>(b) * h, 0.0);
                const double* h1 = h_at(0, t);
                for (int bi = 0; bi < b; ++bi) {
                    const double* darow = da + static_cast<std::size_t>(bi) * g;
                    double* dxrow = dx2row0 + static_cast<std::size_t>(bi) * h;
                    const double* h1row = h1 + static_cast<std::size_t>(bi) * h;
                    for (int j = 0; j < g; ++j) {
                        const double a = darow[j];
                        if (a == 0.0) continue;
                        const double* wrow = wih2 + static_cast<std::size_t>(j) * h;
                        double* dwrow = dwih2 + static_cast<std::size_t>(j) * h;
                        for (int k = 0; k < h; ++k) {
                            dxrow[k] += a * wrow[k];
                            const double m =
                                drop_mask.empty() ? 1.0 : drop_mask[static_cast<std::size_t>(k)];
                            dwrow[k] += a * h1row[k] * m;
                        }
                    }
                }
            } else {
                std::copy(da, da + static_cast<std::size_t>(b) * g,
                          da_store_.data() + static_cast<std::size_t>(t) * b * g);
            }
        }
    }

    int window_, hidden_, batch_;
    std::vector<double> gates_[2], c_[2], tc_[2], h_[2];
    std::vector<double> dx2_;
    std::vector<double> da_store_;
    std::vector<double> preds_;
    std::vector<double> wihT_, whhT_[2];
    std::vector<double> scratch_pre_, scratch_da_;
};

struct NormStats {
    double mean = 0.0;
    double std = 1.0;
};

NormStats norm_stats(std::span<const double> values) {
    NormStats st;
    const double n = static_cast<double>(values.size());
    st.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - st.mean) * (v - st.mean);
    st.std = std::max(std::sqrt(ss / n), 1e-8);
    return st;
}

// Step-major window matrix plus one-step-ahead targets from a normalized series.
void build_windows(std::span<const double> xs, int window, std::vector<double>& xseq,
                   std::vector<double>& targets) {
    const int batch = static_cast<int>(xs.size()) - window;
    xseq.assign(static_cast<std::size_t>(window) * batch, 0.0);
    targets.assign(static_cast<std::size_t>(batch), 0.0);
    for (int t = 0; t < window; ++t)
        for (int b = 0; b < batch; ++b)
            xseq[static_cast<std::size_t>(t) * batch + b] = xs[static_cast<std::size_t>(b + t)];
    for (int b = 0; b < batch; ++b) targets[static_cast<std::size_t>(b)] = xs[static_cast<std::size_t>(b + window)];
}

// Single-window forward pass; returns the normalized one-step prediction.
double predict_window(const SequencePredictor& p, std::span<const double> window_vals) {
    const ParamLayout lay(p.hidden);
    const int h = p.hidden, g = 4 * h;
    const double* params = p.params.data();
    std::vector<double> h1(static_cast<std::size_t>(h), 0.0), c1(static_cast<std::size_t>(h), 0.0);
    std::vector<double> h2(static_cast<std::size_t>(h), 0.0), c2(static_cast<std::size_t>(h), 0.0);
    std::vector<double> pre(static_cast<std::size_t>(g), 0.0);

    auto step = [&](const double* wih, const double* whh, const double* bias, const double* x,
                    int in_dim, std::vector<double>& hs, std::vector<double>& cs, bool first) {
        for (int j = 0; j < g; ++j) {
            double a = bias[j];
            const double* wrow = wih + static_cast<std::size_t>(j) * in_dim;
            for (int k = 0; k < in_dim; ++k) a += wrow[k] * x[k];
            if (!first) {
                const double* rrow = whh + static_cast<std::size_t>(j) * h;
                for (int k = 0; k < h; ++k) a += rrow[k] * hs[static_cast<std::size_t>(k)];
            }
            pre[static_cast<std::size_t>(j)] = a;
        }
        for (int j = 0; j < h; ++j) {
            const double iv = sigmoid(pre[static_cast<std::size_t>(j)]);
            const double fv = sigmoid(pre[static_cast<std::size_t>(h + j)]);
            const double gv = std::tanh(pre[static_cast<std::size_t>(2 * h + j)]);
            const double ov = sigmoid(pre[static_cast<std::size_t>(3 * h + j)]);
            const double cv = (first ? 0.0 : fv * cs[static_cast<std::size_t>(j)]) + iv * gv;
            cs[static_cast<std::size_t>(j)] = cv;
            hs[static_cast<std::size_t>(j)] = ov * std::tanh(cv);
        }
    };

    std::vector<double> h1_snapshot(static_cast<std::size_t>(h));
    for (int t = 0; t < p.window; ++t) {
        const double x = window_vals[static_cast<std::size_t>(t)];
        step(params + lay.wih1, params + lay.whh1, params + lay.b1, &x, 1, h1, c1, t == 0);
        h1_snapshot = h1;
        step(params + lay.wih2, params + lay.whh2, params + lay.b2, h1_snapshot.data(), h, h2, c2,
             t == 0);
    }
    const double* wout = params + lay.wout;
    double out = params[static_cast<std::size_t>(lay.bout)];
    for (int j = 0; j < h; ++j) out += wout[j] * std::max(0.0, h2[static_cast<std::size_t>(j)]);
    return out;
}

double clip_gradients(std::span<double> grads, double max_norm) {
    double sq = 0.0;
    for (double gv : grads) sq += gv * gv;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (double& gv : grads) gv *= scale;
    }
    return norm;
}

struct CurveFitEval {
    double a = 0.0;  // m_inf
    double b = 0.0;  // m0 - m_inf
    double rmse = std::numeric_limits<double>::infinity();
};

CurveFitEval eval_tau(std::span<const double> y, double tau) {
    const int n = static_cast<int>(y.size());
    double su = 0.0, suu = 0.0, sy = 0.0, suy = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double u = std::exp(-static_cast<double>(k) / tau);
        const double yv = y[static_cast<std::size_t>(k - 1)];
        su += u;
        suu += u * u;
        sy += yv;
        suy += u * yv;
    }
    CurveFitEval out;
    const double det = n * suu - su * su;
    if (std::abs(det) < 1e-14) {
        out.a = sy / n;
        out.b = 0.0;
    } else {
        out.a = (suu * sy - su * suy) / det;
        out.b = (n * suy - su * sy) / det;
    }
    double ss = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double r = out.a + out.b * std::exp(-static_cast<double>(k) / tau) -
                         y[static_cast<std::size_t>(k - 1)];
        ss += r * r;
    }
    out.rmse = std::sqrt(ss / n);
    return out;
}

}  // namespace

void PredictorConfig::validate() const {
    if (window < 2) throw Error(Errc::invalid_argument, "window must be >= 2");
    if (hidden_size < 1) throw Error(Errc::invalid_argument, "hidden_size must be >= 1");
    if (layers != 2) throw Error(Errc::invalid_argument, "layers is fixed at 2");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw Error(Errc::invalid_argument, "dropout_rate must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw Error(Errc::invalid_argument, "learning_rate must be > 0");
    if (!(grad_clip_norm > 0.0)) throw Error(Errc::invalid_argument, "grad_clip_norm must be > 0");
    if (train_iters < 1) throw Error(Errc::invalid_argument, "train_iters must be >= 1");
}

const char* forecast_method_name(ForecastMethod m) {
    return m == ForecastMethod::lstm ? "lstm" : "curvefit";
}

ForecastMethod forecast_method_from_name(const std::string& name) {
    if (name == "lstm") return ForecastMethod::lstm;
    if (name == "curvefit") return ForecastMethod::curvefit;
    throw Error(Errc::invalid_argument, "unknown forecast method '" + name + "'");
}

SequencePredictor train_predictor(std::span<const double> prefix, const PredictorConfig& config) {
    config.validate();
    const int n = static_cast<int>(prefix.size());
    if (n < config.window + 1)
        throw Error(Errc::prefix_too_short,
                    "prefix length " + std::to_string(n) + " < window + 1 = " +
                        std::to_string(config.window + 1));

    const NormStats st = norm_stats(prefix);
    std::vector<double> xs(prefix.size());
    for (std::size_t i = 0; i < prefix.size(); ++i) xs[i] = (prefix[i] - st.mean) / st.std;

    // The last tenth of the prefix is held out: every few iterations the
    // current weights run a closed-loop rollout over it and the best iterate
    // wins. One-step loss alone does not track rollout stability.
    int fit_len = std::max(config.window + 1, (n * 9) / 10);
    if (n - fit_len < 5) fit_len = n;
    const int holdout = n - fit_len;

    std::vector<double> xseq, targets;
    build_windows(std::span<const double>(xs.data(), static_cast<std::size_t>(fit_len)),
                  config.window, xseq, targets);
    const int batch = fit_len - config.window;

    const ParamLayout lay(config.hidden_size);
    std::vector<double> params = init_params(lay, config.seed);
    std::vector<double> grads(params.size(), 0.0);
    std::vector<double> mask;

    LstmBatch net(config.window, config.hidden_size, batch);
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);  // dropout stream, separate from init

    SequencePredictor probe;
    probe.window = config.window;
    probe.hidden = config.hidden_size;
    probe.norm_mean = 0.0;  // xs is already normalized
    probe.norm_std = 1.0;
    auto rollout_rmse = [&](const std::vector<double>& candidate) {
        probe.params = candidate;
        std::vector<double> win(xs.begin() + fit_len - config.window, xs.begin() + fit_len);
        double se = 0.0;
        for (int k = 0; k < holdout; ++k) {
            const double pred = predict_window(probe, win);
            // mirror forecast(): clamp in raw units, feed the clamp back
            const double clamped =
                (std::max(0.0, st.mean + st.std * pred) - st.mean) / st.std;
            const double d = clamped - xs[static_cast<std::size_t>(fit_len + k)];
            se += d * d;
            win.erase(win.begin());
            win.push_back(clamped);
        }
        return std::sqrt(se / holdout);
    };

    std::vector<double> best_params;
    double best_score = std::numeric_limits<double>::infinity();
    const int eval_every = 10;

    for (int it = 0; it < config.train_iters; ++it) {
        std::span<const double> mask_span;
        if (config.dropout_rate > 0.0) {
            mask.assign(static_cast<std::size_t>(config.hidden_size), 0.0);
            const double keep_scale = 1.0 / (1.0 - config.dropout_rate);
            for (double& m : mask) m = rng.uniform() < config.dropout_rate ? 0.0 : keep_scale;
            mask_span = mask;
        }
        const double loss = net.forward(params, xseq, targets, mask_span);
        if (!std::isfinite(loss))
            throw Error(Errc::diverged_training,
                        "loss became non-finite at iteration " + std::to_string(it));
        net.backward(params, xseq, targets, mask_span, grads);
        clip_gradients(grads, config.grad_clip_norm);
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grads[i];

        if (holdout > 0 && ((it + 1) % eval_every == 0 || it + 1 == config.train_iters)) {
            const double score = rollout_rmse(params);
            if (std::isfinite(score) && score < best_score) {
                best_score = score;
                best_params = params;
            }
        }
    }
    if (!best_params.empty()) params = std::move(best_params);

    SequencePredictor out;
    out.window = config.window;
    out.hidden = config.hidden_size;
    out.params = std::move(params);
    out.norm_mean = st.mean;
    out.norm_std = st.std;
    out.final_train_rmse = std::sqrt(net.forward(out.params, xseq, targets, {}));
    if (!std::isfinite(out.final_train_rmse))
        throw Error(Errc::diverged_training, "final training loss is non-finite");
    return out;
}

Forecast forecast(const SequencePredictor& predictor, std::span<const double> prefix,
                  int horizon) {
    if (static_cast<int>(prefix.size()) < predictor.window)
        throw Error(Errc::prefix_too_short,
                    "prefix length " + std::to_string(prefix.size()) + " < window = " +
                        std::to_string(predictor.window));
    if (horizon < 1) throw Error(Errc::invalid_argument, "horizon must be >= 1");

    std::vector<double> window(static_cast<std::size_t>(predictor.window));
    const std::size_t off = prefix.size() - static_cast<std::size_t>(predictor.window);
    for (std::size_t i = 0; i < window.size(); ++i)
        window[i] = (prefix[off + i] - predictor.norm_mean) / predictor.norm_std;

    Forecast out;
    out.start_epoch = static_cast<int>(prefix.size()) + 1;
    out.method = ForecastMethod::lstm;
    out.values.reserve(static_cast<std::size_t>(horizon));
    for (int step = 0; step < horizon; ++step) {
        const double pred_norm = predict_window(predictor, window);
        const double denorm = predictor.norm_mean + predictor.norm_std * pred_norm;
        const double clamped = std::max(0.0, denorm);
        out.values.push_back(clamped);
        window.erase(window.begin());
        window.push_back((clamped - predictor.norm_mean) / predictor.norm_std);
    }
    return out;
}

double gradient_check(const PredictorConfig& config, std::span<const double> probe) {
    config.validate();
    const int n = static_cast<int>(probe.size());
    if (n < config.window + 1)
        throw Error(Errc::prefix_too_short,
                    "probe length " + std::to_string(n) + " < window + 1 = " +
                        std::to_string(config.window + 1));

    const NormStats st = norm_stats(probe);
    std::vector<double> xs(probe.size());
    for (std::size_t i = 0; i < probe.size(); ++i) xs[i] = (probe[i] - st.mean) / st.std;
    std::vector<double> xseq, targets;
    build_windows(xs, config.window, xseq, targets);
    const int batch = n - config.window;

    const ParamLayout lay(config.hidden_size);
    std::vector<double> params = init_params(lay, config.seed);
    std::vector<double> analytic(params.size(), 0.0);

    LstmBatch net(config.window, config.hidden_size, batch);
    net.forward(params, xseq, targets, {});
    net.backward(params, xseq, targets, {}, analytic);

    const double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double lp = net.forward(params, xseq, targets, {});
        const std::vector<std::uint8_t> pattern_plus = net.head_relu_pattern();
        params[i] = saved - h;
        const double lm = net.forward(params, xseq, targets, {});
        params[i] = saved;
        if (net.head_relu_pattern() != pattern_plus) continue;  // kink inside the FD step
        const double numeric = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

double SaturatingFit::value_at(int epoch) const {
    return m_inf + (m0 - m_inf) * std::exp(-static_cast<double>(epoch) / tau);
}

SaturatingFit fit_saturating_curve(std::span<const double> series) {
    const int n = static_cast<int>(series.size());
    if (n < 4) throw Error(Errc::prefix_too_short, "series length must be >= 4");

    const bool all_equal =
        std::all_of(series.begin(), series.end(), [&](double v) { return v == series[0]; });
    if (all_equal) {
        SaturatingFit fit;
        fit.m0 = fit.m_inf = series[0];
        fit.tau = 1.0;
        fit.residual_rmse = 0.0;
        fit.degenerate = true;
        return fit;
    }

    const double lo = 0.5, hi = 20.0 * n;
    const int grid = 257;
    const double ratio = std::pow(hi / lo, 1.0 / (grid - 1));
    double best_tau = lo;
    CurveFitEval best;
    for (int i = 0; i < grid; ++i) {
        const double tau = lo * std::pow(ratio, static_cast<double>(i));
        const CurveFitEval ev = eval_tau(series, tau);
        if (ev.rmse < best.rmse) {
            best = ev;
            best_tau = tau;
        }
    }

    // golden-section refinement on log(tau) one grid step either side
    double a = std::log(best_tau / ratio), b = std::log(best_tau * ratio);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = eval_tau(series, std::exp(x1)).rmse;
    double f2 = eval_tau(series, std::exp(x2)).rmse;
    for (int it = 0; it < 120; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval_tau(series, std::exp(x1)).rmse;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval_tau(series, std::exp(x2)).rmse;
        }
    }
    const double tau = std::exp(0.5 * (a + b));
    const CurveFitEval ev = eval_tau(series, tau);
    const CurveFitEval& final_ev = ev.rmse <= best.rmse ? ev : best;
    const double final_tau = ev.rmse <= best.rmse ? tau : best_tau;

    SaturatingFit fit;
    fit.m_inf = final_ev.a;
    fit.m0 = final_ev.a + final_ev.b;
    fit.tau = final_tau;
    fit.residual_rmse = final_ev.rmse;
    fit.degenerate = false;
    return fit;
}

Forecast forecast_curvefit(const SaturatingFit& fit, int observed_len, int horizon) {
    if (horizon < 1) throw Error(Errc::invalid_argument, "horizon must be >= 1");
    Forecast out;
    out.start_epoch = observed_len + 1;
    out.method = ForecastMethod::curvefit;
    out.values.reserve(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k)
        out.values.push_back(std::max(0.0, fit.value_at(observed_len + 1 + k)));
    return out;
}

Forecast forecast_series(std::span<const double> series, int observe, int horizon,
                         ForecastMethod method, const PredictorConfig& config) {
    if (observe < 1 || observe > static_cast<int>(series.size()))
        throw Error(Errc::prefix_too_short,
                    "observe " + std::to_string(observe) + " outside the series length " +
                        std::to_string(series.size()));
    const std::span<const double> prefix = series.subspan(0, static_cast<std::size_t>(observe));
    if (method == ForecastMethod::curvefit) {
        return forecast_curvefit(fit_saturating_curve(prefix), observe, horizon);
    }
    const SequencePredictor predictor = train_predictor(prefix, config);
    return forecast(predictor, prefix, horizon);
}

void save_predictor(const SequencePredictor& predictor, const std::filesystem::path& path) {
    const ParamLayout lay(predictor.hidden);
    const int h = predictor.hidden;
    auto slice = [&](int off, int count) {
        return std::vector<double>(predictor.params.begin() + off,
                                   predictor.params.begin() + off + count);
    };
    ordered_json j;
    j["layers"] = 2;
    j["window"] = predictor.window;
    j["hidden"] = h;
    j["w_ih"] = ordered_json::array({slice(lay.wih1, 4 * h), slice(lay.wih2, 4 * h * h)});
    j["w_hh"] = ordered_json::array({slice(lay.whh1, 4 * h * h), slice(lay.whh2, 4 * h * h)});
    j["b"] = ordered_json::array({slice(lay.b1, 4 * h), slice(lay.b2, 4 * h)});
    std::vector<double> wout = slice(lay.wout, h);
    wout.push_back(predictor.params[static_cast<std::size_t>(lay.bout)]);
    j["w_out"] = wout;
    j["norm_mean"] = predictor.norm_mean;
    j["norm_std"] = predictor.norm_std;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

SequencePredictor load_predictor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
    SequencePredictor p;
    p.window = j.at("window").get<int>();
    p.hidden = j.at("hidden").get<int>();
    const ParamLayout lay(p.hidden);
    p.params.assign(static_cast<std::size_t>(lay.total), 0.0);
    auto put = [&](const std::vector<double>& src, int off) {
        std::copy(src.begin(), src.end(), p.params.begin() + off);
    };
    put(j.at("w_ih")[0].get<std::vector<double>>(), lay.wih1);
    put(j.at("w_ih")[1].get<std::vector<double>>(), lay.wih2);
    put(j.at("w_hh")[0].get<std::vector<double>>(), lay.whh1);
    put(j.at("w_hh")[1].get<std::vector<double>>(), lay.whh2);
    put(j.at("b")[0].get<std::vector<double>>(), lay.b1);
    put(j.at("b")[1].get<std::vector<double>>(), lay.b2);
    std::vector<double> wout = j.at("w_out").get<std::vector<double>>();
    if (static_cast<int>(wout.size()) != p.hidden + 1)
        throw Error(Errc::parse_error, "w_out must have hidden+1 entries");
    p.params[static_cast<std::size_t>(lay.bout)] = wout.back();
    wout.pop_back();
    put(wout, lay.wout);
    p.norm_mean = j.at("norm_mean").get<double>();
    p.norm_std = j.at("norm_std").get<double>();
    if (!(p.norm_std > 0.0)) throw Error(Errc::parse_error, "norm_std must be > 0");
    for (double v : p.params)
        if (!std::isfinite(v)) throw Error(Errc::parse_error, "non-finite weight");
    return p;
}

double mape(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        throw Error(Errc::length_mismatch, "mape needs equal-length nonempty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (actual[i] == 0.0) throw Error(Errc::invalid_argument, "actual value is zero");
        sum += std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
    }
    return sum / static_cast<double>(predicted.size());
}

}  // namespace qoeplan
