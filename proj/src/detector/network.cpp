// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/network.hpp"

#include "sketchwatch/common/error.hpp"
#include "sketchwatch/detector/box.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>

namespace sketchwatch::detector {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

constexpr int kBoxValues = kNumClasses + 4;

// mish(x) = x * tanh(softplus(x)); with e = exp(x), tanh(softplus(x)) = n / (n + 2), n = e * (e + 2).
void mish_forward(const double *x, double *y, std::size_t n)
{
    Eigen::Map<const Eigen::ArrayXd> in(x, static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::ArrayXd> out(y, static_cast<Eigen::Index>(n));
    const Eigen::ArrayXd e = in.min(20.0).exp();
    const Eigen::ArrayXd q = e * (e + 2.0);
    out = in * q / (q + 2.0);
}

// dy = dout * mish'(x)
void mish_backward(const double *x, const double *dout, double *dy, std::size_t n)
{
    Eigen::Map<const Eigen::ArrayXd> in(x, static_cast<Eigen::Index>(n));
    Eigen::Map<const Eigen::ArrayXd> g(dout, static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::ArrayXd> out(dy, static_cast<Eigen::Index>(n));
    const Eigen::ArrayXd e = in.min(20.0).exp();
    const Eigen::ArrayXd q = e * (e + 2.0);
    const Eigen::ArrayXd t = q / (q + 2.0);
    out = g * (t + in * (e / (1.0 + e)) * (1.0 - t * t));
}

inline int out_size(int n, int stride) { return (n + stride - 1) / stride; }

void depthwise_forward(const double *in, int c, int h, int w, const double *k, int kh, int kw, int s, double *out)
{
    const int ho = out_size(h, s), wo = out_size(w, s);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    for (int ch = 0; ch < c; ++ch) {
        const double *ip = in + static_cast<std::size_t>(ch) * h * w;
        const double *kp = k + static_cast<std::size_t>(ch) * kh * kw;
        double *op = out + static_cast<std::size_t>(ch) * ho * wo;
        if (kh == 1 && kw == 1 && s == 1) {
            for (int i = 0; i < h * w; ++i)
                op[i] = kp[0] * ip[i];
            continue;
        }
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double acc = 0.0;
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * s + ky - ph;
                    if (iy < 0 || iy >= h)
                        continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox * s + kx - pw;
                        if (ix < 0 || ix >= w)
                            continue;
                        acc += ip[iy * w + ix] * kp[ky * kw + kx];
                    }
                }
                op[oy * wo + ox] = acc;
            }
        }
    }
}

// Accumulates into dk and (when non-null) din.
void depthwise_backward(const double *in, int c, int h, int w, const double *k, int kh, int kw, int s,
                        const double *dout, double *dk, double *din)
{
    const int ho = out_size(h, s), wo = out_size(w, s);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
    for (int ch = 0; ch < c; ++ch) {
        const double *ip = in + static_cast<std::size_t>(ch) * h * w;
        const double *kp = k + static_cast<std::size_t>(ch) * kh * kw;
        double *dkp = dk + static_cast<std::size_t>(ch) * kh * kw;
        const double *gp = dout + static_cast<std::size_t>(ch) * ho * wo;
        double *dip = din ? din + static_cast<std::size_t>(ch) * h * w : nullptr;
        if (kh == 1 && kw == 1 && s == 1) {
            double acc = 0.0;
            for (int i = 0; i < h * w; ++i) {
                acc += gp[i] * ip[i];
                if (dip)
                    dip[i] += gp[i] * kp[0];
            }
            dkp[0] += acc;
            continue;
        }
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                const double g = gp[oy * wo + ox];
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * s + ky - ph;
                    if (iy < 0 || iy >= h)
                        continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox * s + kx - pw;
                        if (ix < 0 || ix >= w)
                            continue;
                        dkp[ky * kw + kx] += g * ip[iy * w + ix];
                        if (dip)
                            dip[iy * w + ix] += g * kp[ky * kw + kx];
                    }
                }
            }
        }
    }
}

} // namespace

struct LayerCache {
    const double *in = nullptr;
    int h = 0;
    int w = 0;
    std::vector<double> dw_out; // empty for layers without a depthwise step
    std::vector<double> pre;
    std::vector<double> out;
};

struct SegmentCache {
    int in_h = 0;
    int in_w = 0;
    std::vector<int> argmax;
    std::vector<double> dense; // channel-major, grows by growth_rate per layer
};

struct ForwardCache::Impl {
    std::vector<double> image;
    std::vector<LayerCache> layers;
    std::vector<SegmentCache> segments;
    std::vector<const double *> features; // input of each head
    std::vector<int> feature_sizes;
    std::vector<int> feature_channels;
};

ForwardCache::ForwardCache() : impl(std::make_unique<Impl>()) {}
ForwardCache::~ForwardCache() = default;
ForwardCache::ForwardCache(ForwardCache &&) noexcept = default;
ForwardCache &ForwardCache::operator=(ForwardCache &&) noexcept = default;

Network::~Network() = default;
Network::Network(const Network &) = default;
Network &Network::operator=(const Network &) = default;
Network::Network(Network &&) noexcept = default;
Network &Network::operator=(Network &&) noexcept = default;

int Network::add_layer(std::string name, int cin, int cout, int kh, int kw, int stride, bool depthwise,
                       bool activation)
{
    Layer l;
    l.name = std::move(name);
    l.cin = cin;
    l.cout = cout;
    l.kh = kh;
    l.kw = kw;
    l.stride = stride;
    l.depthwise = depthwise;
    l.activation = activation;
    std::size_t off = params_.size();
    auto reserve = [&](const std::string &suffix, std::vector<int> shape) {
        std::size_t count = 1;
        for (int d : shape)
            count *= static_cast<std::size_t>(d);
        tensors_.push_back({l.name + "." + suffix, std::move(shape), off, count});
        const std::size_t at = off;
        off += count;
        return at;
    };
    if (depthwise)
        l.dw = reserve("depthwise", {cin, kh, kw});
    l.pw = reserve("pointwise", {cout, cin});
    l.bias = reserve("bias", {cout});
    params_.resize(off, 0.0);
    layers_.push_back(std::move(l));
    return static_cast<int>(layers_.size()) - 1;
}

Network::Network(NetConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.validate();
    const int A = cfg_.anchors_per_cell();
    int c = cfg_.stem_channels;
    stem_.push_back(add_layer("stem.0", 1, c, 3, 3, 2));
    stem_.push_back(add_layer("stem.1", c, c, 3, 3, 1));
    stem_.push_back(add_layer("stem.2", c, c, 3, 3, 1));
    for (int s = 0; s < cfg_.segments; ++s) {
        Segment seg;
        seg.channels_in = c;
        const std::string prefix = "segment." + std::to_string(s);
        for (int l = 0; l < cfg_.dense_layers; ++l) {
            const std::string lp = prefix + ".dense." + std::to_string(l);
            seg.reduce.push_back(add_layer(lp + ".reduce", c + l * cfg_.growth_rate, cfg_.bottleneck_width, 1, 1, 1));
            seg.grow.push_back(add_layer(lp + ".grow", cfg_.bottleneck_width, cfg_.growth_rate, 3, 3, 1));
        }
        const int total = c + cfg_.dense_layers * cfg_.growth_rate;
        seg.transition = add_layer(prefix + ".transition", total, total / 2, 1, 1, 1);
        c = total / 2;
        segments_.push_back(std::move(seg));
    }
    std::vector<int> scale_channels{c};
    for (int e = 0; e < cfg_.extra_scales; ++e) {
        const std::string prefix = "extra." + std::to_string(e);
        const int r = add_layer(prefix + ".reduce", c, cfg_.extra_mid_channels, 1, 1, 1);
        const int d = add_layer(prefix + ".down", cfg_.extra_mid_channels, cfg_.extra_out_channels, 3, 3, 2);
        extras_.emplace_back(r, d);
        c = cfg_.extra_out_channels;
        scale_channels.push_back(c);
    }
    for (std::size_t s = 0; s < scale_channels.size(); ++s) {
        const std::string prefix = "head." + std::to_string(s);
        const int conv = add_layer(prefix + ".conv", scale_channels[s], cfg_.head_channels, 3, 5, 1);
        const int proj = add_layer(prefix + ".proj", cfg_.head_channels, A * kBoxValues, 1, 1, 1, false, false);
        heads_.emplace_back(conv, proj);
    }
    anchor_count_ = cfg_.anchor_count();
}

void Network::init(std::uint64_t seed, double background_prior)
{
    if (background_prior < 0.0 || background_prior >= 1.0)
        throw Error(Errc::invalid_argument, "background prior must be in [0, 1)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (const auto &l : layers_) {
        if (l.depthwise) {
            const double sd = std::sqrt(1.0 / (l.kh * l.kw));
            for (std::size_t i = 0; i < static_cast<std::size_t>(l.cin) * l.kh * l.kw; ++i)
                params_[l.dw + i] = sd * unit(rng);
        }
        const double sd = l.activation ? std::sqrt(2.0 / l.cin) : 0.01;
        for (std::size_t i = 0; i < static_cast<std::size_t>(l.cout) * l.cin; ++i)
            params_[l.pw + i] = sd * unit(rng);
        std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(l.bias), l.cout, 0.0);
    }
    if (background_prior > 0.0) {
        const double b = std::log(background_prior * (kNumClasses - 1) / (1.0 - background_prior));
        for (const auto &h : heads_) {
            const auto &l = layers_[static_cast<std::size_t>(h.second)];
            for (int a = 0; a < cfg_.anchors_per_cell(); ++a)
                params_[l.bias + static_cast<std::size_t>(a) * kBoxValues + kBackground] = b;
        }
    }
}

namespace {

// Runs one separable layer on `in` (cin x h x w). Outputs land in lc.out; lc.dw_out
// and lc.pre are kept only when `keep` is set.
void run_layer(const Network::Layer &l, const double *params, const double *in, int h, int w, LayerCache &lc,
               bool keep)
{
    const int ho = out_size(h, l.stride), wo = out_size(w, l.stride);
    const std::size_t hw = static_cast<std::size_t>(ho) * wo;
    lc.in = in;
    lc.h = h;
    lc.w = w;
    const double *x = in;
    if (l.depthwise) {
        lc.dw_out.resize(static_cast<std::size_t>(l.cin) * hw);
        depthwise_forward(in, l.cin, h, w, params + l.dw, l.kh, l.kw, l.stride, lc.dw_out.data());
        x = lc.dw_out.data();
    }
    lc.pre.resize(static_cast<std::size_t>(l.cout) * hw);
    MapMat pre(lc.pre.data(), l.cout, static_cast<Eigen::Index>(hw));
    CMapMat W(params + l.pw, l.cout, l.cin);
    CMapMat X(x, l.cin, static_cast<Eigen::Index>(hw));
    Eigen::Map<const Eigen::VectorXd> b(params + l.bias, l.cout);
    pre.noalias() = W * X;
    pre.colwise() += b;
    lc.out.resize(lc.pre.size());
    if (l.activation)
        mish_forward(lc.pre.data(), lc.out.data(), lc.pre.size());
    else
        lc.out = lc.pre;
    if (!keep) {
        std::vector<double>().swap(lc.dw_out);
        std::vector<double>().swap(lc.pre);
    }
}

// dout is w.r.t. the layer output. Accumulates parameter gradients into grad and
// input gradients into din (skipped when null).
void backprop_layer(const Network::Layer &l, const double *params, double *grad, const LayerCache &lc,
                    const double *dout, double *din)
{
    const int ho = out_size(lc.h, l.stride), wo = out_size(lc.w, l.stride);
    const auto hw = static_cast<Eigen::Index>(ho) * wo;
    RowMat dpre(l.cout, hw);
    if (l.activation)
        mish_backward(lc.pre.data(), dout, dpre.data(), static_cast<std::size_t>(dpre.size()));
    else
        std::copy_n(dout, dpre.size(), dpre.data());
    const double *x = l.depthwise ? lc.dw_out.data() : lc.in;
    CMapMat X(x, l.cin, hw);
    CMapMat W(params + l.pw, l.cout, l.cin);
    MapMat dW(grad + l.pw, l.cout, l.cin);
    Eigen::Map<Eigen::VectorXd> db(grad + l.bias, l.cout);
    dW.noalias() += dpre * X.transpose();
    db += dpre.rowwise().sum();
    if (!l.depthwise) {
        if (din) {
            MapMat dx(din, l.cin, hw);
            dx.noalias() += W.transpose() * dpre;
        }
        return;
    }
    RowMat ddw(l.cin, hw);
    ddw.noalias() = W.transpose() * dpre;
    depthwise_backward(lc.in, l.cin, lc.h, lc.w, params + l.dw, l.kh, l.kw, l.stride, ddw.data(), grad + l.dw, din);
}

} // namespace

Prediction Network::forward(std::span<const double> image) const { return run(image, nullptr); }

Prediction Network::forward(std::span<const double> image, ForwardCache &cache) const { return run(image, &cache); }

Prediction Network::run(std::span<const double> image, ForwardCache *cache) const
{
    const int S = cfg_.input_size;
    if (image.size() != static_cast<std::size_t>(S) * S)
        throw Error(Errc::dimension, "input has " + std::to_string(image.size()) + " values, expected " +
                                         std::to_string(static_cast<std::size_t>(S) * S));
    const bool keep = cache != nullptr;
    ForwardCache::Impl local;
    ForwardCache::Impl &st = keep ? *cache->impl : local;
    st.image.assign(image.begin(), image.end());
    st.layers.resize(layers_.size());
    st.segments.resize(segments_.size());
    st.features.clear();
    st.feature_sizes.clear();
    st.feature_channels.clear();
    const double *P = params_.data();

    auto release = [&](int id) {
        if (!keep)
            std::vector<double>().swap(st.layers[static_cast<std::size_t>(id)].out);
    };

    // Stem
    const double *cur = st.image.data();
    int size = S;
    for (std::size_t i = 0; i < stem_.size(); ++i) {
        const int id = stem_[i];
        run_layer(layers_[static_cast<std::size_t>(id)], P, cur, size, size, st.layers[static_cast<std::size_t>(id)],
                  keep);
        if (i > 0)
            release(stem_[i - 1]);
        size = out_size(size, layers_[static_cast<std::size_t>(id)].stride);
        cur = st.layers[static_cast<std::size_t>(id)].out.data();
    }
    int prev_id = stem_.back();
    int channels = cfg_.stem_channels;

    for (std::size_t s = 0; s < segments_.size(); ++s) {
        const auto &seg = segments_[s];
        auto &sc = st.segments[s];
        sc.in_h = size;
        sc.in_w = size;
        const int half = size / 2;
        const std::size_t hw = static_cast<std::size_t>(half) * half;
        const int total = seg.channels_in + cfg_.dense_layers * cfg_.growth_rate;
        sc.dense.assign(static_cast<std::size_t>(total) * hw, 0.0);
        sc.argmax.resize(static_cast<std::size_t>(channels) * hw);
        for (int c = 0; c < channels; ++c) {
            const double *ip = cur + static_cast<std::size_t>(c) * size * size;
            for (int y = 0; y < half; ++y) {
                for (int x = 0; x < half; ++x) {
                    int best = (2 * y) * size + 2 * x;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const int idx = (2 * y + dy) * size + 2 * x + dx;
                            if (ip[idx] > ip[best])
                                best = idx;
                        }
                    const std::size_t o = static_cast<std::size_t>(c) * hw + static_cast<std::size_t>(y) * half + x;
                    sc.argmax[o] = best;
                    sc.dense[o] = ip[best];
                }
            }
        }
        release(prev_id);
        if (!keep)
            std::vector<int>().swap(sc.argmax);
        size = half;
        for (int l = 0; l < cfg_.dense_layers; ++l) {
            const int r = seg.reduce[static_cast<std::size_t>(l)];
            const int g = seg.grow[static_cast<std::size_t>(l)];
            auto &rc = st.layers[static_cast<std::size_t>(r)];
            auto &gc = st.layers[static_cast<std::size_t>(g)];
            run_layer(layers_[static_cast<std::size_t>(r)], P, sc.dense.data(), size, size, rc, keep);
            run_layer(layers_[static_cast<std::size_t>(g)], P, rc.out.data(), size, size, gc, keep);
            const std::size_t at = static_cast<std::size_t>(seg.channels_in + l * cfg_.growth_rate) * hw;
            std::copy(gc.out.begin(), gc.out.end(), sc.dense.begin() + static_cast<std::ptrdiff_t>(at));
            release(r);
            release(g);
        }
        run_layer(layers_[static_cast<std::size_t>(seg.transition)], P, sc.dense.data(), size, size,
                  st.layers[static_cast<std::size_t>(seg.transition)], keep);
        if (!keep)
            std::vector<double>().swap(sc.dense);
        prev_id = seg.transition;
        cur = st.layers[static_cast<std::size_t>(prev_id)].out.data();
        channels = layers_[static_cast<std::size_t>(prev_id)].cout;
    }

    st.features.push_back(cur);
    st.feature_sizes.push_back(size);
    st.feature_channels.push_back(channels);
    for (const auto &[r, d] : extras_) {
        auto &rc = st.layers[static_cast<std::size_t>(r)];
        auto &dc = st.layers[static_cast<std::size_t>(d)];
        run_layer(layers_[static_cast<std::size_t>(r)], P, cur, size, size, rc, keep);
        run_layer(layers_[static_cast<std::size_t>(d)], P, rc.out.data(), size, size, dc, keep);
        release(r);
        size = out_size(size, 2);
        cur = dc.out.data();
        st.features.push_back(cur);
        st.feature_sizes.push_back(size);
        st.feature_channels.push_back(cfg_.extra_out_channels);
    }

    Prediction pred;
    pred.logits.resize(anchor_count_ * kNumClasses);
    pred.offsets.resize(anchor_count_ * 4);
    const int A = cfg_.anchors_per_cell();
    std::size_t anchor = 0;
    for (std::size_t s = 0; s < heads_.size(); ++s) {
        const auto [conv, proj] = heads_[s];
        const int f = st.feature_sizes[s];
        auto &cc = st.layers[static_cast<std::size_t>(conv)];
        auto &pc = st.layers[static_cast<std::size_t>(proj)];
        run_layer(layers_[static_cast<std::size_t>(conv)], P, st.features[s], f, f, cc, keep);
        run_layer(layers_[static_cast<std::size_t>(proj)], P, cc.out.data(), f, f, pc, keep);
        const std::size_t hw = static_cast<std::size_t>(f) * f;
        for (std::size_t cell = 0; cell < hw; ++cell) {
            for (int a = 0; a < A; ++a, ++anchor) {
                for (int k = 0; k < kNumClasses; ++k)
                    pred.logits[anchor * kNumClasses + k] = pc.out[(static_cast<std::size_t>(a) * kBoxValues + k) * hw + cell];
                for (int k = 0; k < 4; ++k)
                    pred.offsets[anchor * 4 + k] = pc.out[(static_cast<std::size_t>(a) * kBoxValues + kNumClasses + k) * hw + cell];
            }
        }
        release(conv);
        release(proj);
    }
    pred.probs.resize(pred.logits.size());
    softmax_rows(pred.logits, pred.probs);
    return pred;
}

void Network::backward(const ForwardCache &cache, std::span<const double> dlogits, std::span<const double> doffsets,
                       std::span<double> grad) const
{
    if (dlogits.size() != anchor_count_ * kNumClasses || doffsets.size() != anchor_count_ * 4)
        throw Error(Errc::dimension, "output gradient size does not match the anchor count");
    if (grad.size() != params_.size())
        throw Error(Errc::dimension, "gradient buffer does not match the parameter count");
    const auto &st = *cache.impl;
    if (st.features.size() != heads_.size())
        throw Error(Errc::invalid_state, "backward needs a caching forward pass");
    const double *P = params_.data();
    double *G = grad.data();
    auto lc = [&](int id) -> const LayerCache & { return st.layers[static_cast<std::size_t>(id)]; };
    auto layer = [&](int id) -> const Layer & { return layers_[static_cast<std::size_t>(id)]; };

    std::vector<std::vector<double>> dfeat(st.features.size());
    for (std::size_t s = 0; s < dfeat.size(); ++s)
        dfeat[s].assign(static_cast<std::size_t>(st.feature_channels[s]) * st.feature_sizes[s] * st.feature_sizes[s],
                        0.0);

    const int A = cfg_.anchors_per_cell();
    std::size_t anchor = 0;
    for (std::size_t s = 0; s < heads_.size(); ++s) {
        const auto [conv, proj] = heads_[s];
        const int f = st.feature_sizes[s];
        const std::size_t hw = static_cast<std::size_t>(f) * f;
        std::vector<double> dout(static_cast<std::size_t>(A) * kBoxValues * hw);
        for (std::size_t cell = 0; cell < hw; ++cell) {
            for (int a = 0; a < A; ++a, ++anchor) {
                for (int k = 0; k < kNumClasses; ++k)
                    dout[(static_cast<std::size_t>(a) * kBoxValues + k) * hw + cell] = dlogits[anchor * kNumClasses + k];
                for (int k = 0; k < 4; ++k)
                    dout[(static_cast<std::size_t>(a) * kBoxValues + kNumClasses + k) * hw + cell] = doffsets[anchor * 4 + k];
            }
        }
        std::vector<double> dconv(static_cast<std::size_t>(cfg_.head_channels) * hw, 0.0);
        backprop_layer(layer(proj), P, G, lc(proj), dout.data(), dconv.data());
        backprop_layer(layer(conv), P, G, lc(conv), dconv.data(), dfeat[s].data());
    }

    for (std::size_t e = extras_.size(); e-- > 0;) {
        const auto [r, d] = extras_[e];
        std::vector<double> dmid(lc(r).out.size(), 0.0);
        backprop_layer(layer(d), P, G, lc(d), dfeat[e + 1].data(), dmid.data());
        backprop_layer(layer(r), P, G, lc(r), dmid.data(), dfeat[e].data());
    }

    std::vector<double> dcur = std::move(dfeat[0]);
    for (std::size_t s = segments_.size(); s-- > 0;) {
        const auto &seg = segments_[s];
        const auto &sc = st.segments[s];
        const int size = sc.in_h / 2;
        const std::size_t hw = static_cast<std::size_t>(size) * size;
        std::vector<double> ddense(sc.dense.size(), 0.0);
        backprop_layer(layer(seg.transition), P, G, lc(seg.transition), dcur.data(), ddense.data());
        for (int l = cfg_.dense_layers; l-- > 0;) {
            const int r = seg.reduce[static_cast<std::size_t>(l)];
            const int g = seg.grow[static_cast<std::size_t>(l)];
            const std::size_t at = static_cast<std::size_t>(seg.channels_in + l * cfg_.growth_rate) * hw;
            std::vector<double> dbott(lc(r).out.size(), 0.0);
            backprop_layer(layer(g), P, G, lc(g), ddense.data() + at, dbott.data());
            backprop_layer(layer(r), P, G, lc(r), dbott.data(), ddense.data());
        }
        const int channels = seg.channels_in;
        dcur.assign(static_cast<std::size_t>(channels) * sc.in_h * sc.in_w, 0.0);
        for (int c = 0; c < channels; ++c)
            for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t o = static_cast<std::size_t>(c) * hw + i;
                dcur[static_cast<std::size_t>(c) * sc.in_h * sc.in_w + static_cast<std::size_t>(sc.argmax[o])] +=
                    ddense[o];
            }
    }

    for (std::size_t i = stem_.size(); i-- > 0;) {
        const int id = stem_[i];
        std::vector<double> din;
        if (i > 0)
            din.assign(static_cast<std::size_t>(layer(id).cin) * lc(id).h * lc(id).w, 0.0);
        backprop_layer(layer(id), P, G, lc(id), dcur.data(), i > 0 ? din.data() : nullptr);
        dcur = std::move(din);
    }
}

void softmax_rows(std::span<const double> logits, std::span<double> probs)
{
    for (std::size_t r = 0; r + kNumClasses <= logits.size(); r += kNumClasses) {
        double m = logits[r];
        for (int k = 1; k < kNumClasses; ++k)
            m = std::max(m, logits[r + k]);
        double sum = 0.0;
        for (int k = 0; k < kNumClasses; ++k) {
            probs[r + k] = std::exp(logits[r + k] - m);
            sum += probs[r + k];
        }
        for (int k = 0; k < kNumClasses; ++k)
            probs[r + k] /= sum;
    }
}

} // namespace sketchwatch::detector
