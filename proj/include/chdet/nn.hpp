// SPDX-License-Identifier: Apache-2.0
//
// chdet - coverage hole detection workbench for urban cellular networks
// Copyright (C) 2026 chdet contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Small reverse-mode neural-network engine: 2D convolution, transposed
// convolution and ReLU layers over batched [N,C,H,W] tensors, the
// two-branch Q-value network built from them, and an Adam optimizer.
//
// Everything is templated on the scalar type so the same graph can run in
// double for finite-difference verification and in float for training.
// All per-sample reductions run in a fixed order, so results are
// bit-reproducible for a given seed and thread-independent (the batch loop
// is serial by construction).

#pragma once

#include "gridworld.hpp"
#include "rng.hpp"
#include "tensor.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace chdet
{

/// Named view of one parameter tensor and its gradient, used by the
/// optimizer, checkpointing and weight copying.
template <typename T> struct ParamView
{
    std::string name;
    std::vector<T> *value;
    std::vector<T> *grad;
};

namespace detail
{

inline void check_batch_shape(const char *who, const std::vector<int> &shape, int channels)
{
    if (shape.size() != 4)
        throw std::invalid_argument(std::string(who) + ": expected a [N,C,H,W] tensor");
    if (shape[1] != channels)
        throw std::invalid_argument(std::string(who) + ": channel count mismatch");
}

} // namespace detail

/// 2D convolution with square kernel, symmetric padding and uniform stride.
/// Weight layout: [out_ch][in_ch][k][k]; bias per output channel.
template <typename T> class Conv2D
{
  public:
    Conv2D(std::string name, int in_ch, int out_ch, int k, int stride, int pad)
        : name_(std::move(name)), in_(in_ch), out_(out_ch), k_(k), stride_(stride), pad_(pad)
    {
        if (in_ch <= 0 || out_ch <= 0 || k <= 0 || stride <= 0 || pad < 0)
            throw std::invalid_argument("Conv2D: invalid geometry");
        const std::size_t wn = static_cast<std::size_t>(out_) * in_ * k_ * k_;
        w.assign(wn, T(0));
        dw.assign(wn, T(0));
        b.assign(static_cast<std::size_t>(out_), T(0));
        db.assign(static_cast<std::size_t>(out_), T(0));
    }

    /// He-uniform weights (bound sqrt(6 / fan_in), fan_in = in_ch * k^2),
    /// zero biases. Deterministic in the seed.
    void init_he_uniform(std::uint64_t seed)
    {
        Rng rng = make_rng(seed);
        const double bound = std::sqrt(6.0 / (static_cast<double>(in_) * k_ * k_));
        for (auto &x : w)
            x = static_cast<T>(uniform_real(rng, -bound, bound));
        std::fill(b.begin(), b.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T> &x)
    {
        detail::check_batch_shape(name_.c_str(), x.shape, in_);
        x_ = x;
        const int n = x.shape[0], h = x.shape[2], wd = x.shape[3];
        const int oh = conv_out_extent(h, k_, stride_, pad_);
        const int ow = conv_out_extent(wd, k_, stride_, pad_);
        if (oh <= 0 || ow <= 0)
            throw std::invalid_argument(name_ + ": input smaller than kernel support");
        const std::size_t ckk = static_cast<std::size_t>(in_) * k_ * k_;
        const std::size_t patch = static_cast<std::size_t>(oh) * ow;

        Tensor<T> y({n, out_, oh, ow});
        std::vector<T> cols(ckk * patch);
        ConstMatMap<T> wmat(w.data(), out_, static_cast<Eigen::Index>(ckk));
        for (int s = 0; s < n; ++s)
        {
            im2col(x.data() + static_cast<std::size_t>(s) * in_ * h * wd, in_, h, wd, k_,
                   stride_, pad_, cols.data());
            ConstMatMap<T> cmat(cols.data(), static_cast<Eigen::Index>(ckk),
                                static_cast<Eigen::Index>(patch));
            MatMap<T> ymat(y.data() + static_cast<std::size_t>(s) * out_ * patch, out_,
                           static_cast<Eigen::Index>(patch));
            ymat.noalias() = wmat * cmat;
            for (int o = 0; o < out_; ++o)
                ymat.row(o).array() += b[static_cast<std::size_t>(o)];
        }
        return y;
    }

    /// Consumes the gradient w.r.t. the forward output, overwrites dw/db
    /// with this batch's parameter gradients and returns the gradient
    /// w.r.t. the forward input.
    Tensor<T> backward(const Tensor<T> &dy)
    {
        detail::check_batch_shape((name_ + " backward").c_str(), dy.shape, out_);
        const int n = x_.shape[0], h = x_.shape[2], wd = x_.shape[3];
        const int oh = dy.shape[2], ow = dy.shape[3];
        if (dy.shape[0] != n || oh != conv_out_extent(h, k_, stride_, pad_) ||
            ow != conv_out_extent(wd, k_, stride_, pad_))
            throw std::invalid_argument(name_ + ": gradient shape mismatch");
        const std::size_t ckk = static_cast<std::size_t>(in_) * k_ * k_;
        const std::size_t patch = static_cast<std::size_t>(oh) * ow;

        std::fill(dw.begin(), dw.end(), T(0));
        std::fill(db.begin(), db.end(), T(0));
        Tensor<T> dx({n, in_, h, wd});
        std::vector<T> cols(ckk * patch);
        std::vector<T> dcols(ckk * patch);
        MatMap<T> dwmat(dw.data(), out_, static_cast<Eigen::Index>(ckk));
        ConstMatMap<T> wmat(w.data(), out_, static_cast<Eigen::Index>(ckk));
        for (int s = 0; s < n; ++s)
        {
            im2col(x_.data() + static_cast<std::size_t>(s) * in_ * h * wd, in_, h, wd, k_,
                   stride_, pad_, cols.data());
            ConstMatMap<T> cmat(cols.data(), static_cast<Eigen::Index>(ckk),
                                static_cast<Eigen::Index>(patch));
            ConstMatMap<T> gmat(dy.data() + static_cast<std::size_t>(s) * out_ * patch, out_,
                                static_cast<Eigen::Index>(patch));
            dwmat.noalias() += gmat * cmat.transpose();
            // Fixed-order scalar sum: Eigen's vectorized reductions peel to
            // the buffer's alignment, which would make the rounding depend
            // on heap addresses and break run-to-run reproducibility.
            for (int o = 0; o < out_; ++o)
            {
                const T *row = dy.data() + (static_cast<std::size_t>(s) * out_ +
                                            static_cast<std::size_t>(o)) *
                                               patch;
                T acc = T(0);
                for (std::size_t i = 0; i < patch; ++i)
                    acc += row[i];
                db[static_cast<std::size_t>(o)] += acc;
            }
            MatMap<T> dcmat(dcols.data(), static_cast<Eigen::Index>(ckk),
                            static_cast<Eigen::Index>(patch));
            dcmat.noalias() = wmat.transpose() * gmat;
            col2im(dcols.data(), in_, h, wd, k_, stride_, pad_,
                   dx.data() + static_cast<std::size_t>(s) * in_ * h * wd);
        }
        return dx;
    }

    std::vector<ParamView<T>> params()
    {
        return {{name_ + ".w", &w, &dw}, {name_ + ".b", &b, &db}};
    }

    int in_channels() const { return in_; }
    int out_channels() const { return out_; }

    std::vector<T> w, b, dw, db;

  private:
    std::string name_;
    int in_, out_, k_, stride_, pad_;
    Tensor<T> x_;
};

/// Transposed 2D convolution: the exact adjoint of Conv2D with the same
/// (k, stride, pad). Weight layout: [in_ch][out_ch][k][k]; forward is the
/// input-gradient pass of the mirror convolution, so the duality between
/// the two layer types holds by construction.
template <typename T> class TConv2D
{
  public:
    TConv2D(std::string name, int in_ch, int out_ch, int k, int stride, int pad)
        : name_(std::move(name)), in_(in_ch), out_(out_ch), k_(k), stride_(stride), pad_(pad)
    {
        if (in_ch <= 0 || out_ch <= 0 || k <= 0 || stride <= 0 || pad < 0)
            throw std::invalid_argument("TConv2D: invalid geometry");
        const std::size_t wn = static_cast<std::size_t>(in_) * out_ * k_ * k_;
        w.assign(wn, T(0));
        dw.assign(wn, T(0));
        b.assign(static_cast<std::size_t>(out_), T(0));
        db.assign(static_cast<std::size_t>(out_), T(0));
    }

    void init_he_uniform(std::uint64_t seed)
    {
        Rng rng = make_rng(seed);
        const double bound = std::sqrt(6.0 / (static_cast<double>(in_) * k_ * k_));
        for (auto &x : w)
            x = static_cast<T>(uniform_real(rng, -bound, bound));
        std::fill(b.begin(), b.end(), T(0));
    }

    static int out_extent(int in, int k, int stride, int pad)
    {
        return (in - 1) * stride + k - 2 * pad;
    }

    Tensor<T> forward(const Tensor<T> &x)
    {
        detail::check_batch_shape(name_.c_str(), x.shape, in_);
        x_ = x;
        const int n = x.shape[0], h = x.shape[2], wd = x.shape[3];
        const int oh = out_extent(h, k_, stride_, pad_);
        const int ow = out_extent(wd, k_, stride_, pad_);
        if (oh <= 0 || ow <= 0)
            throw std::invalid_argument(name_ + ": output would be empty");
        // Sanity: the mirror convolution maps the output extent back.
        if (conv_out_extent(oh, k_, stride_, pad_) != h ||
            conv_out_extent(ow, k_, stride_, pad_) != wd)
            throw std::invalid_argument(name_ + ": geometry is not invertible");
        const std::size_t okk = static_cast<std::size_t>(out_) * k_ * k_;
        const std::size_t patch = static_cast<std::size_t>(h) * wd;

        Tensor<T> y({n, out_, oh, ow});
        std::vector<T> cols(okk * patch);
        ConstMatMap<T> wmat(w.data(), in_, static_cast<Eigen::Index>(okk));
        for (int s = 0; s < n; ++s)
        {
            ConstMatMap<T> xmat(x.data() + static_cast<std::size_t>(s) * in_ * patch, in_,
                                static_cast<Eigen::Index>(patch));
            MatMap<T> cmat(cols.data(), static_cast<Eigen::Index>(okk),
                           static_cast<Eigen::Index>(patch));
            cmat.noalias() = wmat.transpose() * xmat;
            T *img = y.data() + static_cast<std::size_t>(s) * out_ * oh * ow;
            col2im(cols.data(), out_, oh, ow, k_, stride_, pad_, img);
            for (int o = 0; o < out_; ++o)
            {
                T *plane = img + static_cast<std::size_t>(o) * oh * ow;
                for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i)
                    plane[i] += b[static_cast<std::size_t>(o)];
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T> &dy)
    {
        detail::check_batch_shape((name_ + " backward").c_str(), dy.shape, out_);
        const int n = x_.shape[0], h = x_.shape[2], wd = x_.shape[3];
        const int oh = dy.shape[2], ow = dy.shape[3];
        if (dy.shape[0] != n || oh != out_extent(h, k_, stride_, pad_) ||
            ow != out_extent(wd, k_, stride_, pad_))
            throw std::invalid_argument(name_ + ": gradient shape mismatch");
        const std::size_t okk = static_cast<std::size_t>(out_) * k_ * k_;
        const std::size_t patch = static_cast<std::size_t>(h) * wd;

        std::fill(dw.begin(), dw.end(), T(0));
        std::fill(db.begin(), db.end(), T(0));
        Tensor<T> dx({n, in_, h, wd});
        std::vector<T> cols(okk * patch);
        ConstMatMap<T> wmat(w.data(), in_, static_cast<Eigen::Index>(okk));
        MatMap<T> dwmat(dw.data(), in_, static_cast<Eigen::Index>(okk));
        for (int s = 0; s < n; ++s)
        {
            const T *g = dy.data() + static_cast<std::size_t>(s) * out_ * oh * ow;
            im2col(g, out_, oh, ow, k_, stride_, pad_, cols.data());
            ConstMatMap<T> cmat(cols.data(), static_cast<Eigen::Index>(okk),
                                static_cast<Eigen::Index>(patch));
            MatMap<T> dxmat(dx.data() + static_cast<std::size_t>(s) * in_ * patch, in_,
                            static_cast<Eigen::Index>(patch));
            dxmat.noalias() = wmat * cmat;
            ConstMatMap<T> xmat(x_.data() + static_cast<std::size_t>(s) * in_ * patch, in_,
                                static_cast<Eigen::Index>(patch));
            dwmat.noalias() += xmat * cmat.transpose();
            for (int o = 0; o < out_; ++o)
            {
                const T *plane = g + static_cast<std::size_t>(o) * oh * ow;
                T acc = T(0);
                for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i)
                    acc += plane[i];
                db[static_cast<std::size_t>(o)] += acc;
            }
        }
        return dx;
    }

    std::vector<ParamView<T>> params()
    {
        return {{name_ + ".w", &w, &dw}, {name_ + ".b", &b, &db}};
    }

    int in_channels() const { return in_; }
    int out_channels() const { return out_; }

    std::vector<T> w, b, dw, db;

  private:
    std::string name_;
    int in_, out_, k_, stride_, pad_;
    Tensor<T> x_;
};

/// Elementwise rectifier. Caches the sign mask for the backward pass.
template <typename T> class ReLU
{
  public:
    Tensor<T> forward(const Tensor<T> &x)
    {
        mask_.assign(x.numel(), 0);
        Tensor<T> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i)
        {
            if (x.values[i] > T(0))
            {
                y.values[i] = x.values[i];
                mask_[i] = 1;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T> &dy)
    {
        if (dy.numel() != mask_.size())
            throw std::invalid_argument("ReLU: gradient shape mismatch");
        Tensor<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.numel(); ++i)
            dx.values[i] = mask_[i] ? dy.values[i] : T(0);
        return dx;
    }

  private:
    std::vector<unsigned char> mask_;
};

/// Action-value network over the three-plane state encoding.
///
/// Branch A runs the full-grid planes through two stride-2 convolutions and
/// one stride-1 convolution; the UAV's cell lands at feature coordinate
/// (i/4, j/4) after the downsampling, and a (2*reach+1)^2 window around that
/// coordinate is cut out (zero-padded at feature-map borders). Branch B runs
/// the local crop planes through two stride-1 convolutions at full
/// resolution. The two 16-channel stacks are concatenated and decoded by
/// three transposed convolutions into one Q-value per action of the
/// (2*reach+1)^2 movement window.
template <typename T> class QNetwork
{
  public:
    QNetwork(int reach, std::uint64_t seed)
        : reach_(reach), a1_("a1", 3, 8, 5, 2, 2), a2_("a2", 8, 16, 5, 2, 2),
          a3_("a3", 16, 16, 3, 1, 1), b1_("b1", 3, 16, 3, 1, 1), b2_("b2", 16, 16, 3, 1, 1),
          h1_("h1", 32, 16, 3, 1, 1), h2_("h2", 16, 8, 3, 1, 1), h3_("h3", 8, 1, 3, 1, 1)
    {
        if (reach < 1)
            throw std::invalid_argument("QNetwork: reach must be at least 1");
        a1_.init_he_uniform(derive_seed(seed, 1));
        a2_.init_he_uniform(derive_seed(seed, 2));
        a3_.init_he_uniform(derive_seed(seed, 3));
        b1_.init_he_uniform(derive_seed(seed, 4));
        b2_.init_he_uniform(derive_seed(seed, 5));
        h1_.init_he_uniform(derive_seed(seed, 6));
        h2_.init_he_uniform(derive_seed(seed, 7));
        h3_.init_he_uniform(derive_seed(seed, 8));
    }

    int reach() const { return reach_; }
    int window_side() const { return 2 * reach_ + 1; }
    int n_actions() const { return window_side() * window_side(); }

    /// xa: [N,3,L,L] full-grid planes; xb: [N,3,2*reach+1,2*reach+1] crop
    /// planes; uav: the UAV cell per sample, in full-grid coordinates.
    /// Returns [N, n_actions()] Q-values in row-major action order.
    Tensor<T> forward(const Tensor<T> &xa, const Tensor<T> &xb,
                      const std::vector<GridPoint> &uav)
    {
        const int side = window_side();
        detail::check_batch_shape("QNetwork(xa)", xa.shape, 3);
        detail::check_batch_shape("QNetwork(xb)", xb.shape, 3);
        const int n = xa.shape[0];
        if (xa.shape[2] != xa.shape[3])
            throw std::invalid_argument("QNetwork: full-grid planes must be square");
        if (xb.shape[0] != n || xb.shape[2] != side || xb.shape[3] != side)
            throw std::invalid_argument("QNetwork: crop planes must be [N,3,2r+1,2r+1]");
        if (static_cast<int>(uav.size()) != n)
            throw std::invalid_argument("QNetwork: one UAV cell per sample required");
        const int grid = xa.shape[2];
        for (const GridPoint &p : uav)
            if (p.i < 0 || p.j < 0 || p.i >= grid || p.j >= grid)
                throw std::invalid_argument("QNetwork: UAV cell outside the grid");
        uav_ = uav;

        Tensor<T> fa = ra3_.forward(a3_.forward(ra2_.forward(a2_.forward(ra1_.forward(a1_.forward(xa))))));
        fa_shape_ = fa.shape;

        Tensor<T> cat({n, 32, side, side});
        crop_into(fa, uav, cat, /*channel_offset=*/0);
        Tensor<T> fb = rb2_.forward(b2_.forward(rb1_.forward(b1_.forward(xb))));
        const std::size_t half = static_cast<std::size_t>(16) * side * side;
        for (int s = 0; s < n; ++s)
            std::copy(fb.data() + static_cast<std::size_t>(s) * half,
                      fb.data() + static_cast<std::size_t>(s + 1) * half,
                      cat.data() + static_cast<std::size_t>(s) * 2 * half + half);

        Tensor<T> q = h3_.forward(rh2_.forward(h2_.forward(rh1_.forward(h1_.forward(cat)))));
        return Tensor<T>({n, side * side}, std::move(q.values));
    }

    struct InputGrads
    {
        Tensor<T> dxa;
        Tensor<T> dxb;
    };

    /// dq: [N, n_actions()] gradient of the loss w.r.t. the Q-values.
    /// Overwrites all parameter gradients and returns input gradients.
    InputGrads backward(const Tensor<T> &dq)
    {
        const int side = window_side();
        const int n = static_cast<int>(uav_.size());
        if (dq.shape.size() != 2 || dq.shape[0] != n || dq.shape[1] != side * side)
            throw std::invalid_argument("QNetwork: Q gradient shape mismatch");

        Tensor<T> g({n, 1, side, side}, std::vector<T>(dq.values));
        Tensor<T> dcat = h1_.backward(rh1_.backward(h2_.backward(rh2_.backward(h3_.backward(g)))));

        // Split the concatenation.
        Tensor<T> dfa(fa_shape_);
        uncrop_into(dcat, uav_, dfa);
        Tensor<T> dfb({n, 16, side, side});
        const std::size_t half = static_cast<std::size_t>(16) * side * side;
        for (int s = 0; s < n; ++s)
            std::copy(dcat.data() + static_cast<std::size_t>(s) * 2 * half + half,
                      dcat.data() + static_cast<std::size_t>(s) * 2 * half + 2 * half,
                      dfb.data() + static_cast<std::size_t>(s) * half);

        InputGrads grads;
        grads.dxb = b1_.backward(rb1_.backward(b2_.backward(rb2_.backward(dfb))));
        grads.dxa = a1_.backward(ra1_.backward(a2_.backward(ra2_.backward(a3_.backward(ra3_.backward(dfa))))));
        return grads;
    }

    std::vector<ParamView<T>> params()
    {
        std::vector<ParamView<T>> all;
        for (auto *layer : {&a1_, &a2_, &a3_, &b1_, &b2_})
            for (auto &p : layer->params())
                all.push_back(p);
        for (auto *layer : {&h1_, &h2_, &h3_})
            for (auto &p : layer->params())
                all.push_back(p);
        return all;
    }

  private:
    /// Cut the (2*reach+1)^2 window of `fa` centered at the downsampled UAV
    /// coordinate into channels [offset, offset+16) of `out`, zero-padding
    /// where the window leaves the feature map.
    void crop_into(const Tensor<T> &fa, const std::vector<GridPoint> &uav, Tensor<T> &out,
                   int channel_offset) const
    {
        const int side = window_side();
        const int fh = fa.shape[2], fw = fa.shape[3];
        const int n = fa.shape[0];
        const int out_ch = out.shape[1];
        for (int s = 0; s < n; ++s)
        {
            const int ci = uav_center(uav[static_cast<std::size_t>(s)].i);
            const int cj = uav_center(uav[static_cast<std::size_t>(s)].j);
            for (int c = 0; c < 16; ++c)
            {
                const T *src = fa.data() +
                               (static_cast<std::size_t>(s) * fa.shape[1] + c) * fh * fw;
                T *dst = out.data() +
                         (static_cast<std::size_t>(s) * out_ch + channel_offset + c) *
                             static_cast<std::size_t>(side) * side;
                for (int di = -reach_; di <= reach_; ++di)
                {
                    const int si = ci + di;
                    for (int dj = -reach_; dj <= reach_; ++dj)
                    {
                        const int sj = cj + dj;
                        const bool inside = si >= 0 && si < fh && sj >= 0 && sj < fw;
                        dst[static_cast<std::size_t>(di + reach_) * side + (dj + reach_)] =
                            inside ? src[static_cast<std::size_t>(si) * fw + sj] : T(0);
                    }
                }
            }
        }
    }

    /// Adjoint of crop_into for channels [0,16) of `dcat`: scatter the crop
    /// gradient back onto the feature map (each map cell is read by at most
    /// one window cell, so plain writes into the zeroed target suffice).
    void uncrop_into(const Tensor<T> &dcat, const std::vector<GridPoint> &uav,
                     Tensor<T> &dfa) const
    {
        const int side = window_side();
        const int fh = dfa.shape[2], fw = dfa.shape[3];
        const int n = dfa.shape[0];
        const int cat_ch = dcat.shape[1];
        for (int s = 0; s < n; ++s)
        {
            const int ci = uav_center(uav[static_cast<std::size_t>(s)].i);
            const int cj = uav_center(uav[static_cast<std::size_t>(s)].j);
            for (int c = 0; c < 16; ++c)
            {
                const T *src = dcat.data() + (static_cast<std::size_t>(s) * cat_ch + c) *
                                                 static_cast<std::size_t>(side) * side;
                T *dst = dfa.data() +
                         (static_cast<std::size_t>(s) * dfa.shape[1] + c) * fh * fw;
                for (int di = -reach_; di <= reach_; ++di)
                {
                    const int si = ci + di;
                    if (si < 0 || si >= fh)
                        continue;
                    for (int dj = -reach_; dj <= reach_; ++dj)
                    {
                        const int sj = cj + dj;
                        if (sj >= 0 && sj < fw)
                            dst[static_cast<std::size_t>(si) * fw + sj] +=
                                src[static_cast<std::size_t>(di + reach_) * side + (dj + reach_)];
                    }
                }
            }
        }
    }

    static int uav_center(int coord) { return coord / 4; }

    int reach_;
    Conv2D<T> a1_, a2_, a3_, b1_, b2_;
    TConv2D<T> h1_, h2_, h3_;
    ReLU<T> ra1_, ra2_, ra3_, rb1_, rb2_, rh1_, rh2_;
    std::vector<GridPoint> uav_;
    std::vector<int> fa_shape_;
};

/// Copy all parameter values from one network to another of the same
/// architecture (used to synchronize the target network).
template <typename T> void copy_weights(QNetwork<T> &src, QNetwork<T> &dst)
{
    auto sp = src.params();
    auto dp = dst.params();
    if (sp.size() != dp.size())
        throw std::invalid_argument("copy_weights: parameter count mismatch");
    for (std::size_t i = 0; i < sp.size(); ++i)
    {
        if (sp[i].name != dp[i].name || sp[i].value->size() != dp[i].value->size())
            throw std::invalid_argument("copy_weights: parameter layout mismatch");
        *dp[i].value = *sp[i].value;
    }
}

/// Adam optimizer over a fixed parameter list. Moment buffers are exposed
/// so checkpoints can persist and restore the full optimizer state.
template <typename T> class Adam
{
  public:
    struct Config
    {
        T lr = T(1e-4);
        T beta1 = T(0.9);
        T beta2 = T(0.999);
        T eps = T(1e-8);
    };

    Adam(std::vector<ParamView<T>> params, Config cfg = {})
        : params_(std::move(params)), cfg_(cfg)
    {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i)
        {
            m_[i].assign(params_[i].value->size(), T(0));
            v_[i].assign(params_[i].value->size(), T(0));
        }
    }

    void step()
    {
        ++t_;
        // Bias corrections in double so the step count never outgrows the
        // mantissa of a narrow scalar type.
        const T bc1 = static_cast<T>(
            1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_)));
        const T bc2 = static_cast<T>(
            1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_)));
        for (std::size_t i = 0; i < params_.size(); ++i)
        {
            std::vector<T> &value = *params_[i].value;
            const std::vector<T> &grad = *params_[i].grad;
            std::vector<T> &m = m_[i];
            std::vector<T> &v = v_[i];
            for (std::size_t j = 0; j < value.size(); ++j)
            {
                const T g = grad[j];
                m[j] = cfg_.beta1 * m[j] + (T(1) - cfg_.beta1) * g;
                v[j] = cfg_.beta2 * v[j] + (T(1) - cfg_.beta2) * g * g;
                const T mhat = m[j] / bc1;
                const T vhat = v[j] / bc2;
                value[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    const Config &config() const { return cfg_; }
    std::uint64_t step_count() const { return t_; }
    void set_step_count(std::uint64_t t) { t_ = t; }
    std::vector<std::vector<T>> &first_moments() { return m_; }
    std::vector<std::vector<T>> &second_moments() { return v_; }
    const std::vector<ParamView<T>> &tracked() const { return params_; }

  private:
    std::vector<ParamView<T>> params_;
    Config cfg_;
    std::vector<std::vector<T>> m_;
    std::vector<std::vector<T>> v_;
    std::uint64_t t_ = 0;
};

} // namespace chdet
