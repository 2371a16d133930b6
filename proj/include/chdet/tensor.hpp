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
// Minimal dense tensor plus the im2col/col2im patch-matrix transforms that
// turn (transposed) convolutions into plain GEMMs.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace chdet
{

template <typename T> struct Tensor
{
    std::vector<int> shape;
    std::vector<T> values;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s))
    {
        values.assign(numel_of(shape), T(0));
    }
    Tensor(std::vector<int> s, std::vector<T> v) : shape(std::move(s)), values(std::move(v))
    {
        if (values.size() != numel_of(shape))
            throw std::invalid_argument("Tensor: value count does not match shape");
    }

    static std::size_t numel_of(const std::vector<int> &s)
    {
        std::size_t n = 1;
        for (int d : s)
        {
            if (d <= 0)
                throw std::invalid_argument("Tensor: dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return values.size(); }
    T *data() { return values.data(); }
    const T *data() const { return values.data(); }
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T> using MatMap = Eigen::Map<RowMat<T>>;
template <typename T> using ConstMatMap = Eigen::Map<const RowMat<T>>;

/// Output spatial extent of a convolution.
constexpr int conv_out_extent(int in, int k, int stride, int pad)
{
    return (in + 2 * pad - k) / stride + 1;
}

/// Patch matrix of one image: row (c*k + ki)*k + kj holds, for every output
/// position, the input value that kernel tap (ki,kj) of channel c reads
/// (zero where the tap falls outside the image).
template <typename T>
void im2col(const T *x, int channels, int h, int w, int k, int stride, int pad, T *cols)
{
    const int oh = conv_out_extent(h, k, stride, pad);
    const int ow = conv_out_extent(w, k, stride, pad);
    const std::size_t patch = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < channels; ++c)
        for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj)
            {
                T *row = cols + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * patch;
                const T *img = x + static_cast<std::size_t>(c) * h * w;
                for (int oi = 0; oi < oh; ++oi)
                {
                    const int ii = oi * stride + ki - pad;
                    if (ii < 0 || ii >= h)
                    {
                        std::fill(row + static_cast<std::size_t>(oi) * ow,
                                  row + static_cast<std::size_t>(oi + 1) * ow, T(0));
                        continue;
                    }
                    for (int oj = 0; oj < ow; ++oj)
                    {
                        const int jj = oj * stride + kj - pad;
                        row[static_cast<std::size_t>(oi) * ow + oj] =
                            (jj >= 0 && jj < w) ? img[static_cast<std::size_t>(ii) * w + jj] : T(0);
                    }
                }
            }
}

/// Adjoint of im2col: scatter-add the patch matrix back into the image.
/// The caller provides a zeroed (or accumulating) target.
template <typename T>
void col2im(const T *cols, int channels, int h, int w, int k, int stride, int pad, T *x)
{
    const int oh = conv_out_extent(h, k, stride, pad);
    const int ow = conv_out_extent(w, k, stride, pad);
    const std::size_t patch = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < channels; ++c)
        for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj)
            {
                const T *row = cols + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * patch;
                T *img = x + static_cast<std::size_t>(c) * h * w;
                for (int oi = 0; oi < oh; ++oi)
                {
                    const int ii = oi * stride + ki - pad;
                    if (ii < 0 || ii >= h)
                        continue;
                    for (int oj = 0; oj < ow; ++oj)
                    {
                        const int jj = oj * stride + kj - pad;
                        if (jj >= 0 && jj < w)
                            img[static_cast<std::size_t>(ii) * w + jj] +=
                                row[static_cast<std::size_t>(oi) * ow + oj];
                    }
                }
            }
}

} // namespace chdet
