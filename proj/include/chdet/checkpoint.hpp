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
// QNETCKPT/1: a small named-tensor container used to persist network
// weights, optimizer state and training metadata.
//
//   "QNETCKPT/1\n"
//   u32 entry_count
//   per entry:
//     u16 name_length, name bytes
//     u8  dtype        (4 = float32, 8 = float64)
//     u8  ndim
//     i32 dims[ndim]
//     raw little-endian payload (product(dims) * dtype bytes)
//
// All integers are little-endian. Entries round-trip byte-identically.

#pragma once

#include "nn.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace chdet
{

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

struct CheckpointEntry
{
    std::string name;
    int dtype = 0;             // bytes per element: 4 or 8
    std::vector<std::int32_t> dims;
    std::vector<unsigned char> raw;

    std::size_t elements() const
    {
        std::size_t n = 1;
        for (std::int32_t d : dims)
            n *= static_cast<std::size_t>(d);
        return n;
    }
};

namespace detail
{

inline std::runtime_error ckpt_error(const std::string &path, const std::string &what)
{
    return std::runtime_error(path + ": " + what);
}

template <typename U> void append_raw(std::string &out, U v)
{
    char buf[sizeof(U)];
    std::memcpy(buf, &v, sizeof(U));
    out.append(buf, sizeof(U));
}

template <typename U> U read_raw(const std::string &text, std::size_t &pos, const std::string &path)
{
    if (pos + sizeof(U) > text.size())
        throw ckpt_error(path, "truncated checkpoint");
    U v;
    std::memcpy(&v, text.data() + pos, sizeof(U));
    pos += sizeof(U);
    return v;
}

} // namespace detail

inline void save_checkpoint(const std::string &path, const std::vector<CheckpointEntry> &entries)
{
    std::string out = "QNETCKPT/1\n";
    detail::append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
    for (const CheckpointEntry &e : entries)
    {
        if (e.dtype != 4 && e.dtype != 8)
            throw detail::ckpt_error(path, "entry '" + e.name + "' has unsupported dtype");
        if (e.name.size() > 0xffff)
            throw detail::ckpt_error(path, "entry name too long");
        if (e.raw.size() != e.elements() * static_cast<std::size_t>(e.dtype))
            throw detail::ckpt_error(path, "entry '" + e.name + "' payload size mismatch");
        detail::append_raw<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
        out.append(e.name);
        detail::append_raw<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
        detail::append_raw<std::uint8_t>(out, static_cast<std::uint8_t>(e.dims.size()));
        for (std::int32_t d : e.dims)
            detail::append_raw<std::int32_t>(out, d);
        out.append(reinterpret_cast<const char *>(e.raw.data()), e.raw.size());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw detail::ckpt_error(path, "cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw detail::ckpt_error(path, "write failed");
}

inline std::vector<CheckpointEntry> load_checkpoint(const std::string &path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw detail::ckpt_error(path, "cannot open");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    const std::string magic = "QNETCKPT/1\n";
    if (text.compare(0, magic.size(), magic) != 0)
        throw detail::ckpt_error(path, "not a QNETCKPT/1 file");
    std::size_t pos = magic.size();

    const auto count = detail::read_raw<std::uint32_t>(text, pos, path);
    std::vector<CheckpointEntry> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i)
    {
        CheckpointEntry e;
        const auto name_len = detail::read_raw<std::uint16_t>(text, pos, path);
        if (pos + name_len > text.size())
            throw detail::ckpt_error(path, "truncated checkpoint");
        e.name.assign(text, pos, name_len);
        pos += name_len;
        e.dtype = detail::read_raw<std::uint8_t>(text, pos, path);
        if (e.dtype != 4 && e.dtype != 8)
            throw detail::ckpt_error(path, "entry '" + e.name + "' has unsupported dtype");
        const auto ndim = detail::read_raw<std::uint8_t>(text, pos, path);
        e.dims.resize(ndim);
        for (auto &d : e.dims)
        {
            d = detail::read_raw<std::int32_t>(text, pos, path);
            if (d <= 0)
                throw detail::ckpt_error(path, "entry '" + e.name + "' has invalid dims");
        }
        const std::size_t bytes = e.elements() * static_cast<std::size_t>(e.dtype);
        if (pos + bytes > text.size())
            throw detail::ckpt_error(path, "truncated checkpoint");
        e.raw.assign(text.begin() + static_cast<std::ptrdiff_t>(pos),
                     text.begin() + static_cast<std::ptrdiff_t>(pos + bytes));
        pos += bytes;
        entries.push_back(std::move(e));
    }
    if (pos != text.size())
        throw detail::ckpt_error(path, "trailing bytes after last entry");
    return entries;
}

namespace detail
{

template <typename T> CheckpointEntry tensor_entry(const std::string &name, const std::vector<T> &v)
{
    CheckpointEntry e;
    e.name = name;
    e.dtype = static_cast<int>(sizeof(T));
    e.dims = {static_cast<std::int32_t>(v.size())};
    e.raw.resize(v.size() * sizeof(T));
    std::memcpy(e.raw.data(), v.data(), e.raw.size());
    return e;
}

template <typename T>
void entry_into(const CheckpointEntry &e, std::vector<T> &v, const std::string &path)
{
    if (e.dtype != static_cast<int>(sizeof(T)))
        throw ckpt_error(path, "entry '" + e.name + "' has wrong scalar width");
    if (e.elements() != v.size())
        throw ckpt_error(path, "entry '" + e.name + "' has wrong element count");
    std::memcpy(v.data(), e.raw.data(), e.raw.size());
}

} // namespace detail

/// Write network weights, optional optimizer state and scalar metadata.
template <typename T>
void save_qnet_checkpoint(const std::string &path, QNetwork<T> &net, Adam<T> *opt,
                          const std::map<std::string, double> &meta)
{
    std::vector<CheckpointEntry> entries;
    for (auto &p : net.params())
        entries.push_back(detail::tensor_entry("net." + p.name, *p.value));
    if (opt != nullptr)
    {
        auto tracked = opt->tracked();
        auto &m = opt->first_moments();
        auto &v = opt->second_moments();
        for (std::size_t i = 0; i < tracked.size(); ++i)
        {
            entries.push_back(detail::tensor_entry("adam.m." + tracked[i].name, m[i]));
            entries.push_back(detail::tensor_entry("adam.v." + tracked[i].name, v[i]));
        }
        std::vector<double> t = {static_cast<double>(opt->step_count())};
        entries.push_back(detail::tensor_entry("adam.t", t));
    }
    for (const auto &[key, value] : meta)
    {
        std::vector<double> one = {value};
        entries.push_back(detail::tensor_entry("meta." + key, one));
    }
    save_checkpoint(path, entries);
}

/// Restore network weights (and optimizer state when `opt` is non-null)
/// from a checkpoint; returns the metadata map. Throws when a required
/// entry is missing or does not match the architecture.
template <typename T>
std::map<std::string, double> load_qnet_checkpoint(const std::string &path, QNetwork<T> &net,
                                                   Adam<T> *opt = nullptr)
{
    auto entries = load_checkpoint(path);
    std::map<std::string, const CheckpointEntry *> by_name;
    for (const auto &e : entries)
        by_name[e.name] = &e;

    auto require = [&](const std::string &name) -> const CheckpointEntry & {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw detail::ckpt_error(path, "missing entry '" + name + "'");
        return *it->second;
    };

    for (auto &p : net.params())
        detail::entry_into(require("net." + p.name), *p.value, path);
    if (opt != nullptr)
    {
        auto tracked = opt->tracked();
        auto &m = opt->first_moments();
        auto &v = opt->second_moments();
        for (std::size_t i = 0; i < tracked.size(); ++i)
        {
            detail::entry_into(require("adam.m." + tracked[i].name), m[i], path);
            detail::entry_into(require("adam.v." + tracked[i].name), v[i], path);
        }
        std::vector<double> t(1);
        detail::entry_into(require("adam.t"), t, path);
        opt->set_step_count(static_cast<std::uint64_t>(t[0]));
    }

    std::map<std::string, double> meta;
    for (const auto &e : entries)
        if (e.name.rfind("meta.", 0) == 0)
        {
            std::vector<double> one(1);
            detail::entry_into(e, one, path);
            meta[e.name.substr(5)] = one[0];
        }
    return meta;
}

} // namespace chdet
