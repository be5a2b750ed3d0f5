/*
 * Copyright (c) 2026 the nf4quant authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nf4/tensor_file.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

namespace nf4
{

namespace
{

constexpr uint32_t kDtypeF32 = 0;
constexpr uint32_t kDtypeQ4 = 1;

// Explicit little-endian coding keeps the on-disk layout identical on any host.
void put_u32(std::vector<uint8_t> &out, uint32_t v)
{
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u64(std::vector<uint8_t> &out, uint64_t v)
{
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t> &out, float f)
{
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  put_u32(out, bits);
}

class Reader
{
public:
  Reader(const std::vector<uint8_t> &bytes) : _bytes(bytes) {}

  uint32_t u32()
  {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(_bytes[_pos + i]) << (8 * i);
    _pos += 4;
    return v;
  }

  uint64_t u64()
  {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(_bytes[_pos + i]) << (8 * i);
    _pos += 8;
    return v;
  }

  float f32()
  {
    const uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
  }

  std::string str(std::size_t len)
  {
    need(len);
    std::string s(reinterpret_cast<const char *>(_bytes.data() + _pos), len);
    _pos += len;
    return s;
  }

  std::vector<uint8_t> raw(std::size_t len)
  {
    need(len);
    std::vector<uint8_t> v(_bytes.begin() + _pos, _bytes.begin() + _pos + len);
    _pos += len;
    return v;
  }

  std::size_t pos() const { return _pos; }
  std::size_t remaining() const { return _bytes.size() - _pos; }
  bool done() const { return _pos == _bytes.size(); }

private:
  void need(std::size_t n) const
  {
    if (_pos + n > _bytes.size())
      throw TensorFileError("tensor file truncated");
  }

  const std::vector<uint8_t> &_bytes;
  std::size_t _pos = 0;
};

std::size_t q4_payload_size(const QuantizedTensor &qt)
{
  return 12 + qt.scales.size() * 4 + qt.codes.size();
}

void check_unique_names(const TensorFile &tf)
{
  std::set<std::string> seen;
  for (const auto &e : tf.entries)
    if (!seen.insert(e.name).second)
      throw TensorFileError("duplicate entry name: " + e.name);
}

} // namespace

bool TensorFile::contains(const std::string &name) const { return find(name) != nullptr; }

const TensorEntry *TensorFile::find(const std::string &name) const
{
  for (const auto &e : entries)
    if (e.name == name)
      return &e;
  return nullptr;
}

const TensorEntry &TensorFile::get(const std::string &name) const
{
  const TensorEntry *e = find(name);
  if (!e)
    throw TensorFileError("missing entry: " + name);
  return *e;
}

void TensorFile::add(std::string name, Matrix m)
{
  entries.push_back({std::move(name), std::move(m)});
}

void TensorFile::add(std::string name, QuantizedTensor qt)
{
  entries.push_back({std::move(name), std::move(qt)});
}

std::vector<uint8_t> serialize_tensor_file(const TensorFile &tf)
{
  if (tf.entries.empty())
    throw TensorFileError("tensor file must contain at least one entry");
  check_unique_names(tf);

  std::vector<uint8_t> out;
  out.insert(out.end(), TensorFile::kMagic, TensorFile::kMagic + 8);
  put_u32(out, TensorFile::kVersion);
  put_u32(out, static_cast<uint32_t>(tf.entries.size()));

  for (const auto &e : tf.entries)
  {
    put_u32(out, static_cast<uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    if (!e.is_quantized())
    {
      const Matrix &m = e.matrix();
      put_u32(out, kDtypeF32);
      put_u32(out, static_cast<uint32_t>(m.rows()));
      put_u32(out, static_cast<uint32_t>(m.cols()));
      put_u64(out, static_cast<uint64_t>(m.size()) * 4);
      for (float f : m.data())
        put_f32(out, f);
    }
    else
    {
      const QuantizedTensor &qt = e.quantized();
      put_u32(out, kDtypeQ4);
      put_u32(out, static_cast<uint32_t>(qt.rows));
      put_u32(out, static_cast<uint32_t>(qt.cols));
      put_u64(out, q4_payload_size(qt));
      put_u32(out, static_cast<uint32_t>(qt.group_size));
      put_u32(out, static_cast<uint32_t>(qt.rows));
      put_u32(out, static_cast<uint32_t>(qt.cols));
      for (float s : qt.scales)
        put_f32(out, s);
      out.insert(out.end(), qt.codes.begin(), qt.codes.end());
    }
  }
  return out;
}

TensorFile parse_tensor_file(const std::vector<uint8_t> &bytes)
{
  Reader r(bytes);
  const std::string magic = r.str(8);
  if (std::memcmp(magic.data(), TensorFile::kMagic, 8) != 0)
    throw TensorFileError("bad magic tag, not an NF4TENS file");
  const uint32_t version = r.u32();
  if (version != TensorFile::kVersion)
    throw TensorFileError("unsupported tensor file version " + std::to_string(version));

  const uint32_t n_entries = r.u32();
  TensorFile tf;
  tf.entries.reserve(n_entries);
  for (uint32_t i = 0; i < n_entries; ++i)
  {
    const uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const uint32_t dtype = r.u32();
    const uint32_t rows = r.u32();
    const uint32_t cols = r.u32();
    const uint64_t payload_len = r.u64();

    // Size fields are untrusted; bound them by the bytes actually present
    // before any allocation sized from them.
    if (payload_len > r.remaining())
      throw TensorFileError("tensor file truncated");

    if (dtype == kDtypeF32)
    {
      if (payload_len != static_cast<uint64_t>(rows) * cols * 4)
        throw TensorFileError("F32 payload length mismatch for entry " + name);
      std::vector<float> data(static_cast<std::size_t>(rows) * cols);
      for (auto &f : data)
        f = r.f32();
      Matrix m(rows, cols, std::move(data));
      if (!m.all_finite())
        throw TensorFileError("non-finite value in entry " + name);
      tf.add(std::move(name), std::move(m));
    }
    else if (dtype == kDtypeQ4)
    {
      QuantizedTensor qt;
      qt.group_size = r.u32();
      qt.rows = r.u32();
      qt.cols = r.u32();
      if (qt.rows != rows || qt.cols != cols)
        throw TensorFileError("Q4 header dims disagree with entry dims for " + name);
      if (qt.group_size == 0 || qt.cols % qt.group_size != 0)
        throw TensorFileError("Q4 cols not divisible by group size for entry " + name);
      const std::size_t n_scales = qt.rows * (qt.cols / qt.group_size);
      const std::size_t n_code_bytes = qt.rows * qt.row_bytes();
      if (payload_len != 12 + n_scales * 4 + n_code_bytes)
        throw TensorFileError("Q4 payload length mismatch for entry " + name);
      qt.scales.resize(n_scales);
      for (auto &s : qt.scales)
      {
        s = r.f32();
        if (!std::isfinite(s) || s < 0.0f)
          throw TensorFileError("invalid scale in entry " + name);
      }
      qt.codes = r.raw(n_code_bytes);
      tf.add(std::move(name), std::move(qt));
    }
    else
    {
      throw TensorFileError("unknown dtype tag " + std::to_string(dtype));
    }
  }
  check_unique_names(tf);
  if (!r.done())
    throw TensorFileError("trailing bytes after last entry");
  return tf;
}

void write_tensor_file(const std::filesystem::path &path, const TensorFile &tf)
{
  const std::vector<uint8_t> bytes = serialize_tensor_file(tf);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw TensorFileError("cannot open for writing: " + tmp.string());
    os.write(reinterpret_cast<const char *>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os)
      throw TensorFileError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw TensorFileError("rename failed: " + tmp.string() + " -> " + path.string() + ": " +
                          ec.message());
}

TensorFile read_tensor_file(const std::filesystem::path &path)
{
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is)
    throw TensorFileError("cannot open: " + path.string());
  const std::streamsize size = is.tellg();
  is.seekg(0);
  std::vector<uint8_t> bytes(static_cast<std::size_t>(size));
  is.read(reinterpret_cast<char *>(bytes.data()), size);
  if (!is)
    throw TensorFileError("read failed: " + path.string());
  return parse_tensor_file(bytes);
}

} // namespace nf4
