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

#ifndef NF4_TENSOR_FILE_HPP
#define NF4_TENSOR_FILE_HPP

#include "nf4/matrix.hpp"
#include "nf4/quant.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nf4
{

/// I/O and format-violation errors for the NF4TENS container.
class TensorFileError : public std::runtime_error
{
public:
  explicit TensorFileError(const std::string &msg) : std::runtime_error(msg) {}
};

/// One named tensor: either a dense FP32 matrix or a packed Q4 tensor.
struct TensorEntry
{
  std::string name;
  std::variant<Matrix, QuantizedTensor> value;

  bool is_quantized() const { return std::holds_alternative<QuantizedTensor>(value); }
  const Matrix &matrix() const { return std::get<Matrix>(value); }
  const QuantizedTensor &quantized() const { return std::get<QuantizedTensor>(value); }
};

/// Flat list of uniquely named entries. Byte layout is little-endian and pinned;
/// see docs/format.md. Serialization of identical inputs is byte-identical.
struct TensorFile
{
  static constexpr char kMagic[8] = {'N', 'F', '4', 'T', 'E', 'N', 'S', '\0'};
  static constexpr uint32_t kVersion = 1;

  std::vector<TensorEntry> entries;

  bool contains(const std::string &name) const;
  const TensorEntry &get(const std::string &name) const; // throws if absent
  const TensorEntry *find(const std::string &name) const;
  void add(std::string name, Matrix m);
  void add(std::string name, QuantizedTensor qt);
};

/// Serialize to memory. Deterministic: same entries, same bytes.
std::vector<uint8_t> serialize_tensor_file(const TensorFile &tf);
TensorFile parse_tensor_file(const std::vector<uint8_t> &bytes);

/// Atomic write (temp file + rename) and validated read.
void write_tensor_file(const std::filesystem::path &path, const TensorFile &tf);
TensorFile read_tensor_file(const std::filesystem::path &path);

} // namespace nf4

#endif // NF4_TENSOR_FILE_HPP
