/**
 * Copyright 2026 The bftdsn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bftdsn/bytes.hpp"
#include "bftdsn/gf256.hpp"

namespace bftdsn::rs {

using gf::FieldElement;

/// Dense row-major matrix over GF(2^8).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static Matrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  FieldElement& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  [[nodiscard]] FieldElement at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  [[nodiscard]] std::span<const FieldElement> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  [[nodiscard]] Matrix multiply(const Matrix& rhs) const;
  /// Rows picked by zero-based index, in the given order.
  [[nodiscard]] Matrix select_rows(std::span<const std::size_t> rows) const;
  /// Gauss-Jordan inverse; std::nullopt when singular.
  [[nodiscard]] std::optional<Matrix> inverse() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<FieldElement> data_;
};

/// Systematic (K+M) x K generator. Row i (zero-based) produces chunk i+1.
class GeneratorMatrix {
 public:
  GeneratorMatrix(std::size_t data_chunks, std::size_t parity_chunks, Matrix entries);

  [[nodiscard]] std::size_t data_chunks() const { return k_; }
  [[nodiscard]] std::size_t parity_chunks() const { return m_; }
  [[nodiscard]] std::size_t total_chunks() const { return k_ + m_; }
  [[nodiscard]] const Matrix& matrix() const { return entries_; }
  [[nodiscard]] FieldElement at(std::size_t row, std::size_t col) const {
    return entries_.at(row, col);
  }

 private:
  std::size_t k_;
  std::size_t m_;
  Matrix entries_;
};

/// Builds the generator by row-reducing a (K+M) x K Vandermonde matrix over
/// the evaluation points 0..K+M-1 so the top K x K block becomes the identity.
/// Any K rows remain invertible. Throws CapacityError when K+M > 255.
GeneratorMatrix build_generator(std::size_t data_chunks, std::size_t parity_chunks);

/// One erasure-coded fragment. `index` is 1-based in [1, n].
struct Chunk {
  std::size_t index = 0;
  Bytes payload;

  bool operator==(const Chunk&) const = default;
};

using ChunkSet = std::vector<Chunk>;

/// Checks distinct, in-range indices and equal payload lengths.
void validate_chunk_set(std::span<const Chunk> chunks, std::size_t total_chunks);

/// Encodes K equal-length data blocks into n chunks; chunks 1..K are the data.
ChunkSet rs_encode(std::span<const Bytes> data, const GeneratorMatrix& gen);

/// Recovers the K data blocks from any K valid chunks. When more than K are
/// supplied the extras are checked against the re-encoding and a mismatch
/// raises DecodeError.
std::vector<Bytes> rs_decode(std::span<const Chunk> subset, const GeneratorMatrix& gen,
                             std::size_t data_chunks);

}  // namespace bftdsn::rs
