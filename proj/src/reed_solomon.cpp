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

#include "bftdsn/reed_solomon.hpp"

#include <algorithm>
#include <string>

namespace bftdsn::rs {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = FieldElement(1);
  return m;
}

Matrix Matrix::multiply(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw ShapeError("matrix dimensions do not agree");
  Matrix out(rows_, rhs.cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < rhs.cols_; ++c) {
      FieldElement acc;
      for (std::size_t k = 0; k < cols_; ++k) acc = acc + at(r, k) * rhs.at(k, c);
      out.at(r, c) = acc;
    }
  }
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw ShapeError("row index out of range");
    for (std::size_t c = 0; c < cols_; ++c) out.at(i, c) = at(rows[i], c);
  }
  return out;
}

std::optional<Matrix> Matrix::inverse() const {
  if (rows_ != cols_) throw ShapeError("only square matrices have inverses");
  const std::size_t n = rows_;
  Matrix work = *this;
  Matrix inv = identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && work.at(pivot, col).is_zero()) ++pivot;
    if (pivot == n) return std::nullopt;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(work.at(pivot, c), work.at(col, c));
        std::swap(inv.at(pivot, c), inv.at(col, c));
      }
    }
    FieldElement scale = gf::inv(work.at(col, col));
    for (std::size_t c = 0; c < n; ++c) {
      work.at(col, c) = work.at(col, c) * scale;
      inv.at(col, c) = inv.at(col, c) * scale;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      FieldElement factor = work.at(r, col);
      if (factor.is_zero()) continue;
      for (std::size_t c = 0; c < n; ++c) {
        work.at(r, c) = work.at(r, c) + factor * work.at(col, c);
        inv.at(r, c) = inv.at(r, c) + factor * inv.at(col, c);
      }
    }
  }
  return inv;
}

GeneratorMatrix::GeneratorMatrix(std::size_t data_chunks, std::size_t parity_chunks,
                                 Matrix entries)
    : k_(data_chunks), m_(parity_chunks), entries_(std::move(entries)) {
  if (entries_.rows() != k_ + m_ || entries_.cols() != k_)
    throw ShapeError("generator entries do not match (K+M) x K");
}

GeneratorMatrix build_generator(std::size_t data_chunks, std::size_t parity_chunks) {
  if (data_chunks < 1 || parity_chunks < 1)
    throw ParameterError("Reed-Solomon needs K >= 1 and M >= 1");
  const std::size_t n = data_chunks + parity_chunks;
  if (n > 255) throw CapacityError("K+M exceeds the 255 distinct points of GF(2^8)");

  Matrix vandermonde(n, data_chunks);
  for (std::size_t r = 0; r < n; ++r) {
    FieldElement point(static_cast<std::uint8_t>(r));
    for (std::size_t c = 0; c < data_chunks; ++c) {
      // 0^0 = 1 so the row for point 0 is e_0.
      vandermonde.at(r, c) = gf::pow(point, static_cast<unsigned>(c));
    }
  }
  std::vector<std::size_t> top(data_chunks);
  for (std::size_t i = 0; i < data_chunks; ++i) top[i] = i;
  auto top_inv = vandermonde.select_rows(top).inverse();
  if (!top_inv) throw DecodeError("Vandermonde top block unexpectedly singular");
  return GeneratorMatrix(data_chunks, parity_chunks, vandermonde.multiply(*top_inv));
}

void validate_chunk_set(std::span<const Chunk> chunks, std::size_t total_chunks) {
  std::vector<bool> seen(total_chunks + 1, false);
  for (const Chunk& c : chunks) {
    if (c.index < 1 || c.index > total_chunks)
      throw ShapeError("chunk index " + std::to_string(c.index) + " out of range");
    if (seen[c.index]) throw ShapeError("duplicate chunk index " + std::to_string(c.index));
    seen[c.index] = true;
    if (c.payload.size() != chunks.front().payload.size())
      throw ShapeError("chunk payload lengths differ");
  }
}

ChunkSet rs_encode(std::span<const Bytes> data, const GeneratorMatrix& gen) {
  const std::size_t k = gen.data_chunks();
  if (data.size() != k) throw ShapeError("expected exactly K data blocks");
  const std::size_t len = data.front().size();
  for (const Bytes& d : data)
    if (d.size() != len) throw ShapeError("data blocks must have equal length");

  ChunkSet out;
  out.reserve(gen.total_chunks());
  for (std::size_t i = 0; i < k; ++i) out.push_back(Chunk{i + 1, data[i]});
  for (std::size_t row = k; row < gen.total_chunks(); ++row) {
    Bytes parity(len, 0);
    for (std::size_t c = 0; c < k; ++c) gf::mul_add_region(parity, data[c], gen.at(row, c));
    out.push_back(Chunk{row + 1, std::move(parity)});
  }
  return out;
}

std::vector<Bytes> rs_decode(std::span<const Chunk> subset, const GeneratorMatrix& gen,
                             std::size_t data_chunks) {
  if (data_chunks != gen.data_chunks()) throw ParameterError("K does not match the generator");
  validate_chunk_set(subset, gen.total_chunks());
  if (subset.size() < data_chunks)
    throw InsufficientChunksError("need " + std::to_string(data_chunks) + " chunks, got " +
                                  std::to_string(subset.size()));

  std::vector<const Chunk*> ordered;
  ordered.reserve(subset.size());
  for (const Chunk& c : subset) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const Chunk* a, const Chunk* b) { return a->index < b->index; });

  const std::size_t len = ordered.front()->payload.size();
  std::vector<std::size_t> rows(data_chunks);
  for (std::size_t i = 0; i < data_chunks; ++i) rows[i] = ordered[i]->index - 1;

  std::vector<Bytes> data(data_chunks, Bytes(len, 0));
  bool systematic = true;
  for (std::size_t i = 0; i < data_chunks; ++i) systematic = systematic && rows[i] == i;
  if (systematic) {
    for (std::size_t i = 0; i < data_chunks; ++i) data[i] = ordered[i]->payload;
  } else {
    auto inv = gen.matrix().select_rows(rows).inverse();
    if (!inv) throw DecodeError("selected generator rows are singular");
    for (std::size_t out = 0; out < data_chunks; ++out) {
      for (std::size_t in = 0; in < data_chunks; ++in)
        gf::mul_add_region(data[out], ordered[in]->payload, inv->at(out, in));
    }
  }

  for (std::size_t extra = data_chunks; extra < ordered.size(); ++extra) {
    const std::size_t row = ordered[extra]->index - 1;
    Bytes expect(len, 0);
    for (std::size_t c = 0; c < data_chunks; ++c) gf::mul_add_region(expect, data[c], gen.at(row, c));
    if (expect != ordered[extra]->payload)
      throw DecodeError("chunk " + std::to_string(row + 1) + " is inconsistent with the others");
  }
  return data;
}

}  // namespace bftdsn::rs
