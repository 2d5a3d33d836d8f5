#pragma once

// Dense row-major matrices and the data-movement primitives of the 2D
// pipeline: the two transpose task formulations and slab split/concatenate.
//
// Nothing here synchronizes. Concurrent callers must write disjoint element
// sets; placing barriers is up to the orchestration layer.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taskfft/error.hpp"
#include "taskfft/kernel.hpp"

namespace taskfft {

struct Extents {
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] constexpr std::size_t size() const noexcept { return rows * cols; }
  [[nodiscard]] constexpr Extents transposed() const noexcept { return {cols, rows}; }
  friend constexpr auto operator<=>(const Extents&, const Extents&) = default;
};

std::string to_string(const Extents& e);

/// Half-open interval [begin, end) of row indices.
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] constexpr std::size_t size() const noexcept { return end - begin; }
  [[nodiscard]] constexpr bool empty() const noexcept { return end <= begin; }
  friend constexpr bool operator==(const RowRange&, const RowRange&) = default;
};

/// Rank of one participant in a distributed world.
struct LocalityId {
  std::size_t rank = 0;
  friend constexpr auto operator<=>(const LocalityId&, const LocalityId&) = default;
};

struct SlabPartition {
  LocalityId locality;
  RowRange rows;
};

template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  explicit Matrix(Extents extents, const T& fill = T{})
      : extents_{extents}, data_(extents.size(), fill) {}
  Matrix(Extents extents, std::vector<T> data) : extents_{extents}, data_{std::move(data)} {
    if (data_.size() != extents_.size()) {
      throw ShapeError("matrix " + to_string(extents_) + " needs " +
                       std::to_string(extents_.size()) + " elements, got " +
                       std::to_string(data_.size()));
    }
  }

  [[nodiscard]] Extents extents() const noexcept { return extents_; }
  [[nodiscard]] std::size_t rows() const noexcept { return extents_.rows; }
  [[nodiscard]] std::size_t cols() const noexcept { return extents_.cols; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] std::span<T> data() noexcept { return data_; }
  [[nodiscard]] std::span<const T> data() const noexcept { return data_; }

  [[nodiscard]] std::span<T> row(std::size_t r) noexcept {
    return std::span<T>{data_}.subspan(r * extents_.cols, extents_.cols);
  }
  [[nodiscard]] std::span<const T> row(std::size_t r) const noexcept {
    return std::span<const T>{data_}.subspan(r * extents_.cols, extents_.cols);
  }
  /// Contiguous storage of rows [range.begin, range.end).
  [[nodiscard]] std::span<T> rows(RowRange range) noexcept {
    return std::span<T>{data_}.subspan(range.begin * extents_.cols, range.size() * extents_.cols);
  }
  [[nodiscard]] std::span<const T> rows(RowRange range) const noexcept {
    return std::span<const T>{data_}.subspan(range.begin * extents_.cols,
                                             range.size() * extents_.cols);
  }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * extents_.cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * extents_.cols + c];
  }

  /// Keeps the first `rows` rows. Storage is reused.
  void truncate_rows(std::size_t rows) {
    if (rows > extents_.rows) {
      throw BoundsError("cannot truncate " + to_string(extents_) + " to " +
                        std::to_string(rows) + " rows");
    }
    extents_.rows = rows;
    data_.resize(extents_.size());
  }

  [[nodiscard]] std::vector<T> release() && { return std::move(data_); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.extents_ == b.extents_ && a.data_ == b.data_;
  }

 private:
  Extents extents_{};
  std::vector<T> data_;
};

using SignalMatrix = Matrix<double>;
using SpectrumMatrix = Matrix<Complex>;

namespace detail {

template <class T>
void check_transpose(const Matrix<T>& src, const Matrix<T>& dst, RowRange range,
                     std::size_t limit, const char* what) {
  if (dst.extents() != src.extents().transposed()) {
    throw ShapeError("transpose target " + to_string(dst.extents()) + " does not match source " +
                     to_string(src.extents()));
  }
  if (range.begin > range.end || range.end > limit) {
    throw BoundsError(std::string{what} + " rows [" + std::to_string(range.begin) + ", " +
                      std::to_string(range.end) + ") outside [0, " + std::to_string(limit) + ")");
  }
}

}  // namespace detail

/// Streams source rows `src_rows` and scatters them into the matching
/// destination columns: dst(c, r) = src(r, c). Each source row only needs its
/// own data, so it can run as soon as that row is ready.
template <class T>
void transpose_read_contiguous(const Matrix<T>& src, Matrix<T>& dst, RowRange src_rows) {
  detail::check_transpose(src, dst, src_rows, src.rows(), "source");
  const std::size_t cols = src.cols();
  for (std::size_t r = src_rows.begin; r < src_rows.end; ++r) {
    const auto in = src.row(r);
    for (std::size_t c = 0; c < cols; ++c) dst(c, r) = in[c];
  }
}

/// Fills destination rows `dst_rows` contiguously by gathering source
/// columns: dst(r, c) = src(c, r). Reads every source row, so all of them
/// must be complete before any such task starts.
template <class T>
void transpose_write_contiguous(const Matrix<T>& src, Matrix<T>& dst, RowRange dst_rows) {
  detail::check_transpose(src, dst, dst_rows, dst.rows(), "destination");
  const std::size_t cols = dst.cols();
  for (std::size_t r = dst_rows.begin; r < dst_rows.end; ++r) {
    auto out = dst.row(r);
    for (std::size_t c = 0; c < cols; ++c) out[c] = src(c, r);
  }
}

template <class T>
[[nodiscard]] Matrix<T> transposed(const Matrix<T>& m) {
  Matrix<T> out{m.extents().transposed()};
  transpose_write_contiguous(m, out, RowRange{0, out.rows()});
  return out;
}

/// Equal contiguous row blocks, one per locality, in rank order.
[[nodiscard]] std::vector<SlabPartition> slab_partition(std::size_t rows, std::size_t n_locs);

/// Task tiling of [0, rows) into intervals of at most `bundle` rows.
[[nodiscard]] std::vector<RowRange> bundle_rows(std::size_t rows, std::size_t bundle);

template <class T>
[[nodiscard]] std::vector<Matrix<T>> split_into_slabs(const Matrix<T>& m, std::size_t n_locs) {
  const auto parts = slab_partition(m.rows(), n_locs);
  std::vector<Matrix<T>> out;
  out.reserve(parts.size());
  for (const auto& p : parts) {
    const auto src = m.rows(p.rows);
    out.emplace_back(Extents{p.rows.size(), m.cols()}, std::vector<T>(src.begin(), src.end()));
  }
  return out;
}

template <class T>
[[nodiscard]] Matrix<T> concatenate_slabs(std::span<const Matrix<T>> parts) {
  if (parts.empty()) throw ShapeError("cannot concatenate zero slabs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw ShapeError("slab with " + std::to_string(p.cols()) + " columns among slabs with " +
                       std::to_string(cols));
    }
    rows += p.rows();
  }
  std::vector<T> data;
  data.reserve(rows * cols);
  for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return Matrix<T>{Extents{rows, cols}, std::move(data)};
}

/// Splits the columns of `m` into `parts` equal blocks of width
/// padded_cols / parts. Columns in [m.cols(), padded_cols) are filled with
/// T{}. Block j holds columns [j*w, (j+1)*w) of every row, in row order.
template <class T>
[[nodiscard]] std::vector<Matrix<T>> split_into_column_blocks(const Matrix<T>& m, std::size_t parts,
                                                              std::size_t padded_cols) {
  if (parts == 0 || padded_cols % parts != 0 || padded_cols < m.cols()) {
    throw PartitionError("cannot split " + std::to_string(m.cols()) + " columns padded to " +
                         std::to_string(padded_cols) + " into " + std::to_string(parts) +
                         " equal blocks");
  }
  const std::size_t width = padded_cols / parts;
  std::vector<Matrix<T>> out;
  out.reserve(parts);
  for (std::size_t j = 0; j < parts; ++j) {
    Matrix<T> block{Extents{m.rows(), width}};
    const std::size_t first = j * width;
    const std::size_t last = std::min(first + width, m.cols());
    if (first < last) {
      for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto in = m.row(r);
        std::copy(in.begin() + static_cast<std::ptrdiff_t>(first),
                  in.begin() + static_cast<std::ptrdiff_t>(last), block.row(r).begin());
      }
    }
    out.push_back(std::move(block));
  }
  return out;
}

}  // namespace taskfft
