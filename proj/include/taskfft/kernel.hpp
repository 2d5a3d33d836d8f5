#pragma once

// One-dimensional radix-2 FFT kernel.
//
// Conventions:
//  - forward transforms are unnormalized: X_k = sum_n x_n exp(-2 pi i n k / N)
//  - the inverse uses exp(+2 pi i n k / N) without a 1/N factor, so
//    inverse(forward(x)) == N * x
//  - r2c produces N/2 + 1 bins per transform; bins 0 and N/2 have an exact
//    zero imaginary part
//
// Plans are immutable and may be shared freely between threads. Execution
// only writes to the caller-provided output span.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace taskfft {

using Complex = std::complex<double>;

enum class TransformKind { r2c, c2c_forward, c2c_inverse };

const char* to_string(TransformKind kind) noexcept;

[[nodiscard]] constexpr bool is_power_of_two(std::size_t n) noexcept {
  return n != 0 && (n & (n - 1)) == 0;
}

/// floor(log2(n)) for n >= 1.
[[nodiscard]] constexpr std::size_t log2_floor(std::size_t n) noexcept {
  std::size_t r = 0;
  while (n > 1) {
    n >>= 1;
    ++r;
  }
  return r;
}

/// Butterfly factors exp(-2 pi i j / m) for every stage m = 2, 4, ..., length.
/// Stage s (1-based) holds 2^(s-1) factors. A table for length N serves every
/// power-of-two length up to N since the stages of a shorter transform are a
/// prefix of the longer one.
class TwiddleTable {
 public:
  explicit TwiddleTable(std::size_t length);

  [[nodiscard]] std::size_t length() const noexcept { return length_; }
  [[nodiscard]] std::size_t stages() const noexcept { return stages_; }
  [[nodiscard]] std::span<const Complex> stage(std::size_t s) const;
  [[nodiscard]] std::span<const Complex> factors() const noexcept { return factors_; }

 private:
  std::size_t length_;
  std::size_t stages_;
  std::vector<Complex> factors_;
};

class Plan1D {
 public:
  [[nodiscard]] std::size_t length() const noexcept { return length_; }
  [[nodiscard]] TransformKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t batch() const noexcept { return batch_; }
  /// Butterfly stages of a length-N transform, log2(N).
  [[nodiscard]] std::size_t stages() const noexcept { return tables_->twiddles.stages(); }
  /// Output bins per transform: N/2+1 for r2c, N otherwise.
  [[nodiscard]] std::size_t bins() const noexcept;
  [[nodiscard]] std::size_t input_size() const noexcept { return length_ * batch_; }
  [[nodiscard]] std::size_t output_size() const noexcept { return bins() * batch_; }
  [[nodiscard]] const TwiddleTable& twiddles() const noexcept { return tables_->twiddles; }

  /// Same transform over a different number of contiguous signals. Shares
  /// the precomputed tables.
  [[nodiscard]] Plan1D with_batch(std::size_t batch) const;

  struct Tables {
    TwiddleTable twiddles;
    // Bit-reversal permutation of the complex transform actually executed:
    // length N for c2c, N/2 for r2c.
    std::vector<std::size_t> bit_reverse;
  };

 private:
  friend Plan1D plan_1d(std::size_t, TransformKind, std::size_t);
  Plan1D(std::size_t length, TransformKind kind, std::size_t batch,
         std::shared_ptr<const Tables> tables)
      : length_{length}, kind_{kind}, batch_{batch}, tables_{std::move(tables)} {}

  std::size_t length_;
  TransformKind kind_;
  std::size_t batch_;
  std::shared_ptr<const Tables> tables_;

  friend void execute_c2c(const Plan1D&, std::span<const Complex>, std::span<Complex>);
  friend void execute_c2c_inverse(const Plan1D&, std::span<const Complex>, std::span<Complex>);
  friend void execute_r2c(const Plan1D&, std::span<const double>, std::span<Complex>);
};

/// Throws InvalidSizeError unless length is a power of two >= 2, and
/// ConfigurationError when batch is zero.
[[nodiscard]] Plan1D plan_1d(std::size_t length, TransformKind kind, std::size_t batch = 1);

// The span overloads accept in.data() == out.data() (exact aliasing) for the
// c2c transforms; partial overlap is not supported.
void execute_c2c(const Plan1D& plan, std::span<const Complex> in, std::span<Complex> out);
void execute_c2c_inverse(const Plan1D& plan, std::span<const Complex> in, std::span<Complex> out);
void execute_r2c(const Plan1D& plan, std::span<const double> in, std::span<Complex> out);

[[nodiscard]] std::vector<Complex> execute_c2c(const Plan1D& plan, std::span<const Complex> in);
[[nodiscard]] std::vector<Complex> execute_c2c_inverse(const Plan1D& plan,
                                                       std::span<const Complex> in);
[[nodiscard]] std::vector<Complex> execute_r2c(const Plan1D& plan, std::span<const double> in);

/// Direct O(N^2) evaluation of the DFT for any N >= 1. Used as the oracle for
/// the fast path, so it shares no code with it.
[[nodiscard]] std::vector<Complex> dft_reference(std::span<const Complex> data);
/// Real input: bins k = 0 .. N/2 only.
[[nodiscard]] std::vector<Complex> dft_reference(std::span<const double> data);

}  // namespace taskfft
