#include "taskfft/kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "taskfft/error.hpp"

namespace taskfft {

namespace {

// std::complex operator* carries NaN/Inf recovery (C99 Annex G) that defeats
// vectorization; inputs here are finite.
inline Complex mul(Complex a, Complex b) noexcept {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline Complex conj_if(Complex w, bool inverse) noexcept {
  return inverse ? Complex{w.real(), -w.imag()} : w;
}

std::vector<std::size_t> bit_reverse_table(std::size_t n) {
  std::vector<std::size_t> rev(n, 0);
  const std::size_t bits = log2_floor(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      r |= ((i >> b) & 1U) << (bits - 1 - b);
    }
    rev[i] = r;
  }
  return rev;
}

void permute(std::span<const std::size_t> rev, std::span<const Complex> in, std::span<Complex> out) {
  if (in.data() == out.data()) {
    for (std::size_t i = 0; i < rev.size(); ++i) {
      if (i < rev[i]) std::swap(out[i], out[rev[i]]);
    }
  } else {
    for (std::size_t i = 0; i < rev.size(); ++i) out[i] = in[rev[i]];
  }
}

// Iterative decimation-in-time butterflies over bit-reversed data.
void butterflies(std::span<Complex> data, const TwiddleTable& table, bool inverse) {
  const std::size_t n = data.size();
  const std::size_t stages = log2_floor(n);
  for (std::size_t s = 1; s <= stages; ++s) {
    const std::size_t m = std::size_t{1} << s;
    const std::size_t half = m / 2;
    const auto w = table.stage(s);
    for (std::size_t k = 0; k < n; k += m) {
      for (std::size_t j = 0; j < half; ++j) {
        const Complex t = mul(conj_if(w[j], inverse), data[k + j + half]);
        const Complex u = data[k + j];
        data[k + j] = u + t;
        data[k + j + half] = u - t;
      }
    }
  }
}

void check_spans(const Plan1D& plan, std::size_t in_size, std::size_t out_size) {
  if (in_size != plan.input_size()) {
    throw ShapeError("input holds " + std::to_string(in_size) + " samples, plan expects " +
                     std::to_string(plan.input_size()));
  }
  if (out_size != plan.output_size()) {
    throw ShapeError("output holds " + std::to_string(out_size) + " bins, plan expects " +
                     std::to_string(plan.output_size()));
  }
}

void c2c_impl(const Plan1D& plan, const Plan1D::Tables& tables, std::span<const Complex> in,
              std::span<Complex> out, bool inverse) {
  const std::size_t n = plan.length();
  for (std::size_t b = 0; b < plan.batch(); ++b) {
    auto src = in.subspan(b * n, n);
    auto dst = out.subspan(b * n, n);
    permute(tables.bit_reverse, src, dst);
    butterflies(dst, tables.twiddles, inverse);
  }
}

}  // namespace

const char* to_string(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::r2c:
      return "r2c";
    case TransformKind::c2c_forward:
      return "c2c-forward";
    case TransformKind::c2c_inverse:
      return "c2c-inverse";
  }
  return "unknown";
}

TwiddleTable::TwiddleTable(std::size_t length) : length_{length}, stages_{log2_floor(length)} {
  if (!is_power_of_two(length) || length < 2) {
    throw InvalidSizeError("twiddle table length " + std::to_string(length) +
                           " is not a power of two >= 2");
  }
  // Every stage is a subsample of the finest one, so all stages see the same
  // rounded values for equal angles.
  const std::size_t half = length / 2;
  std::vector<Complex> finest(half);
  const double step = -2.0 * std::numbers::pi / static_cast<double>(length);
  for (std::size_t j = 0; j < half; ++j) {
    const double angle = step * static_cast<double>(j);
    finest[j] = {std::cos(angle), std::sin(angle)};
  }
  factors_.reserve(length - 1);
  for (std::size_t s = 1; s <= stages_; ++s) {
    const std::size_t m = std::size_t{1} << s;
    const std::size_t stride = length / m;
    for (std::size_t j = 0; j < m / 2; ++j) factors_.push_back(finest[j * stride]);
  }
}

std::span<const Complex> TwiddleTable::stage(std::size_t s) const {
  if (s == 0 || s > stages_) {
    throw BoundsError("twiddle stage " + std::to_string(s) + " outside [1, " +
                      std::to_string(stages_) + "]");
  }
  const std::size_t count = std::size_t{1} << (s - 1);
  return std::span<const Complex>{factors_}.subspan(count - 1, count);
}

std::size_t Plan1D::bins() const noexcept {
  return kind_ == TransformKind::r2c ? length_ / 2 + 1 : length_;
}

Plan1D Plan1D::with_batch(std::size_t batch) const {
  if (batch == 0) throw ConfigurationError("plan batch must be >= 1");
  return Plan1D{length_, kind_, batch, tables_};
}

Plan1D plan_1d(std::size_t length, TransformKind kind, std::size_t batch) {
  if (length < 2 || !is_power_of_two(length)) {
    throw InvalidSizeError("FFT length " + std::to_string(length) +
                           " is not a power of two >= 2");
  }
  if (batch == 0) throw ConfigurationError("plan batch must be >= 1");
  const std::size_t complex_length = kind == TransformKind::r2c ? length / 2 : length;
  auto tables = std::make_shared<const Plan1D::Tables>(
      Plan1D::Tables{TwiddleTable{length}, bit_reverse_table(complex_length)});
  return Plan1D{length, kind, batch, std::move(tables)};
}

void execute_c2c(const Plan1D& plan, std::span<const Complex> in, std::span<Complex> out) {
  if (plan.kind() != TransformKind::c2c_forward) {
    throw PlanMisuseError(std::string{"execute_c2c needs a c2c-forward plan, got "} +
                          to_string(plan.kind()));
  }
  check_spans(plan, in.size(), out.size());
  c2c_impl(plan, *plan.tables_, in, out, false);
}

void execute_c2c_inverse(const Plan1D& plan, std::span<const Complex> in, std::span<Complex> out) {
  if (plan.kind() != TransformKind::c2c_inverse) {
    throw PlanMisuseError(std::string{"execute_c2c_inverse needs a c2c-inverse plan, got "} +
                          to_string(plan.kind()));
  }
  check_spans(plan, in.size(), out.size());
  c2c_impl(plan, *plan.tables_, in, out, true);
}

// Real input of length N is packed into N/2 complex samples z_n = x_2n + i x_2n+1,
// transformed at half length, and unpacked with
//   X_k = (Z_k + conj Z_{H-k}) / 2 - i W^k (Z_k - conj Z_{H-k}) / 2,  W = exp(-2 pi i / N).
void execute_r2c(const Plan1D& plan, std::span<const double> in, std::span<Complex> out) {
  if (plan.kind() != TransformKind::r2c) {
    throw PlanMisuseError(std::string{"execute_r2c needs an r2c plan, got "} +
                          to_string(plan.kind()));
  }
  check_spans(plan, in.size(), out.size());

  const Plan1D::Tables& tables = *plan.tables_;
  const std::size_t n = plan.length();
  const std::size_t h = n / 2;
  const auto split = tables.twiddles.stage(tables.twiddles.stages());

  for (std::size_t b = 0; b < plan.batch(); ++b) {
    const double* x = in.data() + b * n;
    std::span<Complex> z = out.subspan(b * (h + 1), h + 1);

    for (std::size_t i = 0; i < h; ++i) {
      const std::size_t r = tables.bit_reverse[i];
      z[i] = {x[2 * r], x[2 * r + 1]};
    }
    butterflies(z.first(h), tables.twiddles, false);

    const Complex z0 = z[0];
    z[0] = {z0.real() + z0.imag(), 0.0};
    z[h] = {z0.real() - z0.imag(), 0.0};

    for (std::size_t k = 1; k <= h / 2; ++k) {
      const std::size_t q = h - k;
      const Complex a = z[k];
      const Complex c = z[q];
      // Bin k from (Z_k, Z_q); bin q from (Z_q, Z_k).
      const Complex even_k = 0.5 * (a + std::conj(c));
      const Complex odd_k = 0.5 * (a - std::conj(c));
      const Complex xk = even_k + mul(split[k], Complex{odd_k.imag(), -odd_k.real()});
      const Complex even_q = 0.5 * (c + std::conj(a));
      const Complex odd_q = 0.5 * (c - std::conj(a));
      const Complex xq = even_q + mul(split[q], Complex{odd_q.imag(), -odd_q.real()});
      z[k] = xk;
      z[q] = xq;
    }
  }
}

std::vector<Complex> execute_c2c(const Plan1D& plan, std::span<const Complex> in) {
  std::vector<Complex> out(plan.output_size());
  execute_c2c(plan, in, out);
  return out;
}

std::vector<Complex> execute_c2c_inverse(const Plan1D& plan, std::span<const Complex> in) {
  std::vector<Complex> out(plan.output_size());
  execute_c2c_inverse(plan, in, out);
  return out;
}

std::vector<Complex> execute_r2c(const Plan1D& plan, std::span<const double> in) {
  std::vector<Complex> out(plan.output_size());
  execute_r2c(plan, in, out);
  return out;
}

namespace {

template <class Sample>
std::vector<Complex> direct_dft(std::span<const Sample> data, std::size_t bins) {
  const std::size_t n = data.size();
  if (n == 0) throw InvalidSizeError("DFT of an empty signal");
  std::vector<Complex> out(bins);
  const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t k = 0; k < bins; ++k) {
    long double re = 0.0L;
    long double im = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      // Reduce n*k modulo N first so the angle stays in [0, 2 pi).
      const double angle = step * static_cast<double>((i * k) % n);
      const Complex sample{data[i]};
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      re += static_cast<long double>(sample.real()) * c - static_cast<long double>(sample.imag()) * s;
      im += static_cast<long double>(sample.real()) * s + static_cast<long double>(sample.imag()) * c;
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

}  // namespace

std::vector<Complex> dft_reference(std::span<const Complex> data) {
  return direct_dft(data, data.size());
}

std::vector<Complex> dft_reference(std::span<const double> data) {
  return direct_dft(data, data.size() / 2 + 1);
}

}  // namespace taskfft
