#include "mmt/kernels/kernels.hpp"

#include <atomic>
#include <bit>
#include <stdexcept>

namespace mmt::kernels {

namespace scalar {

void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* d = db + 4 * i;
    out[i] = static_cast<std::uint32_t>(
        std::popcount(q[0] ^ d[0]) + std::popcount(q[1] ^ d[1]) +
        std::popcount(q[2] ^ d[2]) + std::popcount(q[3] ^ d[3]));
  }
}

void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double dz = zs[i] - qz;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

}  // namespace scalar

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend detect_backend() {
#if defined(__aarch64__)
  return Backend::kNeon;
#else
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
#endif
}

std::atomic<Backend> g_backend{detect_backend()};

}  // namespace

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
    case Backend::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_available(backend))
    throw std::runtime_error("kernel backend not available on this CPU: " +
                             backend_name(backend));
  g_backend.store(backend, std::memory_order_relaxed);
}

std::string backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::kAvx2:
      avx2::hamming256_batch(q, db, n, out);
      return;
#endif
#if defined(__aarch64__)
    case Backend::kNeon:
      neon::hamming256_batch(q, db, n, out);
      return;
#endif
    default:
      scalar::hamming256_batch(q, db, n, out);
      return;
  }
}

void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::kAvx2:
      avx2::sq_dist_batch(qx, qy, qz, xs, ys, zs, n, out);
      return;
#endif
#if defined(__aarch64__)
    case Backend::kNeon:
      neon::sq_dist_batch(qx, qy, qz, xs, ys, zs, n, out);
      return;
#endif
    default:
      scalar::sq_dist_batch(qx, qy, qz, xs, ys, zs, n, out);
      return;
  }
}

namespace {
constexpr std::size_t kBlock = 256;
}

Nearest2 nearest2_hamming256(const std::uint64_t* q, const std::uint64_t* db,
                             std::size_t n) {
  Nearest2 result;
  std::uint32_t best = 0xffffffff, second = 0xffffffff;
  std::uint32_t buf[kBlock];
  for (std::size_t base = 0; base < n; base += kBlock) {
    const std::size_t m = std::min(kBlock, n - base);
    hamming256_batch(q, db + 4 * base, m, buf);
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint32_t d = buf[i];
      if (d < best) {
        second = best;
        best = d;
        result.best_index = static_cast<std::ptrdiff_t>(base + i);
      } else if (d < second) {
        second = d;
      }
    }
  }
  result.best = best;
  result.second = (second == 0xffffffff) ? best : second;
  return result;
}

ArgMin argmin_sq_dist(double qx, double qy, double qz, const double* xs,
                      const double* ys, const double* zs, std::size_t n) {
  ArgMin result;
  double best = 0.0;
  double buf[kBlock];
  for (std::size_t base = 0; base < n; base += kBlock) {
    const std::size_t m = std::min(kBlock, n - base);
    sq_dist_batch(qx, qy, qz, xs + base, ys + base, zs + base, m, buf);
    for (std::size_t i = 0; i < m; ++i) {
      if (result.index < 0 || buf[i] < best) {
        best = buf[i];
        result.index = static_cast<std::ptrdiff_t>(base + i);
      }
    }
  }
  result.value = best;
  return result;
}

}  // namespace mmt::kernels
