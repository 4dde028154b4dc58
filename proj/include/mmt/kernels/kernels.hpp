#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

// Data-parallel inner-loop kernels with scalar reference implementations and
// SIMD variants (AVX2 on x86-64, NEON on aarch64) selected at runtime.
//
// All variants of a kernel are bit-for-bit equivalent: integer kernels
// trivially, floating-point kernels because every lane performs the same
// IEEE operations in the same association order as the scalar reference
// (the project is built with -ffp-contract=off). Selection logic that is
// sensitive to scan order (nearest-neighbor ties) is shared scalar code on
// top of the batch kernels.

namespace mmt::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

// Active backend for the process-wide dispatch table. Auto-detected at first
// use; can be forced (e.g. --kernels=scalar) for debugging and testing.
Backend active_backend();
void set_backend(Backend backend);
bool backend_available(Backend backend);
std::string backend_name(Backend backend);

// ---- batch kernels (dispatched) --------------------------------------------

// Hamming distances between one 256-bit descriptor `q` and `n` contiguous
// descriptors `db` (4 uint64 words each). out[i] in [0, 256].
void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out);

// Squared Euclidean distances between query point (qx,qy,qz) and `n` points
// given as separate coordinate arrays. Each distance is computed as
// (dx*dx + dy*dy) + dz*dz in double precision.
void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out);

// ---- selection helpers built on the batch kernels ---------------------------

struct Nearest2 {
  std::ptrdiff_t best_index = -1;
  std::uint32_t best = 0;
  std::uint32_t second = 0;  // == best when n < 2
};

// Best and second-best Hamming distance over the database; ties keep the
// lower index.
Nearest2 nearest2_hamming256(const std::uint64_t* q, const std::uint64_t* db,
                             std::size_t n);

struct ArgMin {
  std::ptrdiff_t index = -1;
  double value = 0.0;
};

// Index and value of the minimum squared distance; ties keep the lower index.
ArgMin argmin_sq_dist(double qx, double qy, double qz, const double* xs,
                      const double* ys, const double* zs, std::size_t n);

// ---- per-backend entry points (exposed for equivalence tests) ---------------

namespace scalar {
void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out);
void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out);
void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out);
void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out);
}  // namespace neon
#endif

}  // namespace mmt::kernels
