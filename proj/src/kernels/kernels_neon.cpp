// NEON kernel variants for aarch64.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstddef>
#include <cstdint>

namespace mmt::kernels::neon {

void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out) {
  const uint8x16_t q0 = vld1q_u8(reinterpret_cast<const std::uint8_t*>(q));
  const uint8x16_t q1 = vld1q_u8(reinterpret_cast<const std::uint8_t*>(q) + 16);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* d = reinterpret_cast<const std::uint8_t*>(db + 4 * i);
    const uint8x16_t x0 = veorq_u8(q0, vld1q_u8(d));
    const uint8x16_t x1 = veorq_u8(q1, vld1q_u8(d + 16));
    const uint8x16_t cnt = vaddq_u8(vcntq_u8(x0), vcntq_u8(x1));
    out[i] = vaddvq_u8(cnt);
  }
}

void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out) {
  const float64x2_t vqx = vdupq_n_f64(qx);
  const float64x2_t vqy = vdupq_n_f64(qy);
  const float64x2_t vqz = vdupq_n_f64(qz);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + i), vqx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + i), vqy);
    const float64x2_t dz = vsubq_f64(vld1q_f64(zs + i), vqz);
    // Same association order as the scalar reference: (dx²+dy²)+dz².
    const float64x2_t d2 = vaddq_f64(
        vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy)), vmulq_f64(dz, dz));
    vst1q_f64(out + i, d2);
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double dz = zs[i] - qz;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

}  // namespace mmt::kernels::neon

#endif  // aarch64
