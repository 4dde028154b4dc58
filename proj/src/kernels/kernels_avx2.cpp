// AVX2 kernel variants. This translation unit is compiled with -mavx2 and is
// only entered when runtime CPU detection confirms AVX2 support.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstddef>
#include <cstdint>

namespace mmt::kernels::avx2 {

namespace {

// Nibble-LUT popcount of a 256-bit register, summed per 64-bit lane.
inline __m256i popcount_epi64(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2,
                                       3, 3, 4, 0, 1, 1, 2, 1, 2, 2, 3, 1, 2,
                                       2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  const __m256i cnt =
      _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
  return _mm256_sad_epu8(cnt, _mm256_setzero_si256());
}

}  // namespace

void hamming256_batch(const std::uint64_t* q, const std::uint64_t* db,
                      std::size_t n, std::uint32_t* out) {
  const __m256i vq =
      _mm256_loadu_si256(reinterpret_cast<const __m256i*>(q));
  std::size_t i = 0;
  // Four descriptors per iteration: transpose-add the per-lane counts so a
  // single horizontal pass produces four results.
  for (; i + 4 <= n; i += 4) {
    const auto* base = reinterpret_cast<const __m256i*>(db + 4 * i);
    const __m256i c0 = popcount_epi64(_mm256_xor_si256(vq, _mm256_loadu_si256(base)));
    const __m256i c1 = popcount_epi64(_mm256_xor_si256(vq, _mm256_loadu_si256(base + 1)));
    const __m256i c2 = popcount_epi64(_mm256_xor_si256(vq, _mm256_loadu_si256(base + 2)));
    const __m256i c3 = popcount_epi64(_mm256_xor_si256(vq, _mm256_loadu_si256(base + 3)));
    // [c0_0+c0_1, c1_0+c1_1, c0_2+c0_3, c1_2+c1_3] etc. via lane unpacks.
    const __m256i s01 = _mm256_add_epi64(_mm256_unpacklo_epi64(c0, c1),
                                         _mm256_unpackhi_epi64(c0, c1));
    const __m256i s23 = _mm256_add_epi64(_mm256_unpacklo_epi64(c2, c3),
                                         _mm256_unpackhi_epi64(c2, c3));
    const __m256i sum = _mm256_add_epi64(
        _mm256_permute2x128_si256(s01, s23, 0x20),
        _mm256_permute2x128_si256(s01, s23, 0x31));
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), sum);
    out[i] = std::uint32_t(lanes[0]);
    out[i + 1] = std::uint32_t(lanes[1]);
    out[i + 2] = std::uint32_t(lanes[2]);
    out[i + 3] = std::uint32_t(lanes[3]);
  }
  for (; i < n; ++i) {
    const __m256i vd =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(db + 4 * i));
    const __m256i counts = popcount_epi64(_mm256_xor_si256(vq, vd));
    const __m128i lo = _mm256_castsi256_si128(counts);
    const __m128i hi = _mm256_extracti128_si256(counts, 1);
    const __m128i sum = _mm_add_epi64(lo, hi);
    out[i] = static_cast<std::uint32_t>(_mm_cvtsi128_si64(sum) +
                                        _mm_extract_epi64(sum, 1));
  }
}

void sq_dist_batch(double qx, double qy, double qz, const double* xs,
                   const double* ys, const double* zs, std::size_t n,
                   double* out) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  const __m256d vqz = _mm256_set1_pd(qz);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vqy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), vqz);
    // Same association order as the scalar reference: (dx²+dy²)+dz².
    const __m256d d2 = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
        _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + i, d2);
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double dz = zs[i] - qz;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

}  // namespace mmt::kernels::avx2

#endif  // x86-64
