#pragma once
// Data-parallel inner-loop kernels, double precision.
//
// Every kernel has a scalar reference implementation (kern::scalar::*) and,
// on x86-64 with AVX2+FMA, a vectorized variant selected once at startup.
// The dispatch table is swappable so tests can pin either backend and check
// equivalence.

#include <cstddef>
#include <string_view>

namespace rfx::kern {

// Scalar reference kernels. Always available, used as the equivalence oracle.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
// C = beta*C + alpha*op(A)*op(B); row-major, op selected by trans flags.
// A is m x k after op, B is k x n after op, C is m x n.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define RFX_HAVE_AVX2_BUILD 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc);
}  // namespace avx2
#endif

struct Dispatch {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*gemm)(bool, bool, std::size_t, std::size_t, std::size_t, double,
               const double*, std::size_t, const double*, std::size_t, double,
               double*, std::size_t);
  std::string_view name;
};

// Active backend, chosen at startup from CPU features. "avx2" or "scalar".
const Dispatch& active();
const Dispatch& scalar_table();
// Force a backend by name; returns false if unavailable on this machine.
bool select_backend(std::string_view name);

// Convenience forwarders through the active table.
inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, std::size_t n) {
  active().scale(alpha, x, n);
}
inline void add(const double* a, const double* b, double* out, std::size_t n) {
  active().add(a, b, out, n);
}
inline void mul(const double* a, const double* b, double* out, std::size_t n) {
  active().mul(a, b, out, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sumsq(const double* x, std::size_t n) {
  return active().sumsq(x, n);
}
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                 std::size_t k, double alpha, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double beta, double* c,
                 std::size_t ldc) {
  active().gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c,
                ldc);
}

}  // namespace rfx::kern
