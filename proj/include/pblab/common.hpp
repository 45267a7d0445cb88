#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pblab {

inline constexpr const char* kVersion = "0.3.0";

using Vec = std::array<double, 3>;  // spatial vector, components beyond n unused (zero)

inline double norm2(const Vec& v, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

// |x'| over the first n-1 components.
inline double norm_prime(const Vec& v, int n) {
  double s = 0;
  for (int i = 0; i < n - 1; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG: splitmix64 streams, seedable per purpose so results do
// not depend on call order or thread count.
// ---------------------------------------------------------------------------
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // in [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    // Marsaglia polar; deterministic given the stream position.
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  // Independent stream for a labelled purpose; stable w.r.t. other draws.
  static Rng stream(std::uint64_t seed, std::uint64_t purpose) {
    Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (purpose + 1)));
    r.next_u64();
    return r;
  }
};

// ---------------------------------------------------------------------------
// Execution-mode switch: every data-parallel kernel runs through par::for_each
// so the serial reference path and the OpenMP path perform bitwise-identical
// arithmetic (independent iterations, deterministic reductions).
// ---------------------------------------------------------------------------
namespace par {

enum class Mode { serial, openmp };

inline Mode& mode() {
  static Mode m = Mode::openmp;
  return m;
}

inline void set_mode(Mode m) { mode() = m; }

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class F>
inline void for_each(std::int64_t n, F&& body) {
#ifdef _OPENMP
  if (mode() == Mode::openmp) {
    // Exceptions must not escape the parallel region; capture the first one.
    std::exception_ptr error;
#pragma omp parallel for schedule(static) shared(error)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical(pblab_par_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

// Deterministic sum: fixed 4096-element blocks, block partials in parallel,
// serial accumulation of partials. Result is independent of thread count.
template <class F>
inline double sum(std::int64_t n, F&& term) {
  constexpr std::int64_t kBlock = 4096;
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
  for_each(nblocks, [&](std::int64_t b) {
    const std::int64_t lo = b * kBlock;
    const std::int64_t hi = std::min(n, lo + kBlock);
    double s = 0;
    for (std::int64_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  });
  double s = 0;
  for (double p : partial) s += p;
  return s;
}

// Max is associative/commutative over doubles (no NaN inputs), so a plain
// blocked reduction is already deterministic.
template <class F>
inline double max(std::int64_t n, F&& term, double init) {
  constexpr std::int64_t kBlock = 4096;
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(static_cast<std::size_t>(nblocks), init);
  for_each(nblocks, [&](std::int64_t b) {
    const std::int64_t lo = b * kBlock;
    const std::int64_t hi = std::min(n, lo + kBlock);
    double m = init;
    for (std::int64_t i = lo; i < hi; ++i) m = std::max(m, term(i));
    partial[static_cast<std::size_t>(b)] = m;
  });
  double m = init;
  for (double p : partial) m = std::max(m, p);
  return m;
}

}  // namespace par

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------
namespace quad {

// Adaptive Simpson with relative tolerance; interval budget caps recursion.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-8, std::int64_t max_intervals = (1 << 20));

// Gauss-Legendre nodes/weights on [-1, 1]; cached per order.
const std::vector<double>& gl_nodes(int order);
const std::vector<double>& gl_weights(int order);

}  // namespace quad

// ---------------------------------------------------------------------------
// Small symmetric eigensolver (n <= 3), cyclic Jacobi.
// ---------------------------------------------------------------------------
namespace linalg {

struct SymEigen {
  std::array<double, 3> values{};             // ascending
  std::array<std::array<double, 3>, 3> vecs{};  // vecs[k] = eigenvector for values[k]
};

SymEigen sym_eigen(const double* a, int n);  // a row-major n x n, assumed symmetric

}  // namespace linalg

}  // namespace pblab
