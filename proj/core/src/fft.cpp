#include "nlslab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace nlslab {
namespace {

// FFTW planning is not thread-safe, execution with the new-array interface is.
// Plans are created once per (dim, N, sign) and shared by every caller.
struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans;

  fftw_plan get(int dim, std::size_t n, int sign) {
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(dim, n, sign);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    const std::size_t total = dim == 1 ? n : n * n;
    std::vector<cplx> a(total), b(total);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = dim == 1 ? fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, flags)
                              : fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), in,
                                                 out, sign, flags);
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(const GridSpec& grid, std::span<const cplx> in, std::span<cplx> out, int sign) {
  fftw_plan plan = cache().get(grid.dim, grid.points, sign);
  if (in.data() == out.data()) {
    std::vector<cplx> tmp(in.begin(), in.end());
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
  } else {
    // Out-of-place complex transforms leave the input untouched.
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }
}

}  // namespace

void fft_forward(const GridSpec& grid, std::span<const cplx> in, std::span<cplx> out) {
  execute(grid, in, out, FFTW_FORWARD);
}

void fft_backward(const GridSpec& grid, std::span<const cplx> in, std::span<cplx> out) {
  execute(grid, in, out, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& v : out) v *= scale;
}

}  // namespace nlslab
