#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "mmda/kernels.hpp"
#include "mmda/rng.hpp"

// Timing comparison between the serial reference kernels and the OpenMP
// versions, at the shapes the training loop actually runs.

using mmda::Rng;
namespace kern = mmda::kernels;
using kern::idx;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double time_of(const std::function<void()>& fn) {
  using Clock = std::chrono::steady_clock;
  fn();  // warm-up
  int reps = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const double sec = std::chrono::duration<double>(Clock::now() - t0).count();
    if (sec > 0.25) return sec / reps;
    reps *= 2;
  }
}

void row(const char* name, const char* shape, double serial_s, double parallel_s) {
  std::printf("%-22s %-24s %10.3f %10.3f %8.2fx\n", name, shape, serial_s * 1e3, parallel_s * 1e3,
              serial_s / parallel_s);
}

}  // namespace

int main() {
  Rng rng(1);
  std::printf("%-22s %-24s %10s %10s %9s\n", "kernel", "shape", "serial ms", "omp ms", "speedup");

  {
    // conv2 of the 2D encoder as an im2col gemm: (64*64 x 72) * (72 x 16)^T
    const idx m = 64 * 64, k = 72, n = 16;
    auto a = random_vec(static_cast<std::size_t>(m * k), rng);
    auto b = random_vec(static_cast<std::size_t>(n * k), rng);
    std::vector<double> c(static_cast<std::size_t>(m * n));
    row("gemm_nt (conv2)", "4096x72 * 16x72^T",
        time_of([&] { kern::serial::gemm_nt(a.data(), b.data(), c.data(), m, k, n); }),
        time_of([&] { kern::gemm_nt(a.data(), b.data(), c.data(), m, k, n); }));
  }
  {
    // attention scores: K (N x F) times V^T -> N x N at N=768, F=16
    const idx m = 768, k = 16, n = 768;
    auto a = random_vec(static_cast<std::size_t>(m * k), rng);
    auto b = random_vec(static_cast<std::size_t>(n * k), rng);
    std::vector<double> c(static_cast<std::size_t>(m * n));
    row("gemm_nt (attention)", "768x16 * 768x16^T",
        time_of([&] { kern::serial::gemm_nt(a.data(), b.data(), c.data(), m, k, n); }),
        time_of([&] { kern::gemm_nt(a.data(), b.data(), c.data(), m, k, n); }));
  }
  {
    const idx m = 768, k = 768, n = 16;
    auto a = random_vec(static_cast<std::size_t>(m * k), rng);
    auto b = random_vec(static_cast<std::size_t>(k * n), rng);
    std::vector<double> c(static_cast<std::size_t>(m * n));
    row("gemm_nn (relation)", "768x768 * 768x16",
        time_of([&] { kern::serial::gemm_nn(a.data(), b.data(), c.data(), m, k, n); }),
        time_of([&] { kern::gemm_nn(a.data(), b.data(), c.data(), m, k, n); }));
  }
  {
    const idx rows = 768, cols = 768;
    auto x = random_vec(static_cast<std::size_t>(rows * cols), rng);
    std::vector<double> y(static_cast<std::size_t>(rows * cols));
    row("softmax_rows", "768x768",
        time_of([&] { kern::serial::softmax_rows(x.data(), y.data(), rows, cols, 4.0); }),
        time_of([&] { kern::softmax_rows(x.data(), y.data(), rows, cols, 4.0); }));
  }
  {
    const idx h = 64, w = 64, cin = 8;
    auto x = random_vec(static_cast<std::size_t>(h * w * cin), rng);
    std::vector<double> col(static_cast<std::size_t>(h * w * cin * 9));
    row("im2col3x3", "64x64x8",
        time_of([&] { kern::serial::im2col3x3(x.data(), col.data(), h, w, cin); }),
        time_of([&] { kern::im2col3x3(x.data(), col.data(), h, w, cin); }));
  }
  {
    const idx rows = 4096, cols = 16;
    auto x = random_vec(static_cast<std::size_t>(rows * cols), rng);
    auto gamma = random_vec(static_cast<std::size_t>(cols), rng);
    auto beta = random_vec(static_cast<std::size_t>(cols), rng);
    std::vector<double> y(static_cast<std::size_t>(rows * cols));
    std::vector<double> mean(static_cast<std::size_t>(rows)), rstd(static_cast<std::size_t>(rows));
    row("layer_norm_rows", "4096x16",
        time_of([&] {
          kern::serial::layer_norm_rows(x.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                                        rstd.data(), rows, cols, 1e-5);
        }),
        time_of([&] {
          kern::layer_norm_rows(x.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                                rstd.data(), rows, cols, 1e-5);
        }));
  }
  return 0;
}
