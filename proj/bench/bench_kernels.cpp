// Compares the OpenMP kernels against the serial reference implementation:
// wall time, speedup, and the largest element difference on shared inputs.
#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "facet/kernels.hpp"
#include "facet/priors.hpp"
#include "facet/ref_kernels.hpp"
#include "facet/rng.hpp"

using namespace facet;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
    return m;
}

ImageTensor random_image(int h, int w, int c, Rng& rng) {
    ImageTensor img(h, w, c);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return img;
}

void report(const char* name, double serial_ms, double omp_ms, double diff) {
    std::printf("%-22s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   max|diff| %.3g\n", name,
                serial_ms, omp_ms, serial_ms / omp_ms, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; comparing two serial paths\n");
#endif

    Rng rng(42);

    {
        const ImageTensor input = random_image(64, 64, 8, rng);
        Tensor4 kernels(5, 5, 8, 16);
        for (auto& v : kernels.data) v = static_cast<float>(rng.uniform(-0.2, 0.2));
        ImageTensor out_ref, out_omp;
        const double t_ref = time_ms([&] { out_ref = ref::conv2d(input, kernels, 1, 2); }, 3);
        const double t_omp = time_ms([&] { out_omp = conv2d(input, kernels, 1, 2); }, 3);
        report("conv2d fwd 64x64x8", t_ref, t_omp, max_abs_diff(out_ref.data, out_omp.data));

        const ImageTensor upstream = random_image(out_ref.h, out_ref.w, out_ref.c, rng);
        std::pair<ImageTensor, Tensor4> g_ref, g_omp;
        const double tg_ref =
            time_ms([&] { g_ref = ref::conv2d_grads(input, kernels, upstream, 1, 2); }, 3);
        const double tg_omp =
            time_ms([&] { g_omp = conv2d_grads(input, kernels, upstream, 1, 2); }, 3);
        report("conv2d grads", tg_ref, tg_omp,
               std::max(max_abs_diff(g_ref.first.data, g_omp.first.data),
                        max_abs_diff(g_ref.second.data, g_omp.second.data)));
    }

    {
        const ImageTensor img = random_image(256, 256, 3, rng);
        ImageTensor out_ref, out_omp;
        const double t_ref = time_ms([&] { out_ref = ref::gaussian_blur(img, 2.0); }, 3);
        const double t_omp = time_ms([&] { out_omp = gaussian_blur(img, 2.0); }, 3);
        report("gaussian_blur 256^2", t_ref, t_omp, max_abs_diff(out_ref.data, out_omp.data));
    }

    {
        const ImageTensor img = random_image(96, 96, 3, rng);
        ImageTensor out_ref, out_omp;
        const double t_ref = time_ms([&] { out_ref = ref::resize_bilinear(img, 160, 160); }, 10);
        const double t_omp = time_ms([&] { out_omp = resize_bilinear(img, 160, 160); }, 10);
        report("resize_bilinear", t_ref, t_omp, max_abs_diff(out_ref.data, out_omp.data));
    }

    {
        const ImageTensor img = random_image(128, 128, 3, rng);
        double v_ref = 0, v_omp = 0;
        const double t_ref = time_ms([&] { v_ref = ref::tv_norm(img); }, 10);
        const double t_omp = time_ms([&] { v_omp = tv_norm(img); }, 10);
        report("tv_norm 128^2", t_ref, t_omp, std::abs(v_ref - v_omp));
    }

    {
        // tv_denoise has no serial twin; report the parallel time for context
        const ImageTensor img = random_image(64, 64, 3, rng);
        const double t = time_ms([&] { (void)tv_denoise(img, 2.0, 100); }, 2);
        std::printf("%-22s                         omp %9.3f ms\n", "tv_denoise 64^2 x100", t);
    }

    return 0;
}
