#include "facet/priors.hpp"

#include <cmath>

namespace facet {

void JitterConfig::validate() const {
    if (window_h < 1 || window_w < 1 || canvas_h < 1 || canvas_w < 1)
        throw ConfigError("jitter: canvas and window extents must be >= 1");
    if (window_h > canvas_h || window_w > canvas_w)
        throw ConfigError("jitter: window " + Shape{{window_h, window_w}}.str() +
                          " does not fit canvas " + Shape{{canvas_h, canvas_w}}.str());
    if (center_box && *center_box < 0)
        throw ConfigError("jitter: center_box must be >= 0");
}

void RegularizerConfig::validate() const {
    if (tv_lambda < 0) throw ConfigError("tv_lambda must be >= 0");
    if (tv_lambda > 0 && tv_inner_iters < 1)
        throw ConfigError("tv_inner_iters must be >= 1 when TV is enabled");
    if (blur_sigma_end > blur_sigma_start)
        throw ConfigError("blur_sigma_end must be <= blur_sigma_start");
    if (blur_sigma_start < 0) throw ConfigError("blur sigmas must be >= 0");
    if (blur_every < 0) throw ConfigError("blur_every must be >= 0");
    if (alpha < 1) throw ConfigError("alpha must be >= 1");
    if (alpha_weight < 0) throw ConfigError("alpha_weight must be >= 0");
    if (jitter) jitter->validate();
}

double tv_norm(const ImageTensor& img) {
    // per-row partial sums combined in row order: deterministic under OpenMP
    std::vector<double> row_sums(img.h, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.h; ++y) {
        double acc = 0.0;
        const int yn = std::min(y + 1, img.h - 1);
        for (int x = 0; x < img.w; ++x) {
            const int xn = std::min(x + 1, img.w - 1);
            for (int ch = 0; ch < img.c; ++ch) {
                const double dy = img.at(yn, x, ch) - img.at(y, x, ch);
                const double dx = img.at(y, xn, ch) - img.at(y, x, ch);
                acc += std::sqrt(dx * dx + dy * dy);
            }
        }
        row_sums[y] = acc;
    }
    double total = 0.0;
    for (double v : row_sums) total += v;
    return total;
}

namespace {

// One split Bregman channel. u, d = (dx, dy), b = (bx, by) are h*w doubles.
// Forward differences with replicate boundary, so gx = 0 on the last column
// and gy = 0 on the last row.
struct BregmanChannel {
    int h, w;
    std::vector<double> f, u, dx, dy, bx, by;

    BregmanChannel(const ImageTensor& img, int ch)
        : h(img.h), w(img.w), f(static_cast<size_t>(h) * w), u(f.size()),
          dx(f.size()), dy(f.size()), bx(f.size()), by(f.size()) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) f[idx(y, x)] = img.at(y, x, ch);
        u = f;
    }

    size_t idx(int y, int x) const { return static_cast<size_t>(y) * w + x; }

    // (lambda + mu*c)*u = lambda*f + mu*sum(nbr) - mu*G with
    // G = grad^T (b - d); red-black sweeps keep the update parallel and
    // deterministic.
    void solve_u(double lambda, double mu) {
        for (int color = 0; color < 2; ++color) {
#pragma omp parallel for schedule(static)
            for (int y = 0; y < h; ++y) {
                for (int x = (y + color) & 1; x < w; x += 2) {
                    double nbr = 0.0;
                    int cnt = 0;
                    if (x + 1 < w) { nbr += u[idx(y, x + 1)]; ++cnt; }
                    if (x > 0) { nbr += u[idx(y, x - 1)]; ++cnt; }
                    if (y + 1 < h) { nbr += u[idx(y + 1, x)]; ++cnt; }
                    if (y > 0) { nbr += u[idx(y - 1, x)]; ++cnt; }
                    double g = 0.0;
                    if (x > 0) g += bx[idx(y, x - 1)] - dx[idx(y, x - 1)];
                    if (x + 1 < w) g -= bx[idx(y, x)] - dx[idx(y, x)];
                    if (y > 0) g += by[idx(y - 1, x)] - dy[idx(y - 1, x)];
                    if (y + 1 < h) g -= by[idx(y, x)] - dy[idx(y, x)];
                    u[idx(y, x)] = (lambda * f[idx(y, x)] + mu * (nbr - g)) / (lambda + mu * cnt);
                }
            }
        }
    }

    // isotropic shrink of (grad u + b) by 1/mu, then Bregman update
    void shrink_and_update(double mu) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double gx = x + 1 < w ? u[idx(y, x + 1)] - u[idx(y, x)] : 0.0;
                const double gy = y + 1 < h ? u[idx(y + 1, x)] - u[idx(y, x)] : 0.0;
                const double sx = gx + bx[idx(y, x)];
                const double sy = gy + by[idx(y, x)];
                const double s = std::sqrt(sx * sx + sy * sy);
                double ndx = 0.0, ndy = 0.0;
                if (s > 0.0) {
                    const double t = std::max(s - 1.0 / mu, 0.0) / s;
                    ndx = t * sx;
                    ndy = t * sy;
                }
                dx[idx(y, x)] = ndx;
                dy[idx(y, x)] = ndy;
                bx[idx(y, x)] += gx - ndx;
                by[idx(y, x)] += gy - ndy;
            }
        }
    }
};

}  // namespace

ImageTensor tv_denoise(const ImageTensor& img, double lambda, int iters) {
    if (lambda <= 0) throw ConfigError("tv_denoise: lambda must be > 0");
    if (iters < 1) throw ConfigError("tv_denoise: iters must be >= 1");
    const double mu = 2.0 * lambda;
    ImageTensor out(img.h, img.w, img.c);
    for (int ch = 0; ch < img.c; ++ch) {
        BregmanChannel bc(img, ch);
        for (int it = 0; it < iters; ++it) {
            bc.solve_u(lambda, mu);
            bc.shrink_and_update(mu);
        }
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                out.at(y, x, ch) = static_cast<float>(bc.u[bc.idx(y, x)]);
    }
    return out;
}

ImageTensor alpha_norm_grad(const ImageTensor& img, double alpha, double weight, double center) {
    if (alpha < 1) throw ConfigError("alpha_norm_grad: alpha must be >= 1");
    const double n = static_cast<double>(img.size());
    ImageTensor grad(img.h, img.w, img.c);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                const double d = img.at(y, x, ch) - center;
                double g = 0.0;
                if (d != 0.0)
                    g = weight * alpha / n * std::pow(std::abs(d), alpha - 1.0) * (d > 0 ? 1.0 : -1.0);
                grad.at(y, x, ch) = static_cast<float>(g);
            }
    return grad;
}

namespace {

// integer offsets r with |r + win/2 - canvas/2| <= box, clamped to [0, slack]
std::pair<int, int> offset_range(int canvas, int window, std::optional<double> box) {
    const int slack = canvas - window;
    if (!box) return {0, slack};
    const double mid = slack / 2.0;
    int lo = static_cast<int>(std::ceil(mid - *box));
    int hi = static_cast<int>(std::floor(mid + *box));
    lo = std::max(lo, 0);
    hi = std::min(hi, slack);
    if (lo > hi) {
        const int c = static_cast<int>(std::llround(mid));
        return {c, c};
    }
    return {lo, hi};
}

}  // namespace

std::pair<int, int> jitter_offset(const JitterConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto [rlo, rhi] = offset_range(cfg.canvas_h, cfg.window_h, cfg.center_box);
    const auto [clo, chi] = offset_range(cfg.canvas_w, cfg.window_w, cfg.center_box);
    const int r = rlo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(rhi - rlo + 1)));
    const int c = clo + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(chi - clo + 1)));
    return {r, c};
}

double blur_sigma_at(const RegularizerConfig& cfg, int iter, int total_iters) {
    if (iter < 0 || iter >= total_iters)
        throw ConfigError("blur_sigma_at: iter out of range");
    if (total_iters == 1) return cfg.blur_sigma_start;
    const double t = static_cast<double>(iter) / (total_iters - 1);
    return cfg.blur_sigma_start + t * (cfg.blur_sigma_end - cfg.blur_sigma_start);
}

}  // namespace facet
