#pragma once

// Independent oracles used to pin expected values. Everything here is
// deliberately naive (direct loops, finite differences, long-run descent)
// and stays independent of the library implementation paths it checks.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "facet/rng.hpp"
#include "facet/tensor.hpp"

namespace oracle {

using facet::ImageTensor;

inline ImageTensor random_image(int h, int w, int c, facet::Rng& rng, double lo = -1.0,
                                double hi = 1.0) {
    ImageTensor img(h, w, c);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(lo, hi));
    return img;
}

// central finite differences of a scalar function of the image, eps = 1e-3
inline ImageTensor finite_diff(const std::function<double(const ImageTensor&)>& f,
                               const ImageTensor& x, double eps = 1e-3) {
    ImageTensor grad(x.h, x.w, x.c);
    ImageTensor probe = x;
    for (size_t i = 0; i < x.size(); ++i) {
        const float orig = probe.data[i];
        probe.data[i] = orig + static_cast<float>(eps);
        const double up = f(probe);
        probe.data[i] = orig - static_cast<float>(eps);
        const double down = f(probe);
        probe.data[i] = orig;
        grad.data[i] = static_cast<float>((up - down) / (2.0 * eps));
    }
    return grad;
}

// max |a - f| / max(||a||_inf, ||f||_inf, floor)
inline double relative_grad_error(const ImageTensor& analytic, const ImageTensor& fd,
                                  double floor = 1e-8) {
    double max_diff = 0.0, scale = floor;
    for (size_t i = 0; i < analytic.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(double(analytic.data[i]) - fd.data[i]));
        scale = std::max({scale, std::abs(double(analytic.data[i])), std::abs(double(fd.data[i]))});
    }
    return max_diff / scale;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

// direct double-loop isotropic TV (forward differences, replicate boundary)
inline double tv_direct(const ImageTensor& img) {
    double total = 0.0;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                const double dy =
                    (y + 1 < img.h ? img.at(y + 1, x, ch) : img.at(y, x, ch)) - img.at(y, x, ch);
                const double dx =
                    (x + 1 < img.w ? img.at(y, x + 1, ch) : img.at(y, x, ch)) - img.at(y, x, ch);
                total += std::sqrt(dx * dx + dy * dy);
            }
    return total;
}

// TV(u) + (lambda/2) ||u - f||^2, the objective tv_denoise approximately
// minimizes
inline double tv_objective(const ImageTensor& u, const ImageTensor& f, double lambda) {
    double fidelity = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        const double d = double(u.data[i]) - f.data[i];
        fidelity += d * d;
    }
    return tv_direct(u) + 0.5 * lambda * fidelity;
}

// Long-run descent on the eps-smoothed objective; the independent route to
// the TV proximal value. Uses backtracking on the smoothed objective and a
// final evaluation of the true objective.
inline ImageTensor tv_prox_descent(const ImageTensor& f, double lambda, int iters = 20000,
                                   double eps = 1e-8) {
    auto smoothed = [&](const ImageTensor& u) {
        double total = 0.0;
        for (int y = 0; y < u.h; ++y)
            for (int x = 0; x < u.w; ++x)
                for (int ch = 0; ch < u.c; ++ch) {
                    const double dy =
                        (y + 1 < u.h ? u.at(y + 1, x, ch) : u.at(y, x, ch)) - u.at(y, x, ch);
                    const double dx =
                        (x + 1 < u.w ? u.at(y, x + 1, ch) : u.at(y, x, ch)) - u.at(y, x, ch);
                    total += std::sqrt(dx * dx + dy * dy + eps);
                }
        for (size_t i = 0; i < u.size(); ++i) {
            const double d = double(u.data[i]) - f.data[i];
            total += 0.5 * lambda * d * d;
        }
        return total;
    };

    // analytic gradient of the smoothed objective
    auto grad = [&](const ImageTensor& u) {
        ImageTensor g(u.h, u.w, u.c);
        for (int y = 0; y < u.h; ++y)
            for (int x = 0; x < u.w; ++x)
                for (int ch = 0; ch < u.c; ++ch) {
                    const double dy =
                        (y + 1 < u.h ? u.at(y + 1, x, ch) : u.at(y, x, ch)) - u.at(y, x, ch);
                    const double dx =
                        (x + 1 < u.w ? u.at(y, x + 1, ch) : u.at(y, x, ch)) - u.at(y, x, ch);
                    const double s = std::sqrt(dx * dx + dy * dy + eps);
                    g.at(y, x, ch) += static_cast<float>(-(dx + dy) / s);
                    if (y + 1 < u.h) g.at(y + 1, x, ch) += static_cast<float>(dy / s);
                    if (x + 1 < u.w) g.at(y, x + 1, ch) += static_cast<float>(dx / s);
                }
        for (size_t i = 0; i < u.size(); ++i)
            g.data[i] += static_cast<float>(lambda * (double(u.data[i]) - f.data[i]));
        return g;
    };

    ImageTensor u = f;
    double step = 1.0 / (8.0 + lambda);
    double cur = smoothed(u);
    for (int it = 0; it < iters; ++it) {
        const ImageTensor g = grad(u);
        ImageTensor trial = u;
        double cand = cur;
        double s = step;
        for (int bt = 0; bt < 30; ++bt) {
            for (size_t i = 0; i < u.size(); ++i)
                trial.data[i] = u.data[i] - static_cast<float>(s * g.data[i]);
            cand = smoothed(trial);
            if (cand < cur) break;
            s *= 0.5;
        }
        if (cand >= cur) break;  // no further progress
        u = trial;
        cur = cand;
        step = std::min(s * 1.3, 1.0);
    }
    return u;
}

// closed-form normalized 2-D Gaussian on a (2r+1)^2 support
inline std::vector<double> gaussian2d_support(double sigma, int radius) {
    const int k = 2 * radius + 1;
    std::vector<double> g(static_cast<size_t>(k) * k);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
            g[(dy + radius) * k + (dx + radius)] = v;
            sum += v;
        }
    for (auto& v : g) v /= sum;
    return g;
}

// Shannon entropy (nats) of one probability row, skipping zeros
inline double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0) h -= v * std::log(v);
    return h;
}

// minimal XML well-formedness check: prolog, balanced tags, quoted attrs
inline bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    size_t i = 0;
    bool seen_root = false;
    auto skip_ws = [&](size_t& p) {
        while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
    };
    while (i < text.size()) {
        if (text[i] != '<') {
            if (stack.empty() && !std::isspace(static_cast<unsigned char>(text[i]))) return false;
            ++i;
            continue;
        }
        if (text.compare(i, 2, "<?") == 0) {
            const size_t end = text.find("?>", i);
            if (end == std::string::npos) return false;
            i = end + 2;
            continue;
        }
        if (text.compare(i, 4, "<!--") == 0) {
            const size_t end = text.find("-->", i);
            if (end == std::string::npos) return false;
            i = end + 3;
            continue;
        }
        const size_t close = text.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = text.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) return false;
        if (tag[0] == '/') {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        if (self_closing) tag.pop_back();
        size_t p = 0;
        while (p < tag.size() && !std::isspace(static_cast<unsigned char>(tag[p]))) ++p;
        const std::string name = tag.substr(0, p);
        if (name.empty()) return false;
        // attributes must be name="value"
        while (p < tag.size()) {
            skip_ws(p);
            if (p >= tag.size()) break;
            const size_t eq = tag.find('=', p);
            if (eq == std::string::npos) return false;
            p = eq + 1;
            if (p >= tag.size() || tag[p] != '"') return false;
            const size_t endq = tag.find('"', p + 1);
            if (endq == std::string::npos) return false;
            p = endq + 1;
        }
        if (stack.empty() && seen_root) return false;  // second root
        if (!self_closing) stack.push_back(name);
        seen_root = true;
    }
    return stack.empty() && seen_root;
}

}  // namespace oracle
