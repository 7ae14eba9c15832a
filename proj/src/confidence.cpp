#include "gsplan/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gsplan/errors.hpp"
#include "gsplan/image_io.hpp"

namespace gsplan {

namespace {

constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

double ssim_term(double mu_a, double mu_b, double var_a, double var_b, double cov) {
    return ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
           ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
}

/// Valid-region convolution with a separable symmetric kernel.
std::vector<double> conv_valid(const std::vector<double>& in, int w, int h,
                               const std::vector<double>& kernel, int& out_w, int& out_h) {
    const int k = static_cast<int>(kernel.size());
    out_w = w - k + 1;
    out_h = h - k + 1;
    std::vector<double> rows(static_cast<size_t>(out_w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double acc = 0;
            for (int i = 0; i < k; ++i) acc += kernel[i] * in[static_cast<size_t>(y) * w + x + i];
            rows[static_cast<size_t>(y) * out_w + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(out_w) * out_h, 0.0);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double acc = 0;
            for (int i = 0; i < k; ++i)
                acc += kernel[i] * rows[static_cast<size_t>(y + i) * out_w + x];
            out[static_cast<size_t>(y) * out_w + x] = acc;
        }
    return out;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    const double c = (size - 1) / 2.0;
    double sum = 0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Binomial [1,4,6,4,1]/16 blur with edge replication, then factor-2
/// decimation keeping even samples; output dims ceil(in/2).
Image pyramid_down(const Image& in) {
    static const double kTap[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
    const int w = in.width, h = in.height;
    Image tmp(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -2; i <= 2; ++i)
                acc += kTap[i + 2] * in.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    Image blur(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -2; i <= 2; ++i)
                acc += kTap[i + 2] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            blur.at(x, y) = static_cast<float>(acc);
        }
    Image out((w + 1) / 2, (h + 1) / 2, 1);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(x, y) = blur.at(2 * x, 2 * y);
    return out;
}

/// One (1 - SSIM)/2 value per 8x8 patch (uniform window, partial edge
/// patches included), on single-channel inputs.
Image patch_dissim(const Image& a, const Image& b) {
    constexpr int kPatch = 8;
    const int gw = (a.width + kPatch - 1) / kPatch;
    const int gh = (a.height + kPatch - 1) / kPatch;
    Image out(gw, gh, 1);
    for (int gy = 0; gy < gh; ++gy) {
        for (int gx = 0; gx < gw; ++gx) {
            const int x0 = gx * kPatch, x1 = std::min(a.width, x0 + kPatch);
            const int y0 = gy * kPatch, y1 = std::min(a.height, y0 + kPatch);
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            const double n = static_cast<double>((x1 - x0) * (y1 - y0));
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const double va = a.at(x, y), vb = b.at(x, y);
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            const double mu_a = sa / n, mu_b = sb / n;
            const double var_a = saa / n - mu_a * mu_a;
            const double var_b = sbb / n - mu_b * mu_b;
            const double cov = sab / n - mu_a * mu_b;
            out.at(gx, gy) = static_cast<float>(
                0.5 * (1.0 - ssim_term(mu_a, mu_b, var_a, var_b, cov)));
        }
    }
    return out;
}

}  // namespace

Image BuiltinProxyProvider::distance_map(const Image& rendered, const Image& enhanced,
                                         const std::string&) {
    return builtin_perceptual_proxy(rendered, enhanced);
}

Image ExternalMapProvider::distance_map(const Image&, const Image&, const std::string& tag) {
    const std::string path = dir_ + "/pdist_" + tag + ".pfm";
    Image map = read_pfm(path);
    if (map.channels != 1)
        throw FormatError("external distance map must be single-channel: " + path);
    return map;
}

const View& nearest_training_view(const View& v, const std::vector<View>& training_views) {
    if (training_views.empty())
        throw PreconditionError("nearest_training_view: no training views");
    const Vec3 c = v.camera_center();
    const View* best = &training_views[0];
    double best_d = (training_views[0].camera_center() - c).norm();
    for (size_t i = 1; i < training_views.size(); ++i) {
        const double d = (training_views[i].camera_center() - c).norm();
        if (d < best_d || (d == best_d && training_views[i].id < best->id)) {
            best = &training_views[i];
            best_d = d;
        }
    }
    return *best;
}

double g_iou(const std::vector<uint32_t>& vis_v, const std::vector<uint32_t>& vis_ref) {
    if (vis_ref.empty()) {
        std::fprintf(stderr,
                     "warning: reference view has an empty visible set; g_iou defaults to 0\n");
        return 0.0;
    }
    size_t common = 0;
    auto a = vis_v.begin();
    auto b = vis_ref.begin();
    while (a != vis_v.end() && b != vis_ref.end()) {
        if (*a < *b) ++a;
        else if (*b < *a) ++b;
        else { ++common; ++a; ++b; }
    }
    return static_cast<double>(common) / static_cast<double>(vis_ref.size());
}

double image_confidence(double g) {
    if (!(g >= 0.0 && g <= 1.0))
        throw PreconditionError("image_confidence: g_iou outside [0,1]");
    return 1.0 - g;
}

double d_ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw PreconditionError("d_ssim: image dimensions differ");
    if (a.width < 11 || a.height < 11)
        throw PreconditionError("d_ssim: images must be at least 11x11");
    const std::vector<double> kernel = gaussian_kernel(11, 1.5);

    double ssim_sum = 0;
    const size_t plane = static_cast<size_t>(a.width) * a.height;
    std::vector<double> fa(plane), fb(plane), faa(plane), fbb(plane), fab(plane);
    for (int c = 0; c < a.channels; ++c) {
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                const size_t i = static_cast<size_t>(y) * a.width + x;
                const double va = a.at(x, y, c), vb = b.at(x, y, c);
                fa[i] = va;
                fb[i] = vb;
                faa[i] = va * va;
                fbb[i] = vb * vb;
                fab[i] = va * vb;
            }
        int ow, oh;
        const std::vector<double> mu_a = conv_valid(fa, a.width, a.height, kernel, ow, oh);
        const std::vector<double> mu_b = conv_valid(fb, a.width, a.height, kernel, ow, oh);
        const std::vector<double> m_aa = conv_valid(faa, a.width, a.height, kernel, ow, oh);
        const std::vector<double> m_bb = conv_valid(fbb, a.width, a.height, kernel, ow, oh);
        const std::vector<double> m_ab = conv_valid(fab, a.width, a.height, kernel, ow, oh);
        double acc = 0;
        for (size_t i = 0; i < mu_a.size(); ++i) {
            const double var_a = m_aa[i] - mu_a[i] * mu_a[i];
            const double var_b = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            acc += ssim_term(mu_a[i], mu_b[i], var_a, var_b, cov);
        }
        ssim_sum += acc / static_cast<double>(mu_a.size());
    }
    return 0.5 * (1.0 - ssim_sum / a.channels);
}

Image builtin_perceptual_proxy(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw PreconditionError("builtin_perceptual_proxy: image dimensions differ");
    if (a.width < 16 || a.height < 16)
        throw PreconditionError("builtin_perceptual_proxy: images must be at least 16x16");

    Image ga = to_gray(a);
    Image gb = to_gray(b);
    std::vector<Image> maps;
    for (int level = 0; level < 3; ++level) {
        if (level > 0) {
            ga = pyramid_down(ga);
            gb = pyramid_down(gb);
        }
        maps.push_back(patch_dissim(ga, gb));
    }
    const Image& coarsest = maps.back();
    Image out(coarsest.width, coarsest.height, 1);
    for (const Image& m : maps) {
        const Image r = (m.width == out.width && m.height == out.height)
                            ? m
                            : resize_bilinear(m, out.width, out.height);
        for (size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] += r.pixels[i];
    }
    for (float& v : out.pixels) v /= 3.0f;
    return out;
}

Image pixel_confidence(const Image& rendered, const Image& enhanced,
                       PerceptualDistanceProvider& provider, const std::string& tag) {
    if (!rendered.same_shape(enhanced))
        throw PreconditionError("pixel_confidence: image dimensions differ");
    if (rendered.channels != 3)
        throw PreconditionError("pixel_confidence: expected 3-channel images");

    const Image map = provider.distance_map(rendered, enhanced, tag);
    if (map.channels != 1 || map.width < 1 || map.height < 1 ||
        map.width > rendered.width || map.height > rendered.height)
        throw DataError("pixel_confidence: provider map has invalid dimensions");
    for (float v : map.pixels)
        if (!(v >= 0.0f) || !std::isfinite(v))
            throw DataError("pixel_confidence: provider map has negative or non-finite values");

    Image up = (map.width == rendered.width && map.height == rendered.height)
                   ? map
                   : resize_bilinear(map, rendered.width, rendered.height);
    float max_v = 0;
    for (float v : up.pixels) max_v = std::max(max_v, v);
    if (max_v > 0)
        for (float& v : up.pixels) v = std::clamp(v / max_v, 0.0f, 1.0f);
    return up;
}

LossBreakdown training_loss(const Image& i_t, const Image& i_v) {
    if (!i_t.same_shape(i_v)) throw PreconditionError("training_loss: image dimensions differ");
    double acc = 0;
    for (size_t i = 0; i < i_t.pixels.size(); ++i)
        acc += std::abs(static_cast<double>(i_t.pixels[i]) - i_v.pixels[i]);
    LossBreakdown out;
    out.l1 = acc / static_cast<double>(i_t.pixels.size());
    out.dssim = d_ssim(i_t, i_v);
    out.total = out.l1 + out.dssim;
    return out;
}

LossBreakdown virtual_loss(const Image& i_g, const Image& i_v, double u_img,
                           const Image& u_pixel) {
    if (!i_g.same_shape(i_v)) throw PreconditionError("virtual_loss: image dimensions differ");
    if (u_pixel.channels != 1 || u_pixel.width != i_g.width || u_pixel.height != i_g.height)
        throw PreconditionError("virtual_loss: u_pixel must be a 1-channel image of equal size");
    if (!(u_img >= 0.0 && u_img <= 1.0))
        throw PreconditionError("virtual_loss: u_img outside [0,1]");

    double acc = 0;
    for (int y = 0; y < i_g.height; ++y)
        for (int x = 0; x < i_g.width; ++x) {
            const double w = u_pixel.at(x, y);
            for (int c = 0; c < i_g.channels; ++c)
                acc += w * std::abs(static_cast<double>(i_g.at(x, y, c)) - i_v.at(x, y, c));
        }
    LossBreakdown out;
    out.l1 = acc / static_cast<double>(i_g.pixels.size());
    out.dssim = d_ssim(i_g, i_v);
    out.total = u_img * (out.l1 + out.dssim);
    return out;
}

}  // namespace gsplan
