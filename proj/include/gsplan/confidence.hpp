#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gsplan/image.hpp"
#include "gsplan/scene.hpp"

namespace gsplan {

struct ConfidenceReport {
    double u_img = 0;
    Image u_pixel;
    std::string ref_view_id;
    double g_iou = 0;
};

/// Produces a low-resolution non-negative distance map for an image pair.
/// `tag` identifies the frame ("00_003") so file-backed providers can locate
/// precomputed maps; the built-in proxy ignores it.
class PerceptualDistanceProvider {
public:
    virtual ~PerceptualDistanceProvider() = default;
    virtual Image distance_map(const Image& rendered, const Image& enhanced,
                               const std::string& tag) = 0;
};

/// SSIM-pyramid stand-in for a learned perceptual metric.
class BuiltinProxyProvider : public PerceptualDistanceProvider {
public:
    Image distance_map(const Image& rendered, const Image& enhanced,
                       const std::string& tag) override;
};

/// Reads precomputed maps from `dir`/pdist_{tag}.pfm.
class ExternalMapProvider : public PerceptualDistanceProvider {
public:
    explicit ExternalMapProvider(std::string dir) : dir_(std::move(dir)) {}
    Image distance_map(const Image& rendered, const Image& enhanced,
                       const std::string& tag) override;

private:
    std::string dir_;
};

/// Training view with the closest camera center; ties go to the smaller
/// view id.
const View& nearest_training_view(const View& v, const std::vector<View>& training_views);

/// |vis_v intersect vis_ref| / |vis_ref|. Both inputs sorted ascending.
/// An empty reference set yields 0 (degenerate reference constrains nothing).
double g_iou(const std::vector<uint32_t>& vis_v, const std::vector<uint32_t>& vis_ref);

/// U_img = 1 - G-IOU.
double image_confidence(double g);

/// Provider map bilinearly upsampled to the rendered resolution, divided by
/// its maximum (all-zero stays all-zero), clamped to [0,1].
Image pixel_confidence(const Image& rendered, const Image& enhanced,
                       PerceptualDistanceProvider& provider, const std::string& tag = "");

/// 3-level pyramid of per-patch (1 - SSIM)/2, levels averaged at the
/// coarsest patch grid. Inputs must be at least 16x16.
Image builtin_perceptual_proxy(const Image& a, const Image& b);

/// (1 - mean SSIM)/2, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
/// dynamic range 1. Valid-region convolution; per-channel SSIM averaged.
double d_ssim(const Image& a, const Image& b);

struct LossBreakdown {
    double l1 = 0;
    double dssim = 0;
    double total = 0;
};

/// mean |i_t - i_v| + D-SSIM.
LossBreakdown training_loss(const Image& i_t, const Image& i_v);

/// u_img * ( mean(|i_g - i_v| .* u_pixel) + D-SSIM(i_g, i_v) ).
/// u_pixel is single-channel and broadcasts across color channels.
LossBreakdown virtual_loss(const Image& i_g, const Image& i_v, double u_img,
                           const Image& u_pixel);

}  // namespace gsplan
