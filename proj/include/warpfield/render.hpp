// Volumetric rendering of the deformed field: rays are bounded by the
// expanded deformed template mesh, sampled coarse (stratified) and optionally
// fine (inverse-CDF importance over the coarse weights), and composited with
// the standard quadrature alpha = 1 - exp(-sigma * delta).
#pragma once

#include <cstdint>
#include <vector>

#include "warpfield/bvh.hpp"
#include "warpfield/camera.hpp"
#include "warpfield/field.hpp"
#include "warpfield/image.hpp"
#include "warpfield/rng.hpp"

namespace warpfield {

struct SamplingConfig {
    int n_coarse = 64;
    int n_fine = 64;
    bool jitter = false;
    double growth = 0.05;            // expansion offset for the sampling hull
    Vec3 background{0, 0, 0};        // constant background color
};

struct RenderedImage {
    ImageF features;  // H x W x C_out
    ImageF alpha;     // H x W x 1
    ImageU8 rgb;      // sigmoid of the first 3 feature channels over background
};

// First/last intersection of the ray with the expanded mesh; a valid
// interval needs at least two hits.
RayInterval ray_mesh_bounds(const Ray& ray, const Bvh& expanded_bvh);

// n depths with bin i covering [t_n + i*step, t_n + (i+1)*step]; bin centers
// without jitter, uniform within each bin with jitter. Strictly increasing.
std::vector<double> stratified_samples(double t_near, double t_far, int n, bool jitter,
                                       Rng& rng);

// Inverse-CDF draws from the piecewise-constant density over bins. Falls
// back to stratified sampling when every weight is zero. Returns sorted
// depths.
std::vector<double> importance_samples(const std::vector<double>& bin_edges,
                                       const std::vector<double>& weights, int n_fine, Rng& rng);

struct CompositeResult {
    std::vector<double> features;  // integrated feature vector
    double alpha = 0;
    double expected_depth = 0;
    std::vector<double> weights;   // per-sample T_i * alpha_i
};

// depths strictly increasing, sigmas >= 0; features[i] has `channels`
// entries. The last sample gets delta = 0 and contributes nothing.
CompositeResult composite(const std::vector<double>& depths, const std::vector<double>& sigmas,
                          const std::vector<double>& features, int channels);

// fg*alpha + bg*(1-alpha), per channel.
inline double alpha_over(double fg, double alpha, double bg) {
    return fg * alpha + bg * (1.0 - alpha);
}

// Full per-pixel pipeline. `pair` and `cam` must already be normalized into
// the canonical cube together with whatever the deformer was built from.
// Deterministic in `seed`, including under parallel execution.
RenderedImage render_image(const TriPlane& tri, const Decoder& dec, const Deformer& deformer,
                           const PosedPair& pair, const Camera& cam, const SamplingConfig& cfg,
                           uint64_t seed);

// Single-ray evaluation against a prebuilt sampling hull; used by both
// render_image and the fitting loop.
struct RayRender {
    std::vector<double> features;  // C_out
    double alpha = 0;
    double depth = 0;
    bool hit = false;
};
RayRender render_ray(const Ray& ray, const RayInterval& bounds, const TriPlane& tri,
                     const Decoder& dec, const Deformer& deformer, const SamplingConfig& cfg,
                     Rng rng);

}  // namespace warpfield
