// Single-scene overfitting of tri-plane + decoder parameters: L2 loss on
// sigmoided, background-blended ray colors, exact reverse-mode gradients
// (loss -> blend -> composite -> decoder -> plane bilinear), Adam updates.
// The deformer is a constant of the forward pass; gradients never flow
// through it.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warpfield/camera.hpp"
#include "warpfield/field.hpp"
#include "warpfield/image.hpp"
#include "warpfield/render.hpp"

namespace warpfield {

struct TrainSample {
    Camera camera;
    PosedPair pair;                        // pose for this frame
    std::optional<Skeleton> skeleton;      // needed only for the skinning backend
    ImageF image;                          // H x W x 3, values in [0,1]
    std::optional<std::vector<uint8_t>> mask;  // foreground = 1
};

struct FitConfig {
    double step_size = 0.002;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int batch_rays = 1024;
    int steps = 1000;
    uint64_t seed = 0;

    // Field shape (defaults match the overfitting setup).
    int plane_resolution = 128;
    int plane_channels = 32;
    int hidden = 64;
    int out_channels = 32;

    // Overfitting uses dense coarse sampling and no importance stage.
    SamplingConfig sampling{128, 0, false, 0.05, {0, 0, 0}};
    DeformMethod method = DeformMethod::SurfaceField;
    int grid_resolution = 16;
};

// Mean squared error over mask-true rays; pred/target are per-ray RGB.
double l2_loss(const std::vector<Vec3>& pred, const std::vector<Vec3>& target,
               const std::vector<uint8_t>& mask);

// ---------------------------------------------------------------------------
// Gradients

struct Gradients {
    std::array<std::vector<double>, 3> planes;
    std::vector<double> w1, b1, w2, b2;

    static Gradients zeros_like(const TriPlane& tri, const Decoder& dec);
    void add(const Gradients& other);
    void scale(double s);
};

// One ray of a training batch with its precomputed sampling interval.
struct RayBatchItem {
    Ray ray;
    RayInterval bounds;
    const Deformer* deformer = nullptr;
    Vec3 target;
};

// Renders every ray (coarse-only stratified sampling; jitter streams derive
// from (seed, ray index)) and accumulates d(mean squared error)/d(params).
// Ray evaluation runs on a fixed number of accumulation shards so the result
// does not depend on the thread count. Returns the batch loss.
double fit_forward_backward(const std::vector<RayBatchItem>& batch, const TriPlane& tri,
                            const Decoder& dec, const SamplingConfig& cfg, uint64_t seed,
                            Gradients& grads);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
    std::array<std::vector<double>, 3> m_planes, v_planes;
    std::vector<double> m_w1, v_w1, m_b1, v_b1, m_w2, v_w2, m_b2, v_b2;
    int64_t step = 0;

    static AdamState zeros_like(const TriPlane& tri, const Decoder& dec);
};

// Standard Adam with bias correction.
void adam_step(TriPlane& tri, Decoder& dec, const Gradients& grads, AdamState& state,
               const FitConfig& cfg);

// ---------------------------------------------------------------------------
// Training loop

struct FitResult {
    TriPlane planes;
    Decoder decoder;
    AdamState adam;
    std::vector<double> loss_curve;      // pre-update loss per step
    SceneNormalization normalization;    // shared cube mapping for rendering
};

// Shared normalization for a set of poses: union of the expanded canonical
// and deformed bounding boxes, mapped into [-0.9, 0.9]^3.
SceneNormalization scene_normalization(const std::vector<const PosedPair*>& pairs,
                                       double growth);

// Per step: draw batch_rays pixels without replacement from all samples,
// render them with the frame's deformer, backprop, Adam update.
// Deterministic in cfg.seed.
FitResult fit_scene(const std::vector<TrainSample>& samples, const FitConfig& cfg);

// Checkpoint = TPLF field followed by "ADAM", u64 LE step and the first/second
// moments as f64 LE.
void save_checkpoint(const std::string& path, const TriPlane& tri, const Decoder& dec,
                     const AdamState& state);
void load_checkpoint(const std::string& path, TriPlane& tri, Decoder& dec, AdamState& state);

}  // namespace warpfield
