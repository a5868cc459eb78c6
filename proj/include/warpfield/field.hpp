// Tri-plane radiance field: three axis-aligned N x N x C feature planes over
// the canonical cube [-1,1]^3 plus a one-hidden-layer decoder producing
// (density, feature). Parameters are stored as f32 (matching the TPLF file
// format) and promoted to f64 for all arithmetic.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "warpfield/deform.hpp"
#include "warpfield/geom.hpp"

namespace warpfield {

// Bilinear footprint of a [-1,1]^2 query on an N x N grid with texel centers
// at -1 + (2i+1)/N. Out-of-range coordinates clamp. `texel[k]` indexes the
// texel (not yet scaled by the channel count).
struct BilinearFootprint {
    int32_t texel[4];
    double weight[4];
};

BilinearFootprint plane_footprint(int n, double u, double v);

struct TriPlane {
    int n = 128;
    int channels = 32;
    // xy, yz, xz. Texel (i,j) of channel c lives at ((j*n)+i)*channels + c;
    // i runs along the first projected coordinate.
    std::array<std::vector<float>, 3> planes;

    static TriPlane zeros(int n, int channels);
    static TriPlane random(int n, int channels, double amplitude, uint64_t seed);
    size_t plane_size() const { return static_cast<size_t>(n) * n * channels; }
};

// Bilinear sample of one plane at (u,v) in [-1,1]^2; writes `channels` values.
void sample_plane(const std::vector<float>& plane, int n, int channels, double u, double v,
                  double* out);

// Sum of the three plane samples at projections (x,y), (y,z), (x,z).
std::vector<double> aggregate(const Vec3& x, const TriPlane& tri);
void aggregate_into(const Vec3& x, const TriPlane& tri, double* out);

struct Decoder {
    int in_channels = 32;
    int hidden = 64;
    int out_channels = 32;  // feature channels, on top of the density channel
    std::vector<float> w1;  // in_channels x hidden, index c*hidden + h
    std::vector<float> b1;  // hidden
    std::vector<float> w2;  // hidden x (1 + out_channels), index h*(1+out) + k
    std::vector<float> b2;  // 1 + out_channels

    // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], deterministic in seed.
    static Decoder init(int in_channels, int hidden, int out_channels, uint64_t seed);
    size_t raw_size() const { return static_cast<size_t>(1) + out_channels; }
};

struct DecodeResult {
    double sigma = 0;                // softplus of raw channel 0, always >= 0
    std::vector<double> features;    // raw channels 1..out_channels
};

DecodeResult decode(const std::vector<double>& feature, const Decoder& dec);

// Workspace variant for hot loops: hidden (H) and raw (1+C_out) buffers are
// caller-provided; raw holds pre-activation values, sigma = softplus(raw[0]).
void decode_raw(const Decoder& dec, const double* feature, double* hidden, double* raw);

double softplus(double x);
double sigmoid(double x);

// Density and feature of the deformed field at a target-space point (Eq. of
// the tri-plane pipeline: decode(aggregate(D(x)))).
DecodeResult field_at(const Vec3& x_target, const TriPlane& tri, const Decoder& dec,
                      const Deformer& deformer);

// ---------------------------------------------------------------------------
// World-to-cube normalization (SceneNormalization lives in geom.hpp)

TriMesh normalized(const TriMesh& mesh, const SceneNormalization& norm);
PosedPair normalized(const PosedPair& pair, const SceneNormalization& norm);
Skeleton normalized(const Skeleton& skeleton, const SceneNormalization& norm);

// ---------------------------------------------------------------------------
// TPLF field file: magic "TPLF", u32 LE N, C, H, C_out, then the xy/yz/xz
// planes and decoder weights (w1, b1, w2, b2), all f32 LE.

void save_field(const TriPlane& tri, const Decoder& dec, const std::string& path);
void load_field(const std::string& path, TriPlane& tri, Decoder& dec);

}  // namespace warpfield
