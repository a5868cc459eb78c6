#include "warpfield/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "warpfield/rng.hpp"

namespace warpfield {

BilinearFootprint plane_footprint(int n, double u, double v) {
    // Texel i covers center -1 + (2i+1)/n; continuous texel coordinate
    // s = (u+1)/2 * n - 1/2, clamped so the footprint stays in range.
    auto axis = [n](double t) {
        double s = (t + 1.0) * 0.5 * n - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(n - 1));
        int i0 = std::min(static_cast<int>(s), n - 2 >= 0 ? n - 2 : 0);
        return std::pair<int, double>{i0, s - i0};
    };
    auto [i0, fu] = axis(u);
    auto [j0, fv] = axis(v);
    int i1 = std::min(i0 + 1, n - 1), j1 = std::min(j0 + 1, n - 1);

    BilinearFootprint f;
    f.texel[0] = j0 * n + i0;
    f.texel[1] = j0 * n + i1;
    f.texel[2] = j1 * n + i0;
    f.texel[3] = j1 * n + i1;
    f.weight[0] = (1 - fu) * (1 - fv);
    f.weight[1] = fu * (1 - fv);
    f.weight[2] = (1 - fu) * fv;
    f.weight[3] = fu * fv;
    return f;
}

TriPlane TriPlane::zeros(int n, int channels) {
    TriPlane t;
    t.n = n;
    t.channels = channels;
    for (auto& p : t.planes) p.assign(t.plane_size(), 0.0f);
    return t;
}

TriPlane TriPlane::random(int n, int channels, double amplitude, uint64_t seed) {
    TriPlane t = zeros(n, channels);
    for (int p = 0; p < 3; ++p) {
        Rng rng(seed, 0x7472u, p);
        for (auto& v : t.planes[p])
            v = static_cast<float>(rng.uniform(-amplitude, amplitude));
    }
    return t;
}

void sample_plane(const std::vector<float>& plane, int n, int channels, double u, double v,
                  double* out) {
    const BilinearFootprint f = plane_footprint(n, u, v);
    for (int c = 0; c < channels; ++c) out[c] = 0.0;
    for (int k = 0; k < 4; ++k) {
        const float* texel = plane.data() + static_cast<size_t>(f.texel[k]) * channels;
        const double w = f.weight[k];
        for (int c = 0; c < channels; ++c) out[c] += w * texel[c];
    }
}

void aggregate_into(const Vec3& x, const TriPlane& tri, double* out) {
    const int c = tri.channels;
    std::vector<double> tmp(c);
    sample_plane(tri.planes[0], tri.n, c, x.x, x.y, out);
    sample_plane(tri.planes[1], tri.n, c, x.y, x.z, tmp.data());
    for (int i = 0; i < c; ++i) out[i] += tmp[i];
    sample_plane(tri.planes[2], tri.n, c, x.x, x.z, tmp.data());
    for (int i = 0; i < c; ++i) out[i] += tmp[i];
}

std::vector<double> aggregate(const Vec3& x, const TriPlane& tri) {
    std::vector<double> out(tri.channels);
    aggregate_into(x, tri, out.data());
    return out;
}

Decoder Decoder::init(int in_channels, int hidden, int out_channels, uint64_t seed) {
    Decoder d;
    d.in_channels = in_channels;
    d.hidden = hidden;
    d.out_channels = out_channels;
    auto fill = [&](std::vector<float>& w, size_t n, double bound, uint64_t stream) {
        Rng rng(seed, 0xdecu, stream);
        w.resize(n);
        for (auto& v : w) v = static_cast<float>(rng.uniform(-bound, bound));
    };
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(in_channels));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill(d.w1, static_cast<size_t>(in_channels) * hidden, bound1, 0);
    fill(d.b1, hidden, bound1, 1);
    fill(d.w2, static_cast<size_t>(hidden) * (1 + out_channels), bound2, 2);
    fill(d.b2, 1 + out_channels, bound2, 3);
    return d;
}

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void decode_raw(const Decoder& dec, const double* feature, double* hidden, double* raw) {
    const int h_n = dec.hidden, c_n = dec.in_channels, r_n = 1 + dec.out_channels;
    for (int h = 0; h < h_n; ++h) hidden[h] = dec.b1[h];
    for (int c = 0; c < c_n; ++c) {
        const double f = feature[c];
        const float* row = dec.w1.data() + static_cast<size_t>(c) * h_n;
        for (int h = 0; h < h_n; ++h) hidden[h] += f * row[h];
    }
    for (int h = 0; h < h_n; ++h) hidden[h] = hidden[h] > 0 ? hidden[h] : 0.0;

    for (int k = 0; k < r_n; ++k) raw[k] = dec.b2[k];
    for (int h = 0; h < h_n; ++h) {
        const double a = hidden[h];
        if (a == 0.0) continue;
        const float* row = dec.w2.data() + static_cast<size_t>(h) * r_n;
        for (int k = 0; k < r_n; ++k) raw[k] += a * row[k];
    }
}

DecodeResult decode(const std::vector<double>& feature, const Decoder& dec) {
    if (static_cast<int>(feature.size()) != dec.in_channels)
        throw std::runtime_error("decode: feature size " + std::to_string(feature.size()) +
                                 " != decoder input " + std::to_string(dec.in_channels));
    std::vector<double> hidden(dec.hidden), raw(dec.raw_size());
    decode_raw(dec, feature.data(), hidden.data(), raw.data());
    DecodeResult r;
    r.sigma = softplus(raw[0]);
    r.features.assign(raw.begin() + 1, raw.end());
    return r;
}

DecodeResult field_at(const Vec3& x_target, const TriPlane& tri, const Decoder& dec,
                      const Deformer& deformer) {
    return decode(aggregate(deformer(x_target), tri), dec);
}

// ---------------------------------------------------------------------------

TriMesh normalized(const TriMesh& mesh, const SceneNormalization& norm) {
    TriMesh out = mesh;
    for (Vec3& v : out.vertices) v = norm.apply(v);
    return out;
}

PosedPair normalized(const PosedPair& pair, const SceneNormalization& norm) {
    return {normalized(pair.canonical, norm), normalized(pair.deformed, norm)};
}

Skeleton normalized(const Skeleton& skeleton, const SceneNormalization& norm) {
    // y = Rx + t in world space becomes y' = Rx' + (R c + t - c) * s in the
    // normalized frame.
    Skeleton out = skeleton;
    for (Bone& b : out.bones) {
        Vec3 rc = b.to_canonical.rotation * norm.center;
        b.to_canonical.translation =
            (rc + b.to_canonical.translation - norm.center) * norm.scale;
        b.head = norm.apply(b.head);
        b.tail = norm.apply(b.tail);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
void write_f32(std::ostream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
}
void read_f32(std::istream& in, std::vector<float>& v, size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
}

}  // namespace

void save_field(const TriPlane& tri, const Decoder& dec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write("TPLF", 4);
    write_u32(out, static_cast<uint32_t>(tri.n));
    write_u32(out, static_cast<uint32_t>(tri.channels));
    write_u32(out, static_cast<uint32_t>(dec.hidden));
    write_u32(out, static_cast<uint32_t>(dec.out_channels));
    for (const auto& p : tri.planes) write_f32(out, p);
    write_f32(out, dec.w1);
    write_f32(out, dec.b1);
    write_f32(out, dec.w2);
    write_f32(out, dec.b2);
    if (!out) throw std::runtime_error("write failed: " + path);
}

void load_field(const std::string& path, TriPlane& tri, Decoder& dec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "TPLF", 4) != 0)
        throw std::runtime_error(path + ": not a TPLF field file");
    tri.n = static_cast<int>(read_u32(in));
    tri.channels = static_cast<int>(read_u32(in));
    dec.in_channels = tri.channels;
    dec.hidden = static_cast<int>(read_u32(in));
    dec.out_channels = static_cast<int>(read_u32(in));
    for (auto& p : tri.planes) read_f32(in, p, tri.plane_size());
    read_f32(in, dec.w1, static_cast<size_t>(dec.in_channels) * dec.hidden);
    read_f32(in, dec.b1, dec.hidden);
    read_f32(in, dec.w2, static_cast<size_t>(dec.hidden) * (1 + dec.out_channels));
    read_f32(in, dec.b2, 1 + dec.out_channels);
    if (!in) throw std::runtime_error(path + ": truncated field file");
}

}  // namespace warpfield
