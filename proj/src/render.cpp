#include "warpfield/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "warpfield/threading.hpp"

namespace warpfield {

RayInterval ray_mesh_bounds(const Ray& ray, const Bvh& expanded_bvh) {
    return expanded_bvh.ray_interval(ray.origin, ray.dir);
}

std::vector<double> stratified_samples(double t_near, double t_far, int n, bool jitter,
                                       Rng& rng) {
    if (!(t_far > t_near)) throw std::runtime_error("stratified_samples: t_far <= t_near");
    std::vector<double> out(n);
    const double step = (t_far - t_near) / n;
    for (int i = 0; i < n; ++i) {
        double u = jitter ? rng.uniform() : 0.5;
        out[i] = t_near + (i + u) * step;
    }
    // Jitter can land two consecutive samples arbitrarily close; keep the
    // sequence strictly increasing for composite().
    for (int i = 1; i < n; ++i)
        if (out[i] <= out[i - 1]) out[i] = std::nextafter(out[i - 1], t_far + step);
    return out;
}

std::vector<double> importance_samples(const std::vector<double>& bin_edges,
                                       const std::vector<double>& weights, int n_fine,
                                       Rng& rng) {
    if (bin_edges.size() != weights.size() + 1)
        throw std::runtime_error("importance_samples: need one more edge than weights");
    double total = 0;
    for (double w : weights) {
        if (w < 0) throw std::runtime_error("importance_samples: negative weight");
        total += w;
    }
    if (total <= 0) {
        auto out = stratified_samples(bin_edges.front(), bin_edges.back(), n_fine, true, rng);
        return out;
    }

    std::vector<double> cdf(weights.size() + 1, 0.0);
    for (size_t i = 0; i < weights.size(); ++i) cdf[i + 1] = cdf[i] + weights[i] / total;
    cdf.back() = 1.0;

    std::vector<double> out(n_fine);
    for (int k = 0; k < n_fine; ++k) {
        double u = rng.uniform();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        size_t bin = std::min<size_t>(std::max<ptrdiff_t>(it - cdf.begin() - 1, 0),
                                      weights.size() - 1);
        double lo = cdf[bin], hi = cdf[bin + 1];
        double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
        out[k] = bin_edges[bin] + frac * (bin_edges[bin + 1] - bin_edges[bin]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

CompositeResult composite(const std::vector<double>& depths, const std::vector<double>& sigmas,
                          const std::vector<double>& features, int channels) {
    const size_t n = depths.size();
    if (sigmas.size() != n || features.size() != n * channels)
        throw std::runtime_error("composite: size mismatch");
    for (size_t i = 1; i < n; ++i)
        if (!(depths[i] > depths[i - 1]))
            throw std::runtime_error("composite: depths must be strictly increasing");

    CompositeResult r;
    r.features.assign(channels, 0.0);
    r.weights.assign(n, 0.0);
    double transmittance = 1.0;
    double depth_accum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double delta = i + 1 < n ? depths[i + 1] - depths[i] : 0.0;
        const double a = 1.0 - std::exp(-sigmas[i] * delta);
        const double w = transmittance * a;
        r.weights[i] = w;
        const double* f = features.data() + i * channels;
        for (int c = 0; c < channels; ++c) r.features[c] += w * f[c];
        depth_accum += w * depths[i];
        transmittance *= 1.0 - a;
    }
    r.alpha = 1.0 - transmittance;
    r.expected_depth = depth_accum / std::max(r.alpha, 1e-12);
    return r;
}

RayRender render_ray(const Ray& ray, const RayInterval& bounds, const TriPlane& tri,
                     const Decoder& dec, const Deformer& deformer, const SamplingConfig& cfg,
                     Rng rng) {
    RayRender out;
    out.features.assign(dec.out_channels, 0.0);
    if (!bounds.valid()) return out;
    out.hit = true;

    std::vector<double> depths =
        stratified_samples(bounds.t_near, bounds.t_far, cfg.n_coarse, cfg.jitter, rng);

    auto eval = [&](const std::vector<double>& ts, std::vector<double>& sigmas,
                    std::vector<double>& feats) {
        const int c_out = dec.out_channels;
        sigmas.resize(ts.size());
        feats.resize(ts.size() * c_out);
        std::vector<double> agg(tri.channels), hidden(dec.hidden), raw(dec.raw_size());
        for (size_t i = 0; i < ts.size(); ++i) {
            Vec3 x = ray.origin + ray.dir * ts[i];
            aggregate_into(deformer(x), tri, agg.data());
            decode_raw(dec, agg.data(), hidden.data(), raw.data());
            sigmas[i] = softplus(raw[0]);
            std::copy(raw.begin() + 1, raw.end(), feats.begin() + i * c_out);
        }
    };

    std::vector<double> sigmas, feats;
    eval(depths, sigmas, feats);
    CompositeResult coarse = composite(depths, sigmas, feats, dec.out_channels);

    if (cfg.n_fine > 0) {
        // Coarse stratification bins carry the coarse sample weights.
        std::vector<double> edges(cfg.n_coarse + 1);
        const double step = (bounds.t_far - bounds.t_near) / cfg.n_coarse;
        for (int i = 0; i <= cfg.n_coarse; ++i) edges[i] = bounds.t_near + i * step;
        std::vector<double> fine =
            importance_samples(edges, coarse.weights, cfg.n_fine, rng);

        std::vector<double> fine_sigmas, fine_feats;
        eval(fine, fine_sigmas, fine_feats);

        // Merge the two sorted sample sets, keeping cached coarse values.
        const int c_out = dec.out_channels;
        std::vector<double> all_d, all_s, all_f;
        all_d.reserve(depths.size() + fine.size());
        all_s.reserve(all_d.capacity());
        all_f.reserve(all_d.capacity() * c_out);
        size_t a = 0, b = 0;
        while (a < depths.size() || b < fine.size()) {
            bool take_coarse =
                b >= fine.size() || (a < depths.size() && depths[a] <= fine[b]);
            if (take_coarse) {
                all_d.push_back(depths[a]);
                all_s.push_back(sigmas[a]);
                all_f.insert(all_f.end(), feats.begin() + a * c_out,
                             feats.begin() + (a + 1) * c_out);
                ++a;
            } else {
                all_d.push_back(fine[b]);
                all_s.push_back(fine_sigmas[b]);
                all_f.insert(all_f.end(), fine_feats.begin() + b * c_out,
                             fine_feats.begin() + (b + 1) * c_out);
                ++b;
            }
        }
        // Coincident depths would violate the strict-monotonicity contract.
        for (size_t i = 1; i < all_d.size(); ++i)
            if (all_d[i] <= all_d[i - 1])
                all_d[i] = std::nextafter(all_d[i - 1],
                                          std::numeric_limits<double>::infinity());
        coarse = composite(all_d, all_s, all_f, dec.out_channels);
    }

    out.features = std::move(coarse.features);
    out.alpha = coarse.alpha;
    out.depth = coarse.expected_depth;
    return out;
}

RenderedImage render_image(const TriPlane& tri, const Decoder& dec, const Deformer& deformer,
                           const PosedPair& pair, const Camera& cam, const SamplingConfig& cfg,
                           uint64_t seed) {
    cam.validate();
    const Bvh hull(expand(pair.deformed, cfg.growth));

    RenderedImage img;
    img.features = ImageF::zeros(cam.width, cam.height, dec.out_channels);
    img.alpha = ImageF::zeros(cam.width, cam.height, 1);
    img.rgb = ImageU8::zeros(cam.width, cam.height, 3);

    const size_t n_pixels = static_cast<size_t>(cam.width) * cam.height;
    parallel_chunks(n_pixels, 256, [&](size_t begin, size_t end) {
        for (size_t p = begin; p < end; ++p) {
            const int i = static_cast<int>(p % cam.width);
            const int j = static_cast<int>(p / cam.width);
            const Ray ray = cam.pixel_ray(i + 0.5, j + 0.5);
            const RayInterval bounds = ray_mesh_bounds(ray, hull);
            RayRender r =
                render_ray(ray, bounds, tri, dec, deformer, cfg, Rng(seed, 0x70697865ULL, p));
            for (int c = 0; c < dec.out_channels; ++c)
                img.features.at(i, j, c) = static_cast<float>(r.features[c]);
            img.alpha.at(i, j, 0) = static_cast<float>(r.alpha);
            for (int c = 0; c < 3; ++c) {
                double fg = c < dec.out_channels ? sigmoid(r.features[c]) : 0.0;
                double v = alpha_over(fg, r.alpha, cfg.background[c]);
                img.rgb.at(i, j, c) =
                    static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
        }
    });
    return img;
}

}  // namespace warpfield
