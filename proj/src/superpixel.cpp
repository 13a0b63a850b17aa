#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "distillflow/transforms.hpp"

namespace distillflow {

LabelMap::LabelMap(int height, int width, std::vector<int> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
    if (height < 1 || width < 1 || labels_.size() != static_cast<std::size_t>(height) * width) {
        throw ShapeError("LabelMap: label count does not match extent");
    }
    int max_label = -1;
    for (int l : labels_) {
        if (l < 0) throw InvalidArgument("LabelMap: negative label");
        max_label = std::max(max_label, l);
    }
    count_ = max_label + 1;
}

namespace {

struct Center {
    double l, x, y;
};

// Flood-fills 4-connected components of equal label; returns component id
// per pixel and component sizes.
int connected_components(const std::vector<int>& labels, int h, int w, std::vector<int>& comp,
                         std::vector<int>& sizes, std::vector<int>& comp_label) {
    comp.assign(labels.size(), -1);
    sizes.clear();
    comp_label.clear();
    std::vector<int> stack;
    for (int start = 0; start < h * w; ++start) {
        if (comp[start] >= 0) continue;
        const int id = static_cast<int>(sizes.size());
        const int label = labels[start];
        sizes.push_back(0);
        comp_label.push_back(label);
        comp[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            ++sizes[id];
            const int y = p / w, x = p % w;
            const int nbrs[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
            for (const auto& n : nbrs) {
                if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
                const int q = n[0] * w + n[1];
                if (comp[q] < 0 && labels[q] == label) {
                    comp[q] = id;
                    stack.push_back(q);
                }
            }
        }
    }
    return static_cast<int>(sizes.size());
}

}  // namespace

LabelMap superpixel_segment(const Image& img, int target_count, double compactness, std::uint64_t seed) {
    const int h = img.height(), w = img.width();
    if (target_count < 1) throw InvalidArgument("superpixel_segment: target_count must be >= 1");
    if (!(compactness >= 0.0)) throw InvalidArgument("superpixel_segment: compactness must be >= 0");
    target_count = std::min(target_count, h * w);
    const Image lum = luminance(img);
    const double step = std::sqrt(static_cast<double>(h) * w / target_count);
    const int ny = std::max(1, static_cast<int>(std::lround(h / step)));
    const int nx = std::max(1, static_cast<int>(std::lround(w / step)));
    const double sy = static_cast<double>(h) / ny;
    const double sx = static_cast<double>(w) / nx;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);
    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double cy = std::clamp((j + 0.5 + jitter(rng)) * sy, 0.0, h - 1.0);
            const double cx = std::clamp((i + 0.5 + jitter(rng)) * sx, 0.0, w - 1.0);
            centers.push_back({lum(static_cast<int>(cy), static_cast<int>(cx), 0), cx, cy});
        }
    }

    const double spatial = compactness * compactness / (step * step);
    const int window = static_cast<int>(std::ceil(2.0 * step));
    std::vector<int> labels(static_cast<std::size_t>(h) * w, -1);
    std::vector<double> best(labels.size());
    for (int iter = 0; iter < 5; ++iter) {
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        std::fill(labels.begin(), labels.end(), -1);
        for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
            const Center& c = centers[k];
            const int y0 = std::max(0, static_cast<int>(c.y) - window);
            const int y1 = std::min(h - 1, static_cast<int>(c.y) + window);
            const int x0 = std::max(0, static_cast<int>(c.x) - window);
            const int x1 = std::min(w - 1, static_cast<int>(c.x) + window);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double dl = lum(y, x, 0) - c.l;
                    const double d = dl * dl + spatial * ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y));
                    const std::size_t p = static_cast<std::size_t>(y) * w + x;
                    if (d < best[p]) {
                        best[p] = d;
                        labels[p] = k;
                    }
                }
            }
        }
        std::vector<Center> sums(centers.size(), Center{0, 0, 0});
        std::vector<int> counts(centers.size(), 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                int& l = labels[static_cast<std::size_t>(y) * w + x];
                if (l < 0) {
                    double nearest = std::numeric_limits<double>::infinity();
                    for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
                        const double d = (x - centers[k].x) * (x - centers[k].x) + (y - centers[k].y) * (y - centers[k].y);
                        if (d < nearest) {
                            nearest = d;
                            l = k;
                        }
                    }
                }
                sums[l].l += lum(y, x, 0);
                sums[l].x += x;
                sums[l].y += y;
                ++counts[l];
            }
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (counts[k] == 0) continue;
            centers[k] = {sums[k].l / counts[k], sums[k].x / counts[k], sums[k].y / counts[k]};
        }
    }

    // Keep the largest component per label; absorb the rest into neighbors.
    std::vector<int> comp, sizes, comp_label;
    for (int pass = 0; pass < 64; ++pass) {
        const int n = connected_components(labels, h, w, comp, sizes, comp_label);
        std::vector<int> keeper(centers.size(), -1);
        for (int c = 0; c < n; ++c) {
            int& k = keeper[comp_label[c]];
            if (k < 0 || sizes[c] > sizes[k]) k = c;
        }
        bool changed = false;
        for (int c = 0; c < n; ++c) {
            if (keeper[comp_label[c]] == c) continue;
            // Largest adjacent settled component wins.
            int target = -1;
            for (int p = 0; p < h * w; ++p) {
                if (comp[p] != c) continue;
                const int y = p / w, x = p % w;
                const int nbrs[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
                for (const auto& nb : nbrs) {
                    if (nb[0] < 0 || nb[0] >= h || nb[1] < 0 || nb[1] >= w) continue;
                    const int o = comp[nb[0] * w + nb[1]];
                    if (o == c || keeper[comp_label[o]] != o) continue;
                    if (target < 0 || sizes[o] > sizes[target]) target = o;
                }
            }
            if (target < 0) continue;
            for (int p = 0; p < h * w; ++p) {
                if (comp[p] == c) labels[p] = comp_label[target];
            }
            changed = true;
        }
        if (!changed) break;
    }

    // Contiguous ids in scan order.
    std::vector<int> remap(centers.size(), -1);
    int next = 0;
    for (int& l : labels) {
        if (remap[l] < 0) remap[l] = next++;
        l = remap[l];
    }
    return LabelMap(h, w, std::move(labels));
}

NoiseInjection inject_superpixel_noise(const Image& img, const LabelMap& labels, int count_to_noise,
                                       std::uint64_t seed) {
    if (labels.height() != img.height() || labels.width() != img.width()) {
        throw ShapeError("inject_superpixel_noise: label map extent differs from image");
    }
    if (count_to_noise < 0 || count_to_noise > labels.count()) {
        throw InvalidArgument("inject_superpixel_noise: count out of range");
    }
    std::mt19937_64 rng(seed);
    std::vector<int> ids(labels.count());
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(count_to_noise);
    std::sort(ids.begin(), ids.end());
    std::vector<char> chosen(labels.count(), 0);
    for (int id : ids) chosen[id] = 1;

    NoiseInjection out{img, MaskMap(img.height(), img.width()), ids};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (!chosen[labels(y, x)]) continue;
            out.mask(y, x) = 1.0;
            for (int c = 0; c < img.channels(); ++c) out.image(y, x, c) = unit(rng);
        }
    }
    return out;
}

}  // namespace distillflow
