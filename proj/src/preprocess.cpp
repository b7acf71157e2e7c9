#include "erp/preprocess.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace erp {

bool CloudDecisionTree::classify(const float* features, int feature_count) const {
    if (nodes.empty()) return false;
    int i = 0;
    for (;;) {
        const Node& n = nodes[i];
        if (n.band < 0) return n.cloudy;
        if (n.band >= feature_count) throw Error(ErrorCode::InvalidModel, "tree references a missing band");
        i = features[n.band] <= n.threshold ? n.left : n.right;
    }
}

int CloudDecisionTree::depth() const {
    std::function<int(int)> walk = [&](int i) -> int {
        const Node& n = nodes[i];
        if (n.band < 0) return 0;
        return 1 + std::max(walk(n.left), walk(n.right));
    };
    return nodes.empty() ? 0 : walk(0);
}

int CloudDecisionTree::max_band() const {
    int m = -1;
    for (const Node& n : nodes) m = std::max(m, n.band);
    return m;
}

std::string CloudDecisionTree::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Node& n : nodes) {
        if (n.band < 0) {
            arr.push_back({{"leaf", true}, {"cloudy", n.cloudy}});
        } else {
            arr.push_back({{"band", n.band}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
        }
    }
    return nlohmann::json{{"nodes", arr}}.dump(2);
}

CloudDecisionTree CloudDecisionTree::from_json(const std::string& text) {
    CloudDecisionTree tree;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& e : j.at("nodes")) {
            Node n;
            if (e.value("leaf", false)) {
                n.cloudy = e.at("cloudy").get<bool>();
            } else {
                n.band = e.at("band").get<int>();
                n.threshold = e.at("threshold").get<float>();
                n.left = e.at("left").get<int>();
                n.right = e.at("right").get<int>();
            }
            tree.nodes.push_back(n);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidModel, std::string("cloud tree: ") + ex.what());
    }
    const int count = static_cast<int>(tree.nodes.size());
    if (count == 0) throw Error(ErrorCode::InvalidModel, "cloud tree has no nodes");
    for (const Node& n : tree.nodes) {
        if (n.band >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count)) {
            throw Error(ErrorCode::InvalidModel, "cloud tree child index out of range");
        }
    }
    if (tree.depth() > kMaxDepth) throw Error(ErrorCode::InvalidModel, "cloud tree deeper than 4");
    return tree;
}

CloudDecisionTree CloudDecisionTree::single_threshold(int band, float threshold) {
    CloudDecisionTree t;
    t.nodes.push_back({band, threshold, 1, 2, false});
    t.nodes.push_back({-1, 0.0f, -1, -1, false});
    t.nodes.push_back({-1, 0.0f, -1, -1, true});
    return t;
}

Plane<float> tile_features(const Image& image, int tile_size) {
    const TileGrid grid(image.height(), image.width(), tile_size);
    Plane<float> f(grid.count(), image.band_count());
    for (int b = 0; b < image.band_count(); ++b) {
        const Band small = downsample(image.bands[b], tile_size);
        for (int t = 0; t < grid.count(); ++t) f(t, b) = small(t / grid.cols(), t % grid.cols());
    }
    return f;
}

CloudMask detect_clouds_onboard(const Image& image, const CloudDecisionTree& tree, int tile_size) {
    if (tree.max_band() >= image.band_count()) {
        throw Error(ErrorCode::InvalidModel, "tree references band " + std::to_string(tree.max_band()) +
                                                 " but image has " + std::to_string(image.band_count()));
    }
    const TileGrid grid(image.height(), image.width(), tile_size);
    const Plane<float> f = tile_features(image, tile_size);
    CloudMask mask;
    mask.cloudy.resize(grid.rows(), grid.cols());
    for (int t = 0; t < grid.count(); ++t) {
        mask.cloudy(t / grid.cols(), t % grid.cols()) =
            tree.classify(f.data() + static_cast<long>(t) * f.cols(), static_cast<int>(f.cols()));
    }
    return mask;
}

namespace {

double entropy(double pos, double n) {
    if (n <= 0.0 || pos <= 0.0 || pos >= n) return 0.0;
    const double p = pos / n;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

struct TreeBuilder {
    const Plane<float>& x;
    const std::vector<bool>& y;
    const TreeTrainingOptions& opt;
    CloudDecisionTree tree;

    int leaf(const std::vector<int>& idx) {
        const long pos = std::count_if(idx.begin(), idx.end(), [&](int i) { return y[i]; });
        CloudDecisionTree::Node n;
        n.cloudy = !idx.empty() && pos > 0 &&
                   static_cast<double>(pos) / static_cast<double>(idx.size()) >= opt.leaf_purity;
        tree.nodes.push_back(n);
        return static_cast<int>(tree.nodes.size()) - 1;
    }

    int build(std::vector<int> idx, int depth) {
        const double n = static_cast<double>(idx.size());
        const double pos = static_cast<double>(std::count_if(idx.begin(), idx.end(), [&](int i) { return y[i]; }));
        if (depth >= opt.max_depth || pos == 0.0 || pos == n) return leaf(idx);

        const double parent = entropy(pos, n);
        double best_gain = 1e-12;
        int best_band = -1;
        float best_thr = 0.0f;
        std::vector<std::pair<float, bool>> col(idx.size());
        for (int b = 0; b < x.cols(); ++b) {
            for (std::size_t k = 0; k < idx.size(); ++k) col[k] = {x(idx[k], b), y[idx[k]]};
            std::sort(col.begin(), col.end());
            double left_pos = 0.0;
            for (std::size_t k = 1; k < col.size(); ++k) {
                left_pos += col[k - 1].second ? 1.0 : 0.0;
                if (col[k].first == col[k - 1].first) continue;
                const double nl = static_cast<double>(k);
                const double nr = n - nl;
                const double gain = parent - (nl / n) * entropy(left_pos, nl) - (nr / n) * entropy(pos - left_pos, nr);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_band = b;
                    best_thr = 0.5f * (col[k - 1].first + col[k].first);
                }
            }
        }
        if (best_band < 0) return leaf(idx);

        std::vector<int> l, r;
        for (int i : idx) (x(i, best_band) <= best_thr ? l : r).push_back(i);
        const int self = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({best_band, best_thr, -1, -1, false});
        const int li = build(std::move(l), depth + 1);
        const int ri = build(std::move(r), depth + 1);
        tree.nodes[self].left = li;
        tree.nodes[self].right = ri;
        return self;
    }
};

// Collapse splits whose two leaves carry the same label.
CloudDecisionTree simplify(const CloudDecisionTree& in) {
    CloudDecisionTree out;
    std::function<int(int)> copy = [&](int i) -> int {
        const auto& n = in.nodes[i];
        const int self = static_cast<int>(out.nodes.size());
        out.nodes.push_back(n);
        if (n.band < 0) return self;
        const int l = copy(n.left);
        const int r = copy(n.right);
        const auto& ln = out.nodes[l];
        const auto& rn = out.nodes[r];
        if (ln.band < 0 && rn.band < 0 && ln.cloudy == rn.cloudy) {
            const bool label = ln.cloudy;
            out.nodes.resize(self + 1);
            out.nodes[self] = {-1, 0.0f, -1, -1, label};
            return self;
        }
        out.nodes[self].left = l;
        out.nodes[self].right = r;
        return self;
    };
    copy(0);
    return out;
}

}  // namespace

CloudDecisionTree train_cloud_tree(const std::vector<LabeledImage>& labeled, const TreeTrainingOptions& options) {
    long rows = 0;
    int bands = -1;
    for (const auto& li : labeled) {
        const TileGrid g(li.image.height(), li.image.width(), options.tile_size);
        if (li.cloudy.rows() != g.rows() || li.cloudy.cols() != g.cols()) {
            throw Error(ErrorCode::InvalidArgument, "label grid does not match image tiles");
        }
        if (bands >= 0 && bands != li.image.band_count()) {
            throw Error(ErrorCode::InvalidArgument, "training images differ in band count");
        }
        bands = li.image.band_count();
        rows += g.count();
    }
    if (rows == 0) throw Error(ErrorCode::InvalidArgument, "empty training set");

    Plane<float> x(rows, bands);
    std::vector<bool> y;
    y.reserve(rows);
    long r = 0;
    for (const auto& li : labeled) {
        const Plane<float> f = tile_features(li.image, options.tile_size);
        x.middleRows(r, f.rows()) = f;
        for (long t = 0; t < f.rows(); ++t) y.push_back(li.cloudy(t / li.cloudy.cols(), t % li.cloudy.cols()));
        r += f.rows();
    }
    std::vector<int> idx(rows);
    std::iota(idx.begin(), idx.end(), 0);
    TreeBuilder builder{x, y, options, {}};
    builder.build(std::move(idx), 0);
    return simplify(builder.tree);
}

IlluminationFit fit_illumination(const Band& capture, const Band& reference, const PixelMask& clear) {
    if (capture.rows() != reference.rows() || capture.cols() != reference.cols() ||
        clear.rows() != capture.rows() || clear.cols() != capture.cols()) {
        throw Error(ErrorCode::InvalidArgument, "fit_illumination: dimension mismatch");
    }
    long n = 0;
    double mr = 0.0, mc = 0.0;
    for (Eigen::Index i = 0; i < capture.size(); ++i) {
        if (!clear.data()[i]) continue;
        mr += reference.data()[i];
        mc += capture.data()[i];
        ++n;
    }
    if (n < 2) throw Error(ErrorCode::DegenerateFit, "fewer than two clear pixels");
    mr /= static_cast<double>(n);
    mc /= static_cast<double>(n);
    double srr = 0.0, src = 0.0;
    for (Eigen::Index i = 0; i < capture.size(); ++i) {
        if (!clear.data()[i]) continue;
        const double dr = reference.data()[i] - mr;
        srr += dr * dr;
        src += dr * (capture.data()[i] - mc);
    }
    if (!(srr > 0.0)) throw Error(ErrorCode::DegenerateFit, "constant reference");
    IlluminationFit fit;
    fit.k = src / srr;
    fit.d = mc - fit.k * mr;
    fit.n = n;
    double sse = 0.0;
    for (Eigen::Index i = 0; i < capture.size(); ++i) {
        if (!clear.data()[i]) continue;
        const double e = capture.data()[i] - (fit.k * reference.data()[i] + fit.d);
        sse += e * e;
    }
    fit.residual_rms = std::sqrt(sse / static_cast<double>(n));
    return fit;
}

IlluminationFit fit_illumination_consensus(const Band& capture, const Band& reference, const PixelMask& clear,
                                           double tolerance) {
    if (capture.rows() != reference.rows() || capture.cols() != reference.cols() ||
        clear.rows() != capture.rows() || clear.cols() != capture.cols()) {
        throw Error(ErrorCode::InvalidArgument, "fit_illumination_consensus: dimension mismatch");
    }
    std::vector<Eigen::Index> pts;
    for (Eigen::Index i = 0; i < capture.size(); ++i) {
        if (clear.data()[i]) pts.push_back(i);
    }
    if (pts.size() < 2) throw Error(ErrorCode::DegenerateFit, "fewer than two clear samples");

    constexpr std::size_t kMaxCandidates = 64;
    std::vector<Eigen::Index> cand;
    const std::size_t stride = std::max<std::size_t>(1, pts.size() / kMaxCandidates);
    for (std::size_t i = 0; i < pts.size() && cand.size() < kMaxCandidates; i += stride) cand.push_back(pts[i]);

    const float* c = capture.data();
    const float* r = reference.data();
    auto score = [&](double k, double d, long& inliers, double& spread) {
        inliers = 0;
        spread = 0.0;
        for (Eigen::Index i : pts) {
            const double e = std::abs(c[i] - (k * r[i] + d));
            if (e <= tolerance) {
                ++inliers;
                spread += e;
            }
        }
    };

    double best_k = 1.0, best_d = 0.0, best_spread = 0.0;
    long best_n = 0;
    score(1.0, 0.0, best_n, best_spread);
    for (std::size_t a = 0; a < cand.size(); ++a) {
        for (std::size_t b = a + 1; b < cand.size(); ++b) {
            const double dr = static_cast<double>(r[cand[b]]) - r[cand[a]];
            if (std::abs(dr) < 1e-6) continue;
            const double k = (static_cast<double>(c[cand[b]]) - c[cand[a]]) / dr;
            const double d = c[cand[a]] - k * r[cand[a]];
            long n = 0;
            double spread = 0.0;
            score(k, d, n, spread);
            if (n > best_n || (n == best_n && spread < best_spread)) {
                best_n = n;
                best_spread = spread;
                best_k = k;
                best_d = d;
            }
        }
    }

    PixelMask inlier = PixelMask::Constant(capture.rows(), capture.cols(), false);
    for (Eigen::Index i : pts) {
        if (std::abs(c[i] - (best_k * r[i] + best_d)) <= tolerance) inlier.data()[i] = true;
    }
    return fit_illumination(capture, reference, inlier);
}

Band align(const Band& reference, const IlluminationFit& fit) {
    return (reference.cast<double>() * fit.k + fit.d).max(0.0).min(1.0).cast<float>();
}

}  // namespace erp
