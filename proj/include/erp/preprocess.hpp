#pragma once

#include <string>
#include <vector>

#include "erp/raster.hpp"

namespace erp {

/// Tiles the onboard detector flagged as cloudy.
struct CloudMask {
    TilePlane<bool> cloudy;

    int total() const { return static_cast<int>(cloudy.size()); }
    int flagged() const { return static_cast<int>(cloudy.count()); }
    double coverage() const { return total() == 0 ? 0.0 : static_cast<double>(flagged()) / total(); }
};

/// Depth-limited binary tree over per-tile band means. A sample goes left
/// when its feature is <= threshold.
struct CloudDecisionTree {
    struct Node {
        int band = -1;  // -1 marks a leaf
        float threshold = 0.0f;
        int left = -1;
        int right = -1;
        bool cloudy = false;
    };

    static constexpr int kMaxDepth = 4;

    std::vector<Node> nodes;  // nodes[0] is the root

    bool classify(const float* features, int feature_count) const;
    int depth() const;
    int max_band() const;

    std::string to_json() const;
    static CloudDecisionTree from_json(const std::string& text);

    /// Flags tiles whose mean on `band` exceeds `threshold`.
    static CloudDecisionTree single_threshold(int band, float threshold);
};

/// Per-tile means of every band, tiles x bands, row-major over tiles.
Plane<float> tile_features(const Image& image, int tile_size = 64);

/// Evaluates the tree on the tile-mean (64x downsampled) image.
CloudMask detect_clouds_onboard(const Image& image, const CloudDecisionTree& tree, int tile_size = 64);

/// Drop rule: strictly more than half the tiles cloudy.
inline bool should_drop(const CloudMask& mask) { return mask.coverage() > 0.5; }

struct LabeledImage {
    Image image;
    TilePlane<bool> cloudy;  // ground truth per tile
};

struct TreeTrainingOptions {
    int max_depth = CloudDecisionTree::kMaxDepth;
    double leaf_purity = 0.99;
    int tile_size = 64;
};

CloudDecisionTree train_cloud_tree(const std::vector<LabeledImage>& labeled,
                                   const TreeTrainingOptions& options = {});

/// Capture ~ k * reference + d.
struct IlluminationFit {
    double k = 1.0;
    double d = 0.0;
    long n = 0;
    double residual_rms = 0.0;

    static IlluminationFit identity() { return {}; }
};

/// Ordinary least squares over the clear pixels. Throws DegenerateFit with
/// fewer than two clear pixels or a constant reference.
IlluminationFit fit_illumination(const Band& capture, const Band& reference, const PixelMask& clear);

/// OLS restricted to the largest set of samples consistent with one line.
/// Candidate lines come from sample pairs (plus the identity); a sample is
/// an inlier when its residual is within `tolerance`.
IlluminationFit fit_illumination_consensus(const Band& capture, const Band& reference, const PixelMask& clear,
                                           double tolerance = 0.005);

/// clamp(k * r + d, 0, 1) per sample.
Band align(const Band& reference, const IlluminationFit& fit);

}  // namespace erp
