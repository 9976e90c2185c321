#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "ednig/image.hpp"

namespace ednig {

// Mean-subtracted contrast-normalized coefficients: (I - mu)/(sigma + 1) with
// mu/sigma from a 7x7 Gaussian window (sigma 7/6, mirrored border), on the
// [0,255] scale. Outputs are unit-range-tagged fields, values unbounded.
Image mscn(const Image& gray_byte, Image* mu_out = nullptr, Image* sigma_out = nullptr);

struct GgdFit {
    double alpha = 2.0;
    double sigma = 0.0;  // sqrt(mean x^2)
};

struct AggdFit {
    double alpha = 2.0;
    double sigma_left = 0.0;
    double sigma_right = 0.0;
    double mean_eta = 0.0;
};

// Moment-matching fits over the standard alpha grid [0.2, 10] step 0.001.
// Degenerate (all-zero) samples fall back to alpha = 2, sigmas = epsilon.
GgdFit fit_ggd(std::span<const float> samples);
AggdFit fit_aggd(std::span<const float> samples);

// 18 NSS features of one grayscale byte image: GGD (alpha, sigma^2) of the
// MSCN field, then AGGD (alpha, eta, sigma_l^2, sigma_r^2) of the H/V/D1/D2
// pairwise products.
std::array<double, 18> nss_features(const Image& gray_byte);

// Two scales (second at half resolution): 36 features. RGB inputs are
// converted to luma.
std::array<double, 36> brisque_features(const Image& img);

// RBF support-vector regressor with [-1,1] feature scaling.
struct BrisqueModel {
    int n_sv = 0;
    std::vector<float> support_vectors;  // n_sv x 36
    std::vector<float> coefficients;     // n_sv
    double gamma = 0.05;
    double intercept = 0.0;
    std::vector<float> feature_min, feature_max;  // 36 each

    static BrisqueModel load(const std::filesystem::path& dir);
    double predict(const std::array<double, 36>& features) const;
};

double brisque(const Image& img, const BrisqueModel& model);

struct NiqeModel {
    std::vector<double> mean;  // 36
    std::vector<double> cov;   // 36 x 36, row-major
    int patch_size = 96;
    double sharpness_fraction = 0.75;

    static NiqeModel load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir, const std::string& provenance) const;
};

// Per-patch 36-feature rows (two scales). With select_sharp, keeps patches
// whose mean local sigma is >= sharpness_fraction of the sharpest patch;
// falls back to all patches (with a note on stderr) if fewer than 2 qualify.
std::vector<std::array<double, 36>> niqe_patch_features(const Image& gray_byte, int patch_size,
                                                        double sharpness_fraction,
                                                        bool select_sharp);

// Mahalanobis-style distance between the pristine model and the image's own
// multivariate Gaussian fit. Lower is better.
double niqe(const Image& img, const NiqeModel& model);

// Fits the pristine multivariate Gaussian over a corpus (used by the model
// preparation tool and tests).
NiqeModel fit_niqe_model(std::span<const Image> corpus, int patch_size = 96,
                         double sharpness_fraction = 0.75);

}  // namespace ednig
