#pragma once

#include <string>
#include <vector>

#include "ednig/image.hpp"

namespace ednig {

// 10*log10(255^2 / mse) over all elements of byte-range images.
// Identical images return +infinity (serialized as "inf").
double psnr(const Image& a, const Image& b);

// Mean local SSIM on the luma channel, Gaussian 11x11 sigma 1.5 windows
// (valid region), C1 = (0.01*255)^2, C2 = (0.03*255)^2. Inputs byte-range.
double ssim(const Image& a, const Image& b);

struct MetricRecord {
    std::string id;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double niqe = 0.0;
    double brisque = 0.0;
};

struct MetricReport {
    std::vector<MetricRecord> per_image;
    double mean_psnr = 0.0, mean_ssim = 0.0, mean_niqe = 0.0, mean_brisque = 0.0;

    void compute_means();
};

std::string format_metric(double v);  // "inf" for infinities, fixed precision otherwise

}  // namespace ednig
