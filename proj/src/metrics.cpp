#include "ednig/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ednig {

namespace {

void require_comparable(const Image& a, const Image& b, const char* op) {
    if (!a.same_dims(b))
        throw ContractError(std::string(op) + ": shape mismatch");
    if (a.range != ValueRange::Byte || b.range != ValueRange::Byte)
        throw ContractError(std::string(op) + ": expected byte-range images");
}

std::vector<double> gaussian_kernel_1d(int size, double sigma) {
    std::vector<double> k(std::size_t(size), 0.0);
    const int r = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double x = i - r;
        k[std::size_t(i)] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += k[std::size_t(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable valid-region filtering: output (h-size+1) x (w-size+1).
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& k, int& oh, int& ow) {
    const int size = int(k.size());
    oh = h - size + 1;
    ow = w - size + 1;
    std::vector<double> tmp(std::size_t(h) * ow, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < size; ++i) acc += k[std::size_t(i)] * src[std::size_t(y) * w + x + i];
            tmp[std::size_t(y) * ow + x] = acc;
        }
    std::vector<double> out(std::size_t(oh) * ow, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < size; ++i) acc += k[std::size_t(i)] * tmp[std::size_t(y + i) * ow + x];
            out[std::size_t(y) * ow + x] = acc;
        }
    return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    require_comparable(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        mse += d * d;
    }
    mse /= double(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    require_comparable(a, b, "ssim");
    constexpr int kWindow = 11;
    if (a.height < kWindow || a.width < kWindow)
        throw ContractError("ssim: image smaller than the 11x11 window");

    const Image ga = a.channels == 1 ? a : grayscale_luma(a);
    const Image gb = b.channels == 1 ? b : grayscale_luma(b);

    const int h = ga.height, w = ga.width;
    std::vector<double> xa(ga.data.begin(), ga.data.end());
    std::vector<double> xb(gb.data.begin(), gb.data.end());
    std::vector<double> xaa(xa.size()), xbb(xa.size()), xab(xa.size());
    for (std::size_t i = 0; i < xa.size(); ++i) {
        xaa[i] = xa[i] * xa[i];
        xbb[i] = xb[i] * xb[i];
        xab[i] = xa[i] * xb[i];
    }

    const auto kernel = gaussian_kernel_1d(kWindow, 1.5);
    int oh = 0, ow = 0;
    const auto mu_a = filter_valid(xa, h, w, kernel, oh, ow);
    const auto mu_b = filter_valid(xb, h, w, kernel, oh, ow);
    const auto s_aa = filter_valid(xaa, h, w, kernel, oh, ow);
    const auto s_bb = filter_valid(xbb, h, w, kernel, oh, ow);
    const auto s_ab = filter_valid(xab, h, w, kernel, oh, ow);

    constexpr double c1 = (0.01 * 255) * (0.01 * 255);
    constexpr double c2 = (0.03 * 255) * (0.03 * 255);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = s_aa[i] - mu_a[i] * mu_a[i];
        const double vb = s_bb[i] - mu_b[i] * mu_b[i];
        const double cab = s_ab[i] - mu_a[i] * mu_b[i];
        const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cab + c2);
        const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
        acc += num / den;
    }
    return acc / double(mu_a.size());
}

void MetricReport::compute_means() {
    mean_psnr = mean_ssim = mean_niqe = mean_brisque = 0.0;
    if (per_image.empty()) return;
    for (const auto& r : per_image) {
        mean_psnr += r.psnr_db;
        mean_ssim += r.ssim;
        mean_niqe += r.niqe;
        mean_brisque += r.brisque;
    }
    const double n = double(per_image.size());
    mean_psnr /= n;
    mean_ssim /= n;
    mean_niqe /= n;
    mean_brisque /= n;
}

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << v;
    return os.str();
}

}  // namespace ednig
