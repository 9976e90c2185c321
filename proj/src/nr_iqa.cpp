#include "ednig/nr_iqa.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "ednig/archive.hpp"

namespace ednig {

namespace {

constexpr int kMscnWindow = 7;
constexpr double kMscnSigma = 7.0 / 6.0;
constexpr double kMscnC = 1.0;

std::vector<double> gaussian_kernel(int size, double sigma) {
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

// index mirrored without repeating the edge sample (half-sample symmetric
// fails only for n == 1, handled by clamping)
int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

// Separable Gaussian with mirrored borders, double accumulation.
std::vector<double> gaussian_blur(const std::vector<double>& src, int h, int w) {
    static const std::vector<double> kernel = gaussian_kernel(kMscnWindow, kMscnSigma);
    const int r = kMscnWindow / 2;
    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += kernel[std::size_t(i + r)] * src[std::size_t(y) * w + reflect101(x + i, w)];
            tmp[std::size_t(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += kernel[std::size_t(i + r)] * tmp[std::size_t(reflect101(y + i, h)) * w + x];
            out[std::size_t(y) * w + x] = acc;
        }
    return out;
}

struct AlphaGrid {
    std::vector<double> alpha;
    std::vector<double> ggd_ratio;   // Gamma(1/a)Gamma(3/a)/Gamma(2/a)^2
    std::vector<double> aggd_ratio;  // Gamma(2/a)^2/(Gamma(1/a)Gamma(3/a))
};

const AlphaGrid& alpha_grid() {
    static const AlphaGrid grid = [] {
        AlphaGrid g;
        for (double a = 0.2; a <= 10.0 + 1e-12; a += 0.001) {
            const double g1 = std::tgamma(1.0 / a);
            const double g2 = std::tgamma(2.0 / a);
            const double g3 = std::tgamma(3.0 / a);
            g.alpha.push_back(a);
            g.ggd_ratio.push_back(g1 * g3 / (g2 * g2));
            g.aggd_ratio.push_back(g2 * g2 / (g1 * g3));
        }
        return g;
    }();
    return grid;
}

Image to_gray_byte(const Image& img) {
    if (img.range != ValueRange::Byte)
        throw ContractError("nr_iqa: expected a byte-range image");
    if (img.channels == 1) return img;
    // integer luma, matching the reference NR-IQA pipelines
    Image gray = grayscale_luma(img);
    for (float& v : gray.data) v = float(quantize_u8(v));
    return gray;
}

// Exact half-scale bicubic (a = -0.75): at offset 0.5 the kernel collapses to
// fixed taps [-0.09375, 0.59375, 0.59375, -0.09375], edges clamped. Matches
// the resize convention of the reference feature extractors.
Image half_scale(const Image& gray) {
    const int oh = std::max(1, gray.height / 2), ow = std::max(1, gray.width / 2);
    static constexpr double taps[4] = {-0.09375, 0.59375, 0.59375, -0.09375};
    auto clampi = [](int i, int n) { return std::clamp(i, 0, n - 1); };

    Image tmp(gray.height, ow, 1, ValueRange::Byte);
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < 4; ++t)
                acc += taps[t] * gray.at(y, clampi(2 * x - 1 + t, gray.width), 0);
            tmp.at(y, x, 0) = float(acc);
        }
    Image out(oh, ow, 1, ValueRange::Byte);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < 4; ++t)
                acc += taps[t] * tmp.at(clampi(2 * y - 1 + t, gray.height), x, 0);
            out.at(y, x, 0) = float(acc);
        }
    return out;
}

void append_aggd_features(std::span<const float> samples, std::array<double, 18>& out,
                          std::size_t base) {
    const AggdFit f = fit_aggd(samples);
    out[base + 0] = f.alpha;
    out[base + 1] = f.mean_eta;
    out[base + 2] = f.sigma_left * f.sigma_left;
    out[base + 3] = f.sigma_right * f.sigma_right;
}

}  // namespace

Image mscn(const Image& gray_byte, Image* mu_out, Image* sigma_out) {
    const Image gray = to_gray_byte(gray_byte);
    const int h = gray.height, w = gray.width;

    std::vector<double> x(gray.data.begin(), gray.data.end());
    std::vector<double> xx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xx[i] = x[i] * x[i];

    const auto mu = gaussian_blur(x, h, w);
    const auto mu2 = gaussian_blur(xx, h, w);

    Image out(h, w, 1, ValueRange::Unit);
    if (mu_out) *mu_out = Image(h, w, 1, ValueRange::Unit);
    if (sigma_out) *sigma_out = Image(h, w, 1, ValueRange::Unit);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double var = std::max(0.0, mu2[i] - mu[i] * mu[i]);
        const double sigma = std::sqrt(var);
        out.data[i] = float((x[i] - mu[i]) / (sigma + kMscnC));
        if (mu_out) mu_out->data[i] = float(mu[i]);
        if (sigma_out) sigma_out->data[i] = float(sigma);
    }
    return out;
}

GgdFit fit_ggd(std::span<const float> samples) {
    double sum_sq = 0.0, sum_abs = 0.0;
    for (float v : samples) {
        sum_sq += double(v) * double(v);
        sum_abs += std::abs(double(v));
    }
    const double n = double(samples.size());
    GgdFit fit;
    if (samples.empty() || sum_sq <= 0.0) {
        fit.alpha = 2.0;
        fit.sigma = 1e-6;
        return fit;
    }
    const double sigma_sq = sum_sq / n;
    const double e_abs = sum_abs / n;
    const double rho = sigma_sq / (e_abs * e_abs);

    const auto& grid = alpha_grid();
    std::size_t best = 0;
    double best_err = std::abs(rho - grid.ggd_ratio[0]);
    for (std::size_t i = 1; i < grid.alpha.size(); ++i) {
        const double err = std::abs(rho - grid.ggd_ratio[i]);
        if (err < best_err) {
            best_err = err;
            best = i;
        }
    }
    fit.alpha = grid.alpha[best];
    fit.sigma = std::sqrt(sigma_sq);
    return fit;
}

AggdFit fit_aggd(std::span<const float> samples) {
    double sum_sq_l = 0.0, sum_sq_r = 0.0, sum_abs = 0.0, sum_sq = 0.0;
    std::size_t n_l = 0, n_r = 0;
    for (float v : samples) {
        const double d = double(v);
        sum_sq += d * d;
        sum_abs += std::abs(d);
        if (d < 0.0) {
            sum_sq_l += d * d;
            ++n_l;
        } else if (d > 0.0) {
            sum_sq_r += d * d;
            ++n_r;
        }
    }

    AggdFit fit;
    if (samples.empty() || n_l == 0 || n_r == 0 || sum_sq <= 0.0) {
        fit.alpha = 2.0;
        fit.sigma_left = fit.sigma_right = 1e-6;
        fit.mean_eta = 0.0;
        return fit;
    }

    const double left_std = std::sqrt(sum_sq_l / double(n_l));
    const double right_std = std::sqrt(sum_sq_r / double(n_r));
    const double n = double(samples.size());
    const double rhat = (sum_abs / n) * (sum_abs / n) / (sum_sq / n);

    // gammahat and 1/gammahat give the same ratio in exact arithmetic; the
    // canonical form keeps the grid argmin bitwise symmetric under negation.
    const double gammahat = left_std / right_std;
    const double g = gammahat <= 1.0 ? gammahat : 1.0 / gammahat;
    const double rhatnorm = rhat * (g * g * g + 1.0) * (g + 1.0) / ((g * g + 1.0) * (g * g + 1.0));

    const auto& grid = alpha_grid();
    std::size_t best = 0;
    double best_err = std::abs(rhatnorm - grid.aggd_ratio[0]);
    for (std::size_t i = 1; i < grid.alpha.size(); ++i) {
        const double err = std::abs(rhatnorm - grid.aggd_ratio[i]);
        if (err < best_err) {
            best_err = err;
            best = i;
        }
    }
    fit.alpha = grid.alpha[best];
    fit.sigma_left = left_std;
    fit.sigma_right = right_std;
    const double g1 = std::tgamma(1.0 / fit.alpha);
    const double g2 = std::tgamma(2.0 / fit.alpha);
    const double g3 = std::tgamma(3.0 / fit.alpha);
    fit.mean_eta = (right_std - left_std) * (g2 / g1) * std::sqrt(g1 / g3);
    return fit;
}

std::array<double, 18> nss_features(const Image& gray_byte) {
    const Image coeff = mscn(gray_byte);
    const int h = coeff.height, w = coeff.width;

    std::array<double, 18> out{};
    const GgdFit g = fit_ggd(coeff.data);
    out[0] = g.alpha;
    out[1] = g.sigma * g.sigma;

    std::vector<float> pair;
    pair.reserve(coeff.data.size());

    // horizontal
    pair.clear();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x) pair.push_back(coeff.at(y, x, 0) * coeff.at(y, x + 1, 0));
    append_aggd_features(pair, out, 2);

    // vertical
    pair.clear();
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x < w; ++x) pair.push_back(coeff.at(y, x, 0) * coeff.at(y + 1, x, 0));
    append_aggd_features(pair, out, 6);

    // main diagonal
    pair.clear();
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x + 1 < w; ++x)
            pair.push_back(coeff.at(y, x, 0) * coeff.at(y + 1, x + 1, 0));
    append_aggd_features(pair, out, 10);

    // secondary diagonal
    pair.clear();
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 1; x < w; ++x)
            pair.push_back(coeff.at(y, x, 0) * coeff.at(y + 1, x - 1, 0));
    append_aggd_features(pair, out, 14);

    return out;
}

std::array<double, 36> brisque_features(const Image& img) {
    Image gray = to_gray_byte(img);
    if (gray.height < 32 || gray.width < 32)
        throw ContractError("brisque_features: image must be at least 32x32");

    std::array<double, 36> out{};
    const auto s1 = nss_features(gray);
    std::copy(s1.begin(), s1.end(), out.begin());
    const auto s2 = nss_features(half_scale(gray));
    std::copy(s2.begin(), s2.end(), out.begin() + 18);
    return out;
}

BrisqueModel BrisqueModel::load(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "manifest.json"))
        throw ArchiveError("BRISQUE model not found at '" + dir.string() +
                           "'. Expected the converted archive shipped under data/brisque (or set "
                           "EDNIG_MODEL_DIR); tools/import_brisque_live.py converts the published "
                           "LIVE model, tools/train_brisque_svr.py rebuilds the shipped one.");
    TensorArchive a = TensorArchive::load(dir);
    BrisqueModel m;
    const auto& sv_shape = a.shape("support_vectors");
    if (sv_shape.size() != 2 || sv_shape[1] != 36)
        throw ArchiveError("BRISQUE model: bad support_vectors shape");
    m.n_sv = int(sv_shape[0]);
    m.support_vectors = a.data("support_vectors");
    m.coefficients = a.data("coefficients");
    m.feature_min = a.data("feature_min");
    m.feature_max = a.data("feature_max");
    if (int(m.coefficients.size()) != m.n_sv || m.feature_min.size() != 36 ||
        m.feature_max.size() != 36)
        throw ArchiveError("BRISQUE model: inconsistent tensor sizes");
    m.gamma = a.meta().at("gamma").get<double>();
    m.intercept = a.meta().at("intercept").get<double>();
    return m;
}

double BrisqueModel::predict(const std::array<double, 36>& features) const {
    std::array<double, 36> x{};
    for (std::size_t i = 0; i < 36; ++i) {
        const double lo = feature_min[i], hi = feature_max[i];
        x[i] = hi > lo ? -1.0 + 2.0 * (features[i] - lo) / (hi - lo) : 0.0;
    }
    double score = intercept;
    for (int s = 0; s < n_sv; ++s) {
        double d2 = 0.0;
        const float* sv = support_vectors.data() + std::size_t(s) * 36;
        for (std::size_t i = 0; i < 36; ++i) {
            const double d = x[i] - double(sv[i]);
            d2 += d * d;
        }
        score += double(coefficients[std::size_t(s)]) * std::exp(-gamma * d2);
    }
    return score;
}

double brisque(const Image& img, const BrisqueModel& model) {
    return model.predict(brisque_features(img));
}

NiqeModel NiqeModel::load(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "manifest.json"))
        throw ArchiveError("NIQE model not found at '" + dir.string() +
                           "'. Expected the archive shipped under data/niqe (or set "
                           "EDNIG_MODEL_DIR); tools/fit_nr_models rebuilds it from a pristine "
                           "corpus.");
    TensorArchive a = TensorArchive::load(dir);
    NiqeModel m;
    m.mean.assign(a.data("mean").begin(), a.data("mean").end());
    m.cov.assign(a.data("cov").begin(), a.data("cov").end());
    if (m.mean.size() != 36 || m.cov.size() != 36 * 36)
        throw ArchiveError("NIQE model: bad tensor sizes");
    m.patch_size = a.meta().value("patch_size", 96);
    m.sharpness_fraction = a.meta().value("sharpness_fraction", 0.75);
    return m;
}

void NiqeModel::save(const std::filesystem::path& dir, const std::string& provenance) const {
    TensorArchive a;
    a.add("mean", {36}, std::vector<float>(mean.begin(), mean.end()));
    a.add("cov", {36, 36}, std::vector<float>(cov.begin(), cov.end()));
    a.meta()["kind"] = "niqe_model";
    a.meta()["patch_size"] = patch_size;
    a.meta()["sharpness_fraction"] = sharpness_fraction;
    a.meta()["provenance"] = provenance;
    a.save(dir);
}

std::vector<std::array<double, 36>> niqe_patch_features(const Image& gray_byte, int patch_size,
                                                        double sharpness_fraction,
                                                        bool select_sharp) {
    const Image gray = to_gray_byte(gray_byte);
    const int nh = gray.height / patch_size;
    const int nw = gray.width / patch_size;
    if (nh * nw < 2)
        throw ContractError("niqe: image must hold at least 2 patches of " +
                            std::to_string(patch_size) + "x" + std::to_string(patch_size));

    // analysis on the cropped multiple-of-patch frame, as the block grid defines
    const Image cropped = crop(gray, 0, 0, nh * patch_size, nw * patch_size);
    const Image half = half_scale(cropped);

    Image sigma_field;
    const Image mscn1 = mscn(cropped, nullptr, &sigma_field);
    const Image mscn2 = mscn(half);

    // per-patch sharpness at scale 1
    std::vector<double> sharpness(std::size_t(nh) * nw, 0.0);
    for (int py = 0; py < nh; ++py)
        for (int px = 0; px < nw; ++px) {
            double acc = 0.0;
            for (int y = 0; y < patch_size; ++y)
                for (int x = 0; x < patch_size; ++x)
                    acc += sigma_field.at(py * patch_size + y, px * patch_size + x, 0);
            sharpness[std::size_t(py) * nw + px] = acc / double(patch_size * patch_size);
        }
    const double peak = *std::max_element(sharpness.begin(), sharpness.end());

    std::vector<int> selected;
    for (int i = 0; i < nh * nw; ++i)
        if (!select_sharp || sharpness[std::size_t(i)] >= sharpness_fraction * peak)
            selected.push_back(i);
    if (select_sharp && selected.size() < 2) {
        std::cerr << "niqe: only " << selected.size()
                  << " sharp patches; falling back to all patches\n";
        selected.clear();
        for (int i = 0; i < nh * nw; ++i) selected.push_back(i);
    }

    const int half_patch = patch_size / 2;
    auto block_features = [](const Image& field, int y0, int x0, int size) {
        // 18 features of one MSCN block: GGD + 4 pairwise-product AGGDs
        std::array<double, 18> out{};
        std::vector<float> vals;
        vals.reserve(std::size_t(size) * size);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) vals.push_back(field.at(y0 + y, x0 + x, 0));
        const GgdFit g = fit_ggd(vals);
        out[0] = g.alpha;
        out[1] = g.sigma * g.sigma;

        std::vector<float> pair;
        auto fill = [&](int dy, int dx, std::size_t base) {
            pair.clear();
            for (int y = std::max(0, -dy); y < size - std::max(0, dy); ++y)
                for (int x = std::max(0, -dx); x < size - std::max(0, dx); ++x)
                    pair.push_back(field.at(y0 + y, x0 + x, 0) *
                                   field.at(y0 + y + dy, x0 + x + dx, 0));
            const AggdFit f = fit_aggd(pair);
            out[base + 0] = f.alpha;
            out[base + 1] = f.mean_eta;
            out[base + 2] = f.sigma_left * f.sigma_left;
            out[base + 3] = f.sigma_right * f.sigma_right;
        };
        fill(0, 1, 2);
        fill(1, 0, 6);
        fill(1, 1, 10);
        fill(1, -1, 14);
        return out;
    };

    std::vector<std::array<double, 36>> rows;
    rows.reserve(selected.size());
    for (int idx : selected) {
        const int py = idx / nw, px = idx % nw;
        std::array<double, 36> row{};
        const auto f1 = block_features(mscn1, py * patch_size, px * patch_size, patch_size);
        const auto f2 = block_features(mscn2, py * half_patch, px * half_patch, half_patch);
        std::copy(f1.begin(), f1.end(), row.begin());
        std::copy(f2.begin(), f2.end(), row.begin() + 18);
        rows.push_back(row);
    }
    return rows;
}

namespace {

void mvg_fit(const std::vector<std::array<double, 36>>& rows, std::vector<double>& mean,
             std::vector<double>& cov) {
    const std::size_t n = rows.size();
    mean.assign(36, 0.0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < 36; ++i) mean[i] += r[i];
    for (double& m : mean) m /= double(n);

    cov.assign(36 * 36, 0.0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < 36; ++i)
            for (std::size_t j = 0; j < 36; ++j)
                cov[i * 36 + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
    const double denom = n > 1 ? double(n - 1) : 1.0;
    for (double& c : cov) c /= denom;
}

}  // namespace

double niqe(const Image& img, const NiqeModel& model) {
    const Image gray = to_gray_byte(img);
    const auto rows =
        niqe_patch_features(gray, model.patch_size, model.sharpness_fraction, true);

    std::vector<double> mean, cov;
    mvg_fit(rows, mean, cov);

    Eigen::Map<const Eigen::Matrix<double, 36, 36, Eigen::RowMajor>> s1(model.cov.data());
    Eigen::Map<const Eigen::Matrix<double, 36, 36, Eigen::RowMajor>> s2(cov.data());
    Eigen::Matrix<double, 36, 36> pooled = (s1 + s2) / 2.0;

    Eigen::Matrix<double, 36, 1> d;
    for (int i = 0; i < 36; ++i) d(i) = model.mean[std::size_t(i)] - mean[std::size_t(i)];

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(pooled);
    const Eigen::VectorXd x = cod.solve(d);
    const double q = d.dot(x);
    return std::sqrt(std::max(0.0, q));
}

NiqeModel fit_niqe_model(std::span<const Image> corpus, int patch_size,
                         double sharpness_fraction) {
    std::vector<std::array<double, 36>> all_rows;
    for (const auto& img : corpus) {
        auto rows = niqe_patch_features(to_gray_byte(img), patch_size, sharpness_fraction, true);
        all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    }
    if (all_rows.size() < 72)
        throw ContractError("fit_niqe_model: need at least 72 patch rows, got " +
                            std::to_string(all_rows.size()));
    NiqeModel m;
    m.patch_size = patch_size;
    m.sharpness_fraction = sharpness_fraction;
    mvg_fit(all_rows, m.mean, m.cov);
    return m;
}

}  // namespace ednig
