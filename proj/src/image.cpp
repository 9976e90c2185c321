#include "ednig/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace ednig {

const char* to_string(ValueRange r) {
    switch (r) {
        case ValueRange::Byte: return "byte";
        case ValueRange::Unit: return "unit";
        case ValueRange::Signed: return "signed";
    }
    return "?";
}

namespace {

void require_range(const Image& img, ValueRange expected, const char* op) {
    if (img.range != expected)
        throw ContractError(std::string(op) + ": expected " + to_string(expected) +
                            "-range input, got " + to_string(img.range));
}

}  // namespace

Image normalize(const Image& img) {
    require_range(img, ValueRange::Byte, "normalize");
    Image out(img.height, img.width, img.channels, ValueRange::Signed);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] / 127.5f - 1.f;
    return out;
}

Image denormalize(const Image& img) {
    require_range(img, ValueRange::Signed, "denormalize");
    Image out(img.height, img.width, img.channels, ValueRange::Byte);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = std::clamp((img.data[i] + 1.f) * 127.5f, 0.f, 255.f);
    return out;
}

Image byte_to_unit(const Image& img) {
    require_range(img, ValueRange::Byte, "byte_to_unit");
    Image out(img.height, img.width, img.channels, ValueRange::Unit);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] / 255.f;
    return out;
}

Image unit_to_byte(const Image& img) {
    require_range(img, ValueRange::Unit, "unit_to_byte");
    Image out(img.height, img.width, img.channels, ValueRange::Byte);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = std::clamp(img.data[i] * 255.f, 0.f, 255.f);
    return out;
}

std::uint8_t quantize_u8(float v) {
    return std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
}

Image grayscale_luma(const Image& rgb) {
    if (rgb.channels != 3)
        throw ContractError("grayscale_luma: expected 3 channels, got " +
                            std::to_string(rgb.channels));
    Image out(rgb.height, rgb.width, 1, rgb.range);
    const float* p = rgb.data.data();
    for (std::size_t i = 0; i < out.data.size(); ++i, p += 3)
        out.data[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
    return out;
}

Image crop(const Image& img, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > img.height || x0 + w > img.width)
        throw ContractError("crop: window out of bounds");
    Image out(h, w, img.channels, img.range);
    const std::size_t row_bytes = std::size_t(w) * img.channels * sizeof(float);
    for (int y = 0; y < h; ++y) {
        const float* src =
            img.data.data() + (std::size_t(y0 + y) * img.width + x0) * img.channels;
        std::memcpy(&out.at(y, 0, 0), src, row_bytes);
    }
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.height, img.width, img.channels, img.range);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(y, x, ch) = img.at(y, img.width - 1 - x, ch);
    return out;
}

Image resize_bilinear(const Image& img, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1)
        throw ContractError("resize_bilinear: output dims must be positive");
    if (out_height == img.height && out_width == img.width) return img;

    Image out(out_height, out_width, img.channels, img.range);
    const float sy = float(img.height) / float(out_height);
    const float sx = float(img.width) / float(out_width);
    const int c = img.channels;

    for (int y = 0; y < out_height; ++y) {
        float fy = (y + 0.5f) * sy - 0.5f;
        fy = std::clamp(fy, 0.f, float(img.height - 1));
        const int y0 = int(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const float wy = fy - y0;
        for (int x = 0; x < out_width; ++x) {
            float fx = (x + 0.5f) * sx - 0.5f;
            fx = std::clamp(fx, 0.f, float(img.width - 1));
            const int x0 = int(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const float wx = fx - x0;
            for (int ch = 0; ch < c; ++ch) {
                const float a = img.at(y0, x0, ch) * (1 - wx) + img.at(y0, x1, ch) * wx;
                const float b = img.at(y1, x0, ch) * (1 - wx) + img.at(y1, x1, ch) * wx;
                out.at(y, x, ch) = a * (1 - wy) + b * wy;
            }
        }
    }
    return out;
}

Image read_png(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw ContractError("read_png: cannot read " + path.string());
    if (m.depth() != CV_8U)
        throw ContractError("read_png: expected an 8-bit image: " + path.string());

    if (m.channels() == 4) {
        cv::Mat tmp;
        cv::cvtColor(m, tmp, cv::COLOR_BGRA2BGR);
        m = tmp;
    }
    if (m.channels() != 1 && m.channels() != 3)
        throw ContractError("read_png: unsupported channel count " +
                            std::to_string(m.channels()) + ": " + path.string());

    Image out(m.rows, m.cols, m.channels(), ValueRange::Byte);
    for (int y = 0; y < m.rows; ++y) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            if (m.channels() == 1) {
                out.at(y, x, 0) = float(row[x]);
            } else {
                // OpenCV stores BGR.
                out.at(y, x, 0) = float(row[3 * x + 2]);
                out.at(y, x, 1) = float(row[3 * x + 1]);
                out.at(y, x, 2) = float(row[3 * x + 0]);
            }
        }
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    if (img.range != ValueRange::Byte)
        throw ContractError("write_png: expected a byte-range image");
    if (img.channels != 1 && img.channels != 3)
        throw ContractError("write_png: only 1- or 3-channel images are written");

    cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            if (img.channels == 1) {
                row[x] = quantize_u8(img.at(y, x, 0));
            } else {
                row[3 * x + 0] = quantize_u8(img.at(y, x, 2));
                row[3 * x + 1] = quantize_u8(img.at(y, x, 1));
                row[3 * x + 2] = quantize_u8(img.at(y, x, 0));
            }
        }
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write to a temp name then rename so readers never see partial files.
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp.png");
    if (!cv::imwrite(tmp.string(), m))
        throw ContractError("write_png: imwrite failed for " + path.string());
    std::filesystem::rename(tmp, path);
}

std::pair<Image, CropBox> pad_to_multiple(const Image& img, int multiple) {
    if (multiple < 1) throw ContractError("pad_to_multiple: multiple must be positive");
    const int new_h = (img.height + multiple - 1) / multiple * multiple;
    const int new_w = (img.width + multiple - 1) / multiple * multiple;
    const CropBox box{0, 0, img.height, img.width};
    if (new_h == img.height && new_w == img.width) return {img, box};

    // Mirror with edge duplication; falls back to the edge pixel when the
    // pad exceeds the image size.
    auto reflect = [](int i, int n) {
        if (i < n) return i;
        const int r = 2 * n - 1 - i;
        return std::clamp(r, 0, n - 1);
    };

    Image out(new_h, new_w, img.channels, img.range);
    for (int y = 0; y < new_h; ++y) {
        const int sy = reflect(y, img.height);
        for (int x = 0; x < new_w; ++x) {
            const int sx = reflect(x, img.width);
            for (int ch = 0; ch < img.channels; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
        }
    }
    return {std::move(out), box};
}

Image crop_box(const Image& img, const CropBox& box) {
    return crop(img, box.y0, box.x0, box.height, box.width);
}

Tensor image_to_tensor(const Image& img) {
    Tensor t(img.height, img.width, img.channels);
    t.v = img.data;
    return t;
}

Image tensor_to_image(const Tensor& t, ValueRange range) {
    Image img(t.h, t.w, t.c, range);
    img.data = t.v;
    return img;
}

}  // namespace ednig
