#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ednig/error.hpp"
#include "ednig/tensor.hpp"

namespace ednig {

// Declared value range of an image. Byte images live in [0,255] (still stored
// as float), unit in [0,1], signed in [-1,1] (the Tanh head's output range).
enum class ValueRange { Byte, Unit, Signed };

const char* to_string(ValueRange r);

struct Image {
    int height = 0, width = 0, channels = 0;
    ValueRange range = ValueRange::Byte;
    std::vector<float> data;  // HWC

    Image() = default;
    Image(int h, int w, int c, ValueRange r)
        : height(h), width(w), channels(c), range(r),
          data(std::size_t(h) * w * c, 0.f) {}

    float& at(int y, int x, int ch) { return data[(std::size_t(y) * width + x) * channels + ch]; }
    float at(int y, int x, int ch) const {
        return data[(std::size_t(y) * width + x) * channels + ch];
    }
    std::size_t size() const { return data.size(); }
    bool same_dims(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

// byte -> signed, v / 127.5 - 1. Throws ContractError on a non-byte input.
Image normalize(const Image& img);

// signed -> byte, clamp((v + 1) * 127.5, 0, 255). Throws ContractError on a
// non-signed input. normalize then denormalize restores byte values exactly
// after quantization.
Image denormalize(const Image& img);

Image byte_to_unit(const Image& img);
Image unit_to_byte(const Image& img);

std::uint8_t quantize_u8(float v);

// Rec.601 luma; output single channel, same range as the input.
Image grayscale_luma(const Image& rgb);

Image crop(const Image& img, int y0, int x0, int h, int w);
Image flip_horizontal(const Image& img);

// Pixel-center-aligned bilinear resampling (dst x maps to (x+0.5)*scale-0.5).
Image resize_bilinear(const Image& img, int out_height, int out_width);

// 8-bit PNG I/O. read_png returns a byte-range image with 1 or 3 channels.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

struct CropBox {
    int y0 = 0, x0 = 0, height = 0, width = 0;
};

// Reflect-pads right/bottom to the next multiple of m; the returned box crops
// the original frame back out exactly.
std::pair<Image, CropBox> pad_to_multiple(const Image& img, int multiple);
Image crop_box(const Image& img, const CropBox& box);

// Image <-> network tensor bridges.
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, ValueRange range);

}  // namespace ednig
