#include "ednig/pipeline.hpp"

namespace ednig {

Tensor assemble_input(const Image& low_byte, const IlluminationParams& params) {
    if (low_byte.channels != 3)
        throw ContractError("assemble_input: expected an RGB image");
    const Image rgb_signed = normalize(low_byte);
    const IlluminationMap illum = illumination_map(byte_to_unit(low_byte), params);

    Tensor x(low_byte.height, low_byte.width, 4);
    for (int y = 0; y < x.h; ++y)
        for (int px = 0; px < x.w; ++px) {
            float* out = x.ptr(y, px);
            out[0] = rgb_signed.at(y, px, 0);
            out[1] = rgb_signed.at(y, px, 1);
            out[2] = rgb_signed.at(y, px, 2);
            out[3] = 2.f * illum.map.at(y, px, 0) - 1.f;
        }
    return x;
}

Image enhance_image(const Generator& gen, const Image& low_byte,
                    const IlluminationParams& params, GeneratorWorkspace& ws) {
    const int m = gen.config().downsample_factor();
    Tensor x = assemble_input(low_byte, params);

    Image four(x.h, x.w, 4, ValueRange::Signed);
    four.data = std::move(x.v);
    auto [padded, box] = pad_to_multiple(four, m);

    const Tensor& out = gen.forward(image_to_tensor(padded), ws);
    Image enhanced = tensor_to_image(out, ValueRange::Signed);
    enhanced = crop_box(enhanced, box);
    return denormalize(enhanced);
}

}  // namespace ednig
