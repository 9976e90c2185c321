#pragma once

#include "ednig/generator.hpp"
#include "ednig/illumination.hpp"
#include "ednig/image.hpp"

namespace ednig {

// Builds the network input from a byte-range low-light RGB image: RGB mapped
// to signed range, illumination map appended as channel 4 (2M - 1).
Tensor assemble_input(const Image& low_byte, const IlluminationParams& params);

// Full single-image path: illumination, pad to the network multiple, forward,
// crop back, denormalize. Output has the input's dimensions.
Image enhance_image(const Generator& gen, const Image& low_byte,
                    const IlluminationParams& params, GeneratorWorkspace& ws);

}  // namespace ednig
