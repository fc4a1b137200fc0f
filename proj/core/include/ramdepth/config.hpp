#pragma once

// Scalar type of the tensor engine. The library is built as float32; a
// float64 build of the same sources (RAMDEPTH_DOUBLE) exists for gradient
// checking and lives in its own inline namespace so both can link together.

#if defined(RAMDEPTH_DOUBLE)
#define RAMDEPTH_PRECISION f64
#else
#define RAMDEPTH_PRECISION f32
#endif

namespace ramdepth::inline RAMDEPTH_PRECISION {

#if defined(RAMDEPTH_DOUBLE)
using real = double;
#else
using real = float;
#endif

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
