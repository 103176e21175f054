#include "fft.hpp"

#include <map>
#include <mutex>
#include <tuple>
#include <utility>

#include <fftw3.h>

namespace phaseless::detail {
namespace {

// FFTW planning is not thread-safe; execution with new-array functions is.
// Plans are estimated (not measured) so the same arithmetic runs every time.
fftw_plan plan_for(const Shape& shape, int sign) {
    static std::mutex mutex;
    static std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> cache;

    std::lock_guard lock(mutex);
    auto key = std::make_tuple(shape.rows, shape.cols, sign);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    auto* buffer = fftw_alloc_complex(shape.size());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = shape.is_2d()
        ? fftw_plan_dft_2d(static_cast<int>(shape.rows), static_cast<int>(shape.cols), buffer,
                           buffer, sign, flags)
        : fftw_plan_dft_1d(static_cast<int>(shape.rows), buffer, buffer, sign, flags);
    fftw_free(buffer);
    require(plan != nullptr, ErrorCode::Numeric, "fftw planning failed");
    cache.emplace(key, plan);
    return plan;
}

void execute(const Shape& shape, int sign, CVector& data) {
    require(static_cast<std::size_t>(data.size()) == shape.size(), ErrorCode::DimensionMismatch,
            "fft: buffer size does not match shape");
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_for(shape, sign), ptr, ptr);
}

} // namespace

void fft_forward(const Shape& shape, CVector& data) { execute(shape, FFTW_FORWARD, data); }

void fft_inverse(const Shape& shape, CVector& data) {
    execute(shape, FFTW_BACKWARD, data);
    data /= static_cast<double>(shape.size());
}

} // namespace phaseless::detail
