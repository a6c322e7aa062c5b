#include "mmwsar/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace mmwsar::fft {

namespace {
// FFTW planning is not thread-safe; execution of a ready plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

void fft2(std::span<Complex> data, std::size_t ny, std::size_t nx, bool inverse) {
    if (data.size() != nx * ny) throw ShapeError("fft2: data size does not match nx*ny");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf, buf,
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(nx * ny);
        for (auto& v : data) v *= scale;
    }
}

}  // namespace mmwsar::fft
