#include "sclab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "sclab/error.hpp"

namespace sclab {

namespace {

struct PlanKey {
    std::vector<int> shape;
    int sign;
    auto operator<=>(const PlanKey&) const = default;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(const std::vector<int>& shape, int sign) {
        std::lock_guard lock(mutex_);
        PlanKey key{shape, sign};
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int s : shape) total *= static_cast<std::size_t>(s);
        // Planning with FFTW_ESTIMATE never touches the data, but FFTW wants a buffer.
        auto* scratch = fftw_alloc_complex(total);
        fftw_plan plan = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), scratch, scratch, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(scratch);
        require(plan != nullptr, ErrorKind::InvalidArgument, "FFTW failed to create a plan");
        plans_.emplace(std::move(key), plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

template <class Map>
std::vector<cplx> reorder(std::span<const cplx> data, std::span<const std::size_t> shape, Map shift) {
    std::vector<cplx> out(data.size());
    if (shape.size() == 1) {
        const std::size_t n = shape[0];
        for (std::size_t k = 0; k < n; ++k) out[shift(k, n)] = data[k];
    } else {
        const std::size_t n0 = shape[0], n1 = shape[1];
        for (std::size_t a = 0; a < n0; ++a)
            for (std::size_t b = 0; b < n1; ++b) out[shift(a, n0) * n1 + shift(b, n1)] = data[a * n1 + b];
    }
    return out;
}

}  // namespace

void fft_inplace(std::span<cplx> data, std::span<const std::size_t> shape, FftDirection dir) {
    require(shape.size() == 1 || shape.size() == 2, ErrorKind::InvalidArgument, "fft rank must be 1 or 2");
    std::vector<int> dims;
    std::size_t total = 1;
    for (auto s : shape) {
        dims.push_back(static_cast<int>(s));
        total *= s;
    }
    require(total == data.size(), ErrorKind::InvalidArgument, "fft shape does not match data size");
    const int sign = dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(dims, sign), ptr, ptr);
}

std::vector<cplx> fft_to_centered(std::span<const cplx> data, std::span<const std::size_t> shape) {
    return reorder(data, shape, [](std::size_t k, std::size_t n) { return (k + n / 2) % n; });
}

std::vector<cplx> centered_to_fft(std::span<const cplx> data, std::span<const std::size_t> shape) {
    return reorder(data, shape, [](std::size_t k, std::size_t n) { return (k + n - n / 2) % n; });
}

}  // namespace sclab
