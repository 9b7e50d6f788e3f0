#ifndef CUSPWAVE_FFTW_SUPPORT_HPP
#define CUSPWAVE_FFTW_SUPPORT_HPP

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>

namespace cuspwave::detail {

// FFTW planner calls are not thread-safe; executions on distinct arrays are.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <typename T>
class FftwBuffer {
public:
    FftwBuffer() = default;
    explicit FftwBuffer(std::size_t n) : size_(n) {
        data_ = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    }
    ~FftwBuffer() {
        if (data_) fftw_free(data_);
    }
    FftwBuffer(FftwBuffer&& o) noexcept : data_(o.data_), size_(o.size_) {
        o.data_ = nullptr;
        o.size_ = 0;
    }
    FftwBuffer& operator=(FftwBuffer&& o) noexcept {
        if (this != &o) {
            if (data_) fftw_free(data_);
            data_ = o.data_;
            size_ = o.size_;
            o.data_ = nullptr;
            o.size_ = 0;
        }
        return *this;
    }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    T* data() noexcept { return data_; }
    const T* data() const noexcept { return data_; }
    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return data_ == nullptr; }

private:
    T* data_ = nullptr;
    std::size_t size_ = 0;
};

class FftwPlan {
public:
    FftwPlan() = default;
    explicit FftwPlan(fftw_plan p) : plan_(p) {}
    ~FftwPlan() { reset(); }
    FftwPlan(FftwPlan&& o) noexcept : plan_(o.plan_) { o.plan_ = nullptr; }
    FftwPlan& operator=(FftwPlan&& o) noexcept {
        if (this != &o) {
            reset();
            plan_ = o.plan_;
            o.plan_ = nullptr;
        }
        return *this;
    }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;

    void reset() {
        if (plan_) {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fftw_destroy_plan(plan_);
            plan_ = nullptr;
        }
    }
    fftw_plan get() const noexcept { return plan_; }
    explicit operator bool() const noexcept { return plan_ != nullptr; }

private:
    fftw_plan plan_ = nullptr;
};

inline fftw_complex* as_fftw(std::complex<double>* p) noexcept {
    return reinterpret_cast<fftw_complex*>(p);
}

} // namespace cuspwave::detail

#endif
