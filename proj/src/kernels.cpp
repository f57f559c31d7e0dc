#include "sdsim/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace sdsim::kernels {

namespace {

std::atomic<const Kernel*> g_forced{nullptr};

const Kernel& best_available() {
    if (const Kernel* k = avx2_kernel()) return *k;
    return scalar_kernel();
}

}  // namespace

const Kernel& active_kernel() {
    if (const Kernel* k = g_forced.load(std::memory_order_acquire)) return *k;
    static const Kernel& best = best_available();
    return best;
}

void force_kernel(KernelKind kind) {
    switch (kind) {
        case KernelKind::scalar:
            g_forced.store(&scalar_kernel(), std::memory_order_release);
            return;
        case KernelKind::avx2:
            if (const Kernel* k = avx2_kernel()) {
                g_forced.store(k, std::memory_order_release);
                return;
            }
            throw std::runtime_error("avx2 kernel not available on this machine");
    }
    throw std::runtime_error("unknown kernel kind");
}

void reset_kernel() { g_forced.store(nullptr, std::memory_order_release); }

std::vector<std::string> available_kernels() {
    std::vector<std::string> names{scalar_kernel().name};
    if (const Kernel* k = avx2_kernel()) names.emplace_back(k->name);
    return names;
}

}  // namespace sdsim::kernels
