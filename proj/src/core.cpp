#include "sfvd/core.hpp"

namespace sfvd {

// SFVD_THREADS caps worker parallelism; defaults to the hardware count.
int worker_count() {
    static int n = [] {
        int hw = int(std::thread::hardware_concurrency());
        if (hw < 1) hw = 1;
        if (const char* env = std::getenv("SFVD_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end != env && v >= 1) hw = std::min<long>(hw, v);
        }
        return hw;
    }();
    return n;
}

}  // namespace sfvd
