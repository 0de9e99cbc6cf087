#include "mfgsim/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mfgsim {

int default_thread_count() {
    if (const char* env = std::getenv("MFGSIM_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace mfgsim
