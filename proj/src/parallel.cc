#include "qrmi/parallel.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qrmi {

int worker_count() {
    if (const char *env = std::getenv("QRMI_THREADS"); env != nullptr && *env != '\0') {
        size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(env, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != std::string(env).size() || value < 1) {
            throw std::invalid_argument(std::string("QRMI_THREADS must be a positive integer, got '") + env + "'");
        }
        return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int workers, const std::function<void(int)> &body) {
    if (count <= 0) {
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    const int threads = std::clamp(workers, 1, count);
    std::atomic<int> next{0};
    auto run = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; t++) {
            pool.emplace_back(run);
        }
        for (std::thread &t : pool) {
            t.join();
        }
    }
    for (const std::exception_ptr &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace qrmi
