#include "erp/parallel.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace erp {

namespace {

class Pool {
public:
    explicit Pool(int n) {
        for (int i = 0; i < n; ++i) threads_.emplace_back([this] { loop(); });
    }
    ~Pool() {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void submit(std::function<void()> job) {
        {
            std::lock_guard lock(mu_);
            jobs_.push_back(std::move(job));
        }
        cv_.notify_one();
    }

    int size() const { return static_cast<int>(threads_.size()); }

private:
    void loop() {
        for (;;) {
            std::function<void()> job;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [this] { return stop_ || !jobs_.empty(); });
                if (stop_ && jobs_.empty()) return;
                job = std::move(jobs_.front());
                jobs_.pop_front();
            }
            job();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> jobs_;
    std::vector<std::thread> threads_;
    bool stop_ = false;
};

Pool& pool() {
    // the calling thread is the extra worker
    static Pool p(std::max(0, worker_count() - 1));
    return p;
}

struct ForState {
    int n = 0;
    const std::function<void(int)>* fn = nullptr;
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex err_mu;
    std::exception_ptr err;

    void work() {
        for (int i; (i = next.fetch_add(1)) < n;) {
            try {
                (*fn)(i);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!err) err = std::current_exception();
            }
            if (done.fetch_add(1) + 1 == n) done.notify_all();
        }
    }
};

}  // namespace

int worker_count() {
    static const int count = [] {
        int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        if (const char* env = std::getenv("ERP_THREADS")) {
            try {
                const int cap = std::stoi(env);
                if (cap >= 1) n = std::min(n, cap);
            } catch (...) {
            }
        }
        return n;
    }();
    return count;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (n == 1 || worker_count() == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    auto st = std::make_shared<ForState>();
    st->n = n;
    st->fn = &fn;
    const int helpers = std::min(n - 1, pool().size());
    for (int h = 0; h < helpers; ++h) pool().submit([st] { st->work(); });
    st->work();
    for (int d = st->done.load(); d < n; d = st->done.load()) st->done.wait(d);
    if (st->err) std::rethrow_exception(st->err);
}

void tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace erp
