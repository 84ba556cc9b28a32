#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <type_traits>

namespace umpire::server {

/// Runs submitted tasks one at a time on a dedicated thread, in submission
/// order. This is the single serialization point for a conference: every
/// entry point (BFCP, HTTP, badge) funnels its mutations through here.
class CommandQueue {
public:
    CommandQueue();
    ~CommandQueue();
    CommandQueue(const CommandQueue&) = delete;
    CommandQueue& operator=(const CommandQueue&) = delete;

    /// Fire and forget. Returns false once the queue is stopped.
    bool post(std::function<void()> task);

    /// Runs fn on the queue thread and waits for its result; exceptions
    /// thrown by fn are rethrown here. Calling from the queue thread itself
    /// runs fn inline.
    template <typename F>
    auto call(F&& fn) -> std::invoke_result_t<F> {
        using R = std::invoke_result_t<F>;
        if (on_queue_thread()) return fn();
        std::packaged_task<R()> task(std::forward<F>(fn));
        auto result = task.get_future();
        auto shared = std::make_shared<std::packaged_task<R()>>(std::move(task));
        if (!post([shared] { (*shared)(); })) throw std::runtime_error("command queue stopped");
        return result.get();
    }

    [[nodiscard]] bool on_queue_thread() const { return std::this_thread::get_id() == worker_.get_id(); }

    /// Drains already queued tasks, then joins the worker.
    void stop();

private:
    void run();

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> tasks_;
    bool stopping_ = false;
    std::thread worker_;
};

}  // namespace umpire::server
