#include "umpire/server/command_queue.hpp"

#include <spdlog/spdlog.h>

namespace umpire::server {

CommandQueue::CommandQueue() : worker_([this] { run(); }) {}

CommandQueue::~CommandQueue() { stop(); }

bool CommandQueue::post(std::function<void()> task) {
    {
        std::lock_guard lock(mu_);
        if (stopping_) return false;
        tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
    return true;
}

void CommandQueue::stop() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_one();
    if (worker_.joinable() && !on_queue_thread()) worker_.join();
}

void CommandQueue::run() {
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
            if (tasks_.empty()) return;
            task = std::move(tasks_.front());
            tasks_.pop_front();
        }
        try {
            task();
        } catch (const std::exception& e) {
            spdlog::error("command failed: {}", e.what());
        }
    }
}

}  // namespace umpire::server
