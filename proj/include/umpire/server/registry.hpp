#pragma once

#include "umpire/server/conference_service.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace umpire::server {

class ConferenceRegistry {
public:
    /// Throws std::invalid_argument if the id is taken.
    std::shared_ptr<ConferenceService> create(ConferenceConfig config);
    [[nodiscard]] std::shared_ptr<ConferenceService> find(std::uint32_t id) const;
    [[nodiscard]] std::vector<std::shared_ptr<ConferenceService>> all() const;
    void stop_all();

private:
    mutable std::mutex mu_;
    std::map<std::uint32_t, std::shared_ptr<ConferenceService>> conferences_;
};

}  // namespace umpire::server
