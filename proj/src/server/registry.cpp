#include "umpire/server/registry.hpp"

namespace umpire::server {

std::shared_ptr<ConferenceService> ConferenceRegistry::create(ConferenceConfig config) {
    std::lock_guard lock(mu_);
    const auto id = config.id;
    if (conferences_.contains(id)) throw std::invalid_argument("conference " + std::to_string(id) + " exists");
    auto svc = std::make_shared<ConferenceService>(std::move(config));
    conferences_[id] = svc;
    return svc;
}

std::shared_ptr<ConferenceService> ConferenceRegistry::find(std::uint32_t id) const {
    std::lock_guard lock(mu_);
    auto it = conferences_.find(id);
    return it == conferences_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<ConferenceService>> ConferenceRegistry::all() const {
    std::lock_guard lock(mu_);
    std::vector<std::shared_ptr<ConferenceService>> out;
    for (const auto& [id, svc] : conferences_) out.push_back(svc);
    return out;
}

void ConferenceRegistry::stop_all() {
    for (const auto& svc : all()) svc->stop();
}

}  // namespace umpire::server
