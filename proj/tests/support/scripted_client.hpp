#pragma once

#include <string>
#include <vector>

#include "proact/backend.hpp"
#include "proact/errors.hpp"

namespace testsupport {

/// Replays canned replies in call order (ignoring content) and records every
/// request. Throws TransportError once the script is exhausted, which doubles
/// as a backend-failure fixture.
class ScriptedClient : public proact::ChatClient {
  public:
    explicit ScriptedClient(std::vector<std::string> replies)
        : replies_(std::move(replies)) {}

    std::string complete(const std::vector<proact::ChatMessage>& messages,
                         const proact::CallOptions& options = {}) override {
        (void)options;
        requests_.push_back(messages);
        if (next_ >= replies_.size())
            throw proact::TransportError("scripted client exhausted");
        return replies_[next_++];
    }

    const std::vector<std::vector<proact::ChatMessage>>& requests() const {
        return requests_;
    }

  private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
    std::vector<std::vector<proact::ChatMessage>> requests_;
};

}  // namespace testsupport
