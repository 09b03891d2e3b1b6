#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sce/rng.hpp"

namespace sce {

enum class Role { user, assistant };

inline std::string_view role_name(Role r) { return r == Role::user ? "user" : "assistant"; }

inline Role role_from_name(std::string_view name) {
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    throw std::invalid_argument("unknown role: " + std::string(name));
}

struct Message {
    Role role;
    std::string text;
    bool operator==(const Message&) const = default;
};

// Ordered chat history. Roles must alternate starting with user and no
// turn may be empty; push_* enforce both.
class Conversation {
public:
    Conversation() = default;

    void push_user(std::string text) { push(Role::user, std::move(text)); }
    void push_assistant(std::string text) { push(Role::assistant, std::move(text)); }

    const std::vector<Message>& messages() const { return messages_; }
    bool empty() const { return messages_.empty(); }
    std::size_t size() const { return messages_.size(); }
    const Message& back() const { return messages_.back(); }
    bool ends_with_user() const { return !empty() && back().role == Role::user; }

    bool operator==(const Conversation&) const = default;

    // Wire shape: [{"role": ..., "content": ...}, ...]
    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& m : messages_)
            arr.push_back({{"role", std::string(role_name(m.role))}, {"content", m.text}});
        return arr;
    }

    static Conversation from_json(const nlohmann::json& j) {
        Conversation conv;
        for (const auto& m : j) {
            Role role = role_from_name(m.at("role").get<std::string>());
            std::string text = m.at("content").get<std::string>();
            if (role == Role::user)
                conv.push_user(std::move(text));
            else
                conv.push_assistant(std::move(text));
        }
        return conv;
    }

    // Stable content fingerprint, used to key scripted replies.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 14695981039346656037ull;
        for (const auto& m : messages_) {
            h = fnv1a(role_name(m.role), h);
            h = fnv1a("\x1f", h);
            h = fnv1a(m.text, h);
            h = fnv1a("\x1e", h);
        }
        return h;
    }

private:
    void push(Role role, std::string text) {
        if (text.empty()) throw std::invalid_argument("empty conversation turn");
        const bool expect_user = messages_.empty() || messages_.back().role == Role::assistant;
        if ((role == Role::user) != expect_user)
            throw std::invalid_argument("conversation roles must alternate starting with user");
        messages_.push_back({role, std::move(text)});
    }

    std::vector<Message> messages_;
};

}  // namespace sce
