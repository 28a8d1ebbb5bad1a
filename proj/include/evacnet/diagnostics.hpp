#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace evacnet {

struct Diagnostic {
    std::string code;
    std::string detail;

    bool operator==(const Diagnostic&) const = default;
};

/// Thread-safe, append-only sink for non-fatal conditions.
class Diagnostics {
public:
    Diagnostics() = default;
    Diagnostics(const Diagnostics& other) : entries_(other.snapshot()) {}
    Diagnostics& operator=(const Diagnostics& other) {
        if (this != &other) {
            auto copy = other.snapshot();
            std::lock_guard lock(mutex_);
            entries_ = std::move(copy);
        }
        return *this;
    }

    void add(std::string code, std::string detail) {
        std::lock_guard lock(mutex_);
        entries_.push_back({std::move(code), std::move(detail)});
    }

    std::vector<Diagnostic> snapshot() const {
        std::lock_guard lock(mutex_);
        return entries_;
    }

    std::size_t count(const std::string& code) const {
        std::lock_guard lock(mutex_);
        std::size_t n = 0;
        for (const auto& e : entries_)
            if (e.code == code) ++n;
        return n;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

private:
    mutable std::mutex mutex_;
    std::vector<Diagnostic> entries_;
};

}  // namespace evacnet
