#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evacnet/alert_gateway.hpp"

namespace evacnet {

enum class ChannelKind { GovSite, EmSite, Microblog, SocialPage };

std::string_view to_string(ChannelKind kind);
/// Accepts the enum spelling or the registry column name
/// (`gov_website`, `em_website`, `microblog_handle`, `social_page`).
std::optional<ChannelKind> parse_channel_kind(std::string_view text);

/// One row of the location spreadsheet.
struct CountySource {
    CountyFips fips;
    std::string county_name;
    std::string state;
    std::optional<std::string> gov_website;
    std::optional<std::string> em_website;
    std::optional<std::string> microblog_handle;
    std::optional<std::string> social_page;
    // Unrecognized columns, kept verbatim.
    std::map<std::string, std::string> extra;

    const std::optional<std::string>& channel(ChannelKind kind) const;
    std::size_t channel_count() const;

    bool operator==(const CountySource&) const = default;
};

struct FetchTarget {
    CountyFips fips;
    ChannelKind channel_kind;
    std::string locator;

    auto operator<=>(const FetchTarget&) const = default;
};

struct FetchPlan {
    std::vector<FetchTarget> targets;
    // Targeted counties with no registry row.
    std::vector<CountyFips> missing_counties;
};

class Registry {
public:
    /// Header-bearing CSV with columns
    /// `fips,county_name,state,gov_website,em_website,microblog_handle,social_page`.
    /// Throws Error(DuplicateFips | MissingRequiredColumn | EmptyRegistry |
    /// AtLeastOneChannel | MalformedRow).
    static Registry parse(std::istream& in);
    static Registry load(const std::filesystem::path& path);

    const CountySource* find(const CountyFips& fips) const;
    const std::map<CountyFips, CountySource>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }

    bool operator==(const Registry&) const = default;

private:
    std::map<CountyFips, CountySource> rows_;
};

inline Registry load_registry(const std::filesystem::path& path) { return Registry::load(path); }

/// One target per present channel per targeted county, in (fips, channel) order.
FetchPlan fetch_targets(const Registry& registry, const TargetSet& targets);

/// Holds the current registry; reload swaps the whole thing at once so
/// readers never see a partially loaded table.
class RegistryHandle {
public:
    explicit RegistryHandle(Registry initial)
        : current_(std::make_shared<const Registry>(std::move(initial))) {}

    std::shared_ptr<const Registry> get() const {
        std::lock_guard lock(mutex_);
        return current_;
    }

    void replace(Registry next) {
        auto fresh = std::make_shared<const Registry>(std::move(next));
        std::lock_guard lock(mutex_);
        current_ = std::move(fresh);
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const Registry> current_;
};

}  // namespace evacnet
