#include "evacnet/source_registry.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include "evacnet/csv.hpp"
#include "evacnet/error.hpp"

namespace evacnet {

namespace {

constexpr std::array<const char*, 7> kRequiredColumns = {
    "fips", "county_name", "state", "gov_website", "em_website", "microblog_handle", "social_page",
};

constexpr std::array<ChannelKind, 4> kChannelOrder = {
    ChannelKind::GovSite, ChannelKind::EmSite, ChannelKind::Microblog, ChannelKind::SocialPage,
};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::optional<std::string> cell(const std::string& value) {
    auto t = trim(value);
    if (t.empty()) return std::nullopt;
    return t;
}

}  // namespace

std::string_view to_string(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::GovSite: return "GovSite";
        case ChannelKind::EmSite: return "EmSite";
        case ChannelKind::Microblog: return "Microblog";
        case ChannelKind::SocialPage: return "SocialPage";
    }
    return "GovSite";
}

std::optional<ChannelKind> parse_channel_kind(std::string_view text) {
    if (text == "GovSite" || text == "gov_website" || text == "gov") return ChannelKind::GovSite;
    if (text == "EmSite" || text == "em_website" || text == "em") return ChannelKind::EmSite;
    if (text == "Microblog" || text == "microblog_handle" || text == "microblog") return ChannelKind::Microblog;
    if (text == "SocialPage" || text == "social_page" || text == "social") return ChannelKind::SocialPage;
    return std::nullopt;
}

const std::optional<std::string>& CountySource::channel(ChannelKind kind) const {
    switch (kind) {
        case ChannelKind::GovSite: return gov_website;
        case ChannelKind::EmSite: return em_website;
        case ChannelKind::Microblog: return microblog_handle;
        case ChannelKind::SocialPage: return social_page;
    }
    return gov_website;
}

std::size_t CountySource::channel_count() const {
    std::size_t n = 0;
    for (auto kind : kChannelOrder)
        if (channel(kind)) ++n;
    return n;
}

Registry Registry::parse(std::istream& in) {
    const auto table = csv::read(in);
    if (table.empty()) throw Error(ErrorCode::EmptyRegistry, "registry has no header");

    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < table.front().size(); ++i) column[trim(table.front()[i])] = i;
    for (const char* name : kRequiredColumns)
        if (!column.count(name)) throw Error(ErrorCode::MissingRequiredColumn, name);

    Registry reg;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& raw = table[r];
        const std::string where = "row " + std::to_string(r + 1);
        auto get = [&](const std::string& name) -> std::string {
            const auto idx = column.at(name);
            return idx < raw.size() ? raw[idx] : std::string{};
        };

        std::optional<CountyFips> fips;
        try {
            fips = CountyFips::parse(trim(get("fips")));
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedRow, where + ": " + e.what());
        }
        CountySource row{.fips = *fips,
                         .county_name = trim(get("county_name")),
                         .state = trim(get("state")),
                         .gov_website = cell(get("gov_website")),
                         .em_website = cell(get("em_website")),
                         .microblog_handle = cell(get("microblog_handle")),
                         .social_page = cell(get("social_page")),
                         .extra = {}};
        if (row.state.size() != 2 || !std::isupper(static_cast<unsigned char>(row.state[0])) ||
            !std::isupper(static_cast<unsigned char>(row.state[1])))
            throw Error(ErrorCode::MalformedRow, where + ": state must be a 2-letter uppercase code");
        if (row.channel_count() == 0)
            throw Error(ErrorCode::AtLeastOneChannel, where + ": fips " + row.fips.str() + " has no channel");
        for (const auto& [name, idx] : column) {
            if (std::find(kRequiredColumns.begin(), kRequiredColumns.end(), name) != kRequiredColumns.end()) continue;
            row.extra[name] = idx < raw.size() ? raw[idx] : std::string{};
        }
        if (reg.rows_.count(row.fips)) throw Error(ErrorCode::DuplicateFips, where + ": " + row.fips.str());
        reg.rows_.emplace(row.fips, std::move(row));
    }
    if (reg.rows_.empty()) throw Error(ErrorCode::EmptyRegistry, "registry has no rows");
    return reg;
}

Registry Registry::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open registry " + path.string());
    return parse(in);
}

const CountySource* Registry::find(const CountyFips& fips) const {
    auto it = rows_.find(fips);
    return it == rows_.end() ? nullptr : &it->second;
}

FetchPlan fetch_targets(const Registry& registry, const TargetSet& targets) {
    FetchPlan plan;
    for (const auto& fips : targets.counties) {
        const CountySource* row = registry.find(fips);
        if (!row) {
            plan.missing_counties.push_back(fips);
            continue;
        }
        for (auto kind : kChannelOrder)
            if (const auto& locator = row->channel(kind)) plan.targets.push_back({fips, kind, *locator});
    }
    return plan;
}

}  // namespace evacnet
