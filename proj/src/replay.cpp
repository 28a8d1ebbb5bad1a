#include "evacnet/replay.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "evacnet/error.hpp"
#include "evacnet/pipeline.hpp"

namespace evacnet {

using nlohmann::json;

namespace {

Error bad_line(std::size_t line, const std::string& why) {
    return Error(ErrorCode::MalformedScenario, "line " + std::to_string(line) + ": " + why);
}

std::string string_field(const json& doc, const char* key, std::size_t line) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) throw bad_line(line, std::string("missing string '") + key + "'");
    return it->get<std::string>();
}

Timestamp time_field(const json& doc, const char* key, std::size_t line) {
    const auto text = string_field(doc, key, line);
    try {
        return parse_rfc3339(text);
    } catch (const Error&) {
        throw bad_line(line, std::string("'") + key + "' is not RFC 3339: " + text);
    }
}

std::string kind_name(UpsertOutcome::Kind kind) {
    switch (kind) {
        case UpsertOutcome::Kind::Created: return "created";
        case UpsertOutcome::Kind::ClosedOnArrival: return "closed_on_arrival";
        case UpsertOutcome::Kind::Dropped: return "dropped";
    }
    return "created";
}

}  // namespace

std::vector<ScenarioEvent> parse_scenario(std::istream& in) {
    std::vector<ScenarioEvent> events;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw bad_line(line, e.what());
        }
        if (!doc.is_object()) throw bad_line(line, "not an object");
        ScenarioEvent ev;
        ev.line = line;
        ev.at = time_field(doc, "at", line);
        const auto kind = string_field(doc, "kind", line);
        if (kind == "alert") {
            ev.kind = ScenarioEvent::Kind::Alert;
            if (!doc.contains("document") || !doc["document"].is_object()) throw bad_line(line, "alert needs 'document'");
            ev.document = doc["document"];
        } else if (kind == "post") {
            ev.kind = ScenarioEvent::Kind::Post;
            try {
                ev.fips = CountyFips::parse(string_field(doc, "fips", line));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::MalformedScenario) throw;
                throw bad_line(line, e.what());
            }
            const auto channel = parse_channel_kind(string_field(doc, "channel", line));
            if (!channel) throw bad_line(line, "unknown channel");
            ev.channel = *channel;
            ev.text = string_field(doc, "text", line);
            ev.url = doc.contains("url") ? string_field(doc, "url", line) : std::string{};
            if (doc.contains("published_at") && !doc["published_at"].is_null())
                ev.published_at = time_field(doc, "published_at", line);
        } else if (kind == "close_all") {
            ev.kind = ScenarioEvent::Kind::CloseAll;
        } else {
            throw bad_line(line, "unknown kind '" + kind + "'");
        }
        if (!events.empty() && ev.at < events.back().at) throw bad_line(line, "events must be sorted by 'at'");
        events.push_back(std::move(ev));
    }
    return events;
}

std::vector<ScenarioEvent> load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open scenario " + path.string());
    return parse_scenario(in);
}

ReplayResult run_replay(std::span<const ScenarioEvent> events, const Registry& registry,
                        const GeometryIndex& geometry, Classifier& classifier, NoticeStore& store,
                        HarvestOptions options) {
    options.parallelism = 1;
    RegistryHandle registry_handle(registry);
    AlertBuffer alerts;
    ScriptedFetcher fetcher;
    Pipeline pipeline(registry_handle, alerts, fetcher, classifier, store, options);

    ReplayResult result;
    auto emit = [&](Timestamp at, const std::string& event, json fields) {
        json line{{"at", format_rfc3339(at)}, {"event", event}};
        line.update(fields);
        result.log.push_back(line.dump());
    };

    for (const auto& ev : events) {
        result.final_at = ev.at;
        switch (ev.kind) {
            case ScenarioEvent::Kind::Alert: {
                try {
                    const auto alert = ingest_alert_document(ev.document);
                    json codes = alert.same_codes;
                    emit(ev.at, "alert", {{"id", alert.alert_id},
                                          {"type", std::string(to_string(alert.event_type))},
                                          {"same", codes},
                                          {"expires", format_rfc3339(alert.expires_at)}});
                    alerts.ingest(alert);
                } catch (const Error& e) {
                    emit(ev.at, "alert_rejected", {{"line", ev.line}, {"reason", e.what()}});
                }
                break;
            }
            case ScenarioEvent::Kind::Post: {
                const auto snapshot = alerts.snapshot();
                const auto targets = compute_targets(snapshot, ev.at);
                json post{{"fips", ev.fips->str()}, {"channel", std::string(to_string(ev.channel))}};
                if (!targets.counties.count(*ev.fips)) {
                    post["reason"] = "untargeted county";
                    emit(ev.at, "post_skipped", post);
                    break;
                }
                const auto* row = registry.find(*ev.fips);
                if (!row) {
                    post["reason"] = "county not in registry";
                    emit(ev.at, "post_skipped", post);
                    break;
                }
                if (!row->channel(ev.channel)) {
                    post["reason"] = "channel not in registry";
                    emit(ev.at, "post_skipped", post);
                    break;
                }
                fetcher.enqueue(*ev.fips, ev.channel, FetchedItem{ev.published_at, ev.text, ev.url});
                try {
                    const auto cycle = pipeline.run_cycle(ev.at);
                    emit(ev.at, "harvest", {{"targets", cycle.plan.targets.size()},
                                            {"fetched", cycle.harvest.fetched},
                                            {"filtered_out", cycle.harvest.filtered_out},
                                            {"duplicates", cycle.harvest.duplicates}});
                    for (const auto& o : cycle.outcomes) {
                        const auto& d = o.record.distribution;
                        emit(ev.at, "upsert",
                             {{"id", o.record.id},
                              {"fips", o.record.scope_key.str()},
                              {"label", std::string(to_string(o.record.label))},
                              {"distribution", json::array({d.mandatory(), d.voluntary(), d.not_notice()})},
                              {"outcome", kind_name(o.kind)},
                              {"supersedes", o.superseded_id ? json(*o.superseded_id) : json(nullptr)}});
                    }
                } catch (const std::exception& e) {
                    ++result.errors;
                    fetcher.clear();
                    emit(ev.at, "error", {{"line", ev.line}, {"reason", e.what()}});
                }
                break;
            }
            case ScenarioEvent::Kind::CloseAll:
                emit(ev.at, "close_all", {{"closed", store.close_all(ev.at)}});
                break;
        }
    }

    Diagnostics feed_diagnostics;
    result.snapshot = geojson_feed(store, geometry, result.final_at, &feed_diagnostics);
    for (const auto& d : feed_diagnostics.snapshot())
        emit(result.final_at, "diagnostic", {{"code", d.code}, {"detail", d.detail}});
    return result;
}

std::string snapshot_text(const json& snapshot) { return snapshot.dump(2) + "\n"; }

namespace {

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == 0)
                out << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
            else
                out << "  " << std::right << std::setw(static_cast<int>(width[c])) << cells[c];
        }
        out << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& row : rows) line(row);
    return out.str();
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

ReportOutput render_report(const NoticeStore& store, GroupBy by) {
    ReportOutput out;
    std::ostringstream plot;
    plot << "key,series,count\n";
    if (by == GroupBy::Year) {
        const auto cross = store.archive_crosstab(by);
        std::vector<std::string> series;
        for (auto label : kNoticeLabels) {
            const std::string name(to_string(label));
            const bool present = std::any_of(cross.begin(), cross.end(), [&](const CrossTabRow& r) { return r.series == name; });
            if (present || label != NoticeLabel::NotNotice) series.push_back(name);
        }
        std::map<std::string, std::map<std::string, std::size_t>> grid;
        for (const auto& r : cross) {
            grid[r.key][r.series] += r.count;
            plot << csv_cell(r.key) << ',' << csv_cell(r.series) << ',' << r.count << '\n';
        }
        std::vector<std::string> header{"Year"};
        header.insert(header.end(), series.begin(), series.end());
        header.push_back("Total");
        std::vector<std::vector<std::string>> rows;
        for (const auto& [year, counts] : grid) {
            std::vector<std::string> row{year};
            std::size_t total = 0;
            for (const auto& s : series) {
                auto it = counts.find(s);
                const std::size_t n = it == counts.end() ? 0 : it->second;
                total += n;
                row.push_back(std::to_string(n));
            }
            row.push_back(std::to_string(total));
            rows.push_back(std::move(row));
        }
        out.table = render_table(header, rows);
    } else {
        const std::string key_name = by == GroupBy::State ? "State" : "Label";
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : store.archive_stats(by)) {
            rows.push_back({r.key, std::to_string(r.count)});
            plot << csv_cell(r.key) << ",Count," << r.count << '\n';
        }
        out.table = render_table({key_name, "Count"}, rows);
    }
    out.plot_data = plot.str();
    return out;
}

}  // namespace evacnet
