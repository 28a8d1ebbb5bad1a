#include "evacnet/pipeline.hpp"

#include <condition_variable>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "evacnet/error.hpp"
#include "evacnet/url.hpp"

namespace evacnet {

namespace {

// Seen keys staged for one cycle on top of the store's committed set.
class StagedSeen final : public SeenStore {
public:
    explicit StagedSeen(SeenStore& base) : base_(base) {}
    bool insert(DedupKey key) override {
        if (base_.contains(key)) return false;
        return staged_.insert(key).second;
    }
    bool contains(DedupKey key) const override { return staged_.count(key) || base_.contains(key); }
    void commit() {
        for (auto key : staged_) base_.insert(key);
        staged_.clear();
    }

private:
    SeenStore& base_;
    std::set<DedupKey> staged_;
};

}  // namespace

Pipeline::Pipeline(const RegistryHandle& registry, const AlertBuffer& alerts, Fetcher& fetcher, Classifier& classifier,
                   NoticeStore& store, HarvestOptions options)
    : registry_(registry),
      alerts_(alerts),
      fetcher_(fetcher),
      classifier_(classifier),
      store_(store),
      options_(options) {}

CycleReport Pipeline::run_cycle(Timestamp now) {
    CycleReport report;
    report.at = now;
    const auto alerts = alerts_.snapshot();
    report.targets = compute_targets(alerts, now);
    report.plan = fetch_targets(*registry_.get(), report.targets);

    StagedSeen seen(store_.seen());
    report.harvest = harvest_cycle(report.plan.targets, fetcher_, seen, options_, [now] { return now; });

    std::vector<std::string> texts;
    texts.reserve(report.harvest.candidates.size());
    for (const auto& c : report.harvest.candidates) texts.push_back(c.normalized_text);
    const auto dists = texts.empty() ? std::vector<LabelDistribution>{} : classifier_.classify(texts);
    if (dists.size() != texts.size())
        throw Error(ErrorCode::ProtocolError, "classifier returned " + std::to_string(dists.size()) + " rows for " +
                                                  std::to_string(texts.size()) + " texts");
    for (std::size_t i = 0; i < dists.size(); ++i)
        report.outcomes.push_back(store_.upsert(report.harvest.candidates[i], dists[i]));
    seen.commit();
    return report;
}

std::vector<HazardAlert> FileAlertSource::poll(std::vector<std::string>* rejects) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open alert file " + path_.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    // A single JSON document (feed or alert) parses whole; otherwise NDJSON.
    try {
        return ingest_alert_feed(nlohmann::json::parse(text), rejects);
    } catch (const nlohmann::json::parse_error&) {
        std::istringstream lines(text);
        return read_alert_stream(lines, rejects);
    }
}

HttpAlertSource::HttpAlertSource(std::string url, std::chrono::seconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
    if (!parse_url(url_)) throw Error(ErrorCode::InvalidEndpoint, "alert endpoint '" + url_ + "'");
}

std::vector<HazardAlert> HttpAlertSource::poll(std::vector<std::string>* rejects) {
    const Url url = *parse_url(url_);
    httplib::Client client(url.origin());
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_follow_location(true);
    auto res = client.Get(url.path.empty() ? "/" : url.path, {{"Accept", "application/geo+json, application/json"}});
    if (!res) throw Error(ErrorCode::FetchFailed, url_ + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(ErrorCode::FetchFailed, url_ + ": HTTP " + std::to_string(res->status));
    try {
        return ingest_alert_feed(nlohmann::json::parse(res->body), rejects);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, url_ + ": " + e.what());
    }
}

void run_live(AlertSource& source, AlertBuffer& alerts, Pipeline& pipeline, const LiveOptions& options,
              const Clock& clock, std::stop_token stop, std::ostream& log) {
    std::mutex log_mutex;
    auto say = [&](const std::string& line) {
        std::lock_guard lock(log_mutex);
        log << format_rfc3339(clock()) << ' ' << line << std::endl;
    };
    auto every = [&](std::chrono::seconds period, auto&& body) {
        std::mutex m;
        std::condition_variable_any cv;
        while (!stop.stop_requested()) {
            try {
                body();
            } catch (const std::exception& e) {
                say(std::string("error: ") + e.what());
            }
            std::unique_lock lock(m);
            cv.wait_for(lock, stop, period, [] { return false; });
        }
    };

    std::jthread poller([&] {
        every(options.alert_poll, [&] {
            std::vector<std::string> rejects;
            auto fresh = source.poll(&rejects);
            for (auto& a : fresh) alerts.ingest(std::move(a));
            for (const auto& r : rejects) say("alert rejected: " + r);
            say("alerts polled: " + std::to_string(fresh.size()) + " documents, buffer " +
                std::to_string(alerts.size()));
        });
    });
    every(options.harvest_interval, [&] {
        const auto report = pipeline.run_cycle(clock());
        for (const auto& f : report.harvest.failures)
            say("fetch failed: " + f.target.fips.str() + " " + std::string(to_string(f.target.channel_kind)) + ": " +
                f.message);
        say("cycle: " + std::to_string(report.targets.counties.size()) + " counties, " +
            std::to_string(report.plan.targets.size()) + " targets, " + std::to_string(report.harvest.fetched) +
            " fetched, " + std::to_string(report.outcomes.size()) + " stored");
    });
}

}  // namespace evacnet
