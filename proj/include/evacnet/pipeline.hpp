#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "evacnet/alert_gateway.hpp"
#include "evacnet/classifier.hpp"
#include "evacnet/harvester.hpp"
#include "evacnet/notice_store.hpp"
#include "evacnet/source_registry.hpp"

namespace evacnet {

struct CycleReport {
    Timestamp at;
    TargetSet targets;
    FetchPlan plan;
    HarvestResult harvest;
    std::vector<UpsertOutcome> outcomes;
};

/// One pass of the workflow: alerts -> targets -> fetch plan -> harvest ->
/// classify -> upsert. Live service and replay both drive this.
///
/// Dedup keys are committed to the store only after their candidates were
/// classified and stored, so a classifier outage leaves the items eligible
/// for the next cycle instead of silently dropping them.
class Pipeline {
public:
    Pipeline(const RegistryHandle& registry, const AlertBuffer& alerts, Fetcher& fetcher, Classifier& classifier,
             NoticeStore& store, HarvestOptions options = {});

    /// Throws whatever the classifier throws; nothing is stored in that case.
    CycleReport run_cycle(Timestamp now);

private:
    const RegistryHandle& registry_;
    const AlertBuffer& alerts_;
    Fetcher& fetcher_;
    Classifier& classifier_;
    NoticeStore& store_;
    HarvestOptions options_;
};

/// Where the live service gets alert documents from.
class AlertSource {
public:
    virtual ~AlertSource() = default;
    virtual std::vector<HazardAlert> poll(std::vector<std::string>* rejects) = 0;
};

/// NDJSON documents, or one JSON feed document, re-read on every poll.
class FileAlertSource final : public AlertSource {
public:
    explicit FileAlertSource(std::filesystem::path path) : path_(std::move(path)) {}
    std::vector<HazardAlert> poll(std::vector<std::string>* rejects) override;

private:
    std::filesystem::path path_;
};

/// GETs a feed URL returning a FeatureCollection of alert documents.
class HttpAlertSource final : public AlertSource {
public:
    explicit HttpAlertSource(std::string url, std::chrono::seconds timeout = std::chrono::seconds(15));
    std::vector<HazardAlert> poll(std::vector<std::string>* rejects) override;

private:
    std::string url_;
    std::chrono::seconds timeout_;
};

struct LiveOptions {
    std::chrono::seconds alert_poll{60};
    std::chrono::seconds harvest_interval{120};
};

/// Alert poller and harvest loop on their own threads until `stop` fires.
/// Errors are logged to `log` and the loops keep going.
void run_live(AlertSource& source, AlertBuffer& alerts, Pipeline& pipeline, const LiveOptions& options,
              const Clock& clock, std::stop_token stop, std::ostream& log);

}  // namespace evacnet
