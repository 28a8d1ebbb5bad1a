// evacnet: eval | replay | report | export | serve
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "evacnet/api.hpp"
#include "evacnet/error.hpp"
#include "evacnet/eval.hpp"
#include "evacnet/pipeline.hpp"
#include "evacnet/remote_client.hpp"
#include "evacnet/replay.hpp"

using namespace evacnet;

namespace {

struct BackendFlags {
    std::string backend = "lexical";
    std::string endpoint;
    std::string model_id;

    void attach(CLI::App* app) {
        app->add_option("--backend", backend, "lexical or remote")->check(CLI::IsMember({"lexical", "remote"}));
        app->add_option("--endpoint", endpoint, "classifier server base URL (remote backend)");
        app->add_option("--model-id", model_id, "model id sent to /classify (remote backend)");
    }

    std::unique_ptr<Classifier> make(Diagnostics* diagnostics) const {
        if (backend == "lexical") return std::make_unique<LexicalClassifier>();
        if (endpoint.empty()) throw CLI::ValidationError("--endpoint", "required with --backend remote");
        return std::make_unique<RemoteClassifier>(RemoteRef{endpoint, model_id}, RetryPolicy{}, 3, 32, diagnostics);
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
}

std::atomic<bool> g_stop{false};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evacuation notice pipeline"};
    app.require_subcommand(1);

    // eval
    auto* eval = app.add_subcommand("eval", "cross-validate a backend on a labeled corpus");
    std::string data_path, task_name = "three", json_out;
    std::size_t k = 10;
    std::uint64_t seed = 0;
    bool no_stratify = false, parallel = false, population_std = false;
    BackendFlags eval_backend;
    eval->add_option("--data", data_path, "labeled CSV: text,gold,origin,year,fips")->required();
    eval->add_option("--task", task_name, "binary or three")->check(CLI::IsMember({"binary", "three"}));
    eval_backend.attach(eval);
    eval->add_option("--k", k, "number of folds")->check(CLI::Range(2, 1000));
    eval->add_option("--seed", seed, "fold shuffle seed");
    eval->add_flag("--no-stratify", no_stratify, "plain shuffled folds");
    eval->add_flag("--parallel", parallel, "run folds concurrently");
    eval->add_flag("--population-std", population_std, "divide by n instead of n-1");
    eval->add_option("--json-out", json_out, "write the report as JSON");

    // replay
    auto* replay = app.add_subcommand("replay", "run a scripted scenario under a simulated clock");
    std::string scenario_path, registry_path, geometry_path, out_path, log_path, store_path, prefilter = "any";
    BackendFlags replay_backend;
    replay->add_option("--scenario", scenario_path, "NDJSON scenario")->required();
    replay->add_option("--registry", registry_path, "location spreadsheet CSV")->required();
    replay->add_option("--geometry", geometry_path, "county boundaries GeoJSON")->required();
    replay_backend.attach(replay);
    replay->add_option("--out", out_path, "final feed snapshot path");
    replay->add_option("--log", log_path, "event log path (default stdout)");
    replay->add_option("--store", store_path, "persist notices to this SQLite file");
    replay->add_option("--prefilter-mode", prefilter, "any or all")->check(CLI::IsMember({"any", "all"}));

    // report
    auto* report = app.add_subcommand("report", "archive statistics from a notice store");
    std::string report_store, by = "year", plot_path;
    report->add_option("--store", report_store, "notice store")->required();
    report->add_option("--by", by, "year, state or label")->check(CLI::IsMember({"year", "state", "label"}));
    report->add_option("--plot-data", plot_path, "write key,series,count CSV");

    // export
    auto* exp = app.add_subcommand("export", "reviewed notices as a labeled CSV");
    std::string export_store, export_out;
    exp->add_option("--store", export_store, "notice store")->required();
    exp->add_option("--out", export_out, "output CSV (default stdout)");

    // serve
    auto* serve = app.add_subcommand("serve", "live service: alert polling, harvesting and the HTTP API");
    std::string serve_registry, serve_geometry, serve_store, alert_endpoint, alert_file, host = "127.0.0.1",
                static_dir, reviewer_token, serve_prefilter = "any";
    int port = 8080;
    int alert_poll_secs = 60, harvest_secs = 120, politeness_ms = 1000;
    std::size_t fetch_parallelism = 8;
    BackendFlags serve_backend;
    serve->add_option("--registry", serve_registry, "location spreadsheet CSV")->required();
    serve->add_option("--geometry", serve_geometry, "county boundaries GeoJSON")->required();
    serve_backend.attach(serve);
    auto* ep = serve->add_option("--alert-endpoint", alert_endpoint, "alert feed URL");
    auto* af = serve->add_option("--alert-file", alert_file, "alert documents file");
    ep->excludes(af);
    serve->add_option("--store", serve_store, "SQLite notice store")->default_val("notices.db");
    serve->add_option("--host", host, "listen address");
    serve->add_option("--port", port, "listen port");
    serve->add_option("--static-dir", static_dir, "console bundle served at /");
    serve->add_option("--reviewer-token", reviewer_token, "bearer token for review endpoints");
    serve->add_option("--alert-poll-secs", alert_poll_secs, "alert polling interval")->check(CLI::PositiveNumber);
    serve->add_option("--harvest-interval-secs", harvest_secs, "harvest cycle interval")->check(CLI::PositiveNumber);
    serve->add_option("--fetch-parallelism", fetch_parallelism, "concurrent fetches")->check(CLI::PositiveNumber);
    serve->add_option("--politeness-ms", politeness_ms, "delay between requests to one host");
    serve->add_option("--prefilter-mode", serve_prefilter, "any or all")->check(CLI::IsMember({"any", "all"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*eval) {
            const auto examples = load_labeled_csv(data_path);
            const Task task = *parse_task(task_name);
            CvOptions options;
            options.k = k;
            options.seed = seed;
            options.stratify = !no_stratify;
            options.parallel = parallel;
            options.std_kind = population_std ? StdKind::Population : StdKind::Sample;
            std::unique_ptr<ClassifierSource> source;
            if (eval_backend.backend == "lexical") {
                source = std::make_unique<LexicalSource>();
            } else {
                if (eval_backend.endpoint.empty()) throw CLI::ValidationError("--endpoint", "required with --backend remote");
                source = std::make_unique<RemoteSource>(eval_backend.endpoint);
            }
            const CvResult result = run_cv(examples, *source, task, options);
            if (!result.report) {
                std::cerr << "evaluation stopped at run " << result.failed_run.value_or(0) << ": "
                          << result.error.value_or("unknown error") << '\n';
                nlohmann::json partial = nlohmann::json::array();
                for (const auto& r : result.runs) partial.push_back(to_json(r));
                if (!json_out.empty()) write_file(json_out, nlohmann::json{{"error", *result.error}, {"runs", partial}}.dump(2) + "\n");
                return 1;
            }
            std::cout << format_fold_report(*result.report);
            if (!json_out.empty()) write_file(json_out, to_json(*result.report).dump(2) + "\n");
            return 0;
        }

        if (*replay) {
            std::vector<ScenarioEvent> events;
            try {
                events = load_scenario(scenario_path);
            } catch (const Error& e) {
                std::cerr << e.what() << '\n';
                return 2;
            }
            const auto registry = Registry::load(registry_path);
            const auto geometry = GeometryIndex::load(geometry_path);
            Diagnostics diagnostics;
            auto classifier = replay_backend.make(&diagnostics);
            auto store = store_path.empty() ? NoticeStore::in_memory() : NoticeStore::open(store_path);
            HarvestOptions options;
            options.mode = *parse_prefilter_mode(prefilter);
            const auto result = run_replay(events, registry, geometry, *classifier, store, options);

            std::string log;
            for (const auto& line : result.log) log += line + "\n";
            for (const auto& d : diagnostics.snapshot())
                log += nlohmann::json{{"event", "diagnostic"}, {"code", d.code}, {"detail", d.detail}}.dump() + "\n";
            if (log_path.empty())
                std::cout << log;
            else
                write_file(log_path, log);
            if (!out_path.empty()) write_file(out_path, snapshot_text(result.snapshot));
            return result.exit_code();
        }

        if (*report) {
            const auto store = NoticeStore::open_existing(report_store);
            const auto out = render_report(store, *parse_group_by(by));
            std::cout << out.table;
            if (!plot_path.empty()) write_file(plot_path, out.plot_data);
            return 0;
        }

        if (*exp) {
            const auto store = NoticeStore::open_existing(export_store);
            const auto examples = store.export_labeled();
            if (export_out.empty()) {
                write_labeled_csv(std::cout, examples);
            } else {
                std::ofstream out(export_out, std::ios::binary);
                if (!out) throw Error(ErrorCode::IoError, "cannot write " + export_out);
                write_labeled_csv(out, examples);
            }
            return 0;
        }

        if (*serve) {
            if (alert_endpoint.empty() && alert_file.empty())
                throw CLI::ValidationError("serve", "one of --alert-endpoint or --alert-file is required");
            RegistryHandle registry(Registry::load(serve_registry));
            const auto geometry = GeometryIndex::load(serve_geometry);
            auto store = NoticeStore::open(serve_store);
            auto classifier = serve_backend.make(&store.diagnostics());
            std::unique_ptr<AlertSource> alerts_source;
            if (!alert_endpoint.empty())
                alerts_source = std::make_unique<HttpAlertSource>(alert_endpoint);
            else
                alerts_source = std::make_unique<FileAlertSource>(alert_file);
            AlertBuffer alerts;
            HttpPageFetcher fetcher;
            HarvestOptions harvest;
            harvest.mode = *parse_prefilter_mode(serve_prefilter);
            harvest.parallelism = fetch_parallelism;
            harvest.politeness_delay = std::chrono::milliseconds(politeness_ms);
            Pipeline pipeline(registry, alerts, fetcher, *classifier, store, harvest);

            ApiConfig config;
            if (!reviewer_token.empty()) config.reviewer_token = reviewer_token;
            ApiRouter router(store, geometry, config);
            HttpServer server(router, static_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(static_dir));
            const int bound = server.bind(host, port);
            std::cerr << "listening on " << host << ':' << bound << '\n';

            std::signal(SIGINT, [](int) { g_stop = true; });
            std::signal(SIGTERM, [](int) { g_stop = true; });
            std::jthread live([&](std::stop_token stop) {
                run_live(*alerts_source, alerts, pipeline,
                         LiveOptions{std::chrono::seconds(alert_poll_secs), std::chrono::seconds(harvest_secs)},
                         system_now, stop, std::cerr);
            });
            std::jthread http([&] { server.listen(); });
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
            server.stop();
            live.request_stop();
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return e.code() == ErrorCode::UnreadableStore || e.code() == ErrorCode::MalformedScenario ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
