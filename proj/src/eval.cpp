#include "evacnet/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "evacnet/csv.hpp"
#include "evacnet/error.hpp"

namespace evacnet {

using nlohmann::json;

namespace {

// Unbiased draw in [0, n) from a fully specified engine, so fold assignment
// does not depend on the standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

std::size_t label_index(NoticeLabel l) { return static_cast<std::size_t>(l); }
std::size_t label_index(BinaryLabel l) { return static_cast<std::size_t>(l); }

template <typename Label>
ConfusionMatrix confusion_impl(std::span<const Label> gold, std::span<const Label> predicted, std::size_t k) {
    if (gold.size() != predicted.size())
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(gold.size()) + " gold vs " + std::to_string(predicted.size()) + " predicted");
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < gold.size(); ++i) ++cm.at(label_index(gold[i]), label_index(predicted[i]));
    return cm;
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

int current_year() { return utc_year(system_now()); }

std::string cell(const Stat& s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f (%.3f)", s.mean, s.std);
    return buf;
}

json stat_json(const Stat& s) { return json{{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

std::string_view to_string(Origin origin) {
    switch (origin) {
        case Origin::SocialMedia: return "SocialMedia";
        case Origin::Website: return "Website";
        case Origin::NewsOutlet: return "NewsOutlet";
    }
    return "SocialMedia";
}

std::optional<Origin> parse_origin(std::string_view text) {
    if (text == "SocialMedia" || text == "social_media" || text == "social") return Origin::SocialMedia;
    if (text == "Website" || text == "website") return Origin::Website;
    if (text == "NewsOutlet" || text == "news_outlet" || text == "news") return Origin::NewsOutlet;
    return std::nullopt;
}

std::vector<LabeledExample> parse_labeled_csv(std::istream& in) {
    const auto table = csv::read(in);
    if (table.empty()) throw Error(ErrorCode::MalformedDataset, "labeled CSV has no header");
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < table.front().size(); ++i) column[table.front()[i]] = i;
    for (const char* name : {"text", "gold", "origin", "year", "fips"})
        if (!column.count(name)) throw Error(ErrorCode::MissingRequiredColumn, name);

    const int max_year = current_year();
    std::vector<LabeledExample> out;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        const std::string where = "row " + std::to_string(r + 1) + ": ";
        auto get = [&](const char* name) -> const std::string& {
            static const std::string empty;
            const auto idx = column.at(name);
            return idx < row.size() ? row[idx] : empty;
        };
        LabeledExample ex;
        ex.text = get("text");
        if (ex.text.empty()) throw Error(ErrorCode::MalformedDataset, where + "empty text");
        const auto gold = parse_notice_label(get("gold"));
        if (!gold) throw Error(ErrorCode::MalformedDataset, where + "unknown gold label '" + get("gold") + "'");
        ex.gold = *gold;
        const auto origin = parse_origin(get("origin"));
        if (!origin) throw Error(ErrorCode::MalformedDataset, where + "unknown origin '" + get("origin") + "'");
        ex.origin = *origin;
        const auto& year_text = get("year");
        auto [ptr, ec] = std::from_chars(year_text.data(), year_text.data() + year_text.size(), ex.year);
        if (ec != std::errc{} || ptr != year_text.data() + year_text.size() || ex.year < 2001 || ex.year > max_year)
            throw Error(ErrorCode::MalformedDataset, where + "year out of range '" + year_text + "'");
        try {
            ex.scope = CountyFips::parse(get("fips"));
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedDataset, where + e.what());
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<LabeledExample> load_labeled_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return parse_labeled_csv(in);
}

void write_labeled_csv(std::ostream& out, std::span<const LabeledExample> examples) {
    out << "text,gold,origin,year,fips\n";
    for (const auto& ex : examples)
        out << csv::escape(ex.text) << ',' << to_string(ex.gold) << ',' << to_string(ex.origin) << ',' << ex.year
            << ',' << ex.scope.str() << '\n';
}

json TrainingConfig::to_json() const {
    return json{{"max_seq_len", max_seq_len},       {"batch_size", batch_size}, {"learning_rate", learning_rate},
                {"optimizer_name", optimizer_name}, {"loss_name", loss_name},   {"early_stopping", early_stopping}};
}

std::string_view to_string(Task task) { return task == Task::Binary ? "binary" : "three"; }

std::optional<Task> parse_task(std::string_view text) {
    if (text == "binary") return Task::Binary;
    if (text == "three" || text == "three_class") return Task::ThreeClass;
    return std::nullopt;
}

std::size_t class_count(Task task) { return task == Task::Binary ? 2 : 3; }

std::vector<std::string> class_names(Task task) {
    if (task == Task::Binary) return {"Evacuation Notice", "Not an Evacuation Notice"};
    return {"Mandatory Evacuation Notice", "Voluntary Evacuation Notice", "Not an Evacuation Notice"};
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
    return t;
}

ConfusionMatrix confusion(std::span<const NoticeLabel> gold, std::span<const NoticeLabel> predicted) {
    return confusion_impl(gold, predicted, 3);
}

ConfusionMatrix confusion(std::span<const BinaryLabel> gold, std::span<const BinaryLabel> predicted) {
    return confusion_impl(gold, predicted, 2);
}

ConfusionMatrix collapse_to_binary(const ConfusionMatrix& cm) {
    if (cm.classes() != 3) throw Error(ErrorCode::LengthMismatch, "collapse expects a 3x3 matrix");
    ConfusionMatrix out(2);
    auto to_binary_index = [](std::size_t i) { return i == 2 ? std::size_t{1} : std::size_t{0}; };
    for (std::size_t g = 0; g < 3; ++g)
        for (std::size_t p = 0; p < 3; ++p) out.at(to_binary_index(g), to_binary_index(p)) += cm.at(g, p);
    return out;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes();
    const std::size_t total = cm.total();
    if (total == 0) throw Error(ErrorCode::EmptyMatrix, "no evaluated examples");

    MetricsReport report;
    report.per_class.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t predicted = 0;
        std::size_t actual = 0;
        for (std::size_t j = 0; j < k; ++j) {
            predicted += cm.at(j, c);
            actual += cm.at(c, j);
        }
        const double tp = static_cast<double>(cm.at(c, c));
        auto& m = report.per_class[c];
        m.precision = ratio(tp, static_cast<double>(predicted));
        m.recall = ratio(tp, static_cast<double>(actual));
        m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
        m.support = actual;
    }
    for (const auto& m : report.per_class) {
        const double w = static_cast<double>(m.support) / static_cast<double>(total);
        report.macro_avg.precision += m.precision / static_cast<double>(k);
        report.macro_avg.recall += m.recall / static_cast<double>(k);
        report.macro_avg.f1 += m.f1 / static_cast<double>(k);
        report.weighted_avg.precision += w * m.precision;
        report.weighted_avg.recall += w * m.recall;
        report.weighted_avg.f1 += w * m.f1;
    }
    report.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    return report;
}

Stat fold_stats(std::span<const double> values, StdKind kind) {
    if (values.size() < 2) throw Error(ErrorCode::TooFewValues, "need at least 2 values, got " + std::to_string(values.size()));
    const double n = static_cast<double>(values.size());
    // Shift by the first value so identical inputs give exactly zero spread.
    const double shift = values.front();
    double offset = 0.0;
    for (double v : values) offset += v - shift;
    offset /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - shift - offset) * (v - shift - offset);
    const double mean = shift + offset;
    const double divisor = kind == StdKind::Sample ? n - 1.0 : n;
    return {mean, std::sqrt(ss / divisor)};
}

std::vector<std::vector<std::size_t>> FoldAssignment::folds() const {
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t i = 0; i < fold_of.size(); ++i) out[fold_of[i]].push_back(i);
    return out;
}

RunSplit FoldAssignment::split(std::size_t run) const {
    RunSplit s;
    const std::size_t validation_fold = (run + 1) % k;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == run)
            s.test.push_back(i);
        else if (fold_of[i] == validation_fold)
            s.validation.push_back(i);
        else
            s.train.push_back(i);
    }
    return s;
}

FoldAssignment stratified_kfold(std::span<const NoticeLabel> labels, std::size_t k, std::uint64_t seed, bool stratify) {
    if (k < 2) throw Error(ErrorCode::ClassTooSmall, "k must be at least 2");
    if (labels.size() < k) throw Error(ErrorCode::ClassTooSmall, "fewer examples than folds");

    std::vector<std::vector<std::size_t>> groups;
    if (stratify) {
        groups.resize(kNoticeLabels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) groups[label_index(labels[i])].push_back(i);
        for (std::size_t c = 0; c < groups.size(); ++c) {
            if (!groups[c].empty() && groups[c].size() < k)
                throw Error(ErrorCode::ClassTooSmall, std::string(to_string(kNoticeLabels[c])) + " has " +
                                                          std::to_string(groups[c].size()) + " examples for k=" +
                                                          std::to_string(k));
        }
    } else {
        groups.emplace_back(labels.size());
        std::iota(groups.front().begin(), groups.front().end(), std::size_t{0});
    }

    std::mt19937_64 rng(seed);
    FoldAssignment assignment{k, std::vector<std::size_t>(labels.size(), 0)};
    // Dealing the concatenated class groups round-robin keeps both the
    // overall fold sizes and every class's per-fold counts within one.
    std::size_t cursor = 0;
    for (auto& group : groups) {
        seeded_shuffle(group, rng);
        for (std::size_t idx : group) assignment.fold_of[idx] = cursor++ % k;
    }
    return assignment;
}

std::unique_ptr<Classifier> LexicalSource::for_run(std::size_t, const RunSplit&, std::span<const LabeledExample>, Task,
                                                   const TrainingConfig&) {
    return std::make_unique<LexicalClassifier>();
}

json training_request(const RunSplit& split, std::span<const LabeledExample> examples, Task task,
                      const TrainingConfig& config) {
    auto label_text = [&](const LabeledExample& ex) -> std::string {
        return task == Task::Binary ? std::string(to_string(collapse(ex.gold))) : std::string(to_string(ex.gold));
    };
    json body{{"config", config.to_json()},
              {"task", std::string(to_string(task))},
              {"train_texts", json::array()},
              {"train_labels", json::array()},
              {"val_texts", json::array()},
              {"val_labels", json::array()}};
    for (auto i : split.train) {
        body["train_texts"].push_back(examples[i].text);
        body["train_labels"].push_back(label_text(examples[i]));
    }
    for (auto i : split.validation) {
        body["val_texts"].push_back(examples[i].text);
        body["val_labels"].push_back(label_text(examples[i]));
    }
    return body;
}

std::unique_ptr<Classifier> RemoteSource::for_run(std::size_t, const RunSplit& split,
                                                  std::span<const LabeledExample> examples, Task task,
                                                  const TrainingConfig& config) {
    const Url url = validate(RemoteRef{endpoint_, {}});
    const json reply = post_json(url, "/train", training_request(split, examples, task, config), policy_);
    if (!reply.is_object() || !reply.contains("model_id") || !reply["model_id"].is_string() ||
        reply["model_id"].get<std::string>().empty())
        throw Error(ErrorCode::ProtocolError, "train reply lacks a model_id");
    return std::make_unique<RemoteClassifier>(RemoteRef{endpoint_, reply["model_id"].get<std::string>()}, policy_,
                                              task == Task::Binary ? 2 : 3);
}

namespace {

MetricsReport evaluate_run(std::size_t run, const FoldAssignment& folds, std::span<const LabeledExample> examples,
                           ClassifierSource& source, Task task, const TrainingConfig& config) {
    const RunSplit split = folds.split(run);
    auto classifier = source.for_run(run, split, examples, task, config);
    std::vector<std::string> texts;
    texts.reserve(split.test.size());
    for (auto i : split.test) texts.push_back(examples[i].text);

    if (task == Task::ThreeClass) {
        const auto dists = classifier->classify(texts);
        if (dists.size() != texts.size()) throw Error(ErrorCode::ProtocolError, "classifier returned wrong count");
        std::vector<NoticeLabel> gold, pred;
        for (std::size_t j = 0; j < texts.size(); ++j) {
            gold.push_back(examples[split.test[j]].gold);
            pred.push_back(decide(dists[j]));
        }
        return metrics(confusion(gold, pred));
    }
    const auto dists = classifier->classify_binary(texts);
    if (dists.size() != texts.size()) throw Error(ErrorCode::ProtocolError, "classifier returned wrong count");
    std::vector<BinaryLabel> gold, pred;
    for (std::size_t j = 0; j < texts.size(); ++j) {
        gold.push_back(collapse(examples[split.test[j]].gold));
        pred.push_back(decide(dists[j]));
    }
    return metrics(confusion(gold, pred));
}

}  // namespace

CvResult run_cv(std::span<const LabeledExample> examples, ClassifierSource& source, Task task,
                const CvOptions& options) {
    std::vector<NoticeLabel> labels;
    labels.reserve(examples.size());
    for (const auto& ex : examples) labels.push_back(ex.gold);
    const FoldAssignment folds = stratified_kfold(labels, options.k, options.seed, options.stratify);

    std::vector<std::optional<MetricsReport>> per_run(options.k);
    std::vector<std::optional<std::string>> errors(options.k);
    auto run_one = [&](std::size_t run) {
        try {
            per_run[run] = evaluate_run(run, folds, examples, source, task, options.training);
        } catch (const std::exception& e) {
            errors[run] = e.what();
        }
    };
    if (options.parallel) {
        std::vector<std::future<void>> futures;
        for (std::size_t run = 0; run < options.k; ++run) futures.push_back(std::async(std::launch::async, run_one, run));
        for (auto& f : futures) f.get();
    } else {
        for (std::size_t run = 0; run < options.k; ++run) {
            run_one(run);
            if (errors[run]) break;
        }
    }

    CvResult result;
    for (std::size_t run = 0; run < options.k; ++run) {
        if (errors[run]) {
            result.error = "run " + std::to_string(run) + ": " + *errors[run];
            result.failed_run = run;
            break;
        }
        if (!per_run[run]) break;
        result.runs.push_back(*per_run[run]);
    }
    if (!result.error) result.report = aggregate(result.runs, task, options.k, options.seed, options.std_kind);
    return result;
}

FoldReport aggregate(std::span<const MetricsReport> runs, Task task, std::size_t k, std::uint64_t seed, StdKind kind) {
    FoldReport report;
    report.task = task;
    report.k = k;
    report.seed = seed;
    auto stat_of = [&](auto getter) {
        std::vector<double> values;
        for (const auto& r : runs) values.push_back(getter(r));
        return fold_stats(values, kind);
    };
    const std::size_t classes = class_count(task);
    for (std::size_t c = 0; c < classes; ++c) {
        report.per_class.push_back(ClassStats{
            .precision = stat_of([c](const MetricsReport& r) { return r.per_class.at(c).precision; }),
            .recall = stat_of([c](const MetricsReport& r) { return r.per_class.at(c).recall; }),
            .f1 = stat_of([c](const MetricsReport& r) { return r.per_class.at(c).f1; }),
            .support = stat_of([c](const MetricsReport& r) { return static_cast<double>(r.per_class.at(c).support); }),
        });
    }
    report.macro_avg = {stat_of([](const MetricsReport& r) { return r.macro_avg.precision; }),
                        stat_of([](const MetricsReport& r) { return r.macro_avg.recall; }),
                        stat_of([](const MetricsReport& r) { return r.macro_avg.f1; })};
    report.weighted_avg = {stat_of([](const MetricsReport& r) { return r.weighted_avg.precision; }),
                           stat_of([](const MetricsReport& r) { return r.weighted_avg.recall; }),
                           stat_of([](const MetricsReport& r) { return r.weighted_avg.f1; })};
    report.accuracy = stat_of([](const MetricsReport& r) { return r.accuracy; });
    return report;
}

std::string format_fold_report(const FoldReport& report) {
    const auto names = class_names(report.task);
    std::size_t width = std::string("Weighted Avg").size();
    for (const auto& n : names) width = std::max(width, n.size());
    width += 2;
    constexpr int cell_width = 16;

    std::ostringstream out;
    auto row = [&](const std::string& label, const std::string& p, const std::string& r, const std::string& f) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-*s%-*s%-*s%s\n", static_cast<int>(width), label.c_str(), cell_width,
                      p.c_str(), cell_width, r.c_str(), f.c_str());
        out << buf;
    };
    out << (report.task == Task::Binary ? "Binary" : "Three-class") << " task, " << report.k << "-fold cross-validation, seed "
        << report.seed << "\n";
    row("", "Precision", "Recall", "F1");
    for (std::size_t c = 0; c < report.per_class.size(); ++c)
        row(names[c], cell(report.per_class[c].precision), cell(report.per_class[c].recall),
            cell(report.per_class[c].f1));
    row("Macro Avg", cell(report.macro_avg.precision), cell(report.macro_avg.recall), cell(report.macro_avg.f1));
    row("Weighted Avg", cell(report.weighted_avg.precision), cell(report.weighted_avg.recall),
        cell(report.weighted_avg.f1));
    row("Accuracy", "", "", cell(report.accuracy));
    return out.str();
}

json to_json(const FoldReport& report) {
    const auto names = class_names(report.task);
    json per_class = json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& s = report.per_class[c];
        per_class.push_back({{"class", names[c]},
                             {"precision", stat_json(s.precision)},
                             {"recall", stat_json(s.recall)},
                             {"f1", stat_json(s.f1)},
                             {"support", stat_json(s.support)}});
    }
    auto averaged = [](const AveragedStats& a) {
        return json{{"precision", stat_json(a.precision)}, {"recall", stat_json(a.recall)}, {"f1", stat_json(a.f1)}};
    };
    return json{{"task", std::string(to_string(report.task))},
                {"k", report.k},
                {"seed", report.seed},
                {"per_class", per_class},
                {"macro_avg", averaged(report.macro_avg)},
                {"weighted_avg", averaged(report.weighted_avg)},
                {"accuracy", stat_json(report.accuracy)}};
}

json to_json(const MetricsReport& report) {
    json per_class = json::array();
    for (const auto& m : report.per_class)
        per_class.push_back(
            {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}});
    auto averaged = [](const AveragedMetrics& a) {
        return json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
    };
    return json{{"per_class", per_class},
                {"macro_avg", averaged(report.macro_avg)},
                {"weighted_avg", averaged(report.weighted_avg)},
                {"accuracy", report.accuracy}};
}

}  // namespace evacnet
