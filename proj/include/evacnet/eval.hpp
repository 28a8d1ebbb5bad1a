#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "evacnet/alert_gateway.hpp"
#include "evacnet/classifier.hpp"
#include "evacnet/remote_client.hpp"

namespace evacnet {

enum class Origin { SocialMedia, Website, NewsOutlet };

std::string_view to_string(Origin origin);
std::optional<Origin> parse_origin(std::string_view text);

struct LabeledExample {
    std::string text;
    NoticeLabel gold = NoticeLabel::NotNotice;
    Origin origin = Origin::SocialMedia;
    int year = 2001;
    CountyFips scope = CountyFips::parse("00000");
};

/// Columns `text,gold,origin,year,fips` (header required, any order).
/// Throws Error(MalformedDataset | MissingRequiredColumn).
std::vector<LabeledExample> parse_labeled_csv(std::istream& in);
std::vector<LabeledExample> load_labeled_csv(const std::filesystem::path& path);
void write_labeled_csv(std::ostream& out, std::span<const LabeledExample> examples);

/// Fine-tuning hyperparameters forwarded to trainable backends.
struct TrainingConfig {
    int max_seq_len = 512;
    int batch_size = 4;
    double learning_rate = 5.0e-6;
    std::string optimizer_name = "AdamW";
    std::string loss_name = "CrossEntropy";
    bool early_stopping = true;

    nlohmann::json to_json() const;
};

enum class Task { Binary, ThreeClass };

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view text);
std::size_t class_count(Task task);
/// Row labels used in reports, in class-index order.
std::vector<std::string> class_names(Task task);

/// Rows are gold, columns predicted. Class order is
/// [Mandatory, Voluntary, NotNotice] or [Notice, NotNotice].
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {}

    std::size_t classes() const noexcept { return k_; }
    std::size_t& at(std::size_t gold, std::size_t predicted) { return counts_[gold * k_ + predicted]; }
    std::size_t at(std::size_t gold, std::size_t predicted) const { return counts_[gold * k_ + predicted]; }
    std::size_t total() const;
    std::size_t trace() const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t k_;
    std::vector<std::size_t> counts_;
};

/// Throws Error(LengthMismatch).
ConfusionMatrix confusion(std::span<const NoticeLabel> gold, std::span<const NoticeLabel> predicted);
ConfusionMatrix confusion(std::span<const BinaryLabel> gold, std::span<const BinaryLabel> predicted);
/// Folds Mandatory and Voluntary rows/columns into Notice.
ConfusionMatrix collapse_to_binary(const ConfusionMatrix& three_class);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct AveragedMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    AveragedMetrics macro_avg;
    AveragedMetrics weighted_avg;
    double accuracy = 0.0;
};

/// Per-class precision/recall/F1 with 0/0 taken as 0, plain and
/// support-weighted averages, and accuracy. Throws Error(EmptyMatrix).
MetricsReport metrics(const ConfusionMatrix& cm);

struct Stat {
    double mean = 0.0;
    double std = 0.0;
};

enum class StdKind { Sample, Population };

/// Mean and standard deviation (n-1 divisor by default). Throws Error(TooFewValues).
Stat fold_stats(std::span<const double> values, StdKind kind = StdKind::Sample);

struct RunSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

struct FoldAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of;  // per example

    std::vector<std::vector<std::size_t>> folds() const;
    /// Run i tests on fold i, validates on fold (i+1) mod k, trains on the rest.
    RunSplit split(std::size_t run) const;
};

/// Seeded split into k folds whose sizes differ by at most one; with
/// `stratify` the per-class counts also differ by at most one across folds.
/// Throws Error(ClassTooSmall) when a class present in `labels` has fewer
/// than k members (or k < 2 / k > n).
FoldAssignment stratified_kfold(std::span<const NoticeLabel> labels, std::size_t k, std::uint64_t seed,
                                bool stratify = true);

/// Yields the classifier used in one cross-validation run.
class ClassifierSource {
public:
    virtual ~ClassifierSource() = default;
    virtual std::unique_ptr<Classifier> for_run(std::size_t run, const RunSplit& split,
                                                std::span<const LabeledExample> examples, Task task,
                                                const TrainingConfig& config) = 0;
};

/// The lexical baseline has nothing to train; train/validation folds are ignored.
class LexicalSource final : public ClassifierSource {
public:
    std::unique_ptr<Classifier> for_run(std::size_t, const RunSplit&, std::span<const LabeledExample>, Task,
                                        const TrainingConfig&) override;
};

/// Trains one model per run through `POST {endpoint}/train`, then classifies
/// with the returned model id.
class RemoteSource final : public ClassifierSource {
public:
    explicit RemoteSource(std::string endpoint, RetryPolicy policy = {}) : endpoint_(std::move(endpoint)), policy_(policy) {}
    std::unique_ptr<Classifier> for_run(std::size_t run, const RunSplit& split,
                                        std::span<const LabeledExample> examples, Task task,
                                        const TrainingConfig& config) override;

private:
    std::string endpoint_;
    RetryPolicy policy_;
};

/// Builds the `/train` request body for one run.
nlohmann::json training_request(const RunSplit& split, std::span<const LabeledExample> examples, Task task,
                                const TrainingConfig& config);

struct ClassStats {
    Stat precision;
    Stat recall;
    Stat f1;
    Stat support;
};

struct AveragedStats {
    Stat precision;
    Stat recall;
    Stat f1;
};

struct FoldReport {
    Task task = Task::ThreeClass;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<ClassStats> per_class;
    AveragedStats macro_avg;
    AveragedStats weighted_avg;
    Stat accuracy;
};

struct CvOptions {
    std::size_t k = 10;
    std::uint64_t seed = 0;
    bool stratify = true;
    StdKind std_kind = StdKind::Sample;
    bool parallel = false;
    TrainingConfig training;
};

struct CvResult {
    std::vector<MetricsReport> runs;         // completed runs, by index
    std::optional<FoldReport> report;        // present when every run completed
    std::optional<std::string> error;        // first failure, if any
    std::optional<std::size_t> failed_run;
};

/// Runs k-fold cross-validation; backend failures stop the evaluation and
/// are returned with the runs that completed before them.
CvResult run_cv(std::span<const LabeledExample> examples, ClassifierSource& source, Task task,
                const CvOptions& options);

/// Aggregates per-run metrics (per-fold values, then mean/std).
FoldReport aggregate(std::span<const MetricsReport> runs, Task task, std::size_t k, std::uint64_t seed,
                     StdKind kind = StdKind::Sample);

/// Aligned table in "mean (std)" cells with three decimals.
std::string format_fold_report(const FoldReport& report);
nlohmann::json to_json(const FoldReport& report);
nlohmann::json to_json(const MetricsReport& report);

}  // namespace evacnet
