#pragma once

// Experiment orchestration behind the command-line tool: builds oracles and
// truths from configuration, runs the attacks, and writes the CSV outputs.
// Every function here returns a process exit code rather than exiting.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llprobe/attack_full.hpp"
#include "llprobe/attack_subset.hpp"
#include "llprobe/io.hpp"
#include "llprobe/known_probes.hpp"
#include "llprobe/oracle.hpp"
#include "llprobe/probe.hpp"
#include "llprobe/random.hpp"

namespace llprobe::harness {

enum ExitCode : int {
    exit_ok = 0,
    exit_ambiguity = 1,
    exit_budget = 2,
    exit_invalid = 3,
};

/// Labels come from a CSV file, or are drawn i.i.d. from `class_weights`
/// (uniform when empty).
struct TruthSource {
    std::optional<std::string> path;
    std::uint64_t seed = 0;
    std::vector<double> class_weights;
};

inline LabelMatrix generate_truth(std::size_t n, std::size_t classes, std::uint64_t seed,
                                  std::span<const double> weights = {}) {
    std::vector<double> w(weights.begin(), weights.end());
    if (w.empty()) w.assign(classes, 1.0);
    if (w.size() != classes) throw parse_error("class weights must list one weight per class");
    for (double v : w)
        if (!(v >= 0.0) || !std::isfinite(v)) throw parse_error("class weights must be >= 0");
    Rng rng(seed);
    std::vector<std::size_t> labels(n);
    for (auto& label : labels) label = rng.categorical(w);
    return LabelMatrix(classes, std::move(labels));
}

inline io::LabeledSet load_truth(const TruthSource& source, std::size_t n, std::size_t classes) {
    if (source.path) {
        auto set = io::read_truth_csv(*source.path, classes);
        if (n != 0 && set.labels.rows() != n)
            throw parse_error("truth file has " + std::to_string(set.labels.rows()) +
                              " rows but n = " + std::to_string(n));
        return set;
    }
    if (n == 0) throw parse_error("n must be set when the truth is generated");
    return {io::index_ids(n), generate_truth(n, classes, source.seed, source.class_weights)};
}

/// Built-in probe by name ("g4", "g6", "subset_g4") or a probe CSV path.
inline ProbeMatrix resolve_probe(std::string_view name, double floor) {
    if (name == "g4") return known_probes::g4();
    if (name == "g6") return known_probes::g6();
    if (name == "subset_g4") return known_probes::subset_g4();
    return io::read_probe_csv(std::string(name), floor);
}

inline constexpr std::size_t default_schedule_search_trials = 2000;

/// Parses "m[xR][:probe],..." e.g. "1x2,4x30:g4,6:g6". A phase without a
/// probe gets the best of a seeded Monte-Carlo search; a phase without a
/// round count runs until the rows run out.
inline AttackSchedule parse_schedule(std::string_view text, std::size_t classes, double floor,
                                     std::uint64_t search_seed) {
    AttackSchedule schedule;
    std::size_t phase_index = 0;
    for (auto field : io::split_fields(text)) {
        std::string_view spec = field;
        std::optional<std::string_view> probe_name;
        if (auto colon = spec.find(':'); colon != std::string_view::npos) {
            probe_name = spec.substr(colon + 1);
            spec = spec.substr(0, colon);
        }
        std::optional<std::size_t> rounds;
        if (auto x = spec.find('x'); x != std::string_view::npos) {
            rounds = io::parse_index(spec.substr(x + 1));
            spec = spec.substr(0, x);
        }
        const std::size_t m = io::parse_index(spec);
        if (m < 1) throw parse_error("schedule batch size must be >= 1");
        ProbeMatrix probe = probe_name ? resolve_probe(*probe_name, floor)
                                       : monte_carlo_search(m, classes,
                                                            default_schedule_search_trials,
                                                            derive_seed(search_seed, phase_index),
                                                            ProbeObjective::Q, floor)
                                             .probe;
        if (probe.rows() != m)
            throw parse_error("schedule phase " + std::to_string(phase_index + 1) + " has m = " +
                              std::to_string(m) + " but its probe has " +
                              std::to_string(probe.rows()) + " rows");
        schedule.phases.push_back({std::move(probe), rounds});
        ++phase_index;
    }
    schedule.validate(classes);
    return schedule;
}

// ---------------------------------------------------------------- attack-full

struct FullAttackConfig {
    std::size_t n = 512;
    std::size_t classes = 3;
    int precision = 5;
    double gamma = default_gamma;
    std::optional<std::size_t> budget;
    TruthSource truth;
    std::string schedule = "1x2,4x30:g4,6:g6";
    std::uint64_t seed = 0; // probe searches for phases without a probe
    bool strict = false;
    std::filesystem::path out_dir = ".";
};

struct FullAttackOutcome {
    InferenceResult result;
    std::optional<OracleReply> final_reply; // cash-in submission, when complete
    std::size_t correct = 0;
    std::size_t queries = 0;
    int exit_code = exit_ok;
};

/// Runs the full-oracle attack, submits the recovered labels, and writes
/// rounds.csv, inferred_labels.csv and progression.csv to out_dir.
inline FullAttackOutcome run_full_experiment(const FullAttackConfig& config, std::ostream& log) {
    auto truth = load_truth(config.truth, config.n, config.classes);
    const std::size_t n = truth.labels.rows();
    OracleSpec spec;
    spec.n = n;
    spec.classes = config.classes;
    spec.precision = Precision(config.precision);
    spec.clamp = ClampPolicy{config.gamma};
    spec.budget = config.budget;
    SimulatedOracle oracle(spec, truth.labels);
    const AttackSchedule schedule =
        parse_schedule(config.schedule, config.classes, config.gamma, config.seed);

    FullAttackOutcome out;
    out.result = run_full_attack(oracle, schedule, {config.strict});
    std::vector<double> progression;
    for (const auto& r : out.result.rounds) progression.push_back(r.reported_loss);
    if (out.result.complete) {
        try {
            out.final_reply = submit_inferred(oracle, out.result.labels);
            progression.push_back(out.final_reply->loss);
        } catch (const budget_exhausted&) {
            // recovered but not cashed in
        }
    }
    for (std::size_t i = 0; i < out.result.labels.size(); ++i)
        if (out.result.labels[i] == truth.labels.label(i)) ++out.correct;
    out.queries = oracle.queries_used();

    std::filesystem::create_directories(config.out_dir);
    {
        auto f = io::open_output((config.out_dir / "rounds.csv").string());
        io::write_rounds_csv(f, out.result.rounds);
    }
    {
        auto f = io::open_output((config.out_dir / "inferred_labels.csv").string());
        io::write_labels_csv(f, truth.ids, out.result.labels);
    }
    {
        auto f = io::open_output((config.out_dir / "progression.csv").string());
        io::write_progression_csv(f, progression);
    }

    const int digits = config.precision;
    log << "rounds: " << out.result.rounds.size() << '\n'
        << "queries: " << out.queries << '\n'
        << "inferred: " << out.result.labels.size() << "/" << n << " (" << out.correct
        << " correct)\n"
        << "ambiguous rounds: " << out.result.ambiguous_rounds << '\n';
    if (out.final_reply) log << "final loss: " << io::format_fixed(out.final_reply->loss, digits) << '\n';

    switch (out.result.stop) {
    case StopReason::Complete: out.exit_code = out.final_reply ? exit_ok : exit_budget; break;
    case StopReason::Ambiguity: out.exit_code = exit_ambiguity; break;
    case StopReason::BudgetExhausted: out.exit_code = exit_budget; break;
    case StopReason::ScheduleExhausted:
        log << "schedule ended before every row was inferred\n";
        out.exit_code = exit_invalid;
        break;
    }
    return out;
}

// -------------------------------------------------------------- attack-subset

struct SubsetSweepConfig {
    std::size_t n = 2048;
    std::size_t classes = 3;
    std::size_t subset_size = 512;
    std::vector<int> precisions = {5};
    double gamma = default_gamma;
    std::optional<std::size_t> budget;
    std::string probe = "subset_g4";
    std::vector<double> class_weights;
    std::uint64_t seed = 0;
    std::size_t replications = 1;
    bool write_claims = false;
    std::filesystem::path out_dir = ".";
};

struct ReplicationRecord {
    std::size_t replication = 0;
    int precision = 0;
    std::size_t s_true = 0;
    std::optional<std::size_t> s_estimate;
    std::size_t member_queries = 0;
    std::size_t queries = 0;
    StopReason stop = StopReason::Complete;
    bool resolution_failed = false;
    InferenceMetrics metrics;
};

struct PrecisionSummary {
    int precision = 0;
    std::size_t replications = 0;
    std::size_t scored = 0; // replications with at least one claim
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;
    double mean_coverage = 0.0;
    double mean_abs_s_error = 0.0;
};

struct SubsetSweepOutcome {
    std::vector<ReplicationRecord> records;
    std::vector<PrecisionSummary> summary;
    int exit_code = exit_ok;
};

/// Seeds of replication r: truth, hidden subset, member-search order. They
/// do not depend on the precision, so a sweep over p replays the same
/// instances.
struct ReplicationSeeds {
    std::uint64_t truth, subset, order;
};

inline ReplicationSeeds replication_seeds(std::uint64_t base, std::size_t replication) {
    const std::uint64_t r = replication;
    return {derive_seed(base, 3 * r), derive_seed(base, 3 * r + 1), derive_seed(base, 3 * r + 2)};
}

inline ReplicationRecord run_replication(const SubsetSweepConfig& config, const ProbeMatrix& probe,
                                         int precision, std::size_t replication,
                                         ClaimedLabels* claims_out = nullptr) {
    const ReplicationSeeds seeds = replication_seeds(config.seed, replication);
    OracleSpec spec;
    spec.n = config.n;
    spec.classes = config.classes;
    spec.precision = Precision(precision);
    spec.clamp = ClampPolicy{config.gamma};
    spec.mode = SubsetMode{config.subset_size};
    spec.budget = config.budget;
    spec.seed = seeds.subset;
    SimulatedOracle oracle(
        spec, generate_truth(config.n, config.classes, seeds.truth, config.class_weights));

    const SubsetAttackResult result = run_subset_attack(oracle, probe, seeds.order);
    ReplicationRecord rec;
    rec.replication = replication;
    rec.precision = precision;
    rec.s_true = config.subset_size;
    if (result.inference) {
        rec.s_estimate = result.inference->s_estimate;
        rec.member_queries = result.inference->queries_spent;
    } else {
        rec.member_queries = result.queries_used;
    }
    rec.queries = result.queries_used;
    rec.stop = result.stop;
    rec.resolution_failed = result.resolution_failed;
    rec.metrics = score_inference(result.claims, oracle.truth(), oracle.evaluated_set());
    if (claims_out) *claims_out = result.claims;
    return rec;
}

inline std::vector<PrecisionSummary> summarize(const std::vector<ReplicationRecord>& records,
                                               std::span<const int> precisions) {
    std::vector<PrecisionSummary> out;
    for (int p : precisions) {
        PrecisionSummary row;
        row.precision = p;
        std::vector<double> accuracies;
        double coverage = 0.0, s_error = 0.0;
        std::size_t with_s = 0;
        for (const auto& rec : records) {
            if (rec.precision != p) continue;
            ++row.replications;
            coverage += rec.metrics.coverage;
            if (rec.metrics.accuracy) accuracies.push_back(*rec.metrics.accuracy);
            if (rec.s_estimate) {
                s_error += std::abs(static_cast<double>(*rec.s_estimate) -
                                    static_cast<double>(rec.s_true));
                ++with_s;
            }
        }
        row.scored = accuracies.size();
        if (!accuracies.empty()) {
            double sum = 0.0;
            for (double a : accuracies) sum += a;
            row.mean_accuracy = sum / static_cast<double>(accuracies.size());
            double sq = 0.0;
            for (double a : accuracies) sq += (a - row.mean_accuracy) * (a - row.mean_accuracy);
            row.stddev_accuracy =
                accuracies.size() > 1 ? std::sqrt(sq / static_cast<double>(accuracies.size() - 1))
                                      : 0.0;
        }
        if (row.replications) row.mean_coverage = coverage / static_cast<double>(row.replications);
        if (with_s) row.mean_abs_s_error = s_error / static_cast<double>(with_s);
        out.push_back(row);
    }
    return out;
}

inline const char* stop_name(StopReason why) {
    switch (why) {
    case StopReason::Complete: return "complete";
    case StopReason::BudgetExhausted: return "budget";
    case StopReason::Ambiguity: return "ambiguity";
    case StopReason::ScheduleExhausted: return "schedule";
    }
    return "?";
}

/// Runs `replications` subset attacks for each precision and writes
/// metrics.csv (one row per run) and summary.csv (one row per precision).
inline SubsetSweepOutcome run_subset_sweep(const SubsetSweepConfig& config, std::ostream& log) {
    if (config.replications < 1) throw parse_error("replications must be >= 1");
    if (config.precisions.empty()) throw parse_error("at least one precision is required");
    const ProbeMatrix probe = resolve_probe(config.probe, config.gamma);
    if (probe.classes() != config.classes) throw parse_error("probe class count mismatch");

    SubsetSweepOutcome out;
    std::filesystem::create_directories(config.out_dir);
    for (int p : config.precisions) {
        for (std::size_t r = 0; r < config.replications; ++r) {
            ClaimedLabels claims;
            out.records.push_back(run_replication(config, probe, p, r, &claims));
            if (out.records.back().stop == StopReason::BudgetExhausted) out.exit_code = exit_budget;
            if (config.write_claims) {
                auto f = io::open_output((config.out_dir / ("claims_p" + std::to_string(p) + "_r" +
                                                            std::to_string(r) + ".csv"))
                                             .string());
                io::write_claims_csv(f, io::index_ids(config.n), claims);
            }
        }
    }
    out.summary = summarize(out.records, config.precisions);

    auto opt = [](const std::optional<double>& v) { return v ? io::format_shortest(*v) : ""; };
    {
        auto f = io::open_output((config.out_dir / "metrics.csv").string());
        f << "replication,precision,s_true,s_estimate,member_queries,queries,stop,claims,correct,"
             "accuracy,membership_precision,membership_recall,coverage\n";
        for (const auto& rec : out.records) {
            f << rec.replication << ',' << rec.precision << ',' << rec.s_true << ','
              << (rec.s_estimate ? std::to_string(*rec.s_estimate) : "") << ','
              << rec.member_queries << ',' << rec.queries << ','
              << (rec.resolution_failed ? "resolution" : stop_name(rec.stop)) << ','
              << rec.metrics.claims << ',' << rec.metrics.correct << ','
              << opt(rec.metrics.accuracy) << ',' << opt(rec.metrics.membership_precision) << ','
              << io::format_shortest(rec.metrics.membership_recall) << ','
              << io::format_shortest(rec.metrics.coverage) << '\n';
        }
    }
    {
        auto f = io::open_output((config.out_dir / "summary.csv").string());
        f << "precision,replications,scored,mean_accuracy,stddev_accuracy,mean_coverage,"
             "mean_abs_s_error\n";
        for (const auto& row : out.summary)
            f << row.precision << ',' << row.replications << ',' << row.scored << ','
              << io::format_shortest(row.mean_accuracy) << ','
              << io::format_shortest(row.stddev_accuracy) << ','
              << io::format_shortest(row.mean_coverage) << ','
              << io::format_shortest(row.mean_abs_s_error) << '\n';
    }
    for (const auto& row : out.summary)
        log << "p=" << row.precision << " mean accuracy " << io::format_fixed(100 * row.mean_accuracy, 1)
            << "% (sd " << io::format_fixed(100 * row.stddev_accuracy, 1) << ", " << row.scored
            << "/" << row.replications << " runs with claims), mean |s error| "
            << io::format_fixed(row.mean_abs_s_error, 1) << '\n';
    return out;
}

// --------------------------------------------------------------- oracle-serve

struct ServeConfig {
    std::size_t classes = 3;
    int precision = 5;
    double gamma = default_gamma;
    std::optional<std::size_t> subset_size;
    std::optional<std::size_t> budget;
    std::uint64_t seed = 0;
    TruthSource truth; // n is taken from the truth file or `n`
    std::size_t n = 0;
};

/// Answers one submission file per input line with the rounded loss, or a
/// refusal/error line. Returns exit_budget if any submission was refused,
/// else exit_invalid if any file was rejected, else exit_ok.
inline int serve_oracle(const ServeConfig& config, std::istream& commands, std::ostream& out) {
    auto truth = load_truth(config.truth, config.n, config.classes);
    OracleSpec spec;
    spec.n = truth.labels.rows();
    spec.classes = config.classes;
    spec.precision = Precision(config.precision);
    spec.clamp = ClampPolicy{config.gamma};
    if (config.subset_size) spec.mode = SubsetMode{*config.subset_size};
    spec.budget = config.budget;
    spec.seed = config.seed;
    SimulatedOracle oracle(spec, truth.labels);

    bool refused = false, rejected = false;
    std::string line;
    while (std::getline(commands, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == "quit") break;
        try {
            const io::Submission sub = io::read_submission_csv(line);
            const OracleReply reply = oracle.query(sub.guesses);
            out << io::format_fixed(reply.loss, config.precision) << '\n';
        } catch (const budget_exhausted& e) {
            refused = true;
            out << "refused: budget exhausted (queries_used=" << e.queries_used() << ")\n";
        } catch (const error& e) {
            rejected = true;
            out << "error: " << e.what() << '\n';
        }
        out.flush();
    }
    return refused ? exit_budget : (rejected ? exit_invalid : exit_ok);
}

} // namespace llprobe::harness
