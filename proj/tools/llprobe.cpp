// llprobe: command-line front end for the simulated oracle and the attacks.
//
//   llprobe attack-full   [--config run.ini] [--n 512] [--schedule 1x2,4x30:g4,6:g6] ...
//   llprobe attack-subset [--precisions 1 2 3 4 5] [--replications 100] ...
//   llprobe probe search|quality|bound ...
//   llprobe oracle-serve  --truth truth.csv < paths.txt
//   llprobe score         --truth truth.csv --submission sub.csv
//
// Exit status: 0 ok, 1 ambiguous decode (strict), 2 budget, 3 bad input.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llprobe/llprobe.hpp"

namespace {

using namespace llprobe;
namespace hx = llprobe::harness;

struct TruthFlags {
    std::string path;
    std::uint64_t seed = 0;
    std::vector<double> weights;

    void add(CLI::App* cmd) {
        cmd->add_option("--truth", path, "truth CSV (id,label); generated when absent");
        cmd->add_option("--truth-seed", seed, "seed of the generated truth");
        cmd->add_option("--class-weights", weights, "label distribution of the generated truth")
            ->delimiter(',');
    }

    hx::TruthSource source() const {
        hx::TruthSource out;
        if (!path.empty()) out.path = path;
        out.seed = seed;
        out.class_weights = weights;
        return out;
    }
};

const std::map<std::string, ProbeObjective> objective_names = {
    {"Q", ProbeObjective::Q}, {"Qtilde", ProbeObjective::Qtilde}};

std::optional<std::size_t> positive_or_none(std::size_t v) {
    return v == 0 ? std::nullopt : std::optional<std::size_t>(v);
}

std::vector<std::size_t> read_index_file(const std::string& path) {
    auto in = io::open_input(path);
    std::vector<std::size_t> out;
    for (const auto& line : io::read_lines(in)) out.push_back(io::parse_index(line));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"log-loss oracle simulator and label-inference attacks", "llprobe"};
    app.set_config("--config", "", "INI file; [attack-full], [probe.search], ... sections");
    app.require_subcommand(1);
    int exit_code = hx::exit_ok;

    // ---- attack-full
    hx::FullAttackConfig full;
    TruthFlags full_truth;
    std::size_t full_budget = 0;
    std::string full_out = ".";
    auto* cmd_full = app.add_subcommand("attack-full", "recover every label from a full-set oracle");
    auto* opt_full_n = cmd_full->add_option("--n", full.n, "test-set size; with --truth it must match the file");
    cmd_full->add_option("--classes", full.classes)->check(CLI::Range(2, 64));
    cmd_full->add_option("--precision", full.precision, "digits in the oracle reply")
        ->check(CLI::Range(0, 17));
    cmd_full->add_option("--gamma", full.gamma, "oracle clamp");
    cmd_full->add_option("--budget", full_budget, "query cap, 0 = unlimited");
    cmd_full->add_option("--schedule", full.schedule, "phases m[xR][:probe], comma separated");
    cmd_full->add_option("--seed", full.seed, "probe search seed for phases without a probe");
    cmd_full->add_flag("--strict", full.strict, "stop at the first ambiguous decode");
    cmd_full->add_option("--out", full_out, "output directory");
    full_truth.add(cmd_full);
    cmd_full->callback([&] {
        full.budget = positive_or_none(full_budget);
        full.truth = full_truth.source();
        if (full.truth.path && opt_full_n->count() == 0) full.n = 0; // take n from the file
        full.out_dir = full_out;
        exit_code = hx::run_full_experiment(full, std::cout).exit_code;
    });

    // ---- attack-subset
    hx::SubsetSweepConfig sweep;
    std::size_t sweep_budget = 0;
    std::string sweep_out = ".";
    auto* cmd_subset = app.add_subcommand("attack-subset", "precision sweep of the subset-oracle attack");
    cmd_subset->add_option("--n", sweep.n);
    cmd_subset->add_option("--classes", sweep.classes)->check(CLI::Range(2, 64));
    cmd_subset->add_option("--subset-size", sweep.subset_size, "rows the oracle scores (s)");
    cmd_subset->add_option("--precisions", sweep.precisions)->delimiter(',')->check(CLI::Range(0, 17));
    cmd_subset->add_option("--gamma", sweep.gamma);
    cmd_subset->add_option("--budget", sweep_budget, "query cap per run, 0 = unlimited");
    cmd_subset->add_option("--probe", sweep.probe, "probe CSV or g4 | g6 | subset_g4");
    cmd_subset->add_option("--class-weights", sweep.class_weights)->delimiter(',');
    cmd_subset->add_option("--seed", sweep.seed, "base seed of truths, subsets and search order");
    cmd_subset->add_option("--replications", sweep.replications)->check(CLI::PositiveNumber);
    cmd_subset->add_flag("--write-claims", sweep.write_claims, "claims CSV per run");
    cmd_subset->add_option("--out", sweep_out, "output directory");
    cmd_subset->callback([&] {
        sweep.budget = positive_or_none(sweep_budget);
        sweep.out_dir = sweep_out;
        exit_code = hx::run_subset_sweep(sweep, std::cout).exit_code;
    });

    // ---- probe
    auto* cmd_probe = app.add_subcommand("probe", "probe-matrix design tools");
    cmd_probe->require_subcommand(1);

    std::size_t search_m = 4, search_c = 3, search_trials = 1000;
    std::uint64_t search_seed = 0;
    double search_gamma = default_gamma;
    ProbeObjective search_objective = ProbeObjective::Q;
    std::string search_out;
    auto* cmd_search = cmd_probe->add_subcommand("search", "Monte-Carlo search for a probe matrix");
    cmd_search->add_option("--m", search_m)->check(CLI::PositiveNumber);
    cmd_search->add_option("--classes", search_c)->check(CLI::Range(2, 64));
    cmd_search->add_option("--trials", search_trials)->check(CLI::PositiveNumber);
    cmd_search->add_option("--seed", search_seed);
    cmd_search->add_option("--gamma", search_gamma, "entry floor of sampled probes");
    cmd_search->add_option("--objective", search_objective)
        ->transform(CLI::CheckedTransformer(objective_names));
    cmd_search->add_option("--out", search_out, "probe CSV path (default: stdout)");
    cmd_search->callback([&] {
        const SearchResult best = monte_carlo_search(search_m, search_c, search_trials, search_seed,
                                                     search_objective, search_gamma);
        if (search_out.empty()) {
            io::write_probe_csv(std::cout, best.probe);
        } else {
            auto f = io::open_output(search_out);
            io::write_probe_csv(f, best.probe);
        }
        std::cout << "quality " << io::format_fixed(best.report.quality, 6) << '\n'
                  << "quality_exact " << io::format_g17(best.report.quality) << '\n'
                  << "best_trial " << best.best_trial << '\n';
    });

    std::string quality_probe;
    double quality_gamma = default_gamma;
    ProbeObjective quality_objective = ProbeObjective::Q;
    auto* cmd_quality = cmd_probe->add_subcommand("quality", "quality of a probe matrix");
    cmd_quality->add_option("--probe", quality_probe, "probe CSV or g4 | g6 | subset_g4")->required();
    cmd_quality->add_option("--gamma", quality_gamma, "entry floor the probe must respect");
    cmd_quality->add_option("--objective", quality_objective)
        ->transform(CLI::CheckedTransformer(objective_names));
    cmd_quality->callback([&] {
        const ProbeMatrix g = hx::resolve_probe(quality_probe, quality_gamma);
        const QualityReport report = evaluate_quality(g, quality_objective);
        std::cout << "quality " << io::format_fixed(report.quality, 6) << '\n'
                  << "quality_exact " << io::format_g17(report.quality) << '\n';
        if (quality_objective == ProbeObjective::Qtilde) {
            const QtildeCandidates alt = qtilde_candidates(g);
            std::cout << "same_mask " << io::format_g17(alt.same_mask) << '\n'
                      << "cross_mask " << io::format_g17(alt.cross_mask) << '\n'
                      << "decoding_margin " << io::format_g17(alt.decoding_margin) << '\n';
        }
    });

    std::size_t bound_m = 10, bound_c = 3;
    double bound_gamma = default_gamma;
    auto* cmd_bound = cmd_probe->add_subcommand("bound", "upper bound on the quality of any probe");
    cmd_bound->add_option("--m", bound_m)->check(CLI::PositiveNumber);
    cmd_bound->add_option("--classes", bound_c)->check(CLI::Range(2, 64));
    cmd_bound->add_option("--gamma", bound_gamma);
    cmd_bound->callback([&] {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", delta_bound(bound_m, bound_c, bound_gamma));
        std::cout << "bound " << buf << '\n';
    });

    // ---- oracle-serve
    hx::ServeConfig serve;
    TruthFlags serve_truth;
    std::size_t serve_budget = 0, serve_subset = 0;
    std::string serve_commands;
    auto* cmd_serve = app.add_subcommand(
        "oracle-serve", "score submission files named one per line on stdin");
    cmd_serve->add_option("--n", serve.n, "rows of a generated truth");
    cmd_serve->add_option("--classes", serve.classes)->check(CLI::Range(2, 64));
    cmd_serve->add_option("--precision", serve.precision)->check(CLI::Range(0, 17));
    cmd_serve->add_option("--gamma", serve.gamma);
    cmd_serve->add_option("--subset-size", serve_subset, "score only s hidden rows, 0 = all");
    cmd_serve->add_option("--budget", serve_budget, "query cap, 0 = unlimited");
    cmd_serve->add_option("--seed", serve.seed, "seed of the hidden subset");
    cmd_serve->add_option("--commands", serve_commands, "read paths from this file, not stdin");
    serve_truth.add(cmd_serve);
    cmd_serve->callback([&] {
        serve.truth = serve_truth.source();
        serve.budget = positive_or_none(serve_budget);
        serve.subset_size = positive_or_none(serve_subset);
        if (serve_commands.empty()) {
            exit_code = hx::serve_oracle(serve, std::cin, std::cout);
        } else {
            auto in = io::open_input(serve_commands);
            exit_code = hx::serve_oracle(serve, in, std::cout);
        }
    });

    // ---- score
    std::string score_truth, score_submission, score_claims, score_evaluated;
    std::size_t score_classes = 3;
    int score_precision = -1;
    double score_gamma = default_gamma;
    auto* cmd_score = app.add_subcommand("score", "leaderboard score of a submission, or claim metrics");
    cmd_score->add_option("--truth", score_truth)->required();
    cmd_score->add_option("--classes", score_classes)->check(CLI::Range(2, 64));
    auto* opt_sub = cmd_score->add_option("--submission", score_submission, "submission CSV");
    auto* opt_claims = cmd_score->add_option("--claims", score_claims, "claims CSV from attack-subset");
    opt_sub->excludes(opt_claims);
    cmd_score->add_option("--precision", score_precision, "round the loss, -1 = exact")
        ->check(CLI::Range(-1, 17));
    cmd_score->add_option("--gamma", score_gamma);
    cmd_score->add_option("--evaluated", score_evaluated, "scored row indices, one per line");
    cmd_score->callback([&] {
        const auto truth = io::read_truth_csv(score_truth, score_classes);
        std::vector<std::size_t> rows;
        if (!score_evaluated.empty()) {
            rows = read_index_file(score_evaluated);
            for (std::size_t i : rows)
                if (i >= truth.labels.rows()) throw parse_error("evaluated index out of range");
        } else {
            rows.resize(truth.labels.rows());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        }
        if (!score_claims.empty()) {
            auto in = io::open_input(score_claims);
            const ClaimedLabels claims = io::read_claims_csv(in);
            if (claims.size() != truth.labels.rows())
                throw parse_error("claims and truth differ in row count");
            io::write_metrics(std::cout, score_inference(claims, truth.labels, rows));
            return;
        }
        if (score_submission.empty()) throw parse_error("score needs --submission or --claims");
        const io::Submission sub = io::read_submission_csv(score_submission);
        if (sub.guesses.rows() != truth.labels.rows() || sub.guesses.classes() != score_classes)
            throw parse_error("submission shape does not match the truth");
        const ClampPolicy policy{score_gamma};
        policy.validate(score_classes);
        const double loss = log_loss(truth.labels, clamp(sub.guesses, policy), rows);
        if (score_precision >= 0)
            std::cout << "loss " << io::format_fixed(round_loss(loss, Precision(score_precision)),
                                                    score_precision) << '\n';
        else
            std::cout << "loss " << io::format_g17(loss) << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return hx::exit_invalid;
    } catch (const budget_exhausted& e) {
        std::cerr << "llprobe: " << e.what() << '\n';
        return hx::exit_budget;
    } catch (const error& e) {
        std::cerr << "llprobe: " << e.what() << '\n';
        return hx::exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "llprobe: " << e.what() << '\n';
        return hx::exit_invalid;
    }
    return exit_code;
}
