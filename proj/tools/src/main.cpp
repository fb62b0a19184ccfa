#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pipeline.hpp"
#include "schemalink/errors.hpp"

namespace {

using schemalink::pipeline::PipelineConfig;

/// Flag values land in optionals so that flags override the config file
/// only when actually given.
struct FlagSet {
    std::optional<std::string> config;
    std::optional<std::string> schemas;
    std::optional<std::string> dataset;
    std::optional<std::string> predictions;
    std::optional<std::string> out;
    std::optional<std::size_t> budget;
    std::optional<double> threshold;
    std::optional<double> role_threshold;
    std::optional<double> beta;
    std::optional<std::string> granularity;
    std::optional<std::string> scorer;
    std::optional<double> noise_rate;
    std::optional<double> fp_rate;
    std::optional<double> fn_rate;
    std::optional<std::uint64_t> seed;
};

void add_common_flags(CLI::App* cmd, FlagSet& flags) {
    cmd->add_option("--config", flags.config, "JSON config file; flags override its values");
    cmd->add_option("--schemas", flags.schemas, "schema catalog (tables.json layout)");
    cmd->add_option("--dataset", flags.dataset, "dataset JSON array or canonical link file");
    cmd->add_option("--predictions", flags.predictions, "prediction file (JSON lines)");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--budget", flags.budget, "prompt token budget (default 3000)");
    cmd->add_option("--threshold", flags.threshold, "relevance logit threshold");
    cmd->add_option("--role-threshold", flags.role_threshold, "role logit threshold");
    cmd->add_option("--beta", flags.beta, "F-score beta (default 6)");
    cmd->add_option("--granularity", flags.granularity, "coarse | fine");
    cmd->add_option("--scorer", flags.scorer, "oracle | lexical | file");
    cmd->add_option("--noise-rate", flags.noise_rate, "noise-injection rate for focus");
    cmd->add_option("--fp-rate", flags.fp_rate, "oracle false-positive rate");
    cmd->add_option("--fn-rate", flags.fn_rate, "oracle false-negative rate");
    cmd->add_option("--seed", flags.seed, "seed for all sampling substreams");
}

PipelineConfig resolve_config(const FlagSet& flags) {
    PipelineConfig config;
    if (flags.config.has_value()) {
        config = schemalink::pipeline::load_config_file(*flags.config);
    }
    if (flags.schemas) config.schemas_path = *flags.schemas;
    if (flags.dataset) config.dataset_path = *flags.dataset;
    if (flags.predictions) config.predictions_path = *flags.predictions;
    if (flags.out) config.out_dir = *flags.out;
    if (flags.budget) config.budget = *flags.budget;
    if (flags.threshold) config.relevance_threshold = *flags.threshold;
    if (flags.role_threshold) config.role_threshold = *flags.role_threshold;
    if (flags.beta) config.beta = *flags.beta;
    if (flags.granularity) config.granularity = *flags.granularity;
    if (flags.scorer) config.scorer = *flags.scorer;
    if (flags.noise_rate) config.noise_rate = *flags.noise_rate;
    if (flags.fp_rate) config.fp_rate = *flags.fp_rate;
    if (flags.fn_rate) config.fn_rate = *flags.fn_rate;
    if (flags.seed) config.seed = *flags.seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"schemalink: schema-linking toolchain for Text-to-SQL"};
    app.require_subcommand(1);

    FlagSet flags;
    std::string diff_a, diff_b;

    CLI::App* extract_gt = app.add_subcommand(
        "extract-gt", "derive role-labeled ground-truth links by analyzing dataset SQL");
    CLI::App* render = app.add_subcommand(
        "render", "render marker-delimited linking prompts, chunked under the token budget");
    CLI::App* score =
        app.add_subcommand("score", "produce a prediction file with the chosen scorer");
    CLI::App* focus =
        app.add_subcommand("focus", "apply thresholds and render focused schema prompts");
    CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "threshold sweep CSV and the F-beta-optimal threshold");
    CLI::App* diff =
        app.add_subcommand("diff-links", "structured difference between two link files");
    diff->add_option("a", diff_a, "first link file")->required();
    diff->add_option("b", diff_b, "second link file")->required();

    for (CLI::App* cmd : {extract_gt, render, score, focus, eval, sweep_cmd, diff}) {
        add_common_flags(cmd, flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        PipelineConfig config = resolve_config(flags);
        if (extract_gt->parsed()) return schemalink::pipeline::cmd_extract_gt(config);
        if (render->parsed()) return schemalink::pipeline::cmd_render(config);
        if (score->parsed()) return schemalink::pipeline::cmd_score(config);
        if (focus->parsed()) return schemalink::pipeline::cmd_focus(config);
        if (eval->parsed()) return schemalink::pipeline::cmd_eval(config);
        if (sweep_cmd->parsed()) return schemalink::pipeline::cmd_sweep(config);
        if (diff->parsed()) return schemalink::pipeline::cmd_diff_links(config, diff_a, diff_b);
        return 2;
    } catch (const schemalink::pipeline::UsageError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
