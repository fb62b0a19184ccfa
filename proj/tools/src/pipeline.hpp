#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace schemalink::pipeline {

/// Bad invocation: missing paths, malformed config. Exit code 2.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct PipelineConfig {
    std::string schemas_path;
    std::string dataset_path;
    std::string predictions_path;
    std::string out_dir = "out";

    std::size_t budget = 3000;
    std::string granularity = "fine";  // coarse | fine
    std::string scorer = "oracle";     // oracle | lexical | file

    double relevance_threshold = -3.0;
    double role_threshold = -3.0;
    bool include_sample_rows = false;
    std::string sample_rows_path;
    int rows_per_table = 3;
    std::optional<std::string> role_block_fence;

    double beta = 6.0;
    std::vector<double> thresholds = {0.0, -1.0, -2.0, -3.0, -4.0, -5.0, -6.0};
    std::string level = "column";  // column | table

    double noise_rate = 0.0;
    double fp_rate = 0.0;
    double fn_rate = 0.0;
    std::uint64_t seed = 0;
};

/// Reads a JSON config file; unknown keys are an error.
PipelineConfig load_config_file(const std::string& path);

int cmd_extract_gt(const PipelineConfig& config);
int cmd_render(const PipelineConfig& config);
int cmd_score(const PipelineConfig& config);
int cmd_focus(const PipelineConfig& config);
int cmd_eval(const PipelineConfig& config);
int cmd_sweep(const PipelineConfig& config);
int cmd_diff_links(const PipelineConfig& config, const std::string& path_a,
                   const std::string& path_b);

}  // namespace schemalink::pipeline
