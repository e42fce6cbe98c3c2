#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geocloud/divergence.hpp"
#include "geocloud/gmm.hpp"
#include "geocloud/metrics.hpp"
#include "geocloud/point_cloud.hpp"

namespace geocloud {

/// Pipeline input: a PLY file, a WAV file, or a parametric shape.
/// Shapes are written as "cube" / "cone" / "sphere", optionally with an
/// explicit generation seed as "sphere:123".
struct InputSpec {
    enum class Kind { Ply, Shape, Wav };
    Kind kind = Kind::Shape;
    std::string value;
    bool has_gen_seed = false;
    std::uint64_t gen_seed = 0;

    static InputSpec parse(const std::string& text);
    std::string display_label() const;
};

struct PipelineConfig {
    InputSpec input_a;
    InputSpec input_b;
    std::size_t shape_n = 2048;      // points generated for shape inputs
    std::size_t sample_count = 960;  // FPS draws per cloud
    std::size_t sample_size = 512;   // points per draw
    std::string reduction = "pca";   // "pca" | "ae"
    std::size_t epochs = 0;          // 0 = default (400, or 350 for audio)
    std::size_t batch_size = 0;      // 0 = default (16, or 4 for audio)
    std::size_t gmm_k = 5;
    CovMode cov_mode = CovMode::Diagonal;
    std::size_t grid_points = 200;
    double grid_pad = 6.0;
    bool raw_sum = false;            // reproduce the unweighted sum form
    std::size_t emd_size = 0;        // FPS size for the EMD baseline; 0 = skip
    std::size_t dj_size = 0;         // FPS size for the d_J baseline; 0 = skip
    std::uint64_t seed = 0;
    std::size_t audio_n_fft = 1024;
    std::size_t audio_hop = 256;

    std::string to_json_string(int indent = 2) const;
    static PipelineConfig from_json_string(const std::string& text);
    static PipelineConfig load(const std::string& path);
};

struct ComparisonReport {
    std::string version;
    std::string label_a;
    std::string label_b;
    std::vector<MetricValue> metrics;            // includes an "mskl" entry
    DivergenceResult divergence;
    std::map<std::string, std::uint64_t> stage_seeds;
    std::map<std::string, double> timings_sec;   // excluded from identity checks
    std::string config_json;

    double metric(const std::string& name) const;
    bool has_metric(const std::string& name) const;

    /// Serialized report; identical inputs and seeds give byte-identical
    /// output apart from the timings block.
    std::string to_json_string(int indent = 2) const;
    static ComparisonReport from_json_string(const std::string& text);
    static ComparisonReport load(const std::string& path);
    void save(const std::string& path) const;
};

/// Throws SchemaError when the JSON does not satisfy the report schema.
void validate_report_json(const std::string& text);

/// Full comparison: load/generate -> FPS sampling -> 70/15/15 split ->
/// reduction fit on train -> embed test per label -> EM per label -> MSKL,
/// with Hausdorff/Chamfer (and optional EMD/d_J) computed on the raw inputs.
/// Stage failures are rethrown as StageError with the stage name attached.
ComparisonReport run_pipeline(const PipelineConfig& config);

enum class TableFormat { Json, Csv, Markdown };

/// Lower-triangular pairwise table (Ch/H/IGM per cell, diagonal zeros).
/// All reports must carry the same metric set.
std::string emit_table(const std::vector<ComparisonReport>& reports, TableFormat format);

}  // namespace geocloud
