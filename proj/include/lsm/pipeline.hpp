#pragma once

// Experiment configuration, named presets, and the run orchestration
// acquire -> noise -> invert -> write.
//
// Lengths are in units of the reference wavelength 1 (k = 2 pi); presets at
// other wavenumbers keep the geometry fixed in these units.
//
// Config files are INI text. Sections and keys:
//
//   [experiment] name, kind (N | I | C | covariance), seed, output
//   [wave]       k
//   [scatterer.<i>] shape (circle | ellipse | kite | point), center_x,
//                center_y, size, rotation, nodes. For shape = point, size is
//                the disk radius r of the point-scatterer model.
//   [receivers]  radius, count, beta, arc_min, arc_max
//   [sources]    radius, count, beta, distribution (perturbed | uniform),
//                arc_min, arc_max, realizations
//   [noise]      amplitude
//   [grid]       x_min, x_max, y_min, y_max, nx, ny, mask_radius
//   [boundary]   nodes, auto_refine, refine_tolerance, max_nodes
//   [rhs]        direct_re, direct_im, conjugate_re, conjugate_im
//
// arc_min and arc_max are optional; when both are absent the full circle
// is used. Every key may be overridden with --set section.key=value.

#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lsm/acquisition.hpp"
#include "lsm/forward.hpp"
#include "lsm/geometry.hpp"
#include "lsm/inversion.hpp"

namespace lsm {

inline constexpr const char* kVersion = "0.1.0";

struct ScattererSpec {
    std::string shape = "kite";  // circle, ellipse, kite, point
    Point center{};
    double size = 0.5;
    double rotation = 0.0;
    int nodes = 0;  // 0 selects [boundary] nodes
};

struct ArrayConfig {
    double radius = 5.0;
    int count = 80;
    double beta = 0.0;
    AngleDistribution distribution = AngleDistribution::Perturbed;
    std::optional<Arc> arc;
};

struct BoundaryConfig {
    int nodes = 256;
    bool auto_refine = true;
    double refine_tolerance = 1.0e-8;
    int max_nodes = 1024;
};

struct ExperimentConfig {
    std::string name = "custom";
    MatrixKind kind = MatrixKind::CrossCorrelation;
    std::uint64_t seed = 1;
    std::string output = "out";
    double k = kTwoPi;
    std::vector<ScattererSpec> scatterers;
    ArrayConfig receivers{};
    ArrayConfig sources{50.0, 80, 0.1, AngleDistribution::Perturbed, std::nullopt};
    int realizations = 0;
    double noise_amplitude = 5.0e-2;
    GridSpec grid{};
    double mask_radius = 5.0;
    BoundaryConfig boundary{};
    RhsWeights rhs{};

    bool uses_point_model() const;
    /// Throws ConfigError on inconsistent values (counts, radii, kinds).
    void validate() const;
};

/// Names: ellipse-N, ellipse-I, ellipse-C, kite-N, kite-I, kite-C,
/// kite-beta(beta,L), wavenumber(k,J[,shape[,kind]]), setup2(M),
/// limited-aperture(kind), point-scatterers. Wavenumber k accepts the
/// forms 12.566, 4pi and 4*pi. Throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

boost::property_tree::ptree to_ptree(const ExperimentConfig& config);
ExperimentConfig from_ptree(const boost::property_tree::ptree& tree);

ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(const ExperimentConfig& config, std::ostream& out);

/// Applies "section.key=value"; throws ConfigError on malformed input or
/// unknown keys.
ExperimentConfig apply_override(const ExperimentConfig& config, const std::string& assignment);

/// Parses 12.566, 4pi, 4*pi, pi.
double parse_wavenumber(const std::string& text);

/// The geometry of a config, solved and ready for acquisition.
struct ForwardSetup {
    WaveContext ctx;
    std::unique_ptr<ScatteringModel> model;
    std::vector<BoundaryCurve> curves;  // placed boundary curves (empty for the point model)
    std::vector<int> nodes;             // nodes per curve after refinement
    double refine_change = 0.0;         // last self-convergence difference
    PointSet receivers;
    PointSet sources;
    double sigma_measure = 0.0;

    bool inside(Point p) const;
};

/// Builds the scattering model and point sets, validating that every point
/// is exterior before any field is computed. With auto_refine, the node count
/// is doubled until scattered fields at a few receiver pairs change by less
/// than refine_tolerance (relative) between n and 2n.
ForwardSetup build_forward(const ExperimentConfig& config);

/// Clean (noise-free) measurement matrix for the config.
FieldMatrix acquire(const ExperimentConfig& config, const ForwardSetup& setup);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct OutputFile {
    std::string name;
    std::uintmax_t bytes = 0;
    std::string sha256;
};

struct RunManifest {
    ExperimentConfig config;
    std::string version = kVersion;
    std::vector<StageTiming> timings;
    double delta = 0.0;
    std::vector<int> boundary_nodes;
    double condition_estimate = 0.0;
    int failed_probes = 0;
    std::vector<OutputFile> files;
};

struct RunResult {
    RunManifest manifest;
    FieldMatrix clean;
    FieldMatrix noisy;
    IndicatorMap map;
    std::vector<BoundaryCurve> curves;
    std::vector<Point> point_centers;
};

/// Runs without touching the file system.
RunResult execute(const ExperimentConfig& config);

/// Runs and writes matrix.csv, indicator_raw.csv, indicator.csv,
/// indicator.pgm and manifest.json into config.output. Stage failures are
/// rethrown as StageError.
RunResult run(const ExperimentConfig& config);

class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what);
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

void write_indicator_csv(const IndicatorMap& map, std::ostream& out);
void write_indicator_raw_csv(const IndicatorMap& map, std::ostream& out);
/// 8-bit binary graymap of the normalized reciprocal indicator, first row at
/// the top (largest y).
void write_indicator_pgm(const IndicatorMap& map, std::ostream& out);

std::string sha256_hex(const std::filesystem::path& path);
std::string manifest_json(const RunManifest& manifest);
/// Re-reads manifest.json in `dir`, recomputes every checksum and checks the
/// config echo parses back to the same config. Returns the list of problems.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace lsm
