#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lsm/errors.hpp"
#include "lsm/pipeline.hpp"

using namespace lsm;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small(const std::string& name) {
    ExperimentConfig c = preset(name);
    c.grid.nx = 24;
    c.grid.ny = 24;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("lsm-test-" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Presets, KiteCrossCorrelation) {
    const auto c = preset("kite-C");
    EXPECT_EQ(c.kind, MatrixKind::CrossCorrelation);
    EXPECT_EQ(c.sources.count, 80);
    EXPECT_DOUBLE_EQ(c.sources.beta, 0.1);
    EXPECT_DOUBLE_EQ(c.sources.radius, 50.0);
    EXPECT_EQ(c.receivers.count, 80);
    EXPECT_DOUBLE_EQ(c.receivers.radius, 5.0);
    EXPECT_DOUBLE_EQ(c.k, kTwoPi);
    EXPECT_DOUBLE_EQ(c.noise_amplitude, 5e-2);
    EXPECT_EQ(c.grid.nx, 100);
    EXPECT_DOUBLE_EQ(c.grid.x_min, -6.0);
    ASSERT_EQ(c.scatterers.size(), 1U);
    EXPECT_EQ(c.scatterers[0].shape, "kite");
    EXPECT_EQ(c.scatterers[0].center, (Point{2, 2}));
    EXPECT_DOUBLE_EQ(c.scatterers[0].size, 0.5);
}

TEST(Presets, EllipseSitsOppositeTheKite) {
    const auto c = preset("ellipse-N");
    EXPECT_EQ(c.kind, MatrixKind::NearField);
    EXPECT_EQ(c.scatterers[0].shape, "ellipse");
    EXPECT_EQ(c.scatterers[0].center, (Point{-2, -2}));
}

TEST(Presets, ParameterisedNames) {
    const auto beta = preset("kite-beta(0.6, 200)");
    EXPECT_DOUBLE_EQ(beta.sources.beta, 0.6);
    EXPECT_EQ(beta.sources.count, 200);
    const auto wave = preset("wavenumber(4pi,160)");
    EXPECT_NEAR(wave.k, 4.0 * kPi, 1e-14);
    EXPECT_EQ(wave.receivers.count, 160);
    EXPECT_EQ(wave.sources.count, 160);
    const auto setup2 = preset("setup2(200)");
    EXPECT_EQ(setup2.kind, MatrixKind::Covariance);
    EXPECT_EQ(setup2.receivers.count, 200);
    EXPECT_EQ(setup2.sources.count, 200);
    EXPECT_EQ(setup2.realizations, 200);
    EXPECT_DOUBLE_EQ(setup2.sources.beta, 0.0);
    const auto limited = preset("limited-aperture(I)");
    ASSERT_TRUE(limited.receivers.arc.has_value());
    ASSERT_TRUE(limited.sources.arc.has_value());
    EXPECT_DOUBLE_EQ(limited.sources.arc->theta_min, kPi / 2);
    EXPECT_DOUBLE_EQ(limited.receivers.arc->theta_max, 3 * kPi / 2);
    EXPECT_EQ(limited.kind, MatrixKind::ImaginaryNearField);
    const auto pts = preset("point-scatterers");
    EXPECT_TRUE(pts.uses_point_model());
    EXPECT_EQ(pts.scatterers.size(), 3U);
}

TEST(Presets, UnknownNamesFail) {
    EXPECT_THROW(preset("kite-Z"), ConfigError);
    EXPECT_THROW(preset("setup2()"), ConfigError);
    EXPECT_THROW(preset("banana"), ConfigError);
}

TEST(Wavenumber, AcceptedForms) {
    EXPECT_NEAR(parse_wavenumber("4pi"), 4 * kPi, 1e-15);
    EXPECT_NEAR(parse_wavenumber("4*pi"), 4 * kPi, 1e-15);
    EXPECT_NEAR(parse_wavenumber("pi"), kPi, 1e-15);
    EXPECT_DOUBLE_EQ(parse_wavenumber("6.5"), 6.5);
    EXPECT_THROW(parse_wavenumber("pie"), ConfigError);
}

TEST(Config, IniRoundTrip) {
    auto c = preset("limited-aperture(C)");
    c.seed = 77;
    c.rhs.conjugate = Complex(0.25, -0.5);
    const fs::path dir = scratch("ini");
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "c.ini");
        write_config(c, out);
    }
    const auto back = load_config(dir / "c.ini");
    std::stringstream a;
    std::stringstream b;
    write_config(c, a);
    write_config(back, b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(back.seed, 77U);
    EXPECT_EQ(back.rhs.conjugate, Complex(0.25, -0.5));
}

TEST(Config, Overrides) {
    auto c = apply_override(preset("kite-C"), "sources.count=120");
    EXPECT_EQ(c.sources.count, 120);
    c = apply_override(c, "scatterer.0.center_x=-1.5");
    EXPECT_DOUBLE_EQ(c.scatterers[0].center.x, -1.5);
    c = apply_override(c, "wave.k=4pi");
    EXPECT_NEAR(c.k, 4 * kPi, 1e-15);
    c = apply_override(c, "receivers.arc_max=3.0");
    ASSERT_TRUE(c.receivers.arc.has_value());
    EXPECT_DOUBLE_EQ(c.receivers.arc->theta_min, 0.0);
    EXPECT_DOUBLE_EQ(c.receivers.arc->theta_max, 3.0);
    EXPECT_THROW(apply_override(c, "sources.colour=red"), ConfigError);
    EXPECT_THROW(apply_override(c, "nonsense"), ConfigError);
    EXPECT_THROW(apply_override(c, "grid.nx=ten"), ConfigError);
}

TEST(Config, ValidationCatchesInconsistencies) {
    auto c = preset("kite-C");
    c.sources.radius = 3.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("setup2(200)");
    c.realizations = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("kite-N");
    c.noise_amplitude = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = preset("kite-N");
    c.scatterers.push_back({"point", {0, 0}, 0.01, 0.0, 0});
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Forward, ReceiverInsideScattererIsRejectedBeforeSolving) {
    auto c = preset("kite-N");
    c.scatterers[0].center = {5.0, 0.0};
    EXPECT_THROW(build_forward(c), GeometryError);
}

TEST(Forward, AutoRefinementConverges) {
    auto c = preset("kite-N");
    c.boundary.nodes = 32;
    const auto s = build_forward(c);
    EXPECT_GT(s.nodes[0], 32);
    EXPECT_LE(s.refine_change, c.boundary.refine_tolerance);
    c.boundary.nodes = 256;
    EXPECT_EQ(build_forward(c).nodes[0], 256);
}

TEST(Run, WritesOutputsAndVerifiableManifest) {
    auto c = small("kite-C");
    c.output = scratch("run").string();
    const auto r = run(c);
    for (const char* name : {"matrix.csv", "indicator_raw.csv", "indicator.csv", "indicator.pgm", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(fs::path(c.output) / name)) << name;
    }
    EXPECT_TRUE(verify_manifest(c.output).empty());
    EXPECT_GT(r.manifest.delta, 0.0);
    EXPECT_EQ(r.manifest.files.size(), 4U);
    const std::string pgm = slurp(fs::path(c.output) / "indicator.pgm");
    EXPECT_EQ(pgm.substr(0, 12), "P5\n24 24\n255");
    EXPECT_EQ(pgm.size(), std::string("P5\n24 24\n255\n").size() + 24U * 24U);
    std::ifstream csv(fs::path(c.output) / "matrix.csv");
    const auto back = read_field_matrix_csv(csv);
    EXPECT_EQ(back.entries, r.noisy.entries);
    EXPECT_EQ(back.provenance.delta, r.manifest.delta);
}

TEST(Run, ManifestDetectsTampering) {
    auto c = small("kite-N");
    c.output = scratch("tamper").string();
    run(c);
    {
        std::ofstream out(fs::path(c.output) / "indicator.csv", std::ios::app);
        out << "1,2,3,4,5\n";
    }
    EXPECT_FALSE(verify_manifest(c.output).empty());
}

TEST(Run, SameSeedSameBytesDifferentSeedDifferentBytes) {
    auto c = small("kite-beta(0.6,80)");
    c.output = scratch("det-a").string();
    run(c);
    c.output = scratch("det-b").string();
    run(c);
    c.seed = 2;
    c.output = scratch("det-c").string();
    run(c);
    const auto a = slurp(fs::temp_directory_path() / "lsm-test-det-a" / "indicator.csv");
    EXPECT_EQ(slurp(fs::temp_directory_path() / "lsm-test-det-a" / "matrix.csv"),
              slurp(fs::temp_directory_path() / "lsm-test-det-b" / "matrix.csv"));
    EXPECT_EQ(a, slurp(fs::temp_directory_path() / "lsm-test-det-b" / "indicator.csv"));
    EXPECT_NE(slurp(fs::temp_directory_path() / "lsm-test-det-a" / "matrix.csv"),
              slurp(fs::temp_directory_path() / "lsm-test-det-c" / "matrix.csv"));
}

TEST(Run, StageErrorsNameTheStage) {
    auto c = small("kite-N");
    c.scatterers[0].center = {5.0, 0.0};
    try {
        execute(c);
        FAIL() << "expected a stage error";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "forward");
    }
}

TEST(Run, SecondSetupAndLimitedAperture) {
    auto c = small("setup2(50)");
    c.receivers.count = 40;
    c.sources.count = 40;
    const auto r = execute(c);
    EXPECT_EQ(r.noisy.kind, MatrixKind::Covariance);
    EXPECT_EQ(r.noisy.provenance.realizations, 50);
    const auto l = execute(small("limited-aperture(N)"));
    for (const double a : l.noisy.receivers.angles) {
        EXPECT_GE(a, kPi / 2);
        EXPECT_LT(a, 3 * kPi / 2);
    }
}
