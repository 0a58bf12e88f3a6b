#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "lsm/acquisition.hpp"
#include "lsm/errors.hpp"
#include "lsm/validation.hpp"

using namespace lsm;

namespace {

const WaveContext kCtx(kTwoPi);

BoundaryIntegralModel kite_model(int n = 256) {
    return BoundaryIntegralModel(
        assemble_single_layer(discretize(place_scatterer(BoundaryCurve(KiteShape{}), {2, 2}, 0.5), n), kCtx));
}

BoundaryIntegralModel free_model() {
    return BoundaryIntegralModel(assemble_single_layer(std::vector<DiscretizedBoundary>{}, kCtx));
}

}  // namespace

TEST(NearField, SymmetricByReciprocity) {
    const auto model = kite_model();
    const auto n = near_field_matrix(circle_points(5.0, 40, 0.0, 0), model);
    EXPECT_EQ(n.kind, MatrixKind::NearField);
    EXPECT_LT((n.entries - n.entries.transpose()).norm(), 1e-6 * n.entries.norm());
}

TEST(NearField, SymmetricOnSeriesCircle) {
    const auto model = BoundaryIntegralModel(
        assemble_single_layer(discretize(BoundaryCurve(CircleShape{0.5}, {0.5, -1.0}), 128), kCtx));
    const PointSet rx = circle_points(5.0, 12, 0.0, 0);
    const auto n = near_field_matrix(rx, model);
    for (int j = 0; j < 12; ++j) {
        for (int m = 0; m < 12; ++m) {
            const Complex ref = mie_scattered_circle(kCtx, 0.5, {0.5, -1.0}, rx.points[j], rx.points[m]).value;
            EXPECT_LT(std::abs(n.entries(j, m) - ref), 1e-10 * std::abs(ref));
        }
    }
}

TEST(NearField, EmptyScattererGivesZero) {
    const auto n = near_field_matrix(circle_points(5.0, 10, 0.0, 0), free_model());
    EXPECT_EQ(n.entries.norm(), 0.0);
}

TEST(NearField, RejectsReceiversInsideScatterer) {
    PointSet rx = circle_points(5.0, 4, 0.0, 0);
    rx.points[1] = {2.0, 2.0};
    EXPECT_THROW(near_field_matrix(rx, kite_model(64)), GeometryError);
}

TEST(ImaginaryNearField, EntrywiseTwiceImaginaryPart) {
    const auto n = near_field_matrix(circle_points(5.0, 20, 0.0, 0), kite_model());
    const auto i = imaginary_near_field_matrix(n);
    EXPECT_EQ(i.kind, MatrixKind::ImaginaryNearField);
    for (Eigen::Index a = 0; a < 20; ++a) {
        for (Eigen::Index b = 0; b < 20; ++b) {
            EXPECT_EQ(i.entries(a, b).real(), 0.0);
            EXPECT_DOUBLE_EQ(i.entries(a, b).imag(), 2.0 * n.entries(a, b).imag());
        }
    }
    EXPECT_LE(i.entries.norm(), 2.0 * n.entries.norm());
    EXPECT_LT((i.entries + i.entries.adjoint()).norm(), 1e-6 * i.entries.norm());
    EXPECT_THROW(imaginary_near_field_matrix(i), KindError);
}

TEST(ImaginaryNearField, RealEntriesVanish) {
    FieldMatrix n;
    n.entries = Eigen::MatrixXcd::Constant(2, 2, Complex(3.0, 0.0));
    EXPECT_EQ(imaginary_near_field_matrix(n).entries.norm(), 0.0);
}

TEST(Bracket, DiagonalAndOffDiagonal) {
    const PointSet rx = circle_points(5.0, 6, 0.0, 0);
    const auto b = imaginary_green_bracket(kCtx, rx);
    EXPECT_EQ(b(2, 2), Complex(0.0, 0.5));
    const Complex phi = green2d(kCtx, rx.points[0], rx.points[3]);
    EXPECT_LT(std::abs(b(0, 3) - (phi - std::conj(phi))), 1e-15);
}

TEST(CrossCorrelation, ApproximatesImaginaryNearField) {
    const auto model = kite_model();
    const PointSet rx = circle_points(5.0, 80, 0.0, 0);
    const auto i = imaginary_near_field_matrix(near_field_matrix(rx, model));
    const PointSet src = circle_points(50.0, 80, 0.0, 0, std::nullopt, PointRole::RandomSource);
    const auto c = cross_correlation_matrix(rx, src, kTwoPi * 50.0, model);
    EXPECT_EQ(c.provenance.sources, 80);
    EXPECT_DOUBLE_EQ(c.provenance.sigma_measure, kTwoPi * 50.0);
    EXPECT_LT((c.entries - i.entries).norm(), 0.05 * i.entries.norm());
    // Skew-Hermitian up to the same quadrature error.
    EXPECT_LT((c.entries + c.entries.adjoint()).norm(), 0.1 * c.entries.norm());
}

TEST(CrossCorrelation, NoScattererGivesNearlyZero) {
    const PointSet rx = circle_points(5.0, 30, 0.0, 0);
    const PointSet src = circle_points(50.0, 200, 0.0, 0, std::nullopt, PointRole::DeterministicSource);
    const auto c = cross_correlation_matrix(rx, src, kTwoPi * 50.0, free_model());
    EXPECT_LT(c.entries.norm(), 1e-2 * imaginary_green_bracket(kCtx, rx).norm());
}

TEST(CrossCorrelation, RejectsBadInput) {
    const auto model = free_model();
    const PointSet rx = circle_points(5.0, 3, 0.0, 0);
    PointSet none;
    EXPECT_THROW(cross_correlation_matrix(rx, none, 1.0, model), DomainError);
    EXPECT_THROW(cross_correlation_matrix(rx, rx, 0.0, model), DomainError);
}

TEST(Covariance, LargeSampleLimit) {
    const auto model = kite_model(64);
    const PointSet rx = circle_points(5.0, 8, 0.0, 0);
    const PointSet src = circle_points(50.0, 40, 0.0, 0, std::nullopt, PointRole::DeterministicSource);
    const double measure = kTwoPi * 50.0;
    const int m = 10000;
    const auto cov = covariance_matrix(rx, src, measure, m, 17, model);
    const Eigen::MatrixXcd b = imaginary_green_bracket(kCtx, rx);
    // E[N N^H] = (|Sigma| / L) I, so the expectation is 2ik |Sigma| / L U U^H.
    const Eigen::MatrixXcd u = model.total(rx.view(), src.view());
    const Eigen::MatrixXcd expected = Complex(0.0, 2.0 * kTwoPi * measure / 40.0) * (u * u.adjoint());
    const double err = (cov.entries + b - expected).norm() / expected.norm();
    EXPECT_LT(err, 3.0 * std::sqrt(8.0 / m));
    EXPECT_EQ(cov.provenance.realizations, m);
}

TEST(Covariance, ApproximatesCrossCorrelationWithResolvedSources) {
    const auto model = kite_model(64);
    const PointSet rx = circle_points(5.0, 8, 0.0, 0);
    const PointSet src = circle_points(50.0, 800, 0.0, 0, std::nullopt, PointRole::DeterministicSource);
    const double measure = kTwoPi * 50.0;
    const auto limit = cross_correlation_matrix(rx, src, measure, model);
    const auto cov = covariance_matrix(rx, src, measure, 10000, 5, model);
    const Eigen::MatrixXcd b = imaginary_green_bracket(kCtx, rx);
    EXPECT_LT((cov.entries - limit.entries).norm() / (limit.entries + b).norm(), 0.1);
}

TEST(Covariance, SingleRealizationIsRankOne) {
    const auto model = kite_model(64);
    const PointSet rx = circle_points(5.0, 6, 0.0, 0);
    const PointSet src = circle_points(50.0, 20, 0.0, 0, std::nullopt, PointRole::DeterministicSource);
    const auto cov = covariance_matrix(rx, src, kTwoPi * 50.0, 1, 3, model);
    const Eigen::MatrixXcd stat = cov.entries + imaginary_green_bracket(kCtx, rx);
    const auto s = svd(stat).sigma;
    EXPECT_LT(s(1), 1e-12 * s(0));
}

TEST(Covariance, NoiseSamplesHaveRequestedVariance) {
    const double measure = 10.0;
    const int sources = 50;
    const auto n = source_noise_samples(sources, 2000, measure, 9);
    const double mean_power = n.cwiseAbs2().mean();
    EXPECT_NEAR(mean_power, measure / sources, 0.02 * measure / sources);
    // Distinct realizations are independent draws.
    EXPECT_NE(n.col(0), n.col(1));
    EXPECT_EQ(n, source_noise_samples(sources, 2000, measure, 9));
    EXPECT_THROW(source_noise_samples(0, 1, 1.0, 0), DomainError);
}

TEST(Noise, ZeroAmplitudeLeavesMatrixUntouched) {
    FieldMatrix m;
    m.entries = Eigen::MatrixXcd::Random(5, 5);
    const auto out = add_noise(m, 0.0, 1);
    EXPECT_EQ(out.entries, m.entries);
    EXPECT_EQ(out.provenance.delta, 0.0);
    EXPECT_THROW(add_noise(m, -1.0, 1), DomainError);
}

TEST(Noise, DeltaIsTheSpectralNormOfThePerturbation) {
    FieldMatrix m;
    m.entries = Eigen::MatrixXcd::Random(30, 30);
    const auto out = add_noise(m, 5e-2, 4);
    const Eigen::MatrixXcd e = out.entries - m.entries;
    const double power = oracle::largest_singular_value(e);
    EXPECT_NEAR(out.provenance.delta, power, 1e-10 * power);
    EXPECT_EQ(out.entries, add_noise(m, 5e-2, 4).entries);
}

TEST(Noise, FrobeniusEnergyMatchesVarianceBookkeeping) {
    const int j = 20;
    const double scale = 0.3;
    const int seeds = 50;
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
        sum += noise_perturbation(j, scale, static_cast<std::uint64_t>(s)).squaredNorm();
    }
    const double expected = scale * scale * j * j;
    // ||E||_F^2 is a sum of 2 J^2 squared normals of variance scale^2 / 2.
    const double sd_mean = std::sqrt(2.0 * j * j * 2.0 * std::pow(scale * scale / 2.0, 2)) / std::sqrt(seeds);
    EXPECT_NEAR(sum / seeds, expected, 3.0 * sd_mean);
}

TEST(MatrixCsv, RoundTripIsExact) {
    FieldMatrix m;
    m.kind = MatrixKind::CrossCorrelation;
    m.entries = Eigen::MatrixXcd::Random(7, 7);
    m.entries(0, 0) = Complex(1e-300, -3.0e200);
    m.provenance.k = kTwoPi;
    m.provenance.sources = 80;
    m.provenance.beta = 0.1;
    m.provenance.delta = 0.123456789012345678;
    m.provenance.seed = 18446744073709551615ULL;
    std::stringstream s;
    write_field_matrix_csv(m, s);
    const auto back = read_field_matrix_csv(s);
    EXPECT_EQ(back.entries, m.entries);
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.provenance.delta, m.provenance.delta);
    EXPECT_EQ(back.provenance.seed, m.provenance.seed);
    EXPECT_EQ(back.provenance.beta, m.provenance.beta);
}

TEST(MatrixCsv, RejectsMalformedInput) {
    std::stringstream empty;
    EXPECT_THROW(read_field_matrix_csv(empty), ConfigError);
    std::stringstream short_row("# kind=N,size=2,k=1,sources=0,beta=0,source_radius=0,sigma_measure=0,"
                                "realizations=0,seed=0,noise_amplitude=0,delta=0\n1,2,3,4\n1,2\n");
    EXPECT_THROW(read_field_matrix_csv(short_row), ConfigError);
}

TEST(MatrixCsv, NumberFormat) {
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(-1.5e-20), "-1.5000000000000001e-20");
    EXPECT_EQ(std::stod(format_number(-1.5e-20)), -1.5e-20);
}

TEST(MatrixKinds, ParseAndPrint) {
    for (const auto k : {MatrixKind::NearField, MatrixKind::ImaginaryNearField, MatrixKind::CrossCorrelation,
                         MatrixKind::Covariance}) {
        EXPECT_EQ(parse_matrix_kind(to_string(k)), k);
    }
    EXPECT_EQ(parse_matrix_kind("cross-correlation"), MatrixKind::CrossCorrelation);
    EXPECT_THROW(parse_matrix_kind("Q"), ConfigError);
}
