#pragma once

// Oracle and property suites shared by `lsm validate` and the acceptance
// test. Each check returns measured values next to its pinned threshold.
// The oracles here (power series, power iteration, direct residuals) do not
// call the routines they check.

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "lsm/geometry.hpp"
#include "lsm/inversion.hpp"
#include "lsm/pipeline.hpp"

namespace lsm {

struct CheckResult {
    std::string id;
    std::string title;
    bool passed = false;
    std::string summary;  // one line with the measured numbers
    nlohmann::ordered_json measured = nlohmann::ordered_json::object();
    double seconds = 0.0;
};

namespace oracle {

/// J_n(x) from its power series summed in long double; accurate for x <= 20.
double bessel_j_series(int n, double x);
/// Y_0(x) from the logarithmic series with harmonic numbers; x <= 20.
double bessel_y0_series(double x);
/// Largest singular value by power iteration on A* A.
double largest_singular_value(const Eigen::MatrixXcd& a, int max_iterations = 5000);
/// Singular values by power iteration with deflation (small matrices).
Eigen::VectorXd singular_values_by_deflation(const Eigen::MatrixXcd& a);

}  // namespace oracle

struct ReconstructionMetrics {
    double mean_inside = 0.0;
    double mean_outside = 0.0;
    double contrast = 0.0;
    Point centroid{};
    double centroid_error = 0.0;
    int inside_cells = 0;
    int outside_cells = 0;
};

/// Contrast of the normalized reciprocal indicator inside the scatterer
/// against cells farther than `band` from it, and the distance between the
/// centroid of the cells at or above half the maximum and the true center.
ReconstructionMetrics reconstruction_metrics(const IndicatorMap& map, const BoundaryCurve& curve, double band);

/// Grid points that are local maxima of the reciprocal indicator over their
/// 8 neighbours.
std::vector<Point> indicator_local_maxima(const IndicatorMap& map);

CheckResult check_special_functions();
CheckResult check_mie_convergence();
CheckResult check_hk_identity();
CheckResult check_bridge();
CheckResult check_quadrature_rate();
CheckResult check_beta_degradation();
CheckResult check_morozov();
CheckResult check_svd();
CheckResult check_reconstruction();
CheckResult check_point_scatterers();
CheckResult check_second_setup();
CheckResult check_wavenumber();
CheckResult check_determinism(const std::filesystem::path& scratch);

struct Suite {
    std::string name;
    std::string description;
    std::vector<std::function<CheckResult()>> checks;
};

/// Suites: specfun, mie, hk, bridge, rate, beta, morozov, svd,
/// reconstruction, point-scatterers, setup2, wavenumber, determinism,
/// quick (the fast subset) and all.
std::vector<std::string> suite_names();
Suite suite(const std::string& name, const std::filesystem::path& scratch);

nlohmann::ordered_json report_json(const std::vector<CheckResult>& results);

}  // namespace lsm
