#include "lsm/acquisition.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "lsm/errors.hpp"
#include "lsm/inversion.hpp"
#include "lsm/rng.hpp"
#include "lsm/specfun.hpp"

namespace lsm {

std::string to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::NearField: return "N";
        case MatrixKind::ImaginaryNearField: return "I";
        case MatrixKind::CrossCorrelation: return "C";
        case MatrixKind::Covariance: return "covariance";
    }
    return "unknown";
}

MatrixKind parse_matrix_kind(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "n" || t == "nearfield" || t == "near-field" || t == "near_field") {
        return MatrixKind::NearField;
    }
    if (t == "i" || t == "imaginarynearfield" || t == "imaginary-near-field" || t == "imaginary") {
        return MatrixKind::ImaginaryNearField;
    }
    if (t == "c" || t == "crosscorrelation" || t == "cross-correlation" || t == "cross_correlation") {
        return MatrixKind::CrossCorrelation;
    }
    if (t == "covariance" || t == "cov") {
        return MatrixKind::Covariance;
    }
    throw ConfigError("unknown matrix kind: " + text);
}

Eigen::MatrixXcd imaginary_green_bracket(const WaveContext& ctx, const PointSet& receivers) {
    const auto n = static_cast<Eigen::Index>(receivers.size());
    Eigen::MatrixXcd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out(j, j) = Complex(0.0, 0.5);
        for (Eigen::Index m = j + 1; m < n; ++m) {
            const double r = distance(receivers.points[static_cast<std::size_t>(j)],
                                      receivers.points[static_cast<std::size_t>(m)]);
            const Complex value(0.0, 0.5 * specfun::bessel_j(0, ctx.k() * r));
            out(j, m) = value;
            out(m, j) = value;
        }
    }
    return out;
}

namespace {

void require_exterior_all(const PointSet& set, const ScatteringModel& model) {
    for (const auto& p : set.points) {
        model.require_exterior(p);
    }
}

Provenance base_provenance(const ScatteringModel& model) {
    Provenance p;
    p.k = model.ctx().k();
    return p;
}

}  // namespace

FieldMatrix near_field_matrix(const PointSet& receivers, const ScatteringModel& model) {
    require_exterior_all(receivers, model);
    FieldMatrix out;
    out.kind = MatrixKind::NearField;
    out.receivers = receivers;
    out.provenance = base_provenance(model);
    out.entries = model.scattered(receivers.view(), receivers.view());
    return out;
}

FieldMatrix imaginary_near_field_matrix(const FieldMatrix& n) {
    if (n.kind != MatrixKind::NearField) {
        throw KindError("imaginary near-field matrix needs a near-field matrix, got " + to_string(n.kind));
    }
    FieldMatrix out = n;
    out.kind = MatrixKind::ImaginaryNearField;
    out.entries = n.entries - n.entries.conjugate();
    return out;
}

FieldMatrix cross_correlation_matrix(const PointSet& receivers, const PointSet& sources,
                                     double sigma_measure, const ScatteringModel& model) {
    if (sources.size() == 0) {
        throw DomainError("cross-correlation needs at least one source");
    }
    if (!(sigma_measure > 0.0)) {
        throw DomainError("source curve length must be positive");
    }
    require_exterior_all(receivers, model);
    require_exterior_all(sources, model);
    const Eigen::MatrixXcd u = model.total(receivers.view(), sources.view());
    const double k = model.ctx().k();
    const Complex scale(0.0, 2.0 * k * sigma_measure / static_cast<double>(sources.size()));

    FieldMatrix out;
    out.kind = MatrixKind::CrossCorrelation;
    out.receivers = receivers;
    out.provenance = base_provenance(model);
    out.provenance.sources = static_cast<int>(sources.size());
    out.provenance.beta = sources.generation.beta;
    out.provenance.source_radius = sources.generation.radius;
    out.provenance.sigma_measure = sigma_measure;
    out.provenance.seed = sources.generation.seed;
    out.entries = scale * (u.conjugate() * u.transpose()) - imaginary_green_bracket(model.ctx(), receivers);
    return out;
}

Eigen::MatrixXcd source_noise_samples(int sources, int realizations, double sigma_measure,
                                      std::uint64_t seed) {
    if (sources < 1 || realizations < 1) {
        throw DomainError("covariance needs at least one source and one realization");
    }
    const double sd = std::sqrt(sigma_measure / (2.0 * sources));
    Eigen::MatrixXcd out(sources, realizations);
    for (int r = 0; r < realizations; ++r) {
        RandomStream stream(seed, "realizations", static_cast<std::uint64_t>(r));
        for (int l = 0; l < sources; ++l) {
            const double re = stream.normal();
            const double im = stream.normal();
            out(l, r) = Complex(sd * re, sd * im);
        }
    }
    return out;
}

FieldMatrix covariance_matrix(const PointSet& receivers, const PointSet& sources,
                              double sigma_measure, int realizations, std::uint64_t seed,
                              const ScatteringModel& model) {
    if (sources.size() == 0) {
        throw DomainError("covariance needs at least one source");
    }
    if (!(sigma_measure > 0.0)) {
        throw DomainError("source curve length must be positive");
    }
    require_exterior_all(receivers, model);
    require_exterior_all(sources, model);
    const Eigen::MatrixXcd u = model.total(receivers.view(), sources.view());
    const Eigen::MatrixXcd n =
        source_noise_samples(static_cast<int>(sources.size()), realizations, sigma_measure, seed);
    const Eigen::MatrixXcd field = u * n;  // J x M, one column per realization
    const double k = model.ctx().k();
    const Complex scale(0.0, 2.0 * k / static_cast<double>(realizations));

    FieldMatrix out;
    out.kind = MatrixKind::Covariance;
    out.receivers = receivers;
    out.provenance = base_provenance(model);
    out.provenance.sources = static_cast<int>(sources.size());
    out.provenance.beta = sources.generation.beta;
    out.provenance.source_radius = sources.generation.radius;
    out.provenance.sigma_measure = sigma_measure;
    out.provenance.realizations = realizations;
    out.provenance.seed = seed;
    out.entries = scale * (field * field.adjoint()) - imaginary_green_bracket(model.ctx(), receivers);
    return out;
}

Eigen::MatrixXcd noise_perturbation(Eigen::Index size, double scale, std::uint64_t seed) {
    Eigen::MatrixXcd e(size, size);
    const double s = scale / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < size; ++j) {
        RandomStream stream(seed, "noise", static_cast<std::uint64_t>(j));
        for (Eigen::Index m = 0; m < size; ++m) {
            const double g1 = stream.normal();
            const double g2 = stream.normal();
            e(j, m) = Complex(s * g1, s * g2);
        }
    }
    return e;
}

FieldMatrix add_noise(const FieldMatrix& matrix, double amplitude, std::uint64_t seed) {
    if (!(amplitude >= 0.0)) {
        throw DomainError("noise amplitude must be nonnegative");
    }
    FieldMatrix out = matrix;
    const double scale = amplitude * matrix.entries.cwiseAbs().maxCoeff();
    const Eigen::MatrixXcd e = noise_perturbation(matrix.size(), scale, seed);
    out.entries += e;
    out.provenance.noise_amplitude = amplitude;
    out.provenance.delta = scale > 0.0 ? spectral_norm(e) : 0.0;
    return out;
}

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    while (first < last && std::isspace(static_cast<unsigned char>(*first))) {
        ++first;
    }
    while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) {
        --last;
    }
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ConfigError("malformed number in matrix CSV: '" + text + "'");
    }
    return value;
}

}  // namespace

void write_field_matrix_csv(const FieldMatrix& matrix, std::ostream& out) {
    const auto& p = matrix.provenance;
    out << "# kind=" << to_string(matrix.kind) << ",size=" << matrix.size() << ",k=" << format_number(p.k)
        << ",sources=" << p.sources << ",beta=" << format_number(p.beta)
        << ",source_radius=" << format_number(p.source_radius)
        << ",sigma_measure=" << format_number(p.sigma_measure) << ",realizations=" << p.realizations
        << ",seed=" << p.seed << ",noise_amplitude=" << format_number(p.noise_amplitude)
        << ",delta=" << format_number(p.delta) << '\n';
    for (Eigen::Index j = 0; j < matrix.size(); ++j) {
        for (Eigen::Index m = 0; m < matrix.size(); ++m) {
            if (m > 0) {
                out << ',';
            }
            out << format_number(matrix.entries(j, m).real()) << ',' << format_number(matrix.entries(j, m).imag());
        }
        out << '\n';
    }
}

FieldMatrix read_field_matrix_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header.rfind("# ", 0) != 0) {
        throw ConfigError("matrix CSV must start with a '# key=value' header");
    }
    std::map<std::string, std::string> fields;
    std::stringstream hs(header.substr(2));
    std::string item;
    while (std::getline(hs, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("malformed header field: " + item);
        }
        fields[item.substr(0, eq)] = item.substr(eq + 1);
    }
    const auto get = [&](const std::string& key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end()) {
            throw ConfigError("matrix CSV header lacks " + key);
        }
        return it->second;
    };

    FieldMatrix out;
    out.kind = parse_matrix_kind(get("kind"));
    const long size = std::stol(get("size"));
    if (size < 0) {
        throw ConfigError("negative matrix size");
    }
    auto& p = out.provenance;
    p.k = parse_double(get("k"));
    p.sources = std::stoi(get("sources"));
    p.beta = parse_double(get("beta"));
    p.source_radius = parse_double(get("source_radius"));
    p.sigma_measure = parse_double(get("sigma_measure"));
    p.realizations = std::stoi(get("realizations"));
    p.seed = std::stoull(get("seed"));
    p.noise_amplitude = parse_double(get("noise_amplitude"));
    p.delta = parse_double(get("delta"));

    out.entries.resize(size, size);
    std::string line;
    for (long j = 0; j < size; ++j) {
        if (!std::getline(in, line)) {
            throw ConfigError("matrix CSV ends after " + std::to_string(j) + " rows");
        }
        std::stringstream ls(line);
        std::string re;
        std::string im;
        for (long m = 0; m < size; ++m) {
            if (!std::getline(ls, re, ',') || !std::getline(ls, im, ',')) {
                throw ConfigError("matrix CSV row " + std::to_string(j) + " is short");
            }
            out.entries(j, m) = Complex(parse_double(re), parse_double(im));
        }
        if (std::getline(ls, re, ',')) {
            throw ConfigError("matrix CSV row " + std::to_string(j) + " has extra values");
        }
    }
    return out;
}

}  // namespace lsm
