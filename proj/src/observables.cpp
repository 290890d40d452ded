#include "xxsync/observables.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <mutex>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace xxsync {

namespace {

// FFTW's planner is not re-entrant.
std::mutex fftw_planner_mutex;

double uniform_step(const std::vector<double>& times) {
    if (times.size() < 2) throw std::invalid_argument("series needs at least two samples");
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6 * dt) throw std::invalid_argument("series grid is not uniform");
    }
    return dt;
}

}  // namespace

PearsonSeries pearson(const std::vector<double>& times, const std::vector<double>& x, const std::vector<double>& y,
                      double window) {
    if (x.size() != times.size() || y.size() != times.size()) throw std::invalid_argument("pearson: grid mismatch");
    const double dt = uniform_step(times);
    const auto half = static_cast<std::ptrdiff_t>(std::llround(0.5 * window / dt));
    if (2 * half + 1 < 10) throw std::invalid_argument("pearson: window shorter than 10 samples");

    const auto n = static_cast<std::ptrdiff_t>(times.size());
    PearsonSeries out;
    out.window = window;
    out.times = times;
    out.pc.resize(times.size());
    out.defined.resize(times.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        const double cnt = static_cast<double>(hi - lo + 1);
        double mx = 0.0, my = 0.0;
        for (auto j = lo; j <= hi; ++j) {
            mx += x[static_cast<std::size_t>(j)];
            my += y[static_cast<std::size_t>(j)];
        }
        mx /= cnt;
        my /= cnt;
        double sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (auto j = lo; j <= hi; ++j) {
            const double dx = x[static_cast<std::size_t>(j)] - mx;
            const double dy = y[static_cast<std::size_t>(j)] - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        const auto k = static_cast<std::size_t>(i);
        if ((sxx / cnt) * (syy / cnt) < 1e-24) {
            out.pc[k] = std::numeric_limits<double>::quiet_NaN();
            out.defined[k] = false;
        } else {
            out.pc[k] = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
            out.defined[k] = true;
        }
    }
    return out;
}

double first_settling_time(const PearsonSeries& series, double target, double tol) {
    for (std::size_t i = 0; i < series.pc.size(); ++i) {
        if (series.defined[i] && std::abs(series.pc[i] - target) < tol) return series.times[i];
    }
    return -1.0;
}

SpectrumPeaks fft_spectrum(const std::vector<double>& times, const std::vector<double>& values, double t_start) {
    if (values.size() != times.size()) throw std::invalid_argument("fft_spectrum: grid mismatch");
    const double dt = uniform_step(times);
    auto first = std::lower_bound(times.begin(), times.end(), t_start - 1e-9 * dt);
    const auto offset = static_cast<std::size_t>(first - times.begin());
    const std::size_t n = times.size() - offset;
    if (n < 64) throw std::invalid_argument("fft_spectrum: fewer than 64 samples after t_start");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += values[offset + i];
    mean /= static_cast<double>(n);

    std::vector<double> in(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        in[i] = w * (values[offset + i] - mean);
        wsum += w;
    }

    const std::size_t nb = n / 2 + 1;
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nb));
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);

    SpectrumPeaks spec;
    spec.resolution = 1.0 / (static_cast<double>(n) * dt);
    spec.grid.resize(nb);
    spec.magnitude.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        spec.grid[k] = static_cast<double>(k) * spec.resolution;
        // Scaled so a sinusoid of amplitude A shows a peak of height ~A.
        spec.magnitude[k] = 2.0 * std::hypot(out[k][0], out[k][1]) / wsum;
    }
    {
        std::lock_guard lock(fftw_planner_mutex);
        fftw_destroy_plan(plan);
    }
    fftw_free(out);

    const double peak_max = *std::max_element(spec.magnitude.begin() + 1, spec.magnitude.end());
    const double threshold = 0.05 * peak_max;
    for (std::size_t k = 1; k + 1 < nb; ++k) {
        const double a = spec.magnitude[k - 1], b = spec.magnitude[k], c = spec.magnitude[k + 1];
        if (!(b > a && b >= c && b > threshold)) continue;
        const double denom = a - 2.0 * b + c;
        const double delta = denom == 0.0 ? 0.0 : 0.5 * (a - c) / denom;
        spec.frequencies.push_back((static_cast<double>(k) + delta) * spec.resolution);
        spec.amplitudes.push_back(b - 0.25 * (a - c) * delta);
    }
    return spec;
}

EdgePairState reduce_to_edge_pair(const DensityMatrix& rho) {
    const auto& basis = *rho.basis;
    const int N = basis.N();
    if (N < 3) throw std::invalid_argument("reduce_to_edge_pair: need N >= 3");

    const std::uint32_t edge_mask = 1U | (1U << (N - 1));
    // Group basis states by their bulk configuration; only equal bulks survive
    // the partial trace.
    std::unordered_map<std::uint32_t, std::vector<std::pair<Eigen::Index, int>>> groups;
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        const BasisState s = basis.state(i);
        const int edge = 2 * static_cast<int>(s.occupied(1)) + static_cast<int>(s.occupied(N));
        groups[s.mask() & ~edge_mask].emplace_back(static_cast<Eigen::Index>(i), edge);
    }

    EdgePairState out;
    out.rho4.setZero();
    for (const auto& [bulk, members] : groups) {
        for (const auto& [i, ei] : members) {
            for (const auto& [j, ej] : members) out.rho4(ei, ej) += rho.entries(i, j);
        }
    }
    return out;
}

double concurrence(const EdgePairState& pair) {
    const Eigen::Matrix4cd& rho = pair.rho4;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> herm(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    if (herm.eigenvalues().minCoeff() < -1e-8) throw std::invalid_argument("concurrence: input is not positive semidefinite");

    Eigen::Matrix4cd flip = Eigen::Matrix4cd::Zero();
    flip(0, 3) = -1.0;
    flip(1, 2) = 1.0;
    flip(2, 1) = 1.0;
    flip(3, 0) = -1.0;
    const Eigen::Matrix4cd tilde = flip * rho.conjugate() * flip;
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(rho * tilde, false);

    std::array<double, 4> lam{};
    for (int i = 0; i < 4; ++i) {
        const cplx ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) > 1e-10) throw std::runtime_error("concurrence: complex eigenvalue of rho rho~");
        lam[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, ev.real()));
    }
    std::sort(lam.begin(), lam.end(), std::greater<>());
    return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

void write_pearson_csv(std::ostream& os, const PearsonSeries& pc) {
    os << "t,pc\n" << std::setprecision(17);
    for (std::size_t i = 0; i < pc.times.size(); ++i) {
        os << pc.times[i] << ',';
        if (pc.defined[i]) {
            os << pc.pc[i];
        } else {
            os << "nan";
        }
        os << '\n';
    }
}

void write_spectrum_csv(std::ostream& os, const SpectrumPeaks& spec) {
    os << "freq,amplitude\n" << std::setprecision(17);
    for (std::size_t i = 0; i < spec.frequencies.size(); ++i) os << spec.frequencies[i] << ',' << spec.amplitudes[i] << '\n';
}

void write_spectrum_full_csv(std::ostream& os, const SpectrumPeaks& spec) {
    os << "freq,amplitude\n" << std::setprecision(17);
    for (std::size_t i = 0; i < spec.grid.size(); ++i) os << spec.grid[i] << ',' << spec.magnitude[i] << '\n';
}

}  // namespace xxsync
