// observables.hpp: synchronization and entanglement diagnostics.

#pragma once

#include "xxsync/hilbert.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace xxsync {

struct PearsonSeries {
    std::vector<double> times;
    std::vector<double> pc;     // NaN where the window variance vanishes
    std::vector<bool> defined;  // false for flagged windows
    double window{0.0};
};

// Sliding Pearson coefficient on a uniform grid. The window (in time units) is
// centred on each sample and shrunk at the ends of the series; it must span at
// least 10 samples. Windows with Var(x) Var(y) < 1e-24 are flagged.
PearsonSeries pearson(const std::vector<double>& times, const std::vector<double>& x, const std::vector<double>& y,
                      double window);

// Earliest time at which |pc - target| < tol, or a negative value when never.
double first_settling_time(const PearsonSeries& series, double target, double tol);

struct SpectrumPeaks {
    std::vector<double> frequencies;  // cycles per unit time
    std::vector<double> amplitudes;
    double resolution{0.0};
    // Full one-sided magnitude spectrum, for plotting.
    std::vector<double> grid;
    std::vector<double> magnitude;
};

// Hann-windowed magnitude spectrum of the samples with t >= t_start, after mean
// subtraction. Peaks are local maxima above 5% of the largest bin, located by
// quadratic interpolation over three bins.
SpectrumPeaks fft_spectrum(const std::vector<double>& times, const std::vector<double>& values, double t_start);

// Reduced state of qubits (1, N) in the basis |00>, |01>, |10>, |11>, where the
// first label is site 1 and the second is site N.
struct EdgePairState {
    Eigen::Matrix4cd rho4;
};

EdgePairState reduce_to_edge_pair(const DensityMatrix& rho);

// Wootters concurrence max(0, l1 - l2 - l3 - l4) from the eigenvalues of
// rho (sy x sy) rho* (sy x sy).
double concurrence(const EdgePairState& pair);

void write_pearson_csv(std::ostream& os, const PearsonSeries& pc);
// Peaks only: freq,amplitude
void write_spectrum_csv(std::ostream& os, const SpectrumPeaks& spec);
// Every bin: freq,amplitude
void write_spectrum_full_csv(std::ostream& os, const SpectrumPeaks& spec);

}  // namespace xxsync
