#include "oracles.hpp"

#include "xxsync/dfs.hpp"

#include <doctest.h>

#include <numeric>

using namespace xxsync;

namespace {

NoiseSpec ad(std::vector<int> sites) {
    NoiseSpec n;
    n.rates.assign(sites.size(), 0.05);
    n.sites = std::move(sites);
    return n;
}

const ChainSpec kChain{11, 0.4, 0.15};

// Every subset of {1..N} with 1..max_size elements.
void for_each_site_set(int N, int max_size, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
        if (!cur.empty()) fn(cur);
        if (static_cast<int>(cur.size()) == max_size) return;
        for (int s = start; s <= N; ++s) {
            cur.push_back(s);
            rec(s + 1);
            cur.pop_back();
        }
    };
    rec(1);
}

}  // namespace

TEST_CASE("gcd analysis: case-study configurations") {
    const auto a = gcd_analysis(ad({6}), 11);
    CHECK(a.g == 6);
    CHECK(a.r == 5);
    CHECK(a.labels == std::vector<int>{2, 4, 6, 8, 10});
    CHECK(a.sector_dims == std::vector<std::uint64_t>{1, 5, 10, 10, 5, 1});
    CHECK(a.total_dim == 32);
    CHECK_FALSE(a.generic_sync);
    CHECK_FALSE(a.sync_sign.has_value());

    const auto b = gcd_analysis(ad({2, 4, 6, 8, 10}), 11);
    CHECK(b.g == 2);
    CHECK(b.r == 1);
    CHECK(b.labels == std::vector<int>{6});
    CHECK(b.generic_sync);
    REQUIRE(b.sync_sign.has_value());
    CHECK(*b.sync_sign == -1);

    const auto c = gcd_analysis(ad({1}), 11);
    CHECK(c.g == 1);
    CHECK(c.r == 0);
    CHECK(c.labels.empty());
    CHECK(c.total_dim == 1);

    const auto d = gcd_analysis(ad({6}), 12);
    CHECK(d.g == 1);
    CHECK(d.r == 0);
}

TEST_CASE("gcd analysis: thermal noise has no non-trivial DFS") {
    auto n = ad({6});
    n.thermal_rates = std::vector<double>{0.01};
    const auto rep = gcd_analysis(n, 11);
    CHECK(rep.thermal);
    CHECK(rep.r == 0);
    CHECK(rep.total_dim == 1);
    CHECK(rep.labels.empty());
    CHECK(rep.ad_gcd == 6);

    n.thermal_rates = std::vector<double>{0.0};
    CHECK_FALSE(gcd_analysis(n, 11).thermal);
}

TEST_CASE("noise validation") {
    CHECK_THROWS_AS(ad({0}).validate(5), std::invalid_argument);
    CHECK_THROWS_AS(ad({6}).validate(5), std::invalid_argument);
    CHECK_THROWS_AS(ad({2, 2}).validate(5), std::invalid_argument);
    NoiseSpec bad = ad({2});
    bad.rates = {-1.0};
    CHECK_THROWS_AS(bad.validate(5), std::invalid_argument);
    bad.rates = {0.1, 0.2};
    CHECK_THROWS_AS(bad.validate(5), std::invalid_argument);
}

TEST_CASE("dark labels agree with floating-point node evaluation") {
    for (int N = 2; N <= 40; ++N) {
        for_each_site_set(N, 4, [&](const std::vector<int>& sites) {
            const auto rep = gcd_analysis(ad(sites), N);
            std::vector<int> brute;
            for (int n = 1; n <= N; ++n) {
                bool dark = true;
                for (int m : sites) dark = dark && std::abs(oracle::mode_float(n, m, N)) < 1e-9;
                if (dark) brute.push_back(n);
            }
            REQUIRE(rep.labels == brute);
            REQUIRE(rep.r == rep.g - 1);
            REQUIRE(rep.generic_sync == (rep.r == 1));
            std::uint64_t total = 0;
            for (auto d : rep.sector_dims) total += d;
            REQUIRE(total == (std::uint64_t{1} << rep.r));
        });
    }
}

TEST_CASE("single-excitation modes") {
    const int N = 11;
    for (int n = 1; n <= N; ++n) {
        const auto m = single_excitation_mode(n, kChain);
        double norm = 0.0;
        for (double a : m.amplitudes) norm += a * a;
        CHECK(std::abs(norm - 1.0) < 1e-14);
        for (int j = 1; j <= N; ++j) {
            const double sign = (n % 2 == 1) ? 1.0 : -1.0;
            CHECK(std::abs(m.amplitudes[static_cast<std::size_t>(N - j)] - sign * m.amplitudes[static_cast<std::size_t>(j - 1)]) < 1e-14);
            CHECK(std::abs(m.amplitudes[static_cast<std::size_t>(j - 1)] - oracle::mode_float(n, j, N)) < 1e-14);
            if ((n * j) % (N + 1) == 0) CHECK(m.amplitudes[static_cast<std::size_t>(j - 1)] == 0.0);
        }
    }
    // middle mode: zero on even sites, alternating on odd sites
    const auto mid = single_excitation_mode(6, kChain);
    for (int j = 2; j <= N; j += 2) CHECK(mid.amplitudes[static_cast<std::size_t>(j - 1)] == 0.0);
    for (int j = 1; j + 2 <= N; j += 2) {
        CHECK(mid.amplitudes[static_cast<std::size_t>(j - 1)] == doctest::Approx(-mid.amplitudes[static_cast<std::size_t>(j + 1)]));
    }
    CHECK(std::abs(mid.energy - 0.4) < 1e-15);
    CHECK_THROWS_AS(single_excitation_mode(0, kChain), std::invalid_argument);
    CHECK_THROWS_AS(single_excitation_mode(12, kChain), std::invalid_argument);
}

TEST_CASE("dark energies of the single-site case") {
    const double s3 = std::sqrt(3.0);
    const std::vector<double> expected = {0.4 + s3 * 0.15, 0.4 + 0.15, 0.4, 0.4 - 0.15, 0.4 - s3 * 0.15};
    const auto rep = gcd_analysis(ad({6}), 11);
    for (std::size_t i = 0; i < rep.labels.size(); ++i) {
        CHECK(std::abs(single_excitation_mode(rep.labels[i], kChain).energy - expected[i]) < 1e-10);
    }
}

TEST_CASE("Slater states") {
    const auto b = enumerate_sector(11, 2);
    const auto g = slater_state({}, kChain, b);
    CHECK(g.energy == 0.0);
    CHECK(std::abs(g.vector(0) - 1.0) < 1e-15);

    const auto one = slater_state({4}, kChain, b);
    const auto mode = single_excitation_mode(4, kChain);
    for (int j = 1; j <= 11; ++j) {
        CHECK(std::abs(one.vector(b->index_of(BasisState(1U << (j - 1)))) - mode.amplitudes[static_cast<std::size_t>(j - 1)]) < 1e-15);
    }

    const auto two = slater_state({2, 4}, kChain, b);
    CHECK(std::abs(two.vector.norm() - 1.0) < 1e-12);
    double max_rel = 0.0;
    for (int i = 1; i <= 11; ++i) {
        for (int j = i + 1; j <= 11; ++j) {
            const auto idx = b->index_of(BasisState((1U << (i - 1)) | (1U << (j - 1))));
            const double direct = oracle::mode_float(2, i, 11) * oracle::mode_float(4, j, 11) -
                                  oracle::mode_float(2, j, 11) * oracle::mode_float(4, i, 11);
            max_rel = std::max(max_rel, std::abs(two.vector(idx).real() - direct));
            if (i == 6 || j == 6) CHECK(two.vector(idx) == cplx(0.0));
        }
    }
    CHECK(max_rel < 1e-14);
    CHECK(two.energy == doctest::Approx(single_excitation_mode(2, kChain).energy + single_excitation_mode(4, kChain).energy));

    // swapping labels flips the sign
    const auto swapped = slater_state({4, 2}, kChain, b);
    CHECK((swapped.vector + two.vector).norm() < 1e-15);

    CHECK_THROWS_AS(slater_state({2, 2}, kChain, b), std::invalid_argument);
    CHECK_THROWS_AS(slater_state({2, 4, 6}, kChain, b), std::invalid_argument);
}

TEST_CASE("Slater states are eigenvectors of the dense two-excitation block") {
    const auto b = enumerate_sectors(11, {2});
    const Eigen::MatrixXcd H(build_hamiltonian(kChain, b).matrix);
    const std::vector<int> labels = {2, 4, 6, 8, 10};
    std::vector<Eigen::VectorXcd> vecs;
    for (std::size_t a = 0; a < labels.size(); ++a) {
        for (std::size_t c = a + 1; c < labels.size(); ++c) {
            const auto s = slater_state({labels[a], labels[c]}, kChain, b);
            CHECK((H * s.vector - s.energy * s.vector).norm() < 1e-12);
            CHECK(std::abs((s.vector.adjoint() * H * s.vector)(0, 0).real() - s.energy) < 1e-10);
            vecs.push_back(s.vector);
        }
    }
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        for (std::size_t j = 0; j < vecs.size(); ++j) {
            const cplx ov = vecs[i].dot(vecs[j]);
            CHECK(std::abs(ov - (i == j ? 1.0 : 0.0)) < (i == j ? 1e-12 : 1e-10));
        }
    }
}

TEST_CASE("DFS basis construction") {
    const auto rep = gcd_analysis(ad({6}), 11);
    const auto dfs = build_dfs_basis(rep, kChain, enumerate_sector(11, 5));
    REQUIRE(dfs.states.size() == 32);
    std::vector<int> per_sector(6, 0);
    for (const auto& s : dfs.states) ++per_sector[static_cast<std::size_t>(s.excitations)];
    CHECK(per_sector == std::vector<int>{1, 5, 10, 10, 5, 1});
    CHECK(dfs.states[0].labels.empty());
    const Eigen::MatrixXcd M = dfs.matrix();
    CHECK((M.adjoint() * M - Eigen::MatrixXcd::Identity(32, 32)).norm() < 1e-10);
    for (const auto& s : dfs.states) {
        double e = 0.0;
        for (int l : s.labels) e += single_excitation_mode(l, kChain).energy;
        CHECK(std::abs(s.energy - e) < 1e-10);
    }

    CHECK_THROWS_AS(build_dfs_basis(rep, kChain, enumerate_sector(11, 1)), std::invalid_argument);
    const auto trunc = build_dfs_basis(rep, kChain, enumerate_sector(11, 1), true);
    CHECK(trunc.truncated);
    CHECK(trunc.states.size() == 6);

    const auto empty = build_dfs_basis(gcd_analysis(ad({1}), 11), kChain, enumerate_sector(11, 1));
    CHECK(empty.states.size() == 1);

    const auto b = build_dfs_basis(gcd_analysis(ad({2, 4, 6, 8, 10}), 11), kChain, enumerate_sector(11, 1));
    REQUIRE(b.states.size() == 2);
    CHECK(b.states[1].labels == std::vector<int>{6});
}

TEST_CASE("darkness verification") {
    const auto noise = ad({6});
    const auto rep = gcd_analysis(noise, 11);
    const auto basis = enumerate_sector(11, 5);
    const auto dfs = build_dfs_basis(rep, kChain, basis);
    const auto H = build_hamiltonian(kChain, basis);
    const auto ok = verify_darkness(dfs, noise, H);
    CHECK(ok.passed);
    CHECK(ok.max_jump_residual <= 1e-10);
    CHECK(ok.max_energy_residual <= 1e-9);
    CHECK(ok.jump_residuals.size() == 32);

    // A bright eigenmode leaks through the noise site.
    const auto b1 = enumerate_sector(11, 1);
    const auto bright = slater_state({1}, kChain, b1);
    const Eigen::VectorXcd out = Eigen::MatrixXcd(build_jump_operator(6, b1, JumpKind::lowering).matrix) * bright.vector;
    CHECK(out.norm() > 0.1);
    CHECK(out.norm() == doctest::Approx(std::abs(oracle::mode_float(1, 6, 11))));

    // Raising at the noise site excites the dark single-excitation states.
    auto thermal = noise;
    thermal.thermal_rates = std::vector<double>{0.01};
    const auto b2 = enumerate_sector(11, 2);
    const auto dfs1 = build_dfs_basis(rep, kChain, b2, true);
    const auto hot = verify_darkness(dfs1, thermal, build_hamiltonian(kChain, b2));
    CHECK_FALSE(hot.passed);
    CHECK(hot.max_jump_residual > 0.5);
}

TEST_CASE("DFS report serialization") {
    const nlohmann::json j = gcd_analysis(ad({2, 4, 6, 8, 10}), 11);
    for (const char* key : {"g", "r", "labels", "sector_dims", "total_dim", "generic_sync", "sync_sign"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["sync_sign"] == -1);
    const nlohmann::json k = gcd_analysis(ad({6}), 11);
    CHECK(k["sync_sign"].is_null());
}
