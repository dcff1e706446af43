#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "pme/bath.hpp"
#include "pme/errors.hpp"
#include "pme/model.hpp"

using namespace pme;

TEST_CASE("renormalization factor limits") {
    auto [net, bath] = fmo4_preset();

    SUBCASE("fully correlated baths give unity") {
        bath.correlation = CorrelationKind::FullyCorrelated;
        CHECK(renormalization_factor(net, bath, 0, 1) == 1.0);
    }
    SUBCASE("vanishing spectral density gives unity") {
        bath.sd.scale_continuum = 0.0;
        bath.sd.mode.reset();
        CHECK(renormalization_factor(net, bath, 0, 1) == 1.0);
    }
    SUBCASE("FMO value matches the renormalized couplings") {
        const double beta = renormalization_factor(net, bath, 0, 1);
        // |V~_12| = 0.107 from |V_12| = 106 within quadrature sensitivity
        CHECK(106.0 * beta == doctest::Approx(0.107).epsilon(0.15));
        // identical baths: all pairs carry the same factor
        for (int m = 0; m < 4; ++m)
            for (int n = m + 1; n < 4; ++n)
                CHECK(renormalization_factor(net, bath, m, n) ==
                      doctest::Approx(beta).epsilon(1e-12));
    }
    SUBCASE("divergent exponent reports zero with a warning flag") {
        bath.sd.mode.reset();
        bath.sd.continuum = {{1.0, 1e-5}}; // pushes the thermal enhancement beyond overflow
        bool divergent = false;
        const double beta = renormalization_factor(net, bath, 0, 1, {}, &divergent);
        CHECK(beta == 0.0);
        CHECK(divergent);
    }
}

TEST_CASE("pair correlation function") {
    auto [net, bath] = fmo4_preset();

    SUBCASE("disjoint pairs decouple for independent baths") {
        const Complex k = phonon_correlation(net, bath, {0, 1}, {2, 3}, 37.0);
        CHECK(std::abs(k) == 0.0);
    }
    SUBCASE("K(0) equals -2 ln beta") {
        const double beta = renormalization_factor(net, bath, 0, 1);
        const Complex k0 = phonon_correlation(net, bath, {0, 1}, {0, 1}, 0.0);
        CHECK(k0.imag() == 0.0);
        CHECK(k0.real() == doctest::Approx(-2.0 * std::log(beta)).epsilon(1e-8));
    }
    SUBCASE("conjugation symmetry at negative time") {
        const Complex kp = phonon_correlation(net, bath, {0, 1}, {0, 2}, 140.0);
        const Complex km = phonon_correlation(net, bath, {0, 1}, {0, 2}, -140.0);
        CHECK(km.real() == doctest::Approx(kp.real()).epsilon(1e-12));
        CHECK(km.imag() == doctest::Approx(-kp.imag()).epsilon(1e-12));
    }
    SUBCASE("continuum kernel decays by 10 ps") {
        bath.sd.mode.reset();
        const Complex k0 = phonon_correlation(net, bath, {0, 1}, {0, 1}, 0.0);
        const Complex kt = phonon_correlation(net, bath, {0, 1}, {0, 1}, 10000.0);
        CHECK(std::abs(kt) < 1e-2 * std::abs(k0));
    }
}

TEST_CASE("displaced-bath correlation function") {
    auto [net, bath] = fmo4_preset();

    SUBCASE("uninvolved diagonal element gives unity") {
        const Complex f = displaced_bath_correlation(net, bath, 2, 2, {0, 1}, 71.0);
        CHECK(f.real() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(f.imag() == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("diagonal elements are pure phases") {
        for (double t : {0.0, 13.0, 250.0, 900.0}) {
            const Complex f = displaced_bath_correlation(net, bath, 0, 0, {0, 1}, t);
            CHECK(std::abs(f) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("f at t = 0 is real for independent baths") {
        // the sin part vanishes at t=0; the cos part is the lambda weight
        const Complex f = displaced_bath_correlation(net, bath, 0, 1, {0, 1}, 0.0);
        CHECK(f.imag() == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("kernel tables") {
    auto [net, bath] = fmo4_preset();

    SUBCASE("grid arithmetic") {
        const KernelTables kt = build_kernel_tables(net, bath, 0.5, 1000.0);
        CHECK(kt.n_points() == 2001);
        CHECK(kt.t_max() == 1000.0);
        CHECK(kt.pairs().size() == 6); // all couplings nonzero
    }
    SUBCASE("fully correlated model tabulates trivial kernels") {
        BathSpec fc = bath;
        fc.correlation = CorrelationKind::FullyCorrelated;
        const KernelTables kt = build_kernel_tables(net, fc, 0.5, 100.0);
        CHECK(std::abs(kt.kernel_K(0, 1, 50.0)) == 0.0);
        const Complex f = kt.displaced_f(0, 0, 0, 50.0);
        CHECK(f.real() == 1.0);
        CHECK(kt.beta(0, 1) == 1.0);
    }
    SUBCASE("interpolated kernels match direct quadrature off grid") {
        const KernelTables kt = build_kernel_tables(net, bath, 0.5, 1000.0);
        const double scale = std::abs(kt.kernel_K(0, 0, 0.0));
        testing::Lcg rng;
        for (int trial = 0; trial < 8; ++trial) {
            const double t = (0.5 + rng.next() * 1998.0) * 0.5;
            const Complex via_table = kt.kernel_K(0, 0, t);
            const Complex direct = phonon_correlation(net, bath, kt.pairs()[0], kt.pairs()[0], t);
            CHECK(std::abs(via_table - direct) <=
                  1e-4 * std::max(std::abs(direct), 1e-3 * scale));
        }
    }
    SUBCASE("interpolation verification is part of the build") {
        CHECK_NOTHROW(build_kernel_tables(net, bath, 0.5, 200.0, {}, true));
    }
    SUBCASE("beta from tables matches the direct operation") {
        const KernelTables kt = build_kernel_tables(net, bath, 0.5, 100.0);
        CHECK(kt.beta(0, 1) ==
              doctest::Approx(renormalization_factor(net, bath, 0, 1)).epsilon(1e-9));
        CHECK(kt.beta(2, 2) == 1.0);
    }
    SUBCASE("node doubling changes beta and K(0) below 1e-6") {
        quad::Settings base, doubled;
        doubled.nodes_per_panel = base.nodes_per_panel * 2;
        const KernelTables k1 = build_kernel_tables(net, bath, 0.5, 100.0, base);
        const KernelTables k2 = build_kernel_tables(net, bath, 0.5, 100.0, doubled);
        CHECK(std::abs(k1.beta(0, 1) - k2.beta(0, 1)) / k2.beta(0, 1) < 1e-6);
        const Complex a = k1.kernel_K(0, 0, 0.0), b = k2.kernel_K(0, 0, 0.0);
        CHECK(std::abs(a - b) / std::abs(b) < 1e-6);
    }
    SUBCASE("Re K(0) is non-negative for independent baths") {
        const KernelTables kt = build_kernel_tables(net, bath, 0.5, 100.0);
        for (int a = 0; a < 6; ++a) CHECK(kt.kernel_K(a, a, 0.0).real() >= 0.0);
    }
    SUBCASE("reciprocal displaced-bath pair") {
        const KernelTables kt = build_kernel_tables(net, bath, 0.5, 100.0);
        testing::Lcg rng;
        for (int trial = 0; trial < 16; ++trial) {
            const int i = static_cast<int>(rng.next() * 3.999);
            const int j = static_cast<int>(rng.next() * 3.999);
            const int a = static_cast<int>(rng.next() * 5.999);
            const double t = rng.next() * 99.0;
            const Complex prod =
                kt.displaced_f(i, j, a, t) * kt.displaced_f_prime(i, j, a, t);
            CHECK(std::abs(prod - 1.0) < 1e-12);
        }
    }
    SUBCASE("access beyond the table is a range error") {
        const KernelTables kt = build_kernel_tables(net, bath, 0.5, 100.0);
        CHECK_THROWS_AS(kt.kernel_K(0, 0, 101.0), DomainError);
    }
}

TEST_CASE("propagating-modes spatial correlations") {
    auto [net, bath] = fmo4_preset();
    RealMatrix d(4, 4);
    d << 0, 1, 2, 3, //
        1, 0, 1, 2,  //
        2, 1, 0, 1,  //
        3, 2, 1, 0;
    net.distances_nm = d;
    bath.correlation = CorrelationKind::PropagatingModes;
    bath.v_ph_nm_fs = 0.01; // slow phonons: partial correlation

    const KernelTables kt = build_kernel_tables(net, bath, 1.0, 100.0);

    SUBCASE("beta between the independent and fully correlated limits") {
        BathSpec indep = bath;
        indep.correlation = CorrelationKind::Independent;
        const double beta_ind = renormalization_factor(net, indep, 0, 1);
        const double beta_prop = kt.beta(0, 1);
        CHECK(beta_prop > beta_ind);
        CHECK(beta_prop < 1.0);
    }
    SUBCASE("closer pairs are more correlated") {
        // larger distance -> weaker correlation -> smaller beta
        CHECK(kt.beta(0, 1) > kt.beta(0, 3));
    }
    SUBCASE("tables agree with direct quadrature") {
        const Complex via_table = kt.kernel_K(0, 1, 40.25);
        const Complex direct =
            phonon_correlation(net, bath, kt.pairs()[0], kt.pairs()[1], 40.25);
        CHECK(std::abs(via_table - direct) <= 1e-4 * std::abs(kt.kernel_K(0, 0, 0.0)));
        const Complex f_table = kt.displaced_f(1, 2, 0, 33.5);
        const Complex f_direct = displaced_bath_correlation(net, bath, 1, 2, kt.pairs()[0], 33.5);
        CHECK(std::abs(f_table - f_direct) < 1e-4 * std::abs(f_direct));
    }
    SUBCASE("swapped initial-state indices invert the decaying part") {
        const Complex f_ij = kt.displaced_f(1, 2, 3, 21.0);
        const Complex f_ji = kt.displaced_f(2, 1, 3, 21.0);
        CHECK(std::abs(f_ij * std::conj(f_ji) - 1.0) < 1e-10);
    }
}

TEST_CASE("kernel cache round trip") {
    auto [net, bath] = fmo4_preset();
    const KernelTables kt = build_kernel_tables(net, bath, 0.5, 50.0);
    const std::string path = (std::filesystem::temp_directory_path() / "pme_cache_test.bin").string();
    kt.save(path);

    KernelTables loaded;
    REQUIRE(KernelTables::load(path, net, bath, 0.5, 50.0, {}, loaded));
    CHECK(loaded.beta(0, 1) == kt.beta(0, 1));
    CHECK(loaded.kernel_K(0, 1, 25.25) == kt.kernel_K(0, 1, 25.25));
    CHECK(loaded.displaced_f(0, 0, 2, 12.5) == kt.displaced_f(0, 0, 2, 12.5));

    // parameter mismatch is rejected
    BathSpec other = bath;
    other.kT_cm = 210.0;
    KernelTables reject;
    CHECK_FALSE(KernelTables::load(path, net, other, 0.5, 50.0, {}, reject));
    std::remove(path.c_str());
}
