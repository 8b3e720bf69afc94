#include <doctest.h>

#include <cmath>
#include <random>

#include "hicops/chem.hpp"
#include "support.hpp"

using namespace hicops;

TEST_SUITE("chem") {

TEST_CASE("residue masses") {
    CHECK(residue_mass('G') == doctest::Approx(57.02146).epsilon(1e-6));
    CHECK(residue_mass('W') == doctest::Approx(186.07931).epsilon(1e-6));
    CHECK_THROWS_AS(residue_mass('B'), std::invalid_argument);
    CHECK_THROWS_AS(residue_mass('Z'), std::invalid_argument);
}

TEST_CASE("peptide mass basics") {
    CHECK(peptide_mass("G", 0, {}) == doctest::Approx(75.03203).epsilon(1e-6));
    CHECK(peptide_mass("", 0, {}) == doctest::Approx(18.010565).epsilon(1e-9));
}

TEST_CASE("peptide mass equals independent summation") {
    // Second implementation: direct per-letter lookup table sum.
    const std::string seq = "PEPTIDE";
    const double table[] = {97.05276, 129.04259, 97.05276, 101.04768,
                            113.08406, 115.02694, 129.04259};
    double want = 18.010565;
    for (double m : table) want += m;
    CHECK(peptide_mass(seq, 0, {}) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("peptide mass additivity") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto a = testsup::random_peptide(rng, 2, 20);
        const auto b = testsup::random_peptide(rng, 2, 20);
        const double lhs = peptide_mass(a + b, 0, {});
        const double rhs = peptide_mass(a, 0, {}) + peptide_mass(b, 0, {}) -
                           kWaterMass;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("mod mask and fixed ptms shift the mass") {
    const PtmList ptms = {{'M', 15.994915, false}, {'C', 57.021464, true}};
    const double plain = peptide_mass("MC", 0, {});
    CHECK(peptide_mass("MC", 0, ptms) ==
          doctest::Approx(plain + 57.021464).epsilon(1e-9));
    CHECK(peptide_mass("MC", 0b01, ptms) ==
          doctest::Approx(plain + 57.021464 + 15.994915).epsilon(1e-9));
}

TEST_CASE("fragment ions of GG") {
    const auto frags = fragment_ions("GG", 0, {});
    REQUIRE(frags.size() == 2);
    CHECK(frags[0].mz == doctest::Approx(58.02874).epsilon(1e-6));
    CHECK(frags[0].kind == IonKind::B);
    CHECK(frags[1].mz == doctest::Approx(76.03931).epsilon(1e-6));
    CHECK(frags[1].kind == IonKind::Y);
}

TEST_CASE("fragment ions reject length < 2") {
    CHECK_THROWS(fragment_ions("G", 0, {}));
    CHECK_THROWS(fragment_ions("", 0, {}));
}

TEST_CASE("fragment ions of MEGSYIRK against brute-force generator") {
    const std::string seq = "MEGSYIRK";
    const auto frags = fragment_ions(seq, 0, {});
    REQUIRE(frags.size() == 2 * (seq.size() - 1));
    for (std::size_t i = 1; i < frags.size(); ++i)
        CHECK(frags[i - 1].mz <= frags[i].mz);
    // Oracle: enumerate prefix/suffix sums directly.
    std::vector<double> want;
    for (std::size_t i = 1; i < seq.size(); ++i) {
        double b = kProtonMass;
        for (std::size_t j = 0; j < i; ++j) b += residue_mass(seq[j]);
        want.push_back(b);
        double y = kWaterMass + kProtonMass;
        for (std::size_t j = seq.size() - i; j < seq.size(); ++j)
            y += residue_mass(seq[j]);
        want.push_back(y);
    }
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(frags[i].mz == doctest::Approx(want[i]).epsilon(1e-9));
}

TEST_CASE("fragments bounded by precursor mass") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        const auto seq = testsup::random_peptide(rng, 2, 30);
        const double mass = peptide_mass(seq, 0, {});
        for (const auto& f : fragment_ions(seq, 0, {})) {
            if (f.kind == IonKind::B) CHECK(f.mz < mass);
            else CHECK(f.mz < mass + kProtonMass);
        }
    }
}

}  // TEST_SUITE
