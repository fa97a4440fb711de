#include "doctest.h"

#include <utility>
#include <vector>

#include "ppma/verify.hpp"

using namespace ppma;

TEST_CASE("inversion lemma suite") {
    SuiteReport rep = run_inversion_lemma_suite(1000, 99, 5);
    CHECK(rep.passed());
    CHECK(rep.trials == 1000);
    CHECK(rep.worst_margin >= -1e-12);
    CHECK(rep.suite == "inversion-lemma");
    CHECK_THROWS_AS(run_inversion_lemma_suite(0, 1, 5), ParameterError);

    // identity and diagonal matrices sit exactly on the equality case
    Eigen::MatrixXcd A = Eigen::Vector3cd(2.0, 5.0, 9.0).asDiagonal();
    Eigen::MatrixXcd Ainv = A.inverse();
    for (int i = 0; i < 3; ++i)
        CHECK(Ainv(i, i).real() * A(i, i).real() == doctest::Approx(1.0));
}

TEST_CASE("algebra suite across the acceptance shapes") {
    for (auto [n, p] : std::vector<std::pair<int, int>>{{3, 2}, {4, 2}, {5, 3}}) {
        SuiteReport rep = run_algebra_suite(100, 1234, n, p);
        CHECK(rep.passed());
        CHECK(rep.trials == 100);
        CHECK(rep.worst_margin >= -1e-10);
    }
}

TEST_CASE("operator suite") {
    SuiteReport r32 = run_operator_suite(200, 77, 3, 2);
    CHECK(r32.passed());
    SuiteReport r42 = run_operator_suite(50, 78, 4, 2);
    CHECK(r42.passed());
    SuiteReport r21 = run_operator_suite(100, 79, 2, 1);
    CHECK(r21.passed());
}

TEST_CASE("same seed reproduces the report bit for bit") {
    SuiteReport a = run_algebra_suite(50, 4321, 3, 2);
    SuiteReport b = run_algebra_suite(50, 4321, 3, 2);
    CHECK(a.worst_margin == b.worst_margin);
    CHECK(a.failures == b.failures);
    SuiteReport c = run_inversion_lemma_suite(100, 7, 4);
    SuiteReport d = run_inversion_lemma_suite(100, 7, 4);
    CHECK(c.worst_margin == d.worst_margin);
}

TEST_CASE("negative controls: the predicates detect corrupted identities") {
    CounterRng rng(55);
    IndexTable t42 = build_index_table(4, 2);

    // corrupt one compound entry: functoriality must now exceed tolerance
    Eigen::MatrixXcd A = random_pd_hermitian(rng, 4);
    Eigen::MatrixXcd B = random_pd_hermitian(rng, 4);
    Eigen::MatrixXcd CA = compound(A, t42);
    CA(2, 3) += 0.1;
    double defect =
        (compound(Eigen::MatrixXcd(A * B), t42) - CA * compound(B, t42)).norm();
    CHECK(defect > 1e-10);

    // Sylvester-Franke with a corrupted determinant exponent
    double detA = A.determinant().real();
    double detC = compound(A, t42).determinant().real();
    double wrong = std::abs(std::pow(detC, 0.5) - detA) / detA;  // true exponent is 1/3
    CHECK(wrong > 1e-10);

    // inversion predicate flags a non-inverse pairing; scale the fake inverse
    // so the diagonal product drops to exactly one half
    double true_product = (A.inverse()(0, 0) * A(0, 0)).real();
    Eigen::MatrixXcd fake = A.inverse() / (2.0 * true_product);
    double margin = fake(0, 0).real() * A(0, 0).real() - 1.0;
    CHECK(margin < -1e-12);
}
