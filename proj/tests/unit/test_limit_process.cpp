#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "htrm/errors.hpp"
#include "htrm/experiments.hpp"
#include "htrm/limit_process.hpp"

using namespace htrm;

namespace {

Eigen::MatrixXd example_filter() {
    Eigen::MatrixXd h(2, 2);
    h << 1, 1, -2, 2;
    return h;
}

}  // namespace

TEST_CASE("Poisson points: void probability") {
    // P(no point above x) = P(P_1 <= x) = exp(-theta x^{-alpha}).
    RngStream rng(1);
    const int draws = 100000;
    std::vector<double> top(draws);
    for (auto& t : top) t = sample_ppp_points(1.0, 1.0, 1, rng)[0];
    std::sort(top.begin(), top.end());
    double ks = 0.0;
    for (int g = 0; g <= 190; ++g) {
        const double x = 0.5 + 0.05 * g;
        const double emp = static_cast<double>(std::upper_bound(top.begin(), top.end(), x) - top.begin()) / draws;
        ks = std::max(ks, std::abs(emp - std::exp(-1.0 / x)));
    }
    CHECK(ks <= 0.01);
}

TEST_CASE("Poisson points: mean count above 1") {
    RngStream rng(2);
    const int draws = 100000;
    double count = 0.0;
    for (int d = 0; d < draws; ++d) {
        const auto pts = sample_ppp_points(0.5, 1.0, 30, rng);
        count += static_cast<double>(std::count_if(pts.begin(), pts.end(), [](double p) { return p > 1.0; }));
    }
    CHECK(std::abs(count / draws - 0.5) <= 0.01);
}

TEST_CASE("Poisson points: ordering and theta scaling") {
    for (double alpha : {0.7, 1.0, 2.5}) {
        RngStream a(3), b(3);
        const auto p = sample_ppp_points(0.3, alpha, 50, a);
        const auto q = sample_ppp_points(1.0, alpha, 50, b);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i) CHECK(p[i] < p[i - 1]);
            CHECK(p[i] == doctest::Approx(std::pow(0.3, 1.0 / alpha) * q[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("iid limit: top point is Frechet") {
    const auto cluster = theoretical_cluster(FieldModel::iid(TailModel::exact_pareto(1.0)));
    RngStream rng(4);
    std::vector<double> top;
    for (int d = 0; d < 10000; ++d) top.push_back(sample_limit_spectrum_wigner(cluster, 1.0, 1, rng)[0]);
    const auto cmp = compare_distributions(top, frechet(1.0, 1.0));
    CHECK(cmp.ks <= 0.02);
}

TEST_CASE("linear filter limit: points P_i sigma_j and squares") {
    const auto cluster = theoretical_cluster(FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0)));
    RngStream rng(5);
    const LimitSample s = sample_limit_spectrum(cluster, 1.0, 4, rng);
    CHECK(s.certified);
    CHECK_FALSE(s.padded);
    std::vector<double> all;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        REQUIRE(s.sigmas[i].size() == 2);
        CHECK(s.sigmas[i][0] == doctest::Approx(std::sqrt(8.0) / 2.0).epsilon(1e-12));
        CHECK(s.sigmas[i][1] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
        if (i) CHECK(s.points[i] < s.points[i - 1]);
        for (double sg : s.sigmas[i]) all.push_back(s.points[i] * sg);
    }
    std::sort(all.rbegin(), all.rend());
    REQUIRE(s.wigner.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(s.wigner[k] == all[k]);
        CHECK(s.cov[k] == s.wigner[k] * s.wigner[k]);
    }
    // (top1, top2) of the covariance limit is (2 P_1^2, max(P_1^2/2, 2 P_2^2)).
    const double p1 = s.points[0], p2 = s.points[1];
    CHECK(s.cov[0] == doctest::Approx(2.0 * p1 * p1).epsilon(1e-12));
    CHECK(s.cov[1] == doctest::Approx(std::max(p1 * p1 / 2.0, 2.0 * p2 * p2)).epsilon(1e-12));
}

TEST_CASE("random-coefficient limit points") {
    const auto cluster = theoretical_cluster(FieldModel::random_coeff_bernoulli(0.4, TailModel::exact_pareto(1.0)));
    RngStream rng(6);
    for (int d = 0; d < 50; ++d) {
        const LimitSample s = sample_limit_spectrum(cluster, 1.0, 3, rng);
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            REQUIRE(s.sigmas[i].size() == 2);
            const double a = s.sigmas[i][0] * s.sigmas[i][0], b = s.sigmas[i][1] * s.sigmas[i][1];
            const bool e1 = std::abs(a - 18.0 / 16.0) < 1e-12 && std::abs(b - 8.0 / 16.0) < 1e-12;
            const bool e0 = std::abs(a - 16.0 / 16.0) < 1e-12 && std::abs(b - 9.0 / 16.0) < 1e-12;
            CHECK((e0 || e1));
        }
    }
}

TEST_CASE("iid covariance limit points are P_i^2") {
    const auto cluster = theoretical_cluster(FieldModel::iid(TailModel::exact_pareto(1.0)));
    RngStream a(7), b(7);
    const auto s = sample_limit_spectrum(cluster, 1.0, 3, a);
    double gamma = 0.0;
    for (int i = 0; i < 3; ++i) {
        gamma += b.exponential();
        b.uniform();  // sign draw of the Q sampler
        CHECK(s.cov[i] == doctest::Approx(1.0 / (gamma * gamma)).epsilon(1e-14));
    }
}

TEST_CASE("top-K certificate agrees with a brute-force draw") {
    // With a deterministic Q the stream consumption is the same as drawing the points alone,
    // so the certified top-K must equal the top-K of a long explicit list.
    const auto cluster = theoretical_cluster(FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(0.8, 1.0)));
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RngStream a(seed);
        const auto s = sample_limit_spectrum(cluster, 0.8, 5, a);
        REQUIRE(s.certified);
        RngStream b(seed);
        std::vector<double> all;
        double gamma = 0.0;
        for (int i = 0; i < 400; ++i) {
            gamma += b.exponential();
            b.uniform();  // sign draw of the Q sampler
            const double p = std::pow(gamma / cluster.theta, -1.0 / 0.8);
            all.push_back(p * std::sqrt(8.0) / 2.0);
            all.push_back(p * std::sqrt(2.0) / 2.0);
        }
        std::sort(all.rbegin(), all.rend());
        for (int k = 0; k < 5; ++k) CHECK(s.wigner[k] == doctest::Approx(all[k]).epsilon(1e-12));
    }
}

TEST_CASE("padding when too few products exist") {
    const auto cluster = theoretical_cluster(FieldModel::iid(TailModel::exact_pareto(1.0)));
    LimitOptions opt;
    opt.max_points = 2;
    RngStream rng(8);
    const auto s = sample_limit_spectrum(cluster, 1.0, 5, rng, opt);
    CHECK(s.padded);
    CHECK_FALSE(s.certified);
    REQUIRE(s.wigner.size() == 5);
    CHECK(s.wigner[2] == 0.0);
    CHECK(s.wigner[4] == 0.0);
}

TEST_CASE("limit CSV rows") {
    const auto cluster = theoretical_cluster(FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0)));
    RngStream rng(9);
    const auto s = sample_limit_spectrum(cluster, 1.0, 2, rng);
    std::ostringstream os;
    write_limit_csv_header(os);
    write_limit_csv_rows(os, 3, s);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "trial,i,j,P_i,sigma_ij,wigner_point,cov_point");
    std::getline(is, line);
    CHECK(line.rfind("3,1,1,", 0) == 0);
}

TEST_CASE("empirical cluster sampler") {
    SUBCASE("iid: one large entry per cluster") {
        const auto model = FieldModel::iid(TailModel::exact_pareto(1.0));
        const double a = model.normalization()(1000ull * 1000ull);
        RngStream rng(10);
        const auto emp = empirical_cluster_sampler(model, 64, 2.0, a, 400, 10000000, rng);
        double mean = 0.0;
        for (const auto& sv : emp.svs) mean += sv.front();
        mean /= static_cast<double>(emp.svs.size());
        CHECK(mean >= 0.99);
        for (const auto& w : emp.windows) CHECK(std::abs(w.cwiseAbs().maxCoeff() - 1.0) <= 1e-12);
        CHECK(emp.theta_hat == doctest::Approx(1.0).epsilon(0.15));
    }
    SUBCASE("linear filter: singular values near sqrt(8)/2, sqrt(2)/2") {
        const auto model = FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0));
        const double a = model.normalization()(1000ull * 1000ull);
        RngStream rng(11);
        const auto emp = empirical_cluster_sampler(model, 32, 4.0, a, 400, 10000000, rng);
        double s1 = 0.0, s2 = 0.0;
        for (const auto& sv : emp.svs) {
            s1 += sv.size() > 0 ? sv[0] : 0.0;
            s2 += sv.size() > 1 ? sv[1] : 0.0;
        }
        const double n = static_cast<double>(emp.svs.size());
        CHECK(std::abs(s1 / n - std::sqrt(8.0) / 2.0) <= 0.05);
        CHECK(std::abs(s2 / n - std::sqrt(2.0) / 2.0) <= 0.05);
        RngStream g(1);
        const auto q = emp.spec.q_sampler(g);
        CHECK(q.rows() == 3);
    }
    SUBCASE("acceptance rate scales like u^-alpha") {
        const auto model = FieldModel::iid(TailModel::exact_pareto(1.0));
        const double a = model.normalization()(500ull * 500ull);
        RngStream r1(12), r2(13);
        const auto e1 = empirical_cluster_sampler(model, 16, 1.0, a, 2000, 100000000, r1);
        const auto e2 = empirical_cluster_sampler(model, 16, 2.0, a, 2000, 100000000, r2);
        const double ratio = e2.acceptance_rate / e1.acceptance_rate;
        // Each rate has relative error about 1/sqrt(2000).
        CHECK(std::abs(ratio - 0.5) <= 3.0 * 0.5 * std::sqrt(2.0 / 2000.0));
    }
    SUBCASE("errors") {
        const auto model = FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0));
        RngStream rng(14);
        CHECK_THROWS_AS(empirical_cluster_sampler(model, 2, 1.0, 10.0, 1, 10, rng), ConfigError);
        CHECK_THROWS_AS(empirical_cluster_sampler(model, 8, 0.5, 10.0, 1, 10, rng), ConfigError);
        CHECK_THROWS_AS(empirical_cluster_sampler(model, 8, 1.0, 1e12, 5, 100, rng), NumericError);
    }
}
