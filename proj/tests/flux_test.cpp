#include "dataflow/flux.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dataflow;

namespace {
const ModelParams kDefault{0.8, 0.5, 0.5, 0.1};

// Centered finite differences of flux_phi, the independent check on the
// hand-derived partials.
double fd_drho(double rho, double sigma, double alpha, const ModelParams& p, double h = 1e-6) {
    return (flux_phi(rho + h, sigma, alpha, p) - flux_phi(rho - h, sigma, alpha, p)) / (2.0 * h);
}
double fd_dsigma(double rho, double sigma, double alpha, const ModelParams& p, double h = 1e-6) {
    return (flux_phi(rho, sigma + h, alpha, p) - flux_phi(rho, sigma - h, alpha, p)) / (2.0 * h);
}
} // namespace

TEST(FluxPhi, VacuumBranch) {
    EXPECT_EQ(flux_phi(0.0, 0.3, 0.1, kDefault), 0.0);
    EXPECT_EQ(flux_phi(1e-15, 0.3, 0.1, kDefault), 0.0); // guarded near-vacuum
}

TEST(FluxPhi, SimplifiedFormulaBelowRhoStar) {
    // alpha*rho/rho_star with W2(0) = 1
    EXPECT_DOUBLE_EQ(flux_phi(0.5, 0.0, 0.1, kDefault), 0.0625);
}

TEST(FluxPhi, TentSupportVanishes) {
    // |sigma/rho| = 2.4 >= 1/eta = 2
    EXPECT_EQ(flux_phi(0.5, 1.2, 0.1, kDefault), 0.0);
    EXPECT_EQ(flux_phi(0.5, 1.2, 7.3, kDefault), 0.0);
}

TEST(FluxPhi, RampSaturatesAboveRhoStar) {
    // rho = 2 rho_star, sigma = 0: w1 clamps at 1, so Phi = alpha
    EXPECT_DOUBLE_EQ(flux_phi(1.6, 0.0, 0.1, kDefault), 0.1);
}

TEST(FluxPhi, NegativeRhoRejected) {
    EXPECT_THROW(flux_phi(-0.1, 0.0, 0.1, kDefault), std::domain_error);
    EXPECT_THROW(flux_phi(std::nan(""), 0.0, 0.1, kDefault), std::domain_error);
}

TEST(FluxPhi, BoundedByAlphaAndEvenInSigma) {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> rho(0.0, 2.0);
    std::uniform_real_distribution<double> sig(-2.0, 2.0);
    std::uniform_real_distribution<double> al(0.0, 1.0);
    for (int n = 0; n < 5000; ++n) {
        const double r = rho(rng), s = sig(rng), a = al(rng);
        const double f = flux_phi(r, s, a, kDefault);
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, a);
        EXPECT_EQ(f, flux_phi(r, -s, a, kDefault));
    }
}

TEST(DPhiDRho, ExactOnTheTent) {
    // s = 0.5, eta = 1: W2 - s W2' telescopes to 1 -> alpha/rho_star
    const ModelParams p{0.8, 1.0, 0.5, 0.1};
    EXPECT_EQ(dphi_drho(0.4, 0.2, 0.1, p), 0.125);
    // s = 0 with the kink convention W2'(0) := 0
    EXPECT_EQ(dphi_drho(0.4, 0.0, 0.1, p), 0.125);
    // |s| > 1/eta: flat region
    EXPECT_EQ(dphi_drho(0.4, 0.8, 0.1, p), 0.0);
    EXPECT_THROW(dphi_drho(0.0, 0.0, 0.1, p), std::domain_error);
}

TEST(DPhiDSigma, SignedSlopeOfTheTent) {
    const ModelParams p{0.8, 1.0, 0.5, 0.1};
    EXPECT_DOUBLE_EQ(dphi_dsigma(0.4, 0.2, 0.1, p), -0.125);  // s = +0.5
    EXPECT_DOUBLE_EQ(dphi_dsigma(0.4, -0.2, 0.1, p), 0.125);  // s = -0.5
    EXPECT_EQ(dphi_dsigma(0.4, 0.8, 0.1, p), 0.0);            // s = 2 > 1/eta
}

TEST(FluxDerivatives, MatchFiniteDifferences) {
    // away from the kinks of W2 and w1 both partials are exact to O(h^2)
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> su(0.05, 0.9); // |s| as fraction of 1/eta
    std::uniform_real_distribution<double> ru(0.05, 0.95);
    std::uniform_real_distribution<double> eu(0.3, 3.0);
    std::uniform_real_distribution<double> au(0.05, 1.0);
    for (int n = 0; n < 500; ++n) {
        ModelParams p = kDefault;
        p.eta = eu(rng);
        const double rho = ru(rng) * p.rho_star;
        const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        const double sigma = sgn * su(rng) / p.eta * rho;
        const double alpha = au(rng);
        const double dr = dphi_drho(rho, sigma, alpha, p);
        const double ds = dphi_dsigma(rho, sigma, alpha, p);
        EXPECT_NEAR(dr, fd_drho(rho, sigma, alpha, p), 1e-6 * std::max(1.0, std::abs(dr)));
        EXPECT_NEAR(ds, fd_dsigma(rho, sigma, alpha, p), 1e-6 * std::max(1.0, std::abs(ds)));
        EXPECT_EQ(dr, alpha / p.rho_star); // bit-for-bit on the open tent
    }
}

TEST(Discriminant, ZeroPrefactorAndBoundary) {
    const ModelParams p{0.8, 0.5, 0.5, 0.1};
    const double eps = 0.25, alpha = 0.1, s = 0.3;
    EXPECT_EQ(hyperbolicity_discriminant(1.7, 0.0, s, eps, alpha, p), 0.0);

    // xi1/xi2 exactly at the threshold (eps a - rho*)^2 / (4 eps a rho* eta)
    const double d = eps * alpha - p.rho_star;
    const double threshold = d * d / (4.0 * eps * alpha * p.rho_star * p.eta);
    const double xi2 = 1.3;
    EXPECT_NEAR(hyperbolicity_discriminant(threshold * xi2, xi2, s, eps, alpha, p), 0.0, 1e-12);
    // twice the threshold: strictly inside the non-hyperbolic region
    EXPECT_LT(hyperbolicity_discriminant(2.0 * threshold * xi2, xi2, s, eps, alpha, p), 0.0);
}

TEST(Discriminant, RequiresOpenTent) {
    const ModelParams p{0.8, 0.5, 0.5, 0.1};
    EXPECT_THROW(hyperbolicity_discriminant(1.0, 1.0, 0.0, 0.1, 0.1, p), std::domain_error);
    EXPECT_THROW(hyperbolicity_discriminant(1.0, 1.0, 2.5, 0.1, 0.1, p), std::domain_error);
    EXPECT_THROW(hyperbolicity_discriminant(1.0, 1.0, 0.3, 0.0, 0.1, p), std::domain_error);
}

TEST(Discriminant, NonHyperbolicRegionVanishesAsEpsShrinks) {
    const ModelParams p{0.8, 0.5, 0.5, 0.1};
    const double alpha = 0.1, s = 0.7;
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> xi(0.1, 5.0);
    for (int n = 0; n < 200; ++n) {
        const double xi2 = xi(rng);
        const double xi1 = xi(rng) * 50.0; // push into the non-hyperbolic wedge
        double eps = 1.0;
        if (hyperbolicity_discriminant(xi1, xi2, s, eps, alpha, p) >= 0.0) continue;
        bool recovered = false;
        for (int k = 0; k < 200; ++k) {
            eps *= 0.5;
            if (hyperbolicity_discriminant(xi1, xi2, s, eps, alpha, p) >= 0.0) {
                recovered = true;
                break;
            }
        }
        EXPECT_TRUE(recovered) << "xi1=" << xi1 << " xi2=" << xi2;
    }
}
