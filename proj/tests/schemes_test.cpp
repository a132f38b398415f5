#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pdsint/schemes.hpp"
#include "pdsint/stability.hpp"

using namespace pdsint;

namespace {

const LinearPds& unit_two_species() {
    static const LinearPds m(two_species_matrix(1, 1, 1));
    return m;
}

void expect_vec_near(const Vector& x, const Vector& y, double tol) {
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], tol) << "component " << i;
}

const SchemeId kAll[] = {SchemeId::euler, SchemeId::heun, SchemeId::geco1, SchemeId::geco2, SchemeId::gbbks1,
                         SchemeId::gbbks2};
const SchemeId kPositive[] = {SchemeId::geco1, SchemeId::geco2, SchemeId::gbbks1, SchemeId::gbbks2};

}  // namespace

TEST(SchemeId, ParseRoundTrip) {
    for (SchemeId id : kAll) EXPECT_EQ(parse_scheme_id(to_string(id)), id);
    EXPECT_THROW(parse_scheme_id("rk4"), ModelError);
}

TEST(SchemeSpec, AlphaBelowHalfRejected) {
    EXPECT_THROW(SchemeSpec::make(SchemeId::gbbks2, 0.4), ModelError);
    EXPECT_NO_THROW(SchemeSpec::make(SchemeId::gbbks2, 0.5));
    EXPECT_NO_THROW(SchemeSpec::make(SchemeId::gbbks1, 0.1));  // alpha unused
}

TEST(MicroStep, GeCo1) {
    const StepOutcome s = geco1_step(unit_two_species(), {2, 1}, 1.0);
    expect_vec_near(s.next_state, {1.5676676416183064, 1.4323323583816936}, 1e-10);
    EXPECT_DOUBLE_EQ(s.phi_args[0], 2.0);
}

TEST(MicroStep, GeCo2) {
    const StepOutcome s = geco2_step(unit_two_species(), {2, 1}, 1.0);
    expect_vec_near(s.next_state, {1.469069300652724, 1.530930699347276}, 1e-12);
    EXPECT_NEAR(s.phi_args[1], 0.1353352832366127, 1e-12);  // dt * w_1^+ / y_1
    EXPECT_FALSE(s.degenerate_phi);
}

TEST(MicroStep, Bbks1) {
    const StepOutcome s = gbbks1_step(unit_two_species(), {2, 1}, 1.0, GbbksStrategy::bbks1());
    expect_vec_near(s.next_state, {4.0 / 3.0, 5.0 / 3.0}, 1e-14);
    EXPECT_NEAR(s.tau, 2.0 / 3.0, 1e-14);
}

TEST(MicroStep, Bbks2) {
    const StepOutcome s = gbbks2_step(unit_two_species(), {2, 1}, 1.0, 1.0, GbbksStrategy::bbks2(1.0));
    expect_vec_near(s.next_state, {8.0 / 5.0, 7.0 / 5.0}, 1e-14);
    EXPECT_NEAR(s.tau_inner, 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(s.tau, 6.0 / 5.0, 1e-14);
}

TEST(MicroStep, EulerAndHeun) {
    expect_vec_near(euler_step(unit_two_species(), {2, 1}, 1.0).next_state, {1, 2}, 0.0);
    // R(-2) = 1 for Heun, and (2,1) - y* lies on the lambda = -2 eigenvector.
    expect_vec_near(heun_step(unit_two_species(), {2, 1}, 1.0).next_state, {2, 1}, 0.0);
    expect_vec_near(heun_step(unit_two_species(), {2, 1}, 0.5).next_state, {1.75, 1.25}, 0.0);  // R(-1) = 1/2
}

TEST(FixedPoint, KernelVectorsAreFixed) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> scale(0.1, 10.0), dts(1e-3, 100.0);
    const LinearPds m5(five_species_matrix());
    for (int trial = 0; trial < 50; ++trial) {
        const double s = scale(rng);
        const Vector v = {4 * s, 2 * s, 2 * s, 4 * s, s};
        const double dt = dts(rng);
        for (SchemeId id : kPositive) {
            const Vector y = step(m5, SchemeSpec::make(id), v, dt).next_state;
            // rounding in f(v) is amplified by dt once per stage
            const double amp = id == SchemeId::gbbks2 ? (1.0 + dt) * (1.0 + dt) : 1.0 + dt;
            for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(y[i], v[i], 1e-14 * amp * s) << to_string(id) << " dt " << dt;
        }
    }
}

TEST(Consistency, EmptyActiveSetReproducesRungeKuttaBitwise) {
    // A with nonnegative entries everywhere: f(y) >= 0 for y >= 0, so no index is active.
    const LinearPds growth(Matrix{{0, 1}, {0, 0}});
    const Vector y = {0.3, 0.7};
    for (double dt : {0.1, 1.0, 3.0}) {
        const StepOutcome b1 = gbbks1_step(growth, y, dt, GbbksStrategy::bbks1());
        EXPECT_EQ(b1.tau, 1.0);
        EXPECT_EQ(b1.next_state, euler_step(growth, y, dt).next_state);
        const StepOutcome b2 = gbbks2_step(growth, y, dt, 1.0, GbbksStrategy::bbks2(1.0));
        EXPECT_EQ(b2.tau, 1.0);
        EXPECT_EQ(b2.next_state, heun_step(growth, y, dt).next_state);
    }
}

TEST(GeCo2, BoundaryStartOnTwoSpeciesIsRegular) {
    // y_1 = 0 < (b/a) y_2 gives w_1 < 0, so no ratio with a zero denominator enters.
    const StepOutcome s = geco2_step(unit_two_species(), {0.0, 1.0}, 1.0);
    EXPECT_FALSE(s.degenerate_phi);
    EXPECT_GT(s.next_state[0], 0.0);
    EXPECT_GT(s.next_state[1], 0.0);
}

TEST(GeCo2, DegenerateBranchWithGeneralModel) {
    // y2^2 -> y1 transfer; w_1 > 0 while y_1 = 0, so phi(+inf) = 0 freezes the state.
    GeneralPds g;
    g.n = 2;
    g.rhs_fn = [](const Vector& y) { return Vector{-y[0] + y[1] * y[1], y[0] - y[1] * y[1]}; };
    g.destruction_rate = [](const Vector& y) { return Vector{1.0, y[1]}; };
    const StepOutcome s = geco2_step(g, {0.0, 2.0}, 0.1);
    EXPECT_TRUE(s.degenerate_phi);
    EXPECT_TRUE(std::isinf(s.phi_args[1]));
    EXPECT_EQ(s.next_state, (Vector{0.0, 2.0}));
}

TEST(Preconditions, InvalidInputs) {
    const auto& m = unit_two_species();
    EXPECT_THROW(geco1_step(m, {1.0}, 1.0), ModelError);
    EXPECT_THROW(geco1_step(m, {1.0, 1.0}, 0.0), ModelError);
    EXPECT_THROW(geco1_step(m, {-1.0, 1.0}, 1.0), ModelError);
    EXPECT_THROW(gbbks1_step(m, {1.0, NAN}, 1.0, GbbksStrategy::bbks1()), ModelError);
    GbbksStrategy bad = GbbksStrategy::bbks1();
    bad.sigma = [](const Vector& y, const Vector&) { return Vector(y.size(), -1.0); };
    EXPECT_THROW(gbbks1_step(m, {2, 1}, 1.0, bad), ModelError);
    EXPECT_THROW(gbbks2_step(m, {2, 1}, 1.0, 0.3, GbbksStrategy::bbks2(1.0)), ModelError);
}

TEST(Integrate, ZeroStepsAndTimeGrid) {
    const Trajectory tr = integrate(unit_two_species(), SchemeSpec::make(SchemeId::geco1), {2, 1}, 0.1, 0);
    ASSERT_EQ(tr.states.size(), 1u);
    EXPECT_EQ(tr.states[0], (Vector{2, 1}));
    EXPECT_TRUE(tr.complete());
    const Trajectory t2 = integrate(unit_two_species(), SchemeSpec::make(SchemeId::geco1), {2, 1}, 0.1, 30);
    EXPECT_EQ(t2.time(30), 30 * 0.1);
}

TEST(Integrate, FailureKeepsPartialTrajectory) {
    GbbksStrategy bad = GbbksStrategy::bbks1();
    int calls = 0;
    bad.sigma = [&calls](const Vector& y, const Vector&) { return ++calls < 3 ? y : Vector(y.size(), -1.0); };
    SchemeSpec spec;
    spec.id = SchemeId::gbbks1;
    spec.strategy = bad;
    const Trajectory tr = integrate(unit_two_species(), spec, {2, 1}, 0.5, 10);
    EXPECT_FALSE(tr.complete());
    EXPECT_EQ(tr.states.size(), 3u);
    EXPECT_NE(tr.failure->find("step 3"), std::string::npos);
}

TEST(Integrate, FiveSpeciesGeCo1ConvergesAtSpectralRate) {
    const LinearPds m(five_species_matrix());
    const Vector ys = {4, 2, 2, 4, 1};
    const Trajectory tr = integrate(m, SchemeSpec::make(SchemeId::geco1), five_species_start(), 1.0, 200);
    ASSERT_TRUE(tr.complete());
    double err = 0.0;
    for (std::size_t i = 0; i < 5; ++i) err = std::max(err, std::abs(tr.back()[i] - ys[i]));
    EXPECT_LT(err, 1e-10);
    // zero first component at the start is allowed and no new zeros appear
    for (std::size_t n = 1; n < tr.states.size(); ++n) EXPECT_GT(tr.min_component[n], 0.0);
}

TEST(Properties, PositivityAndConservationOnBuiltins) {
    struct Case {
        LinearPds model;
        Vector y0;
    };
    const std::vector<Case> cases = {{LinearPds(two_species_matrix(1, 1, 1)), {2, 1}},
                                     {LinearPds(two_species_matrix(3, 0.5, 2)), {0.2, 5}},
                                     {LinearPds(five_species_matrix()), five_species_start()},
                                     {LinearPds(stiff_chain_matrix(10)), stiff_chain_start()},
                                     {LinearPds(stiff_chain_matrix(100)), stiff_chain_start()}};
    for (const auto& c : cases)
        for (SchemeId id : kPositive)
            for (double dt : {0.1, 1.0, 10.0, 100.0}) {
                const Trajectory tr = integrate(c.model, SchemeSpec::make(id), c.y0, dt, 100);
                ASSERT_TRUE(tr.complete()) << to_string(id) << " dt " << dt << " n " << c.y0.size() << ": " << *tr.failure;
                for (std::size_t n = 0; n < tr.states.size(); ++n) {
                    EXPECT_LE(tr.invariant_defect[n], 1e-12);
                    for (std::size_t i = 0; i < c.y0.size(); ++i) {
                        EXPECT_GE(tr.states[n][i], 0.0);
                        // strict positivity holds until the previous value leaves the normal range
                        const bool representable = n == 0 || tr.states[n - 1][i] >= std::numeric_limits<double>::min();
                        if (c.y0[i] > 0.0 && representable) {
                            EXPECT_GT(tr.states[n][i], 0.0);
                        }
                    }
                }
            }
}

TEST(Properties, ExplicitBaselinesConserveInsideTheirStabilityInterval) {
    const LinearPds m(five_species_matrix());
    for (SchemeId id : {SchemeId::euler, SchemeId::heun}) {
        const double dt = 0.9 * critical_step(m, id).dt_star;
        const Trajectory tr = integrate(m, SchemeSpec::make(id), five_species_start(), dt, 500);
        for (double d : tr.invariant_defect) EXPECT_LE(d, 1e-12);
    }
}

TEST(Properties, WVectorSignStructure) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> par(0.1, 5.0), step(1e-3, 10.0), state(0.01, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = par(rng), b = par(rng), c = par(rng), dt = step(rng);
        const Vector y = {state(rng), state(rng)};
        const Vector w = w_vector(a, b, c, y, dt);
        EXPECT_NEAR(w[0], -c * w[1], 1e-12 * std::max(std::abs(w[0]), 1e-300));  // y1 + c y2 is conserved
        const double s = y[0] - (b / a) * y[1];
        if (std::abs(s) > 1e-9 * y[0]) {
            EXPECT_EQ(std::signbit(w[0]), std::signbit(s));
        }
    }
    const Vector w0 = w_vector(2, 3, 1, {3, 2}, 0.7);  // kernel: y1 = (b/a) y2
    EXPECT_NEAR(w0[0], 0.0, 1e-14);
    EXPECT_NEAR(w0[1], 0.0, 1e-14);
}

TEST(Properties, GeCo2WVectorMatchesStep) {
    const Vector w = w_vector(1, 1, 1, {2, 1}, 1.0);
    EXPECT_NEAR(w[0], 0.2706705664732254, 1e-12);
    EXPECT_NEAR(w[1], -0.2706705664732254, 1e-12);
}

TEST(Properties, UnderflowedStageIsFlushedToZero) {
    // y_1 decays by ~1e-4 per step and reaches the subnormal range near step 90.
    const LinearPds m(stiff_chain_matrix(10));
    for (SchemeId id : {SchemeId::gbbks1, SchemeId::gbbks2}) {
        const Trajectory tr = integrate(m, SchemeSpec::make(id), stiff_chain_start(), 10.0, 200);
        ASSERT_TRUE(tr.complete()) << *tr.failure;
        EXPECT_EQ(tr.back()[0], 0.0);
        EXPECT_LE(tr.invariant_defect.back(), 1e-12);
    }
}
