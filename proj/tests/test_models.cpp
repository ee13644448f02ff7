#include <gtest/gtest.h>

#include "qbmon/lindblad.hpp"
#include "qbmon/models.hpp"
#include "qbmon/thermo.hpp"
#include "test_support.hpp"

using namespace qbmon;
using qbmon::testing::Gen;
using qbmon::testing::max_abs;

TEST(FockCutoff, Rule) {
  EXPECT_EQ(default_fock_cutoff(1), 20u);
  EXPECT_EQ(default_fock_cutoff(4), 20u);
  EXPECT_EQ(default_fock_cutoff(5), 20u);
  EXPECT_EQ(default_fock_cutoff(6), 24u);
  EXPECT_EQ(default_fock_cutoff(10), 40u);
  EXPECT_THROW(default_fock_cutoff(0), ConfigError);
}

TEST(DickeConfig, CutoffMustHoldInitialPhotons) {
  DickeConfig c;
  c.n_tls = 6;
  c.n_ph = 5;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "n_ph");
  }
  c.n_ph = 6;
  EXPECT_NO_THROW(c.validate());
}

TEST(Configs, NegativeRatesRejected) {
  SpinSpinConfig s;
  s.gamma = -0.1;
  EXPECT_THROW(build_spin_spin(s), ConfigError);
  DickeConfig d;
  d.kappa = -1.0;
  EXPECT_THROW(build_dicke(d), ConfigError);
}

TEST(SpinSpin, DecoupledInitialStateIsStationary) {
  SpinSpinConfig c;
  c.g_battery = 0.0;
  c.g_charger = 0.0;
  c.n_ph = 4;
  const auto m = build_spin_spin(c);
  const Vector& psi = m.initial_state.amplitudes();
  const Vector hpsi = m.h_total.matrix() * psi;
  const Complex e = psi.dot(hpsi);
  EXPECT_LT((hpsi - e * psi).norm(), 1e-14);

  const auto series = evolve_unconditional(m, IntegratorOptions::uniform(5.0, 11, 1e-3));
  for (const auto& rho : series.reduced_battery) {
    EXPECT_NEAR(battery_energy(rho, m.h_battery), 0.0, 1e-12);
  }
}

TEST(SpinSpin, InitialExcitationBalance) {
  const auto m = build_spin_spin({});
  const auto& l = m.layout;
  const auto sz = LinearOp::local(ops::pauli_z(), true);
  const auto n = LinearOp::local(ops::number(20), true, "cavity", true);
  const LinearOp exc =
      0.5 * embed(sz, 0, l) + 0.5 * embed(sz, 1, l) + embed(n, 2, l);
  EXPECT_NEAR(expectation(exc, m.initial_state).real(), 0.0, 1e-15);
  const auto rho_b = partial_trace(m.initial_state, m.battery_subsystems);
  EXPECT_NEAR(battery_energy(rho_b, m.h_battery), 0.0, 1e-15);
  EXPECT_NEAR(purity(rho_b), 1.0, 1e-15);
}

TEST(SpinSpin, JumpOperatorScalesWithGamma) {
  SpinSpinConfig c;
  c.gamma = 0.25;
  c.n_ph = 3;
  const auto m = build_spin_spin(c);
  const auto a = embed(LinearOp::local(ops::annihilation(3), false, "cavity", true), 2, m.layout);
  EXPECT_LT(max_abs(m.jump_op.matrix() - 0.5 * a.matrix()), 1e-15);
  EXPECT_TRUE(m.dissipative());
  c.gamma = 0.0;
  EXPECT_FALSE(build_spin_spin(c).dissipative());
}

TEST(Dicke, InitialStateEmptyBatteryFullCavity) {
  DickeConfig c;
  c.n_tls = 4;
  const auto m = build_dicke(c);
  EXPECT_EQ(m.layout.dims(), (std::vector<std::size_t>{21, 5}));
  const auto rho_b = partial_trace(m.initial_state, m.battery_subsystems);
  EXPECT_NEAR(battery_energy(rho_b, m.h_battery), 0.0, 1e-15);
  EXPECT_NEAR(purity(rho_b), 1.0, 1e-15);
  const auto n = embed(LinearOp::local(ops::number(20), true, "cavity", true), 0, m.layout);
  EXPECT_NEAR(expectation(n, m.initial_state).real(), 4.0, 1e-15);
}

TEST(Dicke, FullyChargedEnergyIsNOmega) {
  DickeConfig c;
  c.n_tls = 5;
  c.omega = 1.3;
  const auto m = build_dicke(c);
  Matrix top = Matrix::Zero(6, 6);
  top(5, 5) = 1.0;
  EXPECT_NEAR(battery_energy(top, m.h_battery), 5 * 1.3, 1e-14);
}

TEST(Dicke, SingleEmitterIsRabiModel) {
  DickeConfig c;
  c.n_tls = 1;
  c.n_ph = 6;
  c.lambda_bar = 0.7;
  const auto m = build_dicke(c);
  const auto l = m.layout;
  const auto a = LinearOp::local(ops::annihilation(6), false, "cavity", true);
  const auto xf = LinearOp::local(a.matrix() + a.matrix().adjoint(), true, "cavity", true);
  const auto num = LinearOp::local(ops::number(6), true, "cavity", true);
  const auto sx = LinearOp::local(ops::pauli_x(), true);
  const auto sz = LinearOp::local(ops::pauli_z(), true);
  // omega a^dag a + omega/2 sigma_z + lambda (a + a^dag) sigma_x
  const LinearOp rabi = embed(num, 0, l) + 0.5 * embed(sz, 1, l) + 0.7 * kron_compose({xf, sx}, l);
  EXPECT_LT(max_abs(m.h_total.matrix() - rabi.matrix()), 1e-14);
}

TEST(Models, HamiltoniansAreHermitian) {
  Gen g(3);
  for (int trial = 0; trial < 10; ++trial) {
    SpinSpinConfig s;
    s.omega = g.uniform(0.5, 2.0);
    s.g_battery = g.uniform(0.0, 2.0);
    s.g_charger = g.uniform(0.0, 2.0);
    s.gamma = g.uniform(0.0, 1.0);
    s.n_ph = g.index(1, 10);
    const auto ms = build_spin_spin(s);
    EXPECT_LT(hermiticity_defect(ms.h_total.matrix()), 1e-12);
    EXPECT_LT(hermiticity_defect(ms.h_battery.matrix()), 1e-12);

    DickeConfig d;
    d.omega = g.uniform(0.5, 2.0);
    d.lambda_bar = g.uniform(0.0, 2.0);
    d.kappa = g.uniform(0.0, 1.0);
    d.n_tls = g.index(1, 8);
    const auto md = build_dicke(d);
    EXPECT_LT(hermiticity_defect(md.h_total.matrix()), 1e-12);
    EXPECT_LT(hermiticity_defect(md.h_battery.matrix()), 1e-12);
  }
}

TEST(Models, ChargingScheduleIsConstantOn) {
  const auto m = build_dicke({});
  EXPECT_EQ(&charging_schedule(m, 0.0), &m.h_total);
  EXPECT_EQ(&charging_schedule(m, 12.5), &m.h_total);
  EXPECT_THROW(charging_schedule(m, -1e-3), std::invalid_argument);
}

TEST(Models, SpectraMatchBatteryHamiltonian) {
  DickeConfig c;
  c.n_tls = 3;
  const auto m = build_dicke(c);
  const auto& full = m.spectrum(ErgotropySpace::kFull);
  EXPECT_EQ(full.total_multiplicity(), 8u);
  EXPECT_EQ(full.levels()[1].multiplicity, 3u);
  EXPECT_EQ(m.spectrum(ErgotropySpace::kSymmetric).total_multiplicity(), 4u);
  EXPECT_TRUE(full.ground_shifted());
  // spin-spin has no symmetric variant; falls back to the physical spectrum
  const auto s = build_spin_spin({});
  EXPECT_EQ(s.spectrum(ErgotropySpace::kSymmetric).total_multiplicity(), 2u);
}

// Ladder reduction agrees with the explicit 2^N construction.
class DickeLadderVsFull : public ::testing::TestWithParam<std::size_t> {};

TEST_P(DickeLadderVsFull, SameBatteryObservables) {
  DickeConfig c;
  c.n_tls = GetParam();
  c.n_ph = 8;
  c.lambda_bar = 0.6;
  c.kappa = 0.2;
  const auto ladder = build_dicke(c);
  const auto full = build_dicke_full_space(c);
  auto opts = IntegratorOptions::uniform(1.5, 16, 1e-3);
  opts.keep_full_states = false;
  const auto a = evolve_unconditional(ladder, opts);
  const auto b = evolve_unconditional(full, opts);
  const auto& spec = ladder.spectrum(ErgotropySpace::kFull);
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const auto& ra = a.reduced_battery[i];
    const auto& rb = b.reduced_battery[i];
    EXPECT_NEAR(battery_energy(ra, ladder.h_battery), battery_energy(rb, full.h_battery), 1e-8);
    EXPECT_NEAR(ergotropy(ra, ladder.h_battery, spec), ergotropy(rb, full.h_battery, spec), 1e-8);
    EXPECT_NEAR(purity(ra), purity(rb), 1e-8);
    EXPECT_NEAR(a.observables.at("cavity_photons")[i], b.observables.at("cavity_photons")[i], 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(SmallN, DickeLadderVsFull, ::testing::Values(2u, 3u));
