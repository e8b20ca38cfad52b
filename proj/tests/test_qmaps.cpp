#include "qcat/qmaps.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>

using namespace qcat;

namespace {

MapSpec cat_map() {
  MapSpec spec;
  spec.linear = SymplecticMatrix{2, 1, 3, 2};
  return spec;
}

MapSpec kicked_cat(KickForm form, double amplitude = 0.05) {
  MapSpec spec = cat_map();
  spec.kick = KickHamiltonian::cosine(form, 1, amplitude);
  return spec;
}

}  // namespace

TEST_CASE("metaplectic propagator of the rotation is the fourier transform") {
  for (int N : {8, 37, 64}) {
    HilbertSpaceSpec space(N);
    MatC F = dft(space).M;
    // [[0,1],[-1,0]] quantizes to the DFT itself, with phase exactly 1
    Propagator U = metaplectic(space, SymplecticMatrix{0, 1, -1, 0});
    CHECK((U.U - F).cwiseAbs().maxCoeff() < 1e-12);
    // the inverse rotation lands on the conjugate kernel
    Propagator V = metaplectic(space, SymplecticMatrix{0, -1, 1, 0});
    CHECK((V.U - F.conjugate()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("metaplectic propagators compose up to a phase") {
  HilbertSpaceSpec space(15);
  SymplecticMatrix S{2, 1, 3, 2};
  Propagator U = metaplectic(space, S);
  Propagator U2 = metaplectic(space, S * S);
  MatC A = U.U * U.U;
  cplx phase = A(0, 0) / U2.U(0, 0);
  CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
  CHECK((A - phase * U2.U).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("metaplectic rejects unusable matrices") {
  HilbertSpaceSpec space(64);
  // b = 0: no Gauss-sum kernel
  CHECK_THROWS_AS(metaplectic(space, SymplecticMatrix{1, 0, 1, 1}),
                  ConfigError);
  // cd odd breaks the checkerboard parity
  CHECK_THROWS_AS(metaplectic(space, SymplecticMatrix{1, 2, 1, 3}),
                  ConfigError);
  // gcd(b, N) = 2
  CHECK_THROWS_AS(metaplectic(space, SymplecticMatrix{3, 2, 4, 3}),
                  ConfigError);
  // same matrix is fine at odd N
  HilbertSpaceSpec odd(63);
  Propagator U = metaplectic(odd, SymplecticMatrix{3, 2, 4, 3});
  CHECK(U.unitarity_residual < 1e-10);
}

TEST_CASE("propagator unitarity") {
  HilbertSpaceSpec space(128);
  for (const MapSpec& spec :
       {cat_map(), kicked_cat(KickForm::Position), kicked_cat(KickForm::Momentum)}) {
    Propagator U = propagator(space, spec);
    CHECK(U.unitarity_residual < 1e-10);
    CHECK((U.U.adjoint() * U.U - MatC::Identity(128, 128)).norm() < 1e-10);
  }
}

TEST_CASE("kick operators") {
  HilbertSpaceSpec space(64);

  KickHamiltonian pos = KickHamiltonian::cosine(KickForm::Position, 1, 0.05);
  TorusOperator Kp = kick_operator(space, pos);
  CHECK(Kp.unitary);
  for (int j : {0, 5, 33}) {
    cplx want =
        std::exp(cplx(0, -TWO_PI * 64.0 * pos.value(TorusPoint(j / 64.0, 0))));
    CHECK(std::abs(Kp.M(j, j) - want) < 1e-12);
  }
  MatC offdiag = Kp.M;
  offdiag.diagonal().setZero();
  CHECK(offdiag.cwiseAbs().maxCoeff() == 0.0);  // position kicks stay diagonal

  // momentum kicks are the same diagonal conjugated by the DFT
  KickHamiltonian mom = KickHamiltonian::cosine(KickForm::Momentum, 1, 0.05);
  TorusOperator Km = kick_operator(space, mom);
  MatC F = dft(space).M;
  MatC D = MatC::Zero(64, 64);
  for (int j = 0; j < 64; ++j)
    D(j, j) =
        std::exp(cplx(0, -TWO_PI * 64.0 * mom.value(TorusPoint(0, j / 64.0))));
  CHECK((Km.M - F.adjoint() * D * F).cwiseAbs().maxCoeff() < 1e-12);

  // full propagator applies the kick after the linear part
  Propagator U = propagator(space, kicked_cat(KickForm::Position));
  Propagator M = propagator(space, cat_map());
  CHECK((U.U - Kp.M * M.U).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigensystem invariants") {
  HilbertSpaceSpec space(64);
  Propagator U = propagator(space, kicked_cat(KickForm::Position));
  Spectrum spec = eigensystem(U);
  REQUIRE(spec.eigenphases.size() == 64);
  CHECK(spec.max_residual < 1e-8);
  CHECK(spec.orthonormality < 1e-10);
  for (std::size_t k = 0; k + 1 < spec.eigenphases.size(); ++k) {
    CHECK(spec.eigenphases[k] <= spec.eigenphases[k + 1]);
    CHECK(spec.eigenphases[k] >= 0.0);
    CHECK(spec.eigenphases[k] < TWO_PI);
  }
  VecC v = spec.eigenvectors.col(0);
  cplx lam = std::exp(cplx(0, spec.eigenphases[0]));
  CHECK((U.U * v - lam * v).norm() < 1e-8);
}

TEST_CASE("quantum period at N = 5") {
  HilbertSpaceSpec space(5);
  Propagator U = propagator(space, cat_map());
  auto period = quantum_period(U, 64);
  REQUIRE(period.has_value());
  CHECK(*period == 3);

  MatC P = U.U * U.U * U.U;
  cplx phase = P(0, 0);
  CHECK(std::abs(std::abs(phase) - 1.0) < 1e-10);
  CHECK((P - phase * MatC::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("operator norm by power iteration") {
  HilbertSpaceSpec space(16);
  MatC M = translation_operator(space, 1, 0).M +
           translation_operator(space, 0, 1).M;
  Eigen::BDCSVD<MatC> svd(M);
  CHECK(operator_norm(M) ==
        doctest::Approx(svd.singularValues()(0)).epsilon(1e-8));
  CHECK(operator_norm(dft(space).M) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(operator_norm(MatC::Zero(8, 8)) == doctest::Approx(0.0));
}

TEST_CASE("exact conjugation identity for linear maps") {
  MapSpec spec = cat_map();
  HilbertSpaceSpec space(64);

  double tail = 0.0;
  TrigSymbol g =
      pullback_symbol(spec, TrigSymbol::monomial(1, 0), 2, {}, &tail);
  REQUIRE(g.c.size() == 1);
  CHECK(g.c.count({7, 4}) == 1);  // (1,0) -> (2,1) -> (7,4)
  CHECK(tail == 0.0);

  for (int t : {1, 2, 3}) {
    EgorovResidual r =
        egorov_residual(space, spec, TrigSymbol::monomial(1, 0), t);
    CHECK(r.residual < 1e-9);
    CHECK_FALSE(r.truncated);
  }
  EgorovResidual rc =
      egorov_residual(space, spec, TrigSymbol::cosine_x(1, 1.0), 2);
  CHECK(rc.residual < 1e-9);
}

TEST_CASE("conjugation residual decays quadratically for a weak kick") {
  MapSpec spec = kicked_cat(KickForm::Momentum);
  TrigSymbol f = TrigSymbol::cosine_x(1, 2.0);

  std::vector<int> Ns = {64, 128, 256, 512};
  std::vector<double> want = {1.509323e-3, 3.867378e-4, 9.788035e-5,
                              2.462083e-5};
  std::vector<double> got;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    EgorovResidual r = egorov_residual(HilbertSpaceSpec(Ns[i]), spec, f, 1);
    CHECK(r.residual == doctest::Approx(want[i]).epsilon(1e-4));
    CHECK(r.tail_mass < 1e-12);
    got.push_back(r.residual);
  }
  double slope = std::log(got.back() / got.front()) /
                 std::log(double(Ns.back()) / Ns.front());
  CHECK(slope > -2.05);
  CHECK(slope < -1.85);
}
