#include <cmath>

#include "doctest.h"
#include "homog/upscale.hpp"

using namespace homog;

namespace {

// Synthesized over the margin box and restricted, so boundary windows see the
// genuine oscillation instead of clamped edge values.
MicroCoefficient<1> layered_1d(double period) {
  FieldSpec s;
  s.kind = FieldKind::layered;
  s.mean = 2.0;
  s.amplitude = 1.0;
  s.period = period;
  MicroCoefficient<1> f = synthesize(s, Box<1>{{-0.05}, {1.05}});
  f.omega = Box<1>{{0.0}, {1.0}};
  return f;
}

}  // namespace

TEST_CASE("lattice interpolation blends linearly and hits nodes exactly") {
  SampleLattice<1> lat;
  lat.coords[0] = {0.0, 1.0, 2.0};
  lat.values = {Mat<1>::iso(1.0), Mat<1>::iso(3.0), Mat<1>::iso(5.0)};
  lat.validate();

  CHECK(lat.interpolate(Vec<1>{0.0})(0, 0) == 1.0);  // bitwise at nodes
  CHECK(lat.interpolate(Vec<1>{1.0})(0, 0) == 3.0);
  CHECK(lat.interpolate(Vec<1>{0.5})(0, 0) == doctest::Approx(2.0));
  CHECK(lat.interpolate(Vec<1>{-1.0})(0, 0) == 1.0);  // clamped to the hull
  CHECK(lat.interpolate(Vec<1>{9.0})(0, 0) == 5.0);

  SampleLattice<1> bad = lat;
  bad.coords[0] = {0.0, 0.0, 2.0};
  CHECK_THROWS_AS(bad.validate(), ConsistencyError);
  bad = lat;
  bad.values.pop_back();
  CHECK_THROWS_AS(bad.validate(), ConsistencyError);
}

TEST_CASE("constant averaged fields evaluate everywhere in the domain") {
  Box<2> omega{{0.0, 0.0}, {1.0, 1.0}};
  Mat<2> a{};
  a(0, 0) = 2.0;
  a(1, 1) = 3.0;
  AveragedCoefficientField<2> f = constant_field(omega, a);
  CHECK(f.eval(Vec<2>{0.3, 0.9})(1, 1) == 3.0);
  CHECK_THROWS_AS(f.eval(Vec<2>{1.5, 0.5}), DomainError);

  AveragedCoefficientField<2> neg = constant_field(omega, Mat<2>::iso(-1.0));
  CHECK_THROWS_AS(neg.eval(Vec<2>{0.5, 0.5}), EllipticityError);
}

TEST_CASE("the do-nothing extension averages to the coefficient itself") {
  MicroCoefficient<1> field = layered_1d(0.1);
  TwoScaleCoefficient<1> triv = build_extension(ExtKind::trivial, field, 0.1);
  AveragedCoefficientField<1> f = micro_field(triv);
  Vec<1> x{0.321};
  CHECK(f.eval(x)(0, 0) == field.eval_clamped(x)(0, 0));

  TwoScaleCoefficient<1> cont = build_extension(ExtKind::continuous, field, 0.1);
  CHECK_THROWS_AS(micro_field(cont), ParamError);
}

TEST_CASE("lattice averaging of a resonant layered field is constant sqrt(3)") {
  // window period equals the layer period, so every window sees one full
  // oscillation and the averaged value is the harmonic mean sqrt(3)
  MicroCoefficient<1> field = layered_1d(0.1);
  TwoScaleCoefficient<1> ext = build_extension(ExtKind::continuous, field, 0.1);
  AveragedCoefficientField<1> f = sample_A_continuous(ext, 0.05, UnitCellMesh<1>{512});

  for (double x : {0.0, 0.17, 0.5, 0.83, 1.0})
    CHECK(f.eval(Vec<1>{x})(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
  CHECK(f.warnings.empty());

  AveragedCoefficientField<1> coarse =
      sample_A_continuous(ext, 0.5, UnitCellMesh<1>{64});
  REQUIRE(!coarse.warnings.empty());
  CHECK(coarse.warnings.front().find("sample spacing") != std::string::npos);
}

TEST_CASE("partition averaging assigns one tensor per cell") {
  MicroCoefficient<1> field = layered_1d(0.1);
  TwoScaleCoefficient<1> ext = build_extension(ExtKind::discrete, field, 0.1);
  AveragedCoefficientField<1> f = assemble_A_discrete(ext, UnitCellMesh<1>{256});

  // all windows are congruent modulo the period, so all cells agree
  CHECK(f.eval(Vec<1>{0.03})(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
  CHECK(f.eval(Vec<1>{0.97})(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
  // piecewise constant: same value within one cell
  CHECK(f.eval(Vec<1>{0.11})(0, 0) == f.eval(Vec<1>{0.19})(0, 0));

  TwoScaleCoefficient<1> cont = build_extension(ExtKind::continuous, field, 0.1);
  CHECK_THROWS_AS(assemble_A_discrete(cont, UnitCellMesh<1>{64}), ParamError);
}

TEST_CASE("window means reproduce the arithmetic average") {
  MicroCoefficient<1> field = layered_1d(0.1);
  TwoScaleCoefficient<1> ext = build_extension(ExtKind::continuous, field, 0.1);
  AveragedCoefficientField<1> f = sample_mean_field(ext, 0.05, 2048);
  // mean of 2 + sin over a full period is 2
  CHECK(f.eval(Vec<1>{0.4})(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("periodic data collapses to a single cell solve") {
  MicroCoefficient<1> field = layered_1d(0.1);
  Box<1> sub{{0.2}, {0.8}};
  AveragedCoefficientField<1> f =
      periodic_shortcut(field, 0.1, sub, UnitCellMesh<1>{512});
  CHECK(f.mode == AveragedCoefficientField<1>::Mode::constant);
  CHECK(f.eval(Vec<1>{0.5})(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));

  // a non-periodic field must be refused rather than silently averaged
  FieldSpec s;
  s.kind = FieldKind::random;
  s.min_value = 1.0;
  s.max_value = 10.0;
  s.cell = 0.0125;
  s.seed = 5;
  MicroCoefficient<1> rough =
      extend_domain(synthesize(s, Box<1>{{0.0}, {1.0}}), 0.05);
  CHECK_THROWS_AS(periodic_shortcut(rough, 0.1, sub, UnitCellMesh<1>{128}),
                  MismatchError);
}

TEST_CASE("continuity modulus vanishes for translation-invariant data") {
  MicroCoefficient<1> field = layered_1d(0.1);
  TwoScaleCoefficient<1> ext = build_extension(ExtKind::continuous, field, 0.1);
  // layer period equals the window size: shifting the window does not change
  // its content modulo the period, so the averaged tensor is constant in x
  auto rows = continuity_modulus(ext, Vec<1>{0.5}, {1e-2, 1e-3}, UnitCellMesh<1>{256});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] < 1e-8);
  CHECK(rows[1][0] < 1e-8);
}

TEST_CASE("solver lattices know their nearest sample") {
  MicroCoefficient<1> field = layered_1d(0.1);
  TwoScaleCoefficient<1> ext = build_extension(ExtKind::continuous, field, 0.1);
  CellSolutionLattice<1> lat = solve_cell_lattice(ext, 0.25, UnitCellMesh<1>{64});
  REQUIRE(lat.coords[0].size() >= 2);
  const CellSolution<1>& s = lat.nearest(Vec<1>{0.01});
  CHECK(s.point_x[0] == lat.coords[0].front());
  CHECK_THROWS_AS(solve_cell_lattice(ext, -1.0, UnitCellMesh<1>{64}), ParamError);
}
