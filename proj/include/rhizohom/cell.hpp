#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rhizohom/constitutive.hpp"
#include "rhizohom/errors.hpp"

namespace rhizohom {

enum class CellMode { disk, laminate };

// Microgeometry of the periodic unit cell Y = (0,1)^2: root disk of radius
// r_P inside a rhizosphere disk of radius r_R, rasterized on an N-by-N grid
// by cell-center membership. Laminate mode replaces the disks by centered
// vertical strips of the same area fractions (used for analytic validation).
struct UnitCellGeometry {
  double r_P = 0.2;
  double r_R = 0.35;
  int N = 256;
  CellMode mode = CellMode::disk;

  void validate() const;
  double frac_P_analytic() const;
  double frac_R_analytic() const;
  double perimeter_analytic() const;  // |Gamma_P| of the smooth geometry
};

enum : std::uint8_t { kLabelP = 0, kLabelR = 1, kLabelB = 2 };

struct CellFace {
  int p_cell;  // index of the P cell
  int s_cell;  // index of the adjacent soil cell
};

struct CellClassification {
  int N = 0;
  std::vector<std::uint8_t> label;
  std::vector<CellFace> gamma_P;
  double frac_P = 0, frac_R = 0, frac_B = 0;  // counted area fractions
  double perimeter = 0;                       // staircase |Gamma_P| = faces/N

  std::size_t size() const { return std::size_t(N) * N; }
};

CellClassification classify_cell(const UnitCellGeometry& geom);

struct SymTensor2 {
  double a11 = 0, a12 = 0, a22 = 0;
  std::array<double, 2> eigenvalues() const;
};

struct CorrectorSolution {
  std::vector<double> w;   // mean-zero over the soil cells, zero in the hole
  double residual = 0;     // final relative linear residual
  int iterations = 0;
};

// Solves div(a (grad w + e_j)) = 0 on the perforated cell with coefficient
// a = {0 in P, a_R in R, a_B in B}, Y-periodic, zero Neumann on Gamma_P
// (enforced by the zero-conductivity hole). j is 0 or 1.
CorrectorSolution solve_corrector(const CellClassification& cls, double a_R, double a_B,
                                  int j, double tol = 1e-12, int max_iter = 0);

// Normalized effective tensor A^(rho) from the two correctors at coefficient
// contrast rho = a_R / a_B (a_B normalized to 1).
SymTensor2 ahat(const CellClassification& cls, double rho, double* max_residual = nullptr);

// Raw (unnormalized) homogenized 2x2 tensor for coefficients (a_R, a_B);
// used by the contrast-factorization checks.
SymTensor2 homogenized_2x2(const CellClassification& cls, double a_R, double a_B,
                           double* max_residual = nullptr);

struct EffectiveTable {
  std::vector<double> rho;        // ordered contrast grid
  std::vector<SymTensor2> ahat;   // per-rho normalized tensors
  std::vector<double> residuals;  // per-rho max linear residual
  double frac_P = 0, frac_R = 0, frac_B = 0;
  double perimeter = 0;  // staircase
  int N = 0;
  CellMode mode = CellMode::disk;
  double r_P = 0, r_R = 0;

  // Log-linear interpolation in rho; throws TableRangeError outside the grid.
  SymTensor2 interpolate(double rho_query) const;
};

std::vector<double> log_rho_grid(double rho_min, double rho_max, int count);

// Solves the corrector problems for every rho in the grid. Distinct (rho, j)
// solves run in parallel; each solve runs single-threaded on its own grid.
EffectiveTable build_effective_table(const UnitCellGeometry& geom,
                                     const std::vector<double>& rho_grid);

struct EffectiveTensor3 {
  double k11 = 0, k12 = 0, k22 = 0;  // horizontal block, m/s
  double k33 = 0;                    // vertical entry, m/s
};

// K_S,hom(h): horizontal block K_B(h) * A^(K_R/K_B), vertical entry
// frac_R K_R + frac_B K_B; all (3,j) couplings vanish.
EffectiveTensor3 effective_tensor(const EffectiveTable& table, double K_R, double K_B);

// Arithmetic (Voigt) and harmonic (Reuss) bounds for the three-phase cell
// {hole: 0, R: rho, B: 1}.
double voigt_bound(const EffectiveTable& table, double rho);
double reuss_bound(const EffectiveTable& table, double rho);

}  // namespace rhizohom
