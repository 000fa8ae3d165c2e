#pragma once

#include "rhizohom/errors.hpp"

namespace rhizohom {

enum class Medium { R, B, P };

// water_content evaluation mode. Physical returns the retention curves as
// parameterized; analysis subtracts the saturated content so that
// theta(0) == 0, which is the normalization the contraction metric and the
// retention primitive are stated in.
enum class CurveMode { physical, analysis };

// Van Genuchten / Mualem soil bundle, extended to positive pressure heads,
// with the delta-regularized conductivity. One instance per soil region
// (rhizosphere R, bulk B).
struct SoilHydraulics {
  double theta_res = 0.05;
  double theta_sat = 0.40;
  double alpha = 2.0;       // 1/m
  double n = 1.8;           // > 1
  double K_sat = 1e-5;      // m/s
  double l = 0.5;           // Mualem pore-connectivity exponent
  double delta = 3.5e-3;    // regularization, in (0, (theta_sat-theta_res)/10)

  double m() const { return 1.0 - 1.0 / n; }
  void validate() const;

  double theta(double h) const;
  double capacity(double h) const;   // d theta / dh
  double theta_reg(double h) const;  // theta_{S,delta}
  double conductivity(double h) const;  // K_{S,delta}, in [K0, K_sat]
  double K0() const;                    // h -> -inf limit of K_{S,delta}
  double K_pos() const;                 // constant value on h >= 0
};

// Root xylem bundle: elastic + Brooks-Corey retention with the regularized
// relative conductivity kappa_{P,delta}, plus the anisotropic conductance
// constants of the root tensor.
struct RootHydraulics {
  double theta_sat = 0.55;
  double h_ae = -1.5;       // air-entry head, < 0
  double E = 60.0;          // xylem elastic modulus (m)
  double lambda_P = 1.2;    // Brooks-Corey exponent
  double alpha = 2.0;       // positive-branch shape
  double n = 2.0;
  double delta = 1e-3;
  double k_r = 1.0e-11;     // intrinsic radial conductance
  double k_ax = 2.0e-10;    // intrinsic axial conductance
  double r = 0.2;           // root radius as a fraction of the unit cell
  double rho_g = 9810.0;    // water density times gravity

  double m() const { return 1.0 - 1.0 / n; }
  double k_gamma() const { return k_r * rho_g; }
  void validate() const;

  double theta(double h) const;
  double capacity(double h) const;
  double theta_reg(double h) const;  // theta_{P,delta}
  double kappa(double h) const;      // kappa_{P,delta} in (0, 1]
  double kappa_floor() const;        // h -> -inf limit, > 0
};

// Surface forcing: f(h) = Ke(h)*ET_o - P + RO(h). Ke is a smooth bounded
// non-decreasing ramp standing in for the literature evaporation factor; RO
// is the runoff expression.
struct SurfaceForcing {
  double ET_o = 5e-8;      // m/s
  double P = 0.0;          // m/s
  double C_RO = 4.0;       // 1/m^2
  double K_cb = 1.0;
  double Ke_max = 1.0;
  double Ke_scale = 0.5;   // m

  void validate() const;
  double Ke(double h) const;
  double runoff(double h) const;
  double flux(double h) const;
  double flux_bound() const;  // f_m with |f| <= f_m
  double T_pot() const { return K_cb * ET_o; }
};

struct RootTensorEntries {
  double horizontal = 0.0;  // m/s, scales linearly in eps
  double vertical = 0.0;    // m/s, eps-independent
};

// I_eps K_P entries: horizontal 2*pi*eps*r*rho_g*k_r, vertical
// k_ax*rho_g/L3, each times kappa_P(h).
RootTensorEntries root_tensor_micro(const RootHydraulics& root, double h, double eps,
                                    double L3);
double root_tensor_macro(const RootHydraulics& root, double h, double L3);

// Parameter bundles for one run; immutable after construction, safe to
// evaluate concurrently.
struct MediumSet {
  SoilHydraulics soil_R;
  SoilHydraulics soil_B;
  RootHydraulics root;
  SurfaceForcing surface;

  void validate() const;

  const SoilHydraulics& soil(Medium which) const;
  double water_content(Medium which, double h,
                       CurveMode mode = CurveMode::physical) const;
  double water_capacity(Medium which, double h) const;
  double conductivity_soil(Medium which, double h) const;
  double conductivity_root_scalar(double h) const;

  // Theta_J(h) = theta~(h) h + int_h^0 theta~(z) dz with the analysis-mode
  // (shifted) curve; >= 0 everywhere, 0 at h = 0.
  double retention_primitive(Medium which, double h) const;
};

}  // namespace rhizohom
