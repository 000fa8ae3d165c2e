#include "rhizohom/constitutive.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace rhizohom {

namespace {

void check_head(double h) {
  if (!std::isfinite(h)) throw DomainError("non-finite pressure head");
}

// (1 + |alpha h|^n)^(-m) and its |.|-derivative factor.
double vg_g(double alpha, double n, double m, double h) {
  const double u = std::abs(alpha * h);
  return std::pow(1.0 + std::pow(u, n), -m);
}

double vg_dg_dabs(double alpha, double n, double m, double h) {
  const double u = std::abs(alpha * h);
  return m * n * alpha * std::pow(u, n - 1.0) * std::pow(1.0 + std::pow(u, n), -m - 1.0);
}

// Adaptive Simpson on a single smooth branch.
template <class F>
double simpson_rec(const F& f, double a, double fa, double b, double fb, double c,
                   double fc, double whole, double tol, int depth) {
  const double l = 0.5 * (a + c);
  const double r = 0.5 * (c + b);
  const double fl = f(l);
  const double fr = f(r);
  const double left = (c - a) / 6.0 * (fa + 4.0 * fl + fc);
  const double right = (b - c) / 6.0 * (fc + 4.0 * fr + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, fa, c, fc, l, fl, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, c, fc, b, fb, r, fr, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double c = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fc = f(c);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
  return simpson_rec(f, a, fa, b, fb, c, fc, whole, tol, 48);
}

}  // namespace

// ---------------------------------------------------------------------------
// SoilHydraulics

void SoilHydraulics::validate() const {
  if (!(theta_res >= 0.0 && theta_res < theta_sat && theta_sat <= 1.0))
    throw ConfigError("soil: need 0 <= theta_res < theta_sat <= 1");
  if (!(n > 1.0)) throw ConfigError("soil: need n > 1");
  if (!(alpha > 0.0)) throw ConfigError("soil: need alpha > 0");
  if (!(K_sat > 0.0)) throw ConfigError("soil: need K_sat > 0");
  if (!(delta > 0.0 && delta < (theta_sat - theta_res) / 10.0))
    throw ConfigError("soil: need 0 < delta < (theta_sat - theta_res)/10");
}

double SoilHydraulics::theta(double h) const {
  check_head(h);
  const double g = vg_g(alpha, n, m(), h);
  if (h >= 0.0) return (theta_sat - 1.0) * g + 1.0;
  return theta_res + (theta_sat - theta_res) * g;
}

double SoilHydraulics::capacity(double h) const {
  check_head(h);
  const double dg = vg_dg_dabs(alpha, n, m(), h);
  if (h >= 0.0) return (1.0 - theta_sat) * dg;
  return (theta_sat - theta_res) * dg;
}

double SoilHydraulics::theta_reg(double h) const {
  check_head(h);
  const double g = vg_g(alpha, n, m(), h);
  if (h >= 0.0) return (theta_sat - 1.0) * g + 1.0 - 0.5 * delta;
  return theta_res + (theta_sat - (theta_res + delta)) * g + 0.5 * delta;
}

namespace {
double mualem(double Se, double l, double m, double K_sat) {
  const double inner = 1.0 - std::pow(1.0 - std::pow(Se, 1.0 / m), m);
  return K_sat * std::pow(Se, l) * inner * inner;
}
}  // namespace

double SoilHydraulics::conductivity(double h) const {
  check_head(h);
  if (h >= 0.0) return K_pos();
  const double Se = (theta_reg(h) - theta_res) / (theta_sat - theta_res);
  return mualem(Se, l, m(), K_sat);
}

double SoilHydraulics::K0() const {
  const double Se0 = delta / (2.0 * (theta_sat - theta_res));
  return mualem(Se0, l, m(), K_sat);
}

double SoilHydraulics::K_pos() const {
  const double Se = 1.0 - delta / (2.0 * (theta_sat - theta_res));
  return mualem(Se, l, m(), K_sat);
}

// ---------------------------------------------------------------------------
// RootHydraulics

void RootHydraulics::validate() const {
  if (!(h_ae < 0.0)) throw ConfigError("root: need h_ae < 0");
  if (!(E > 0.0)) throw ConfigError("root: need E > 0");
  if (!(theta_sat > 0.0 && theta_sat <= 1.0)) throw ConfigError("root: need theta_sat in (0,1]");
  if (!(theta_sat + h_ae / E > 0.0))
    throw ConfigError("root: need theta_sat + h_ae/E > 0");
  if (!(lambda_P > 0.0)) throw ConfigError("root: need lambda_P > 0");
  if (!(n > 1.0)) throw ConfigError("root: need n > 1");
  if (!(alpha > 0.0)) throw ConfigError("root: need alpha > 0");
  if (!(delta > 0.0)) throw ConfigError("root: need delta > 0");
  if (!(r > 0.0 && r < 0.5)) throw ConfigError("root: need 0 < r < 1/2");
  // k_gamma = 0 is admitted so decoupled-phase scenarios stay runnable
  if (!(k_gamma() >= 0.0)) throw ConfigError("root: need k_r * rho_g >= 0");
}

double RootHydraulics::theta(double h) const {
  check_head(h);
  if (h >= 0.0) return (theta_sat - 1.0) * vg_g(alpha, n, m(), h) + 1.0;
  if (h >= h_ae) return theta_sat + h / E;
  return (theta_sat + h_ae / E) * std::pow(h / h_ae, -lambda_P);
}

double RootHydraulics::capacity(double h) const {
  check_head(h);
  if (h >= 0.0) return (1.0 - theta_sat) * vg_dg_dabs(alpha, n, m(), h);
  if (h >= h_ae) return 1.0 / E;
  return (theta_sat + h_ae / E) * (-lambda_P / h_ae) * std::pow(h / h_ae, -lambda_P - 1.0);
}

double RootHydraulics::theta_reg(double h) const {
  check_head(h);
  if (h >= h_ae) return theta(h);
  return (theta_sat + h_ae / E) * std::pow(h / h_ae, -lambda_P) +
         delta * (1.0 - std::exp(h - h_ae));
}

double RootHydraulics::kappa(double h) const {
  check_head(h);
  const double expo = 2.0 / lambda_P + 1.0;
  const double A = std::pow(1.0 + h_ae / (theta_sat * E), expo);
  if (h >= 0.0) return 1.0;
  if (h >= h_ae) {
    const double s = (h - h_ae) / h_ae;
    return A + (1.0 - A) * s * s;
  }
  const double base = (1.0 + h_ae / (theta_sat * E)) * std::pow(h / h_ae, -lambda_P) +
                      (delta / theta_sat) * (1.0 - std::exp(h - h_ae));
  return std::pow(base, expo);
}

double RootHydraulics::kappa_floor() const {
  return std::pow(delta / theta_sat, 2.0 / lambda_P + 1.0);
}

// ---------------------------------------------------------------------------
// SurfaceForcing

void SurfaceForcing::validate() const {
  if (!(C_RO > 0.0)) throw ConfigError("surface: need C_RO > 0");
  if (!(P >= 0.0)) throw ConfigError("surface: need P >= 0");
  if (!(Ke_max >= 0.0)) throw ConfigError("surface: need Ke_max >= 0");
  if (!(Ke_scale > 0.0)) throw ConfigError("surface: need Ke_scale > 0");
  if (!(T_pot() >= 0.0)) throw ConfigError("surface: need K_cb * ET_o >= 0");
}

double SurfaceForcing::Ke(double h) const {
  check_head(h);
  return Ke_max / (1.0 + std::exp(-h / Ke_scale));
}

double SurfaceForcing::runoff(double h) const {
  check_head(h);
  const double sqc = std::sqrt(C_RO);
  const double denom = 1.0 - std::exp(-sqc) + std::exp(-C_RO * (h + 1.0 / sqc));
  return P / denom;
}

double SurfaceForcing::flux(double h) const { return Ke(h) * ET_o - P + runoff(h); }

double SurfaceForcing::flux_bound() const {
  return Ke_max * ET_o + P / (1.0 - std::exp(-std::sqrt(C_RO)));
}

// ---------------------------------------------------------------------------
// Root tensor

RootTensorEntries root_tensor_micro(const RootHydraulics& root, double h, double eps,
                                    double L3) {
  if (!(eps > 0.0)) throw GeometryError("root tensor: need eps > 0 in micro mode");
  const double kp = root.kappa(h);
  RootTensorEntries t;
  t.horizontal = 2.0 * std::numbers::pi * eps * root.r * root.rho_g * root.k_r * kp;
  t.vertical = root.k_ax * root.rho_g / L3 * kp;
  return t;
}

double root_tensor_macro(const RootHydraulics& root, double h, double L3) {
  return root.k_ax * root.rho_g / L3 * root.kappa(h);
}

// ---------------------------------------------------------------------------
// MediumSet

void MediumSet::validate() const {
  soil_R.validate();
  soil_B.validate();
  root.validate();
  surface.validate();
}

const SoilHydraulics& MediumSet::soil(Medium which) const {
  switch (which) {
    case Medium::R: return soil_R;
    case Medium::B: return soil_B;
    default: throw DomainError("soil(): medium must be R or B");
  }
}

double MediumSet::water_content(Medium which, double h, CurveMode mode) const {
  double value, sat;
  if (which == Medium::P) {
    value = root.theta(h);
    sat = root.theta_sat;
  } else {
    value = soil(which).theta(h);
    sat = soil(which).theta_sat;
  }
  return mode == CurveMode::analysis ? value - sat : value;
}

double MediumSet::water_capacity(Medium which, double h) const {
  return which == Medium::P ? root.capacity(h) : soil(which).capacity(h);
}

double MediumSet::conductivity_soil(Medium which, double h) const {
  return soil(which).conductivity(h);
}

double MediumSet::conductivity_root_scalar(double h) const { return root.kappa(h); }

double MediumSet::retention_primitive(Medium which, double h) const {
  check_head(h);
  auto shifted = [&](double z) { return water_content(which, z, CurveMode::analysis); };

  // Split [min(h,0), max(h,0)] at curve branch points.
  std::vector<double> cuts;
  cuts.push_back(std::min(h, 0.0));
  if (which == Medium::P && root.h_ae > std::min(h, 0.0) && root.h_ae < std::max(h, 0.0))
    cuts.push_back(root.h_ae);
  cuts.push_back(std::max(h, 0.0));

  double integral = 0.0;  // int_h^0 theta~(z) dz
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    integral += integrate(shifted, cuts[i], cuts[i + 1], 1e-14);
  if (h > 0.0) integral = -integral;

  const double value = shifted(h) * h + integral;
  if (value < 0.0 && value > -1e-12 * (1.0 + std::abs(shifted(h) * h))) return 0.0;
  return value;
}

}  // namespace rhizohom
