// Model parameters with their default values. Anything without a published
// value defaults to zero.
#pragma once

#include <array>
#include <string_view>

namespace tumor3d1d {

struct Parameters {
  // proliferation, apoptosis and phase transitions
  double lambda_P = 5.0;
  double lambda_Ph = 0.5;
  double lambda_A = 0.005;
  double lambda_Ah = 0.005;
  double lambda_PH = 1.0;
  double lambda_HP = 1.0;
  double lambda_HN = 1.0;
  double sigma_PH = 0.55;
  double sigma_HP = 0.65;
  double sigma_HN = 0.44;

  // Cahn-Hilliard pair
  double epsilon_P = 0.005;
  double epsilon_H = 0.005;
  double epsilon_N = 0.0;  // only enters the energy diagnostic
  double M_P = 50.0;
  double M_H = 25.0;
  double C_psi = 0.045;
  double s_stab = 3.0;  // convex-splitting stabilisation factor
  double m_min = 1e-6;  // mobility floor

  // reaction-diffusion species
  double D_sigma = 1.0;
  double m_sigma = 1.0;
  double D_MDE = 0.5;
  double m_MDE = 1.0;
  double D_TAF = 0.5;
  double m_TAF = 1.0;
  double chi_c = 0.0;
  double chi_h = 0.0;

  double lambda_ECMD = 5.0;
  double lambda_ECMP = 0.01;
  double phi_ECMP = 0.5;
  double lambda_MDED = 1.0;
  double lambda_MDEP = 1.0;
  double lambda_TAFP = 10.0;
  double lambda_TAFD = 0.0;
  double phi_HP = 0.0;

  // flow and exchange
  double K = 1e-9;
  double L_p = 1e-7;
  double L_sigma = 10.0;
  double r_sigma = 0.0;
  double mu_bl = 1.0;
  double D_v = 0.1;

  double epsilon_heaviside = 0.0;  // 0: step function with H(0) = 1

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

struct ParameterField {
  std::string_view name;
  double Parameters::*member;
};

/// Configuration key for every parameter, in file order.
inline constexpr auto kParameterFields = std::to_array<ParameterField>({
    {"lambda_P", &Parameters::lambda_P},
    {"lambda_Ph", &Parameters::lambda_Ph},
    {"lambda_A", &Parameters::lambda_A},
    {"lambda_Ah", &Parameters::lambda_Ah},
    {"lambda_PH", &Parameters::lambda_PH},
    {"lambda_HP", &Parameters::lambda_HP},
    {"lambda_HN", &Parameters::lambda_HN},
    {"sigma_PH", &Parameters::sigma_PH},
    {"sigma_HP", &Parameters::sigma_HP},
    {"sigma_HN", &Parameters::sigma_HN},
    {"epsilon_P", &Parameters::epsilon_P},
    {"epsilon_H", &Parameters::epsilon_H},
    {"epsilon_N", &Parameters::epsilon_N},
    {"M_P", &Parameters::M_P},
    {"M_H", &Parameters::M_H},
    {"C_psi", &Parameters::C_psi},
    {"s_stab", &Parameters::s_stab},
    {"m_min", &Parameters::m_min},
    {"D_sigma", &Parameters::D_sigma},
    {"m_sigma", &Parameters::m_sigma},
    {"D_MDE", &Parameters::D_MDE},
    {"m_MDE", &Parameters::m_MDE},
    {"D_TAF", &Parameters::D_TAF},
    {"m_TAF", &Parameters::m_TAF},
    {"chi_c", &Parameters::chi_c},
    {"chi_h", &Parameters::chi_h},
    {"lambda_ECMD", &Parameters::lambda_ECMD},
    {"lambda_ECMP", &Parameters::lambda_ECMP},
    {"phi_ECMP", &Parameters::phi_ECMP},
    {"lambda_MDED", &Parameters::lambda_MDED},
    {"lambda_MDEP", &Parameters::lambda_MDEP},
    {"lambda_TAFP", &Parameters::lambda_TAFP},
    {"lambda_TAFD", &Parameters::lambda_TAFD},
    {"phi_HP", &Parameters::phi_HP},
    {"K", &Parameters::K},
    {"L_p", &Parameters::L_p},
    {"L_sigma", &Parameters::L_sigma},
    {"r_sigma", &Parameters::r_sigma},
    {"mu_bl", &Parameters::mu_bl},
    {"D_v", &Parameters::D_v},
    {"epsilon_heaviside", &Parameters::epsilon_heaviside},
});

}  // namespace tumor3d1d
